#include "cardio/gradcheck.hpp"

#include <cmath>

namespace cardio {

GradCheckReport grad_check(ParamStore& params, const std::function<double()>& loss_fn,
                           const std::function<void()>& backward_fn, double h, double tol) {
    params.clear_grads();
    backward_fn();

    // Snapshot the analytic gradients before perturbing anything.
    std::map<std::string, Tensor> analytic;
    for (const auto& [name, p] : params.params()) {
        const Tensor* g = params.find_grad(name);
        analytic.emplace(name, g ? *g : Tensor(p.shape));
    }

    GradCheckReport report;
    for (auto& [name, p] : params.params()) {
        const Tensor& g = analytic.at(name);
        for (std::size_t i = 0; i < p.data.size(); ++i) {
            const double original = p.data[i];
            p.data[i] = original + h;
            const double f_plus = loss_fn();
            p.data[i] = original - h;
            const double f_minus = loss_fn();
            p.data[i] = original;

            const double numeric = (f_plus - f_minus) / (2.0 * h);
            const double a = g.data[i];
            const double denom = std::max(1.0, std::max(std::abs(a), std::abs(numeric)));
            const double rel = std::abs(a - numeric) / denom;
            if (rel > report.max_rel_err) {
                report.max_rel_err = rel;
                report.worst_param = name;
                report.worst_index = i;
            }
            ++report.checked;
        }
    }
    params.clear_grads();
    report.pass = report.max_rel_err <= tol;
    return report;
}

GradCheckReport grad_check_net(const Net& net, ParamStore& params, const Tensor& input,
                               const std::function<double(const Tensor&)>& loss_of_output,
                               const std::function<Tensor(const Tensor&)>& loss_grad, double h,
                               double tol) {
    auto loss_fn = [&]() {
        Tape tape;
        Tensor out = net.forward(params, input, Mode::train, nullptr, &tape);
        return loss_of_output(out);
    };
    auto backward_fn = [&]() {
        Tape tape;
        Tensor out = net.forward(params, input, Mode::train, nullptr, &tape);
        net.backward(tape, loss_grad(out), params, params);
    };
    return grad_check(params, loss_fn, backward_fn, h, tol);
}

} // namespace cardio
