#include "cardio/adam.hpp"

#include <cmath>

namespace cardio {

AdamState make_adam_state(const ParamStore& params, const AdamConfig& config) {
    AdamState state;
    state.config = config;
    for (const auto& [name, p] : params.params()) {
        state.m.emplace(name, Tensor(p.shape));
        state.v.emplace(name, Tensor(p.shape));
    }
    return state;
}

void adam_step(ParamStore& params, AdamState& state) {
    for (const auto& [name, p] : params.params())
        if (!params.has_grad(name))
            throw StateError("adam_step: missing gradient for parameter " + name);

    state.step += 1;
    const AdamConfig& c = state.config;
    const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));

    for (auto& [name, p] : params.params()) {
        const Tensor& g = *params.find_grad(name);
        Tensor& m = state.m.at(name);
        Tensor& v = state.v.at(name);
        if (!g.same_shape(p))
            throw ShapeError("adam_step: gradient shape mismatch for " + name);
        for (std::size_t i = 0; i < p.data.size(); ++i) {
            const double gi = g.data[i];
            m.data[i] = c.beta1 * m.data[i] + (1.0 - c.beta1) * gi;
            v.data[i] = c.beta2 * v.data[i] + (1.0 - c.beta2) * gi * gi;
            const double mhat = m.data[i] / bc1;
            const double vhat = v.data[i] / bc2;
            p.data[i] -= c.lr * mhat / (std::sqrt(vhat) + c.epsilon);
        }
    }
    params.clear_grads();
}

} // namespace cardio
