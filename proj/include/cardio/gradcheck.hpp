#pragma once

#include <functional>
#include <string>

#include "cardio/net.hpp"

namespace cardio {

struct GradCheckReport {
    double max_rel_err = 0.0;
    std::string worst_param;
    std::size_t worst_index = 0;
    std::size_t checked = 0;
    bool pass = false;
};

// Central-difference check of analytic gradients.
//   loss_fn:     evaluates the scalar loss at the current parameter values
//   backward_fn: populates gradient slots in `params` for the current values
// Relative error uses |a - n| / max(1, |a|, |n|) so near-zero gradients are
// compared absolutely.
GradCheckReport grad_check(ParamStore& params, const std::function<double()>& loss_fn,
                           const std::function<void()>& backward_fn, double h, double tol);

// Convenience wrapper for a sequential Net: loss is applied to the forward output.
GradCheckReport grad_check_net(const Net& net, ParamStore& params, const Tensor& input,
                               const std::function<double(const Tensor&)>& loss_of_output,
                               const std::function<Tensor(const Tensor&)>& loss_grad, double h,
                               double tol);

} // namespace cardio
