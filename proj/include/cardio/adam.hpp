#pragma once

#include <map>
#include <string>

#include "cardio/net.hpp"
#include "cardio/tensor.hpp"

namespace cardio {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

// Bias-corrected Adam state; one first/second moment tensor per parameter.
struct AdamState {
    AdamConfig config;
    long step = 0;
    std::map<std::string, Tensor> m;
    std::map<std::string, Tensor> v;
};

AdamState make_adam_state(const ParamStore& params, const AdamConfig& config = {});

// Applies one update from the gradients accumulated in `params`, increments the
// step counter and clears the gradients. Throws StateError when any parameter
// is missing a gradient.
void adam_step(ParamStore& params, AdamState& state);

} // namespace cardio
