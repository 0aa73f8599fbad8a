#pragma once

#include <map>
#include <string>
#include <variant>
#include <vector>

#include "cardio/ops.hpp"
#include "cardio/rng.hpp"
#include "cardio/tensor.hpp"

namespace cardio {

enum class Mode { train, infer };

// Named trainable parameters plus gradient accumulators of identical shape.
class ParamStore {
public:
    Tensor& add(const std::string& name, Tensor value);
    const Tensor& get(const std::string& name) const;
    Tensor& mut(const std::string& name);
    bool has(const std::string& name) const { return params_.count(name) > 0; }

    // Gradient slot, lazily allocated as zeros matching the parameter shape.
    Tensor& grad(const std::string& name);
    const Tensor* find_grad(const std::string& name) const;
    bool has_grad(const std::string& name) const { return grads_.count(name) > 0; }
    void clear_grads() { grads_.clear(); }
    void scale_grads(double factor);

    const std::map<std::string, Tensor>& params() const { return params_; }
    std::map<std::string, Tensor>& params() { return params_; }
    std::size_t scalar_count() const;

    // Merge parameters from another store (names must not collide).
    void absorb(ParamStore&& other);

private:
    std::map<std::string, Tensor> params_;
    std::map<std::string, Tensor> grads_;
};

struct Conv2DSpec {
    int in_ch, out_ch, kernel;
    int stride = 1;
    ops::Padding padding = ops::Padding::same;
};
struct MaxPool2DSpec {
    int kernel, stride;
};
struct DenseSpec {
    int in, out;
};
struct DepthwiseConv1DSpec {
    int channels, kernel; // valid padding
};
struct ReLUSpec {};
struct SigmoidSpec {};
struct DropoutSpec {
    double rate;
};

using LayerSpec = std::variant<Conv2DSpec, MaxPool2DSpec, DenseSpec, DepthwiseConv1DSpec, ReLUSpec,
                               SigmoidSpec, DropoutSpec>;

std::string layer_kind_name(const LayerSpec& spec);

// Per-layer forward record needed by the backward pass.
struct LayerTape {
    Tensor input;
    Tensor aux;              // sigmoid output / dropout mask
    std::vector<int> argmax; // maxpool
};

struct Tape {
    std::vector<LayerTape> layers;
    Tensor output;
    bool train = false;
};

// Fixed sequence of catalogue layers with named parameters "<prefix>.<i>.<kind>.w|b".
class Net {
public:
    Net() = default;
    Net(std::string prefix, std::vector<LayerSpec> layers);

    void init_params(ParamStore& store, Rng& rng) const;

    // Output shape as a pure function of the input shape (shape algebra).
    std::vector<int> output_shape(std::vector<int> in) const;

    // In train mode `tape` must be provided and intermediates are retained.
    // Dropout layers draw from `rng` in train mode and are identity in infer mode.
    Tensor forward(const ParamStore& params, const Tensor& input, Mode mode, Rng* rng,
                   Tape* tape) const;

    // Accumulates parameter gradients into `params` grad slots; returns input gradient.
    Tensor backward(const Tape& tape, const Tensor& grad_out, const ParamStore& params,
                    ParamStore& grads) const;

    const std::vector<LayerSpec>& layers() const { return layers_; }
    const std::string& prefix() const { return prefix_; }
    std::string param_name(std::size_t layer, const char* which) const;

private:
    std::string prefix_;
    std::vector<LayerSpec> layers_;
};

} // namespace cardio
