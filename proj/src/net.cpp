#include "cardio/net.hpp"

#include <cmath>

namespace cardio {

Tensor& ParamStore::add(const std::string& name, Tensor value) {
    auto [it, inserted] = params_.emplace(name, std::move(value));
    if (!inserted) throw StateError("duplicate parameter name: " + name);
    return it->second;
}

const Tensor& ParamStore::get(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw StateError("unknown parameter: " + name);
    return it->second;
}

Tensor& ParamStore::mut(const std::string& name) {
    auto it = params_.find(name);
    if (it == params_.end()) throw StateError("unknown parameter: " + name);
    return it->second;
}

Tensor& ParamStore::grad(const std::string& name) {
    auto it = grads_.find(name);
    if (it == grads_.end()) {
        const Tensor& p = get(name);
        it = grads_.emplace(name, Tensor(p.shape)).first;
    }
    return it->second;
}

const Tensor* ParamStore::find_grad(const std::string& name) const {
    auto it = grads_.find(name);
    return it == grads_.end() ? nullptr : &it->second;
}

void ParamStore::scale_grads(double factor) {
    for (auto& [name, g] : grads_)
        for (double& v : g.data) v *= factor;
}

std::size_t ParamStore::scalar_count() const {
    std::size_t n = 0;
    for (const auto& [name, p] : params_) n += p.data.size();
    return n;
}

void ParamStore::absorb(ParamStore&& other) {
    for (auto& [name, p] : other.params_) add(name, std::move(p));
    other.params_.clear();
    other.grads_.clear();
}

std::string layer_kind_name(const LayerSpec& spec) {
    return std::visit(
        [](auto&& s) -> std::string {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Conv2DSpec>) return "conv2d";
            else if constexpr (std::is_same_v<T, MaxPool2DSpec>) return "maxpool2d";
            else if constexpr (std::is_same_v<T, DenseSpec>) return "dense";
            else if constexpr (std::is_same_v<T, DepthwiseConv1DSpec>) return "dwconv1d";
            else if constexpr (std::is_same_v<T, ReLUSpec>) return "relu";
            else if constexpr (std::is_same_v<T, SigmoidSpec>) return "sigmoid";
            else return "dropout";
        },
        spec);
}

Net::Net(std::string prefix, std::vector<LayerSpec> layers)
    : prefix_(std::move(prefix)), layers_(std::move(layers)) {}

std::string Net::param_name(std::size_t layer, const char* which) const {
    return prefix_ + "." + std::to_string(layer) + "." + layer_kind_name(layers_[layer]) + "." + which;
}

namespace {

Tensor he_init(std::vector<int> shape, std::int64_t fan_in, Rng& rng) {
    Tensor t(std::move(shape));
    const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (double& v : t.data) v = rng.normal(0.0, stddev);
    return t;
}

} // namespace

void Net::init_params(ParamStore& store, Rng& rng) const {
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        if (const auto* c = std::get_if<Conv2DSpec>(&layers_[i])) {
            store.add(param_name(i, "w"),
                      he_init({c->out_ch, c->in_ch, c->kernel, c->kernel},
                              static_cast<std::int64_t>(c->in_ch) * c->kernel * c->kernel, rng));
            store.add(param_name(i, "b"), Tensor({c->out_ch}));
        } else if (const auto* d = std::get_if<DenseSpec>(&layers_[i])) {
            store.add(param_name(i, "w"), he_init({d->out, d->in}, d->in, rng));
            store.add(param_name(i, "b"), Tensor({d->out}));
        } else if (const auto* t = std::get_if<DepthwiseConv1DSpec>(&layers_[i])) {
            store.add(param_name(i, "w"), he_init({t->kernel, t->channels}, t->kernel, rng));
            store.add(param_name(i, "b"), Tensor({t->channels}));
        }
    }
}

std::vector<int> Net::output_shape(std::vector<int> shape) const {
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const LayerSpec& spec = layers_[i];
        if (const auto* c = std::get_if<Conv2DSpec>(&spec)) {
            if (shape.size() != 3 || shape[0] != c->in_ch)
                throw ShapeError("layer " + param_name(i, "w") + ": input " + shape_str(shape) +
                                 " incompatible with in_ch " + std::to_string(c->in_ch));
            shape = ops::conv2d_output_shape(shape, c->out_ch, c->kernel, c->stride, c->padding);
        } else if (const auto* p = std::get_if<MaxPool2DSpec>(&spec)) {
            shape = ops::maxpool2d_output_shape(shape, p->kernel, p->stride);
        } else if (const auto* d = std::get_if<DenseSpec>(&spec)) {
            if (Tensor::numel(shape) != d->in)
                throw ShapeError("layer " + param_name(i, "w") + ": input " + shape_str(shape) +
                                 " does not flatten to " + std::to_string(d->in));
            shape = {d->out};
        } else if (const auto* t = std::get_if<DepthwiseConv1DSpec>(&spec)) {
            if (shape.size() != 2 || shape[1] != t->channels || shape[0] < t->kernel)
                throw ShapeError("dwconv1d layer " + std::to_string(i) + ": input " +
                                 shape_str(shape) + " incompatible");
            shape = {shape[0] - t->kernel + 1, shape[1]};
        }
        // relu/sigmoid/dropout preserve shape
    }
    return shape;
}

Tensor Net::forward(const ParamStore& params, const Tensor& input, Mode mode, Rng* rng,
                    Tape* tape) const {
    if (mode == Mode::train && tape == nullptr)
        throw StateError("train-mode forward requires a tape");
    if (tape) {
        tape->layers.clear();
        tape->layers.resize(layers_.size());
        tape->train = mode == Mode::train;
    }
    Tensor x = input;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        LayerTape* lt = tape ? &tape->layers[i] : nullptr;
        const LayerSpec& spec = layers_[i];
        Tensor y;
        if (const auto* c = std::get_if<Conv2DSpec>(&spec)) {
            if (x.shape.size() != 3 || x.shape[0] != c->in_ch)
                throw ShapeError("layer " + param_name(i, "w") + ": input " + shape_str(x.shape) +
                                 " incompatible with in_ch " + std::to_string(c->in_ch));
            y = ops::conv2d_forward(x, params.get(param_name(i, "w")), params.get(param_name(i, "b")),
                                    c->stride, c->padding);
            if (lt) lt->input = std::move(x);
        } else if (const auto* p = std::get_if<MaxPool2DSpec>(&spec)) {
            std::vector<int> argmax;
            y = ops::maxpool2d_forward(x, p->kernel, p->stride, lt ? &argmax : nullptr);
            if (lt) {
                lt->argmax = std::move(argmax);
                lt->input = std::move(x);
            }
        } else if (const auto* d = std::get_if<DenseSpec>(&spec)) {
            Tensor flat = x;
            flat.shape = {static_cast<int>(flat.size())};
            y = ops::dense_forward(flat, params.get(param_name(i, "w")),
                                   params.get(param_name(i, "b")));
            if (lt) lt->input = std::move(x); // original shape kept for input gradient
        } else if (std::get_if<DepthwiseConv1DSpec>(&spec)) {
            y = ops::dwconv1d_forward(x, params.get(param_name(i, "w")),
                                      params.get(param_name(i, "b")));
            if (lt) lt->input = std::move(x);
        } else if (std::get_if<ReLUSpec>(&spec)) {
            y = ops::relu_forward(x);
            if (lt) lt->input = std::move(x);
        } else if (std::get_if<SigmoidSpec>(&spec)) {
            y = ops::sigmoid_forward(x);
            if (lt) lt->aux = y;
        } else if (const auto* dr = std::get_if<DropoutSpec>(&spec)) {
            if (mode == Mode::train) {
                if (rng == nullptr) throw StateError("train-mode dropout requires an rng");
                Tensor mask;
                y = ops::dropout_forward(x, dr->rate, *rng, &mask);
                if (lt) lt->aux = std::move(mask);
            } else {
                y = x; // identity in inference mode
            }
        }
        check_finite(y, "layer " + std::to_string(i) + " (" + layer_kind_name(spec) + ") of " +
                            prefix_);
        x = std::move(y);
    }
    if (tape) tape->output = x;
    return x;
}

Tensor Net::backward(const Tape& tape, const Tensor& grad_out, const ParamStore& params,
                     ParamStore& grads) const {
    if (!tape.train || tape.layers.size() != layers_.size())
        throw StateError("backward requires a tape from a train-mode forward");
    if (grad_out.shape != tape.output.shape)
        throw ShapeError("backward: upstream gradient " + shape_str(grad_out.shape) +
                         " does not match output " + shape_str(tape.output.shape));
    Tensor g = grad_out;
    for (std::size_t ri = layers_.size(); ri-- > 0;) {
        const LayerSpec& spec = layers_[ri];
        const LayerTape& lt = tape.layers[ri];
        if (const auto* c = std::get_if<Conv2DSpec>(&spec)) {
            Tensor gx(lt.input.shape);
            ops::conv2d_backward(lt.input, params.get(param_name(ri, "w")), g, c->stride, c->padding,
                                 &gx, &grads.grad(param_name(ri, "w")),
                                 &grads.grad(param_name(ri, "b")));
            g = std::move(gx);
        } else if (std::get_if<MaxPool2DSpec>(&spec)) {
            g = ops::maxpool2d_backward(lt.argmax, lt.input.shape, g);
        } else if (std::get_if<DenseSpec>(&spec)) {
            Tensor flat = lt.input;
            flat.shape = {static_cast<int>(flat.size())};
            Tensor gx(flat.shape);
            ops::dense_backward(flat, params.get(param_name(ri, "w")), g, &gx,
                                &grads.grad(param_name(ri, "w")), &grads.grad(param_name(ri, "b")));
            gx.shape = lt.input.shape;
            g = std::move(gx);
        } else if (std::get_if<DepthwiseConv1DSpec>(&spec)) {
            Tensor gx(lt.input.shape);
            ops::dwconv1d_backward(lt.input, params.get(param_name(ri, "w")), g, &gx,
                                   &grads.grad(param_name(ri, "w")),
                                   &grads.grad(param_name(ri, "b")));
            g = std::move(gx);
        } else if (std::get_if<ReLUSpec>(&spec)) {
            g = ops::relu_backward(lt.input, g);
        } else if (std::get_if<SigmoidSpec>(&spec)) {
            g = ops::sigmoid_backward(lt.aux, g);
        } else if (std::get_if<DropoutSpec>(&spec)) {
            g = ops::dropout_backward(lt.aux, g);
        }
    }
    return g;
}

} // namespace cardio
