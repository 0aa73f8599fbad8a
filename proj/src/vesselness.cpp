#include "cardio/vesselness.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

namespace cardio::vesselness {

bool CenterlineAnnotation::empty() const {
    for (const auto& v : vessels)
        if (!v.empty()) return false;
    return true;
}

Tensor rasterize_mask(const CenterlineAnnotation& ann, int width, int height) {
    Tensor mask({1, height, width});
    for (const auto& vessel : ann.vessels) {
        for (const auto& p : vessel) {
            const int x_lo = std::max(0, static_cast<int>(std::floor(p.x - p.radius)));
            const int x_hi = std::min(width - 1, static_cast<int>(std::ceil(p.x + p.radius)));
            const int y_lo = std::max(0, static_cast<int>(std::floor(p.y - p.radius)));
            const int y_hi = std::min(height - 1, static_cast<int>(std::ceil(p.y + p.radius)));
            const double r2 = p.radius * p.radius;
            for (int y = y_lo; y <= y_hi; ++y) {
                const double dy = y - p.y;
                for (int x = x_lo; x <= x_hi; ++x) {
                    const double dx = x - p.x;
                    if (dx * dx + dy * dy <= r2)
                        mask.data[static_cast<std::size_t>(y) * width + x] = 1.0;
                }
            }
        }
    }
    return mask;
}

double jaccard_loss(const Tensor& prob, const Tensor& target, double mu) {
    if (prob.shape != target.shape)
        throw ShapeError("jaccard_loss: " + shape_str(prob.shape) + " vs " +
                         shape_str(target.shape));
    double pt = 0.0, pp = 0.0, tt = 0.0;
    for (std::size_t i = 0; i < prob.data.size(); ++i) {
        pt += prob.data[i] * target.data[i];
        pp += prob.data[i] * prob.data[i];
        tt += target.data[i] * target.data[i];
    }
    return 1.0 - (mu + pt) / (mu + pp + tt - pt);
}

Tensor jaccard_loss_grad(const Tensor& prob, const Tensor& target, double mu) {
    if (prob.shape != target.shape)
        throw ShapeError("jaccard_loss_grad: " + shape_str(prob.shape) + " vs " +
                         shape_str(target.shape));
    double pt = 0.0, pp = 0.0, tt = 0.0;
    for (std::size_t i = 0; i < prob.data.size(); ++i) {
        pt += prob.data[i] * target.data[i];
        pp += prob.data[i] * prob.data[i];
        tt += target.data[i] * target.data[i];
    }
    const double a = mu + pt;
    const double b = mu + pp + tt - pt;
    Tensor grad(prob.shape);
    // d/dPi [1 - a/b] = -(Ti*b - a*(2Pi - Ti)) / b^2
    for (std::size_t i = 0; i < prob.data.size(); ++i) {
        const double ti = target.data[i];
        const double pi = prob.data[i];
        grad.data[i] = -(ti * b - a * (2.0 * pi - ti)) / (b * b);
    }
    return grad;
}

double vesselness_score(const Tensor& prob) {
    double acc = 0.0;
    for (double v : prob.data) acc += v;
    return acc;
}

FrameInterval select_frame_interval(const std::vector<double>& scores) {
    if (scores.empty()) throw ConfigError("select_frame_interval: empty score track");
    const double threshold = 2.0 * *std::max_element(scores.begin(), scores.end()) / 3.0;

    FrameInterval best{0, -1};
    int run_begin = -1;
    for (int i = 0; i <= static_cast<int>(scores.size()); ++i) {
        const bool candidate = i < static_cast<int>(scores.size()) && scores[i] >= threshold;
        if (candidate && run_begin < 0) run_begin = i;
        if (!candidate && run_begin >= 0) {
            if (i - run_begin > best.length()) best = {run_begin, i - 1};
            run_begin = -1;
        }
    }
    return best;
}

double dice_score(const Tensor& pred_mask, const Tensor& gt_mask) {
    if (pred_mask.shape != gt_mask.shape)
        throw ShapeError("dice_score: " + shape_str(pred_mask.shape) + " vs " +
                         shape_str(gt_mask.shape));
    double inter = 0.0, a = 0.0, b = 0.0;
    for (std::size_t i = 0; i < pred_mask.data.size(); ++i) {
        const double p = pred_mask.data[i] != 0.0 ? 1.0 : 0.0;
        const double t = gt_mask.data[i] != 0.0 ? 1.0 : 0.0;
        inter += p * t;
        a += p;
        b += t;
    }
    if (a + b == 0.0) return 1.0;
    return 2.0 * inter / (a + b);
}

// ---------------------------------------------------------------------------
// VesselNet

namespace {

struct ConvParamNames {
    std::string w, b;
};

ConvParamNames conv_names(int idx) {
    const std::string base = "vessel.conv" + std::to_string(idx);
    return {base + ".w", base + ".b"};
}

// conv index -> (in_ch, out_ch, kernel)
constexpr int kConvShapes[6][3] = {
    {1, 8, 3},   // enc1
    {8, 16, 3},  // enc2
    {16, 32, 3}, // bottleneck
    {48, 16, 3}, // dec2 (32 upsampled + 16 skip)
    {24, 8, 3},  // dec1 (16 upsampled + 8 skip)
    {8, 1, 1},   // output head
};

} // namespace

VesselNet::VesselNet() = default;

ParamStore VesselNet::init_params(std::uint64_t seed) const {
    ParamStore store;
    Rng rng(seed);
    for (int i = 0; i < 6; ++i) {
        const auto [w, b] = conv_names(i);
        const int in_ch = kConvShapes[i][0], out_ch = kConvShapes[i][1], k = kConvShapes[i][2];
        Tensor wt({out_ch, in_ch, k, k});
        const double stddev = std::sqrt(2.0 / (in_ch * k * k));
        for (double& v : wt.data) v = rng.normal(0.0, stddev);
        store.add(w, std::move(wt));
        store.add(b, Tensor({out_ch}));
    }
    return store;
}

Tensor VesselNet::forward(const ParamStore& params, const Tensor& frame, Tape* tape) const {
    if (frame.shape.size() != 3 || frame.shape[0] != 1)
        throw ShapeError("vesselnet: input must be [1,H,W], got " + shape_str(frame.shape));
    if (frame.shape[1] % 4 != 0 || frame.shape[2] % 4 != 0)
        throw ShapeError("vesselnet: input sides must be divisible by 4, got " +
                         shape_str(frame.shape));
    Tape local;
    Tape& t = tape ? *tape : local;
    const bool keep = tape != nullptr;

    auto conv = [&](const Tensor& x, int idx) {
        const auto [w, b] = conv_names(idx);
        return ops::conv2d_forward(x, params.get(w), params.get(b), 1, ops::Padding::same);
    };

    t.e1_pre = conv(frame, 0);
    t.e1 = ops::relu_forward(t.e1_pre);
    t.p1 = ops::maxpool2d_forward(t.e1, 2, 2, keep ? &t.pool1_argmax : nullptr);
    t.e2_pre = conv(t.p1, 1);
    t.e2 = ops::relu_forward(t.e2_pre);
    t.p2 = ops::maxpool2d_forward(t.e2, 2, 2, keep ? &t.pool2_argmax : nullptr);
    t.b_pre = conv(t.p2, 2);
    t.b = ops::relu_forward(t.b_pre);
    t.c2 = ops::concat_channels(ops::upsample2x_forward(t.b), t.e2);
    t.d2_pre = conv(t.c2, 3);
    t.d2 = ops::relu_forward(t.d2_pre);
    t.c1 = ops::concat_channels(ops::upsample2x_forward(t.d2), t.e1);
    t.d1_pre = conv(t.c1, 4);
    t.d1 = ops::relu_forward(t.d1_pre);
    t.out_pre = conv(t.d1, 5);
    t.out = ops::sigmoid_forward(t.out_pre);
    check_finite(t.out, "vesselnet output");
    if (keep) t.input = frame;
    return t.out;
}

void VesselNet::backward(const Tape& t, const Tensor& gout, const ParamStore& params,
                         ParamStore& grads) const {
    if (t.input.data.empty()) throw StateError("vesselnet backward requires a taped forward");

    auto conv_bwd = [&](const Tensor& x, int idx, const Tensor& g, bool want_gx) {
        const auto [w, b] = conv_names(idx);
        Tensor gx;
        if (want_gx) gx = Tensor(x.shape);
        ops::conv2d_backward(x, params.get(w), g, 1, ops::Padding::same, want_gx ? &gx : nullptr,
                             &grads.grad(w), &grads.grad(b));
        return gx;
    };

    Tensor g = ops::sigmoid_backward(t.out, gout);
    g = conv_bwd(t.d1, 5, g, true);
    g = ops::relu_backward(t.d1_pre, g);
    g = conv_bwd(t.c1, 4, g, true);
    Tensor g_up1, g_e1_skip;
    ops::split_channels(g, 16, &g_up1, &g_e1_skip);
    g = ops::upsample2x_backward(g_up1);
    g = ops::relu_backward(t.d2_pre, g);
    g = conv_bwd(t.c2, 3, g, true);
    Tensor g_up2, g_e2_skip;
    ops::split_channels(g, 32, &g_up2, &g_e2_skip);
    g = ops::upsample2x_backward(g_up2);
    g = ops::relu_backward(t.b_pre, g);
    g = conv_bwd(t.p2, 2, g, true);
    g = ops::maxpool2d_backward(t.pool2_argmax, t.e2.shape, g);
    for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] += g_e2_skip.data[i];
    g = ops::relu_backward(t.e2_pre, g);
    g = conv_bwd(t.p1, 1, g, true);
    g = ops::maxpool2d_backward(t.pool1_argmax, t.e1.shape, g);
    for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] += g_e1_skip.data[i];
    g = ops::relu_backward(t.e1_pre, g);
    conv_bwd(t.input, 0, g, false);
}

VesselTrainResult train_vesselness(const std::vector<std::pair<Tensor, Tensor>>& pairs,
                                   const VesselTrainConfig& config) {
    if (pairs.empty()) throw EmptyDataset("train_vesselness: no training pairs");
    for (const auto& [frame, mask] : pairs)
        if (frame.shape != mask.shape)
            throw ShapeError("train_vesselness: frame " + shape_str(frame.shape) +
                             " vs mask " + shape_str(mask.shape));

    VesselNet net;
    VesselTrainResult result;
    result.params = net.init_params(derive_seed(config.seed, 0x7e55e1));
    AdamState adam = make_adam_state(result.params, config.adam);

    std::vector<std::size_t> order(pairs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    const int batch = std::max(1, config.batch_size);
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(),
                     Rng(derive_seed(config.seed, 0x100 + epoch)).engine());
        double epoch_loss = 0.0;
        for (std::size_t begin = 0; begin < order.size(); begin += batch) {
            const std::size_t end = std::min(order.size(), begin + batch);
            const double norm = 1.0 / static_cast<double>(end - begin);
            for (std::size_t i = begin; i < end; ++i) {
                const auto& [frame, mask] = pairs[order[i]];
                VesselNet::Tape tape;
                Tensor prob = net.forward(result.params, frame, &tape);
                epoch_loss += jaccard_loss(prob, mask);
                Tensor g = jaccard_loss_grad(prob, mask);
                for (double& v : g.data) v *= norm;
                net.backward(tape, g, result.params, result.params);
            }
            adam_step(result.params, adam);
        }
        epoch_loss /= static_cast<double>(pairs.size());
        result.epoch_loss.push_back(epoch_loss);
        if (config.verbose)
            std::cerr << "[train-vessel] epoch " << epoch + 1 << "/" << config.epochs
                      << " loss " << epoch_loss << "\n";
    }
    return result;
}

} // namespace cardio::vesselness
