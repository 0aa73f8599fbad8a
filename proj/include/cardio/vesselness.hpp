#pragma once

#include <cstdint>
#include <vector>

#include "cardio/adam.hpp"
#include "cardio/net.hpp"

namespace cardio::vesselness {

struct CenterlinePoint {
    double x = 0.0, y = 0.0;
    double radius = 0.0; // pixels
};

// One polyline per vessel; points carry local radius estimates.
struct CenterlineAnnotation {
    std::vector<std::vector<CenterlinePoint>> vessels;

    bool empty() const;
};

// Binary mask: pixel set iff its distance to some centerline point is <= that
// point's radius. Returned as [1,H,W] with values in {0,1}.
Tensor rasterize_mask(const CenterlineAnnotation& ann, int width, int height);

// L = 1 - (mu + sum(P*T)) / (mu + sum(P^2) + sum(T^2) - sum(P*T))
double jaccard_loss(const Tensor& prob, const Tensor& target, double mu = 0.1);
Tensor jaccard_loss_grad(const Tensor& prob, const Tensor& target, double mu = 0.1);

double vesselness_score(const Tensor& prob); // sum of pixel probabilities

// Frames scoring below two thirds of the series maximum are discarded; the
// longest consecutive run of the rest is returned (earliest run on ties).
struct FrameInterval {
    int begin = 0, end = 0; // inclusive
    int length() const { return end - begin + 1; }
};
FrameInterval select_frame_interval(const std::vector<double>& scores);

double dice_score(const Tensor& pred_mask, const Tensor& gt_mask); // 1.0 when both empty

// Encoder-decoder segmenter: depth 3, base width 8 doubling per level, skip
// connections, sigmoid output. Fully convolutional; input sides must be
// divisible by 4.
class VesselNet {
public:
    VesselNet();

    ParamStore init_params(std::uint64_t seed) const;

    // forward record; "pre" tensors are conv outputs before the ReLU
    struct Tape {
        Tensor input;
        Tensor e1_pre, e1;
        std::vector<int> pool1_argmax;
        Tensor p1;
        Tensor e2_pre, e2;
        std::vector<int> pool2_argmax;
        Tensor p2;
        Tensor b_pre, b;
        Tensor c2, d2_pre, d2;
        Tensor c1, d1_pre, d1;
        Tensor out_pre, out;
    };

    Tensor forward(const ParamStore& params, const Tensor& frame, Tape* tape = nullptr) const;

    // Accumulates parameter gradients for upstream gradient `gout` (w.r.t. the
    // probability map). Returns nothing; input gradients are not needed.
    void backward(const Tape& tape, const Tensor& gout, const ParamStore& params,
                  ParamStore& grads) const;

    static std::string arch_tag() { return "vesselnet-d3-b8"; }
};

struct VesselTrainConfig {
    int epochs = 40;
    int batch_size = 8; // gradients averaged per step; blank and vessel frames mix
    AdamConfig adam;
    std::uint64_t seed = 1;
    bool verbose = false;
};

struct VesselTrainResult {
    ParamStore params;
    std::vector<double> epoch_loss;
};

// pairs: (frame [1,H,W] in [0,1], binary mask [1,H,W])
VesselTrainResult train_vesselness(const std::vector<std::pair<Tensor, Tensor>>& pairs,
                                   const VesselTrainConfig& config);

} // namespace cardio::vesselness
