#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cardio/adam.hpp"
#include "cardio/net.hpp"

namespace cardio::phasenet {

// Spatial CNN (frame -> 64-vector), depthwise temporal convolution
// (10x64 -> 8x64) and the two-layer classifier emitting 4 sigmoid outputs for
// window positions 3-6 (zero-based).
struct PhaseNetConfig {
    int resolution = 512;
    std::vector<int> spatial_channels; // empty: derived from resolution
    int feature_dim = 64;
    int window = 10;
    int out_frames = 4;
    int temporal_kernel = 3;
    int classifier_hidden = 64;
    double dropout_rate = 0.5;

    std::string describe() const;
};

class PhaseNet {
public:
    explicit PhaseNet(PhaseNetConfig config);

    ParamStore init_params(std::uint64_t seed) const;

    // frame [1,R,R] -> feature vector [64]
    Tensor frame_features(const ParamStore& params, const Tensor& frame, Mode mode,
                          Tape* tape = nullptr) const;

    // features [10,64] -> probabilities [4] in (0,1)
    Tensor predict_window(const ParamStore& params, const Tensor& features, Mode mode,
                          Rng* dropout_rng = nullptr, Tape* tape = nullptr) const;

    const Net& spatial() const { return spatial_; }
    const Net& head() const { return head_; }
    const PhaseNetConfig& config() const { return config_; }
    std::string config_hash() const;

private:
    PhaseNetConfig config_;
    Net spatial_;
    Net head_;
};

// Spatial features for a frame stack, invoking the spatial CNN exactly once
// per frame. `invocations` counts actual forward calls (the caching property
// checked by the acceptance suite). threads > 1 parallelizes across frames.
struct FeatureStack {
    Tensor features; // [M, 64]
    long invocations = 0;
};
FeatureStack spatial_features(const PhaseNet& net, const ParamStore& params,
                              const std::vector<Tensor>& frames, int threads = 1);

// Step-1 sliding window over precomputed features; window w contributes
// candidate probabilities to frames w+3 .. w+6.
std::vector<std::vector<double>> sliding_window_predict(const PhaseNet& net,
                                                        const ParamStore& params,
                                                        const Tensor& features);

// Frames with fewer than two candidates stay empty; otherwise the candidate
// farthest from 0.5 wins (earliest window on ties).
std::vector<std::optional<double>> aggregate(const std::vector<std::vector<double>>& candidates);

// Linear interpolation of (original-frame-index, probability) knots onto every
// original frame in [first_frame, last_frame]; held constant beyond the
// outermost knots. Throws SequenceTooShort with fewer than 2 knots.
std::vector<double> upsample_probs(const std::vector<std::pair<int, double>>& knots,
                                   int first_frame, int last_frame);

// Hysteresis automaton: switches to 1 at p >= hi, to 0 at p <= lo, holds
// otherwise. Initial state is 1 iff the first probability is >= 0.5.
std::vector<int> schmitt_filter(const std::vector<double>& probs, double hi, double lo);

// Binary cross-entropy scaled by 0.25 when a hard target is already on the
// correct side of 0.5; fractional targets always use the full weight.
double phase_loss(double p, double y);
double phase_loss_grad(double p, double y);

// Sequence-level augmentation (identical transform for every frame preserves
// motion coherence across windows).
Tensor augment_frame(const Tensor& frame, bool hflip, double angle_deg, double intensity_scale);

struct PhaseTrainSequence {
    std::vector<Tensor> frames;  // preprocessed, already at 10 fps
    std::vector<double> labels;  // fractional targets, same length
};

struct PhaseTrainConfig {
    int epochs = 12;
    AdamConfig adam;
    std::uint64_t seed = 1;
    bool augment = true;
    double max_rotation_deg = 10.0;
    double max_intensity_shift = 0.2;
    bool verbose = false;
};

struct PhaseTrainResult {
    ParamStore params;
    std::vector<double> epoch_loss;
};

PhaseTrainResult train_phasenet(const PhaseNet& net,
                                const std::vector<PhaseTrainSequence>& sequences,
                                const PhaseTrainConfig& config);

} // namespace cardio::phasenet
