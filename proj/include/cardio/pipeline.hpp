#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cardio/bundle.hpp"
#include "cardio/metrics.hpp"
#include "cardio/phasenet.hpp"
#include "cardio/synthcine.hpp"
#include "cardio/vesselness.hpp"

namespace cardio::pipeline {

struct PredictConfig {
    double schmitt_hi = 0.6;
    double schmitt_lo = 0.4;
    int threads = 1;
};

struct FramePrediction {
    int frame = 0; // original frame index
    double prob = 0.0;
    int label = 0;
    bool edf = false;
};

struct PredictionTrace {
    std::string sequence_id;
    double fps = 0.0;
    vesselness::FrameInterval interval; // original frame indices, inclusive
    std::vector<double> vesselness_scores;
    std::vector<int> resampled_frames; // original indices of the 10 fps subset
    std::vector<std::vector<double>> candidates;
    std::vector<std::optional<double>> selected;
    std::vector<FramePrediction> frames;
    long spatial_invocations = 0;
    long windows = 0;
    double vesselness_seconds = 0.0;
    double phase_seconds = 0.0;
    double total_seconds = 0.0;
};

// preprocess -> vesselness interval -> 10 fps resample -> cached spatial
// features -> sliding window -> aggregate -> upsample -> Schmitt -> EDF flags.
PredictionTrace predict(const bundle::StudyBundle& bundle,
                        const vesselness::VesselNet& vessel_net, const ParamStore& vessel_params,
                        const phasenet::PhaseNet& phase_net, const ParamStore& phase_params,
                        const PredictConfig& config);

void save_trace(const PredictionTrace& trace, const std::filesystem::path& path);
PredictionTrace load_trace(const std::filesystem::path& path);

// Ground truth per original frame; NaN where no label exists.
struct GroundTruth {
    std::vector<double> frame_labels;
    double bpm = 0.0;
};

GroundTruth truth_from_sidecar(const synthcine::SynthTruth& truth);
GroundTruth truth_from_ecg(const bundle::StudyBundle& bundle);

// Frame-level pair over the trace's interval; frames without ground truth are
// marked intermediate so the eligibility rule excludes them.
metrics::EvalPair make_eval_pair(const PredictionTrace& trace, const GroundTruth& truth,
                                 const std::string& id);

std::vector<int> trace_pred_edfs(const PredictionTrace& trace);
std::vector<int> gt_edfs_in_interval(const GroundTruth& truth,
                                     const vesselness::FrameInterval& interval);

} // namespace cardio::pipeline
