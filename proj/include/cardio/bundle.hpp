#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cardio/ecg.hpp"
#include "cardio/tensor.hpp"
#include "cardio/vesselness.hpp"

namespace cardio::bundle {

// On-disk study container replacing DICOM: <dir>/meta.json + <dir>/frames.raw
// (little-endian, frame-major) with optional ecg.json and annotations.json.
struct BundleMeta {
    int width = 0;
    int height = 0;
    int frame_count = 0;
    int bit_depth = 8; // 8 or 16
    double fps = 0.0;
    std::optional<double> primary_angle;   // RAO(-)/LAO(+) degrees
    std::optional<double> secondary_angle; // CAU(-)/CRA(+) degrees
    std::string patient_id;
    std::string sequence_id;
};

struct StudyBundle {
    BundleMeta meta;
    std::vector<std::uint8_t> frames_raw;
    std::optional<ecg::ECGTrace> ecg;
    // per-frame centerline annotations (empty vector: file absent)
    std::vector<vesselness::CenterlineAnnotation> annotations;
};

StudyBundle load_bundle(const std::filesystem::path& dir);
void save_bundle(const StudyBundle& bundle, const std::filesystem::path& dir);

// Frame decoded to [1,H,W] with intensities in [0,1].
Tensor frame_as_tensor(const StudyBundle& bundle, int index);

struct InclusionDecision {
    bool accepted = true;
    std::string reason; // empty when accepted
};

enum class PipelineMode { predict, evaluate };

// Frame count > 20, well-visible frames > 15; ECG presence and two detected
// R peaks are additionally required outside pure prediction.
InclusionDecision inclusion_filter(const StudyBundle& bundle, int visible_interval_length,
                                   int r_peak_count, PipelineMode mode);

struct PreprocessResult {
    std::vector<Tensor> frames; // [1,R,R] each
    int crop_top = 0, crop_bottom = 0, crop_left = 0, crop_right = 0;
};

// Removes low-temporal-variance border rows/columns (collimation), resizes the
// interior bilinearly to target x target and normalizes intensities to [0,1].
PreprocessResult preprocess_frames(const StudyBundle& bundle, int target_resolution,
                                   double collimation_eps = 1e-5);

} // namespace cardio::bundle
