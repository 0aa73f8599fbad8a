#pragma once

#include <filesystem>

#include "cardio/bundle.hpp"
#include "cardio/ecg.hpp"

namespace cardio::synthcine {

// Every generated quantity is a deterministic function of the config,
// including the seed; the analytic phase gives exact per-frame ground truth.
struct SynthConfig {
    double heart_rate_bpm = 70.0;
    std::vector<double> rr_list; // overrides heart_rate_bpm when non-empty
    double rr_jitter = 0.02;     // per-beat fractional RR jitter
    double duration_s = 10.0;
    double ecg_fs = 400.0;
    double fps = 10.0;
    int frame_size = 64;
    int vessel_count = 3;
    double motion_amplitude_px = 6.0;
    int fade_in_frame = 2;
    int fade_out_frame = -1; // -1: 90% of the sequence
    double panning_px_per_frame = 0.0;
    double ecg_snr_db = 25.0;
    double baseline_wander_mv = 0.15;
    double image_noise_sigma = 0.015;
    double t_frac = 0.35;            // T center at r + t_frac * RR
    double t_sigma_s = 0.05;         // T bump width
    double eos_offset_sigmas = 1.05; // analytic end of systole: T center + k * sigma
    std::uint64_t seed = 1;
};

struct SynthTruth {
    std::vector<int> r_samples, t_samples, eos_samples;
    std::vector<double> frame_labels; // exact fractional phase per original frame
    std::vector<int> edf_frames;
    int contrast_begin = 0, contrast_end = -1; // frames with visible vessels, inclusive
    double bpm = 0.0;
};

// ECG trace as a sum of per-beat P/QRS/T bumps plus baseline wander and white
// noise at the configured SNR; truth carries exact bump centers.
std::pair<ecg::ECGTrace, SynthTruth> gen_ecg(const SynthConfig& config);

struct SynthResult {
    bundle::StudyBundle bundle;
    SynthTruth truth;
};

// Full study: dark spline vessels on a bright background, displaced by the
// analytic cardiac phase, modulated by the contrast envelope, optionally
// panned; per-frame annotations and exact labels included.
SynthResult gen_sequence(const SynthConfig& config);

void save_truth(const SynthTruth& truth, const std::filesystem::path& path);
SynthTruth load_truth(const std::filesystem::path& path);

struct DatasetDistribution {
    double hr_lo = 40.0, hr_hi = 120.0;
    std::vector<double> fps_choices = {10.0, 15.0, 30.0};
    double panning_probability = 0.0;
    double snr_lo = 15.0, snr_hi = 30.0;
};

// Writes bundle_0000, bundle_0001, ... each with a truth.json sidecar.
// Deterministic per (config.seed, index).
std::vector<std::filesystem::path> gen_dataset(int count, const SynthConfig& base,
                                               const DatasetDistribution& dist,
                                               const std::filesystem::path& out_dir);

} // namespace cardio::synthcine
