#pragma once

#include <array>
#include <vector>

#include "cardio/ecg.hpp"

namespace cardio::labeling {

// Per-frame fractional ground-truth labels over a contiguous frame interval of
// the parent sequence (global indices, inclusive).
struct FrameLabelTrack {
    std::vector<double> labels;
    double fps = 10.0;
    int first_frame = 0;
    int last_frame = -1;

    int frame_count() const { return last_frame - first_frame + 1; }
};

// The phase signal spans the same acquisition as the n_frames frames. It is
// subdivided into n_frames equal sample intervals and each frame's label is
// the mean of the phase samples in its interval (no rounding). Frames whose
// interval is not fully inside the signal's valid range are dropped.
FrameLabelTrack map_phase_to_frames(const ecg::PhaseSignal& phase, int n_frames, double fps);

// Indices retained when decimating n_frames at `fps` to 10 fps: k -> round(k*fps/10).
std::vector<int> decimation_indices(int n_frames, double fps);

// Labels carried with their frames; source_frames maps each output frame back
// to the global index of the original frame it came from.
struct ResampledTrack {
    std::vector<double> labels;
    std::vector<int> source_frames;
    double source_fps = 10.0;
};

ResampledTrack resample_to_10fps(const FrameLabelTrack& track);

// One 10-frame training window; targets are the labels of window positions 3-6.
struct Window {
    int start = 0; // index into the resampled sequence
    std::array<double, 4> targets{};
};

// x frames yield x-9 windows for x >= 10 and none otherwise.
std::vector<Window> make_training_windows(const std::vector<double>& labels10);

} // namespace cardio::labeling
