#include "cardio/labeling.hpp"

#include <cmath>

namespace cardio::labeling {

FrameLabelTrack map_phase_to_frames(const ecg::PhaseSignal& phase, int n_frames, double fps) {
    if (n_frames <= 0) throw ConfigError("map_phase_to_frames: n_frames must be positive");
    const std::int64_t n_samples = static_cast<std::int64_t>(phase.values.size());

    FrameLabelTrack track;
    track.fps = fps;
    track.first_frame = -1;
    track.last_frame = -2;

    for (int i = 0; i < n_frames; ++i) {
        const std::int64_t lo = n_samples * i / n_frames;
        const std::int64_t hi = n_samples * (i + 1) / n_frames;
        if (lo < phase.valid_begin || hi - 1 > phase.valid_end || hi <= lo) {
            if (track.first_frame >= 0) break; // valid range is contiguous
            continue;
        }
        double acc = 0.0;
        for (std::int64_t s = lo; s < hi; ++s) acc += phase.values[static_cast<std::size_t>(s)];
        if (track.first_frame < 0) track.first_frame = i;
        track.last_frame = i;
        track.labels.push_back(acc / static_cast<double>(hi - lo));
    }
    if (track.first_frame < 0)
        throw NoOverlap("no frame interval lies inside the ECG valid range");
    return track;
}

std::vector<int> decimation_indices(int n_frames, double fps) {
    if (fps < 10.0) throw UnsupportedFrameRate("frame rate " + std::to_string(fps) + " < 10 fps");
    std::vector<int> idx;
    for (int k = 0;; ++k) {
        const int src = static_cast<int>(std::lround(k * fps / 10.0));
        if (src > n_frames - 1) break;
        idx.push_back(src);
    }
    return idx;
}

ResampledTrack resample_to_10fps(const FrameLabelTrack& track) {
    ResampledTrack out;
    out.source_fps = track.fps;
    for (int local : decimation_indices(track.frame_count(), track.fps)) {
        out.labels.push_back(track.labels[static_cast<std::size_t>(local)]);
        out.source_frames.push_back(track.first_frame + local);
    }
    return out;
}

std::vector<Window> make_training_windows(const std::vector<double>& labels10) {
    std::vector<Window> windows;
    const int x = static_cast<int>(labels10.size());
    if (x < 10) return windows; // covers x == 9: no window is generated
    for (int w = 0; w + 10 <= x; ++w) {
        Window win;
        win.start = w;
        for (int j = 0; j < 4; ++j) win.targets[static_cast<std::size_t>(j)] = labels10[w + 3 + j];
        windows.push_back(win);
    }
    return windows;
}

} // namespace cardio::labeling
