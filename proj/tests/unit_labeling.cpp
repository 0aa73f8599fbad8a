#include <doctest.h>

#include <cmath>

#include "cardio/labeling.hpp"
#include "cardio/rng.hpp"

using namespace cardio;

namespace {

ecg::PhaseSignal make_phase(std::vector<std::uint8_t> values, double fs = 400.0) {
    ecg::PhaseSignal p;
    p.fs = fs;
    p.valid_begin = 0;
    p.valid_end = static_cast<int>(values.size()) - 1;
    p.values = std::move(values);
    return p;
}

} // namespace

TEST_CASE("constant diastole maps to all-1.0 labels") {
    const auto phase = make_phase(std::vector<std::uint8_t>(4000, 1));
    const auto track = labeling::map_phase_to_frames(phase, 10, 10.0);
    CHECK(track.labels.size() == 10);
    for (double v : track.labels) CHECK(v == 1.0);
    CHECK(track.first_frame == 0);
    CHECK(track.last_frame == 9);
}

TEST_CASE("voting labeler matches the worked interval arithmetic") {
    // 1 s at 400 Hz: systole on [0,220), diastole on [220,400); 10 frames
    std::vector<std::uint8_t> values(400, 0);
    for (int i = 220; i < 400; ++i) values[i] = 1;
    const auto track = labeling::map_phase_to_frames(make_phase(values), 10, 10.0);
    for (int i = 0; i <= 4; ++i) CHECK(track.labels[i] == 0.0);
    CHECK(track.labels[5] == 0.5); // samples 200-239: half systole, half diastole
    for (int i = 6; i <= 9; ++i) CHECK(track.labels[i] == 1.0);
}

TEST_CASE("labels equal brute-force per-interval means exactly") {
    Rng rng(42);
    for (int trial = 0; trial < 50; ++trial) {
        const int n_samples = static_cast<int>(rng.integer(50, 2000));
        const int n_frames = static_cast<int>(rng.integer(1, 40));
        std::vector<std::uint8_t> values(static_cast<std::size_t>(n_samples));
        for (auto& v : values) v = rng.bernoulli(0.5) ? 1 : 0;
        const auto track = labeling::map_phase_to_frames(make_phase(values), n_frames, 10.0);

        for (int i = 0; i < n_frames; ++i) {
            const std::int64_t lo = static_cast<std::int64_t>(n_samples) * i / n_frames;
            const std::int64_t hi = static_cast<std::int64_t>(n_samples) * (i + 1) / n_frames;
            double acc = 0.0;
            for (std::int64_t s = lo; s < hi; ++s) acc += values[static_cast<std::size_t>(s)];
            CHECK(track.labels[static_cast<std::size_t>(i)] == acc / static_cast<double>(hi - lo));
        }
    }
}

TEST_CASE("frames outside the valid ECG range are dropped") {
    ecg::PhaseSignal phase;
    phase.fs = 400.0;
    phase.values.assign(400, 1);
    phase.valid_begin = 100;
    phase.valid_end = 299;
    const auto track = labeling::map_phase_to_frames(phase, 10, 10.0);
    // frames cover 40 samples each; only frames fully inside [100,299] survive
    CHECK(track.first_frame == 3);
    CHECK(track.last_frame == 6);
    CHECK(track.labels.size() == 4);

    phase.valid_begin = 395;
    phase.valid_end = 399;
    CHECK_THROWS_AS(labeling::map_phase_to_frames(phase, 10, 10.0), NoOverlap);
}

TEST_CASE("conservation: mean of labels equals mean of the covered phase span") {
    Rng rng(7);
    std::vector<std::uint8_t> values(1200);
    for (auto& v : values) v = rng.bernoulli(0.6) ? 1 : 0;
    const int n_frames = 30; // 40 samples per frame exactly
    const auto track = labeling::map_phase_to_frames(make_phase(values), n_frames, 10.0);
    double label_mean = 0.0;
    for (double v : track.labels) label_mean += v;
    label_mean /= static_cast<double>(track.labels.size());
    double phase_mean = 0.0;
    for (auto v : values) phase_mean += v;
    phase_mean /= static_cast<double>(values.size());
    CHECK(label_mean == doctest::Approx(phase_mean).epsilon(1e-12));
}

TEST_CASE("30 fps decimation retains every third frame") {
    CHECK(labeling::decimation_indices(30, 30.0) ==
          std::vector<int>{0, 3, 6, 9, 12, 15, 18, 21, 24, 27});
}

TEST_CASE("10 fps decimation is the identity") {
    const auto idx = labeling::decimation_indices(12, 10.0);
    CHECK(idx == std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11});
}

TEST_CASE("15 fps decimation follows the stated rounding rule") {
    CHECK(labeling::decimation_indices(15, 15.0) ==
          std::vector<int>{0, 2, 3, 5, 6, 8, 9, 11, 12, 14});
}

TEST_CASE("frame rates below 10 fps are unsupported") {
    CHECK_THROWS_AS(labeling::decimation_indices(30, 7.5), UnsupportedFrameRate);
}

TEST_CASE("decimation is idempotent on an already-10fps track") {
    labeling::FrameLabelTrack track;
    track.fps = 10.0;
    track.first_frame = 5;
    track.last_frame = 16;
    for (int i = 0; i < 12; ++i) track.labels.push_back(i / 12.0);
    const auto resampled = labeling::resample_to_10fps(track);
    CHECK(resampled.labels == track.labels);
    for (std::size_t k = 0; k < resampled.source_frames.size(); ++k)
        CHECK(resampled.source_frames[k] == 5 + static_cast<int>(k));
}

TEST_CASE("window construction yields x-9 windows with targets at 3..6") {
    std::vector<double> labels(10);
    for (int i = 0; i < 10; ++i) labels[static_cast<std::size_t>(i)] = i / 10.0;
    const auto windows = labeling::make_training_windows(labels);
    REQUIRE(windows.size() == 1);
    CHECK(windows[0].start == 0);
    CHECK(windows[0].targets == std::array<double, 4>{0.3, 0.4, 0.5, 0.6});

    CHECK(labeling::make_training_windows(std::vector<double>(8, 0.0)).empty());
    CHECK(labeling::make_training_windows(std::vector<double>(9, 0.0)).empty());
    CHECK(labeling::make_training_windows(std::vector<double>(25, 0.0)).size() == 16);
}

TEST_CASE("window targets are a pure re-indexing of the label track") {
    Rng rng(3);
    std::vector<double> labels(25);
    for (auto& v : labels) v = rng.uniform();
    const auto windows = labeling::make_training_windows(labels);
    for (std::size_t w = 0; w < windows.size(); ++w)
        for (int j = 0; j < 4; ++j)
            CHECK(windows[w].targets[static_cast<std::size_t>(j)] ==
                  labels[w + 3 + static_cast<std::size_t>(j)]);
}
