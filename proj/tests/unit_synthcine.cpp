#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "cardio/ecg.hpp"
#include "cardio/metrics.hpp"
#include "cardio/synthcine.hpp"

using namespace cardio;

TEST_CASE("60 bpm over 10 s gives about ten R bumps spaced 1 s apart") {
    synthcine::SynthConfig cfg;
    cfg.heart_rate_bpm = 60.0;
    cfg.duration_s = 10.0;
    cfg.rr_jitter = 0.0;
    cfg.seed = 2;
    const auto [trace, truth] = synthcine::gen_ecg(cfg);
    CHECK(truth.r_samples.size() >= 9);
    CHECK(truth.r_samples.size() <= 11);
    for (std::size_t i = 0; i + 1 < truth.r_samples.size(); ++i)
        CHECK(truth.r_samples[i + 1] - truth.r_samples[i] == doctest::Approx(400.0).epsilon(0.01));
}

TEST_CASE("clean traces put detector peaks within one sample of truth") {
    synthcine::SynthConfig cfg;
    cfg.heart_rate_bpm = 75.0;
    cfg.duration_s = 8.0;
    cfg.ecg_snr_db = 80.0;
    cfg.baseline_wander_mv = 0.0;
    cfg.rr_jitter = 0.0;
    cfg.seed = 3;
    const auto [trace, truth] = synthcine::gen_ecg(cfg);
    const auto peaks = ecg::detect_r_peaks(ecg::bandpass_zero_phase(trace, 3.0, 45.0));
    REQUIRE(peaks.size() == truth.r_samples.size());
    for (std::size_t i = 0; i < peaks.size(); ++i)
        CHECK(std::abs(peaks[i] - truth.r_samples[i]) <= 1);
}

TEST_CASE("same seed reproduces the trace and the frames bit-identically") {
    synthcine::SynthConfig cfg;
    cfg.duration_s = 4.0;
    cfg.seed = 99;
    const auto a = synthcine::gen_sequence(cfg);
    const auto b = synthcine::gen_sequence(cfg);
    CHECK(a.bundle.ecg->samples == b.bundle.ecg->samples);
    CHECK(a.bundle.frames_raw == b.bundle.frames_raw);
    CHECK(a.truth.frame_labels == b.truth.frame_labels);
}

TEST_CASE("frames before fade-in are blank and annotation-free") {
    synthcine::SynthConfig cfg;
    cfg.duration_s = 4.0;
    cfg.fade_in_frame = 5;
    cfg.image_noise_sigma = 0.0;
    cfg.seed = 12;
    const auto result = synthcine::gen_sequence(cfg);
    const int size = cfg.frame_size;
    // frame 0 (blank) vs frame 10 (contrast-filled): the blank one has no dark pixels
    double min_blank = 1e9, min_filled = 1e9;
    for (int i = 0; i < size * size; ++i) {
        min_blank = std::min(min_blank, static_cast<double>(result.bundle.frames_raw[i]));
        min_filled = std::min(
            min_filled,
            static_cast<double>(result.bundle.frames_raw[10 * size * size + i]));
    }
    CHECK(min_blank > 100.0);       // background only
    CHECK(min_filled < min_blank);  // vessels darken the filled frame
    CHECK(result.bundle.annotations[0].vessels.empty());
    CHECK_FALSE(result.bundle.annotations[10].vessels.empty());
}

TEST_CASE("zero motion produces identical frames up to noise") {
    synthcine::SynthConfig cfg;
    cfg.duration_s = 3.0;
    cfg.motion_amplitude_px = 0.0;
    cfg.image_noise_sigma = 0.0;
    cfg.fade_in_frame = 0;
    cfg.fade_out_frame = 29;
    cfg.panning_px_per_frame = 0.0;
    cfg.seed = 8;
    const auto result = synthcine::gen_sequence(cfg);
    const int px = cfg.frame_size * cfg.frame_size;
    for (int f = 1; f < 10; ++f)
        for (int i = 0; i < px; ++i)
            CHECK(result.bundle.frames_raw[static_cast<std::size_t>(f) * px + i] ==
                  result.bundle.frames_raw[static_cast<std::size_t>(i)]);
}

TEST_CASE("generator EDF list equals metrics::edf_frames on the truth labels") {
    for (std::uint64_t seed : {1ULL, 7ULL, 19ULL}) {
        synthcine::SynthConfig cfg;
        cfg.duration_s = 6.0;
        cfg.heart_rate_bpm = 65.0 + 10.0 * static_cast<double>(seed % 3);
        cfg.seed = seed;
        const auto result = synthcine::gen_sequence(cfg);
        CHECK(result.truth.edf_frames ==
              metrics::edf_frames(result.truth.frame_labels, metrics::EdfSource::ground_truth));
    }
}

TEST_CASE("frame labels are exact interval means of the analytic phase") {
    synthcine::SynthConfig cfg;
    cfg.duration_s = 5.0;
    cfg.seed = 4;
    const auto result = synthcine::gen_sequence(cfg);
    for (double v : result.truth.frame_labels) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
    // labels alternate between hard phases with fractional transitions
    long hard = 0;
    for (double v : result.truth.frame_labels) hard += (v == 0.0 || v == 1.0) ? 1 : 0;
    CHECK(hard > static_cast<long>(result.truth.frame_labels.size()) / 2);
}

TEST_CASE("gen_dataset is byte-identical across reruns and recovers heart rates") {
    namespace fs = std::filesystem;
    const auto dir1 = fs::temp_directory_path() / "cardio_ds_a";
    const auto dir2 = fs::temp_directory_path() / "cardio_ds_b";
    fs::remove_all(dir1);
    fs::remove_all(dir2);

    synthcine::SynthConfig base;
    base.duration_s = 6.0;
    base.seed = 42;
    synthcine::DatasetDistribution dist;
    dist.fps_choices = {10.0, 15.0, 30.0};
    const auto paths1 = synthcine::gen_dataset(6, base, dist, dir1);
    const auto paths2 = synthcine::gen_dataset(6, base, dist, dir2);
    REQUIRE(paths1.size() == 6);

    for (std::size_t i = 0; i < paths1.size(); ++i) {
        for (const char* name : {"meta.json", "frames.raw", "ecg.json", "truth.json"}) {
            std::ifstream a(paths1[i] / name, std::ios::binary);
            std::ifstream b(paths2[i] / name, std::ios::binary);
            REQUIRE(a.good());
            REQUIRE(b.good());
            std::string sa((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
            std::string sb((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
            CHECK(sa == sb);
        }
    }

    // detector recovers the configured heart rate within 2 bpm
    for (const auto& p : paths1) {
        const auto b = bundle::load_bundle(p);
        const auto truth = synthcine::load_truth(p / "truth.json");
        REQUIRE(b.ecg.has_value());
        const auto peaks = ecg::detect_peaks(*b.ecg);
        CHECK(std::abs(ecg::heart_rate(peaks.r_peaks, b.ecg->fs) - truth.bpm) <= 2.0);
        // spec contract: 10/15/30 fps all decimate to 10 fps cleanly
        CHECK((b.meta.fps == 10.0 || b.meta.fps == 15.0 || b.meta.fps == 30.0));
    }
    fs::remove_all(dir1);
    fs::remove_all(dir2);
}

TEST_CASE("too-short durations and bad envelopes are config errors") {
    synthcine::SynthConfig cfg;
    cfg.duration_s = 0.5;
    CHECK_THROWS_AS(synthcine::gen_ecg(cfg), ConfigError);
    synthcine::SynthConfig cfg2;
    cfg2.duration_s = 4.0;
    cfg2.fade_in_frame = 30;
    cfg2.fade_out_frame = 20;
    CHECK_THROWS_AS(synthcine::gen_sequence(cfg2), ConfigError);
    synthcine::SynthConfig cfg3;
    cfg3.duration_s = 4.0;
    cfg3.vessel_count = 0;
    CHECK_THROWS_AS(synthcine::gen_sequence(cfg3), ConfigError);
}
