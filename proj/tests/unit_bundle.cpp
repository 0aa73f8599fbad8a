#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "cardio/bundle.hpp"
#include "cardio/rng.hpp"
#include "cardio/synthcine.hpp"

using namespace cardio;
namespace fs = std::filesystem;

namespace {

bundle::StudyBundle tiny_bundle() {
    bundle::StudyBundle b;
    b.meta.width = 4;
    b.meta.height = 4;
    b.meta.frame_count = 2;
    b.meta.bit_depth = 8;
    b.meta.fps = 15.0;
    b.meta.sequence_id = "tiny";
    b.frames_raw.resize(32);
    for (std::size_t i = 0; i < b.frames_raw.size(); ++i)
        b.frames_raw[i] = static_cast<std::uint8_t>(i * 7);
    return b;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

} // namespace

TEST_CASE("bundle round-trip is byte-identical") {
    const auto dir1 = fs::temp_directory_path() / "cardio_b1";
    const auto dir2 = fs::temp_directory_path() / "cardio_b2";
    fs::remove_all(dir1);
    fs::remove_all(dir2);

    auto b = tiny_bundle();
    b.ecg = ecg::ECGTrace{{0.1, -0.2, 0.3}, 400.0};
    bundle::save_bundle(b, dir1);
    const auto loaded = bundle::load_bundle(dir1);
    bundle::save_bundle(loaded, dir2);

    for (const char* name : {"meta.json", "frames.raw", "ecg.json"})
        CHECK(slurp(dir1 / name) == slurp(dir2 / name));
    CHECK(loaded.frames_raw == b.frames_raw);
    CHECK(loaded.meta.fps == 15.0);
    fs::remove_all(dir1);
    fs::remove_all(dir2);
}

TEST_CASE("a truncated frame blob is a FormatError naming both sizes") {
    const auto dir = fs::temp_directory_path() / "cardio_b3";
    fs::remove_all(dir);
    auto b = tiny_bundle();
    bundle::save_bundle(b, dir);
    {
        std::ofstream out(dir / "frames.raw", std::ios::binary);
        out.write(reinterpret_cast<const char*>(b.frames_raw.data()), 31);
    }
    try {
        bundle::load_bundle(dir);
        FAIL("expected FormatError");
    } catch (const FormatError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("32") != std::string::npos);
        CHECK(msg.find("31") != std::string::npos);
    }
    fs::remove_all(dir);
}

TEST_CASE("missing meta fields are FormatErrors naming the field") {
    const auto dir = fs::temp_directory_path() / "cardio_b4";
    fs::remove_all(dir);
    fs::create_directories(dir);
    {
        std::ofstream out(dir / "meta.json");
        out << "{\"width\":4,\"height\":4,\"frame_count\":1,\"bit_depth\":8}";
        std::ofstream blob(dir / "frames.raw", std::ios::binary);
    }
    try {
        bundle::load_bundle(dir);
        FAIL("expected FormatError");
    } catch (const FormatError& e) {
        CHECK(std::string(e.what()).find("fps") != std::string::npos);
    }
    fs::remove_all(dir);
}

TEST_CASE("synthcine output loads back without modification") {
    const auto dir = fs::temp_directory_path() / "cardio_b5";
    fs::remove_all(dir);
    synthcine::SynthConfig cfg;
    cfg.duration_s = 4.0;
    cfg.seed = 5;
    const auto result = synthcine::gen_sequence(cfg);
    bundle::save_bundle(result.bundle, dir);
    const auto loaded = bundle::load_bundle(dir);
    CHECK(loaded.frames_raw == result.bundle.frames_raw);
    CHECK(loaded.ecg->samples == result.bundle.ecg->samples);
    REQUIRE(loaded.annotations.size() == result.bundle.annotations.size());
    for (std::size_t f = 0; f < loaded.annotations.size(); ++f) {
        REQUIRE(loaded.annotations[f].vessels.size() ==
                result.bundle.annotations[f].vessels.size());
        for (std::size_t v = 0; v < loaded.annotations[f].vessels.size(); ++v)
            CHECK(loaded.annotations[f].vessels[v].size() ==
                  result.bundle.annotations[f].vessels[v].size());
    }
    fs::remove_all(dir);
}

TEST_CASE("16-bit frames decode to [0,1]") {
    bundle::StudyBundle b;
    b.meta.width = 2;
    b.meta.height = 1;
    b.meta.frame_count = 1;
    b.meta.bit_depth = 16;
    b.meta.fps = 10.0;
    b.frames_raw = {0x00, 0x00, 0xff, 0xff}; // 0 and 65535, little-endian
    const Tensor t = bundle::frame_as_tensor(b, 0);
    CHECK(t.data[0] == 0.0);
    CHECK(t.data[1] == 1.0);
}

TEST_CASE("inclusion filter enforces the four criteria") {
    auto b = tiny_bundle();
    b.meta.frame_count = 21;
    b.ecg = ecg::ECGTrace{{0.0}, 400.0};
    const auto ok = bundle::inclusion_filter(b, 16, 2, bundle::PipelineMode::evaluate);
    CHECK(ok.accepted);

    b.meta.frame_count = 20;
    const auto frames = bundle::inclusion_filter(b, 16, 2, bundle::PipelineMode::evaluate);
    CHECK_FALSE(frames.accepted);
    CHECK(frames.reason.find("frame count") != std::string::npos);

    b.meta.frame_count = 21;
    const auto visible = bundle::inclusion_filter(b, 15, 2, bundle::PipelineMode::evaluate);
    CHECK_FALSE(visible.accepted);

    b.ecg.reset();
    const auto ecg_missing = bundle::inclusion_filter(b, 16, 2, bundle::PipelineMode::evaluate);
    CHECK_FALSE(ecg_missing.accepted);
    CHECK(ecg_missing.reason.find("ECG") != std::string::npos);

    // pure prediction only needs the first two criteria
    const auto predict_ok = bundle::inclusion_filter(b, 16, 0, bundle::PipelineMode::predict);
    CHECK(predict_ok.accepted);
}

TEST_CASE("collimation borders are cropped exactly before resize") {
    // 24x24 frames with a 4-pixel static black border and a moving interior
    bundle::StudyBundle b;
    b.meta.width = 24;
    b.meta.height = 24;
    b.meta.frame_count = 3;
    b.meta.bit_depth = 8;
    b.meta.fps = 10.0;
    b.frames_raw.assign(3 * 24 * 24, 0);
    Rng rng(5);
    for (int f = 0; f < 3; ++f)
        for (int y = 4; y < 20; ++y)
            for (int x = 4; x < 20; ++x)
                b.frames_raw[static_cast<std::size_t>(f) * 576 + y * 24 + x] =
                    static_cast<std::uint8_t>(rng.integer(0, 255));

    const auto prep = bundle::preprocess_frames(b, 16);
    CHECK(prep.crop_top == 4);
    CHECK(prep.crop_bottom == 4);
    CHECK(prep.crop_left == 4);
    CHECK(prep.crop_right == 4);
    // interior is 16x16 already: recovered exactly (up to the 1/255 scaling)
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x)
            CHECK(prep.frames[0].data[static_cast<std::size_t>(y) * 16 + x] ==
                  doctest::Approx(b.frames_raw[(y + 4) * 24 + x + 4] / 255.0));
}

TEST_CASE("no border and matching resolution is identity up to normalization") {
    bundle::StudyBundle b;
    b.meta.width = 8;
    b.meta.height = 8;
    b.meta.frame_count = 2;
    b.meta.bit_depth = 8;
    b.meta.fps = 10.0;
    b.frames_raw.resize(128);
    Rng rng(9);
    for (auto& v : b.frames_raw) v = static_cast<std::uint8_t>(rng.integer(0, 255));
    const auto prep = bundle::preprocess_frames(b, 8);
    CHECK(prep.crop_top + prep.crop_bottom + prep.crop_left + prep.crop_right == 0);
    for (int i = 0; i < 64; ++i)
        CHECK(prep.frames[1].data[static_cast<std::size_t>(i)] ==
              doctest::Approx(b.frames_raw[64 + i] / 255.0));
}

TEST_CASE("a higher-resolution input is downscaled to the target") {
    bundle::StudyBundle b;
    b.meta.width = 32;
    b.meta.height = 32;
    b.meta.frame_count = 2;
    b.meta.bit_depth = 8;
    b.meta.fps = 10.0;
    b.frames_raw.resize(2 * 32 * 32);
    Rng rng(10);
    for (auto& v : b.frames_raw) v = static_cast<std::uint8_t>(rng.integer(0, 255));
    const auto prep = bundle::preprocess_frames(b, 16);
    CHECK(prep.frames[0].shape == std::vector<int>{1, 16, 16});
}

TEST_CASE("fully static frames trigger CollimationError") {
    bundle::StudyBundle b;
    b.meta.width = 8;
    b.meta.height = 8;
    b.meta.frame_count = 3;
    b.meta.bit_depth = 8;
    b.meta.fps = 10.0;
    b.frames_raw.assign(3 * 64, 77);
    CHECK_THROWS_AS(bundle::preprocess_frames(b, 8), CollimationError);
}
