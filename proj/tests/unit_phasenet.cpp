#include <doctest.h>

#include <cmath>

#include "cardio/phasenet.hpp"
#include "cardio/rng.hpp"

using namespace cardio;
using phasenet::PhaseNet;
using phasenet::PhaseNetConfig;

namespace {

PhaseNet small_net() {
    PhaseNetConfig cfg;
    cfg.resolution = 16;
    return PhaseNet(cfg);
}

Tensor random_frame(int size, Rng& rng) {
    Tensor t({1, size, size});
    for (double& v : t.data) v = rng.uniform();
    return t;
}

Tensor random_features(int rows, Rng& rng) {
    Tensor t({rows, 64});
    for (double& v : t.data) v = rng.uniform(-1.0, 1.0);
    return t;
}

} // namespace

TEST_CASE("spatial features: one 64-vector per frame, duplicates identical") {
    const PhaseNet net = small_net();
    ParamStore params = net.init_params(1);
    Rng rng(5);
    std::vector<Tensor> frames;
    for (int i = 0; i < 4; ++i) frames.push_back(random_frame(16, rng));
    frames.push_back(frames[1]); // duplicate

    const auto stack = phasenet::spatial_features(net, params, frames);
    CHECK(stack.features.shape == std::vector<int>{5, 64});
    CHECK(stack.invocations == 5);
    for (int d = 0; d < 64; ++d)
        CHECK(stack.features.data[1 * 64 + d] == stack.features.data[4 * 64 + d]);
}

TEST_CASE("wrong frame resolution raises ShapeError") {
    const PhaseNet net = small_net();
    ParamStore params = net.init_params(1);
    CHECK_THROWS_AS(net.frame_features(params, Tensor({1, 8, 8}), Mode::infer), ShapeError);
}

TEST_CASE("predict_window emits 4 probabilities in (0,1) and checks shape") {
    const PhaseNet net = small_net();
    ParamStore params = net.init_params(2);
    Rng rng(9);
    const Tensor probs = net.predict_window(params, random_features(10, rng), Mode::infer);
    CHECK(probs.shape == std::vector<int>{4});
    for (double p : probs.data) {
        CHECK(p > 0.0);
        CHECK(p < 1.0);
    }
    CHECK_THROWS_AS(net.predict_window(params, random_features(9, rng), Mode::infer), ShapeError);
}

TEST_CASE("temporal stage output is 8x64 before the classifier") {
    const PhaseNet net = small_net();
    const auto shape = net.head().output_shape({10, 64});
    CHECK(shape == std::vector<int>{4});
    // the first head layer alone maps 10x64 to 8x64
    Net temporal("probe", {net.head().layers()[0]});
    CHECK(temporal.output_shape({10, 64}) == std::vector<int>{8, 64});
}

TEST_CASE("sliding window coverage counts match enumeration for M in [10,60]") {
    const PhaseNet net = small_net();
    ParamStore params = net.init_params(3);
    Rng rng(21);
    for (int m : {10, 13, 30, 47, 60}) {
        const auto candidates = phasenet::sliding_window_predict(net, params,
                                                                random_features(m, rng));
        std::vector<int> expected(static_cast<std::size_t>(m), 0);
        for (int w = 0; w + 10 <= m; ++w)
            for (int j = 3; j <= 6; ++j) ++expected[static_cast<std::size_t>(w + j)];
        for (int i = 0; i < m; ++i)
            CHECK(static_cast<int>(candidates[static_cast<std::size_t>(i)].size()) ==
                  expected[static_cast<std::size_t>(i)]);
    }
}

TEST_CASE("M=13 candidate counts are [0,0,0,1,2,3,4,3,2,1,0,0,0]") {
    const PhaseNet net = small_net();
    ParamStore params = net.init_params(4);
    Rng rng(2);
    const auto candidates = phasenet::sliding_window_predict(net, params,
                                                             random_features(13, rng));
    const std::vector<int> expected = {0, 0, 0, 1, 2, 3, 4, 3, 2, 1, 0, 0, 0};
    for (int i = 0; i < 13; ++i)
        CHECK(static_cast<int>(candidates[static_cast<std::size_t>(i)].size()) ==
              expected[static_cast<std::size_t>(i)]);
}

TEST_CASE("sequences shorter than 10 frames are rejected") {
    const PhaseNet net = small_net();
    ParamStore params = net.init_params(4);
    Rng rng(2);
    CHECK_THROWS_AS(phasenet::sliding_window_predict(net, params, random_features(9, rng)),
                    SequenceTooShort);
}

TEST_CASE("aggregation picks the candidate farthest from 0.5") {
    const auto sel = phasenet::aggregate({{0.7, 0.9, 0.45, 0.8}});
    REQUIRE(sel[0].has_value());
    CHECK(*sel[0] == 0.9);
}

TEST_CASE("aggregation tie goes to the earlier window") {
    const auto sel = phasenet::aggregate({{0.1, 0.9}});
    REQUIRE(sel[0].has_value());
    CHECK(*sel[0] == 0.1);
}

TEST_CASE("frames with fewer than two candidates stay absent") {
    const auto sel = phasenet::aggregate({{0.8}, {}, {0.3, 0.4}});
    CHECK_FALSE(sel[0].has_value());
    CHECK_FALSE(sel[1].has_value());
    CHECK(sel[2].has_value());
}

TEST_CASE("aggregation always returns a member of the candidate set") {
    Rng rng(33);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> cand;
        const int n = static_cast<int>(rng.integer(2, 4));
        for (int i = 0; i < n; ++i) cand.push_back(rng.uniform());
        const auto sel = phasenet::aggregate({cand});
        REQUIRE(sel[0].has_value());
        CHECK(std::count(cand.begin(), cand.end(), *sel[0]) >= 1);
        for (double c : cand) CHECK(std::abs(*sel[0] - 0.5) >= std::abs(c - 0.5) - 1e-15);
    }
}

TEST_CASE("upsampling interpolates linearly between selected frames") {
    // 10 fps knots three original frames apart (30 fps)
    const auto probs = phasenet::upsample_probs({{0, 0.0}, {3, 1.0}}, 0, 3);
    REQUIRE(probs.size() == 4);
    CHECK(probs[0] == doctest::Approx(0.0));
    CHECK(probs[1] == doctest::Approx(1.0 / 3.0));
    CHECK(probs[2] == doctest::Approx(2.0 / 3.0));
    CHECK(probs[3] == doctest::Approx(1.0));
}

TEST_CASE("upsampling holds endpoints beyond the outermost knots") {
    const auto probs = phasenet::upsample_probs({{2, 0.4}, {4, 0.8}}, 0, 6);
    CHECK(probs[0] == 0.4);
    CHECK(probs[1] == 0.4);
    CHECK(probs[5] == 0.8);
    CHECK(probs[6] == 0.8);
}

TEST_CASE("upsampling matches brute-force piecewise-linear evaluation") {
    Rng rng(41);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<std::pair<int, double>> knots;
        int pos = static_cast<int>(rng.integer(0, 3));
        const int n_knots = static_cast<int>(rng.integer(2, 8));
        for (int i = 0; i < n_knots; ++i) {
            knots.emplace_back(pos, rng.uniform());
            pos += static_cast<int>(rng.integer(1, 5));
        }
        const int lo = 0, hi = pos + 2;
        const auto probs = phasenet::upsample_probs(knots, lo, hi);
        for (int f = lo; f <= hi; ++f) {
            double expect;
            if (f <= knots.front().first) expect = knots.front().second;
            else if (f >= knots.back().first) expect = knots.back().second;
            else {
                std::size_t s = 0;
                while (knots[s + 1].first < f) ++s;
                const double u = static_cast<double>(f - knots[s].first) /
                                 (knots[s + 1].first - knots[s].first);
                expect = knots[s].second + u * (knots[s + 1].second - knots[s].second);
            }
            CHECK(probs[static_cast<std::size_t>(f - lo)] == doctest::Approx(expect));
        }
    }
    CHECK_THROWS_AS(phasenet::upsample_probs({{0, 0.5}}, 0, 3), SequenceTooShort);
}

TEST_CASE("schmitt automaton matches the hand simulation") {
    CHECK(phasenet::schmitt_filter({0.1, 0.45, 0.7, 0.55, 0.3}, 0.6, 0.4) ==
          std::vector<int>{0, 0, 1, 1, 0});
}

TEST_CASE("values inside the hold band never flip the state") {
    CHECK(phasenet::schmitt_filter({0.55, 0.45, 0.59, 0.41, 0.5}, 0.6, 0.4) ==
          std::vector<int>{1, 1, 1, 1, 1});
    CHECK(phasenet::schmitt_filter({0.45, 0.55, 0.41, 0.59}, 0.6, 0.4) ==
          std::vector<int>{0, 0, 0, 0});
}

TEST_CASE("narrow hysteresis approaches plain thresholding") {
    const double eps = 1e-6;
    const std::vector<double> probs = {0.2, 0.55, 0.45, 0.7, 0.35, 0.5 + 2 * eps};
    const auto out = phasenet::schmitt_filter(probs, 0.5 + eps, 0.5);
    for (std::size_t i = 0; i < probs.size(); ++i)
        CHECK(out[i] == (probs[i] >= 0.5 + eps ? 1 : 0));
}

TEST_CASE("invalid schmitt thresholds are a config error") {
    CHECK_THROWS_AS(phasenet::schmitt_filter({0.5}, 0.4, 0.6), ConfigError);
    CHECK_THROWS_AS(phasenet::schmitt_filter({0.5}, 0.5, 0.5), ConfigError);
}

TEST_CASE("phase loss rewards the correct side of 0.5") {
    CHECK(phasenet::phase_loss(0.7, 1.0) < phasenet::phase_loss(0.3, 1.0));
    CHECK(phasenet::phase_loss(0.999999, 1.0) < 1e-5);
    CHECK(phasenet::phase_loss(1e-9, 0.0) < 1e-8);
    CHECK_THROWS_AS(phasenet::phase_loss(1.0, 1.0), DomainError);
    CHECK_THROWS_AS(phasenet::phase_loss(0.0, 0.0), DomainError);
}

TEST_CASE("phase loss gradient matches finite differences") {
    Rng rng(55);
    for (int trial = 0; trial < 100; ++trial) {
        const double y = rng.bernoulli(0.5) ? (rng.bernoulli(0.5) ? 0.0 : 1.0) : rng.uniform();
        double p = rng.uniform(0.05, 0.95);
        if (std::abs(p - 0.5) < 1e-3) p = 0.55; // keep away from the multiplier step
        const double h = 1e-7;
        const double numeric =
            (phasenet::phase_loss(p + h, y) - phasenet::phase_loss(p - h, y)) / (2.0 * h);
        const double analytic = phasenet::phase_loss_grad(p, y);
        const double denom = std::max({1.0, std::abs(numeric), std::abs(analytic)});
        CHECK(std::abs(numeric - analytic) / denom <= 1e-3);
    }
}

TEST_CASE("augmentation: identity transform returns the frame unchanged") {
    Rng rng(3);
    Tensor frame({1, 16, 16});
    for (double& v : frame.data) v = rng.uniform();
    const Tensor same = phasenet::augment_frame(frame, false, 0.0, 1.0);
    for (std::size_t i = 0; i < frame.data.size(); ++i)
        CHECK(same.data[i] == doctest::Approx(frame.data[i]));
    const Tensor flipped = phasenet::augment_frame(frame, true, 0.0, 1.0);
    CHECK(flipped.data[0] == doctest::Approx(frame.data[15]));
}

TEST_CASE("tiny training run decreases the loss deterministically") {
    // two-frame-state toy problem: bright vs dark windows with matching labels
    PhaseNetConfig cfg;
    cfg.resolution = 16;
    const PhaseNet net(cfg);
    Rng rng(77);
    std::vector<phasenet::PhaseTrainSequence> seqs;
    for (int s = 0; s < 2; ++s) {
        phasenet::PhaseTrainSequence seq;
        for (int f = 0; f < 14; ++f) {
            Tensor frame({1, 16, 16});
            const bool bright = (f / 4) % 2 == 0;
            for (double& v : frame.data)
                v = (bright ? 0.8 : 0.2) + rng.normal(0.0, 0.02);
            seq.frames.push_back(std::move(frame));
            seq.labels.push_back(bright ? 1.0 : 0.0);
        }
        seqs.push_back(std::move(seq));
    }
    phasenet::PhaseTrainConfig tc;
    tc.epochs = 8;
    tc.seed = 3;
    tc.augment = false;
    const auto r1 = phasenet::train_phasenet(net, seqs, tc);
    const auto r2 = phasenet::train_phasenet(net, seqs, tc);
    CHECK(r1.epoch_loss.back() < r1.epoch_loss.front());
    CHECK(r1.epoch_loss == r2.epoch_loss);
    CHECK_THROWS_AS(phasenet::train_phasenet(net, {}, tc), EmptyDataset);
}
