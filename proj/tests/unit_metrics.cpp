#include <doctest.h>

#include <cmath>

#include "cardio/metrics.hpp"
#include "cardio/rng.hpp"

using namespace cardio;
using metrics::EvalPair;

TEST_CASE("eligibility excludes intermediates and transition-adjacent frames") {
    const auto flags = metrics::eligibility({1, 1, 1, 0.5, 0, 0});
    CHECK(flags == std::vector<std::uint8_t>{1, 1, 0, 0, 0, 1});
}

TEST_CASE("constant ground truth is fully eligible") {
    CHECK(metrics::eligibility({1, 1, 1, 1}) == std::vector<std::uint8_t>{1, 1, 1, 1});
}

TEST_CASE("a bare transition excludes both frames") {
    CHECK(metrics::eligibility({1, 0}) == std::vector<std::uint8_t>{0, 0});
}

TEST_CASE("perfect predictions give all rates 1.0 under both weightings") {
    std::vector<EvalPair> pairs;
    pairs.push_back(EvalPair::make({1, 1, 1, 1, 0, 0, 0}, {1, 1, 1, 1, 0, 0, 0}));
    pairs.push_back(EvalPair::make({0, 0, 0, 1, 1, 1, 1}, {0, 0, 0, 1, 1, 1, 1}));
    for (auto weighting : {metrics::Weighting::per_angiography, metrics::Weighting::per_frame}) {
        const auto r = metrics::confusion_metrics(pairs, weighting);
        CHECK(r.accuracy == 1.0);
        CHECK(r.sensitivity == 1.0);
        CHECK(r.specificity == 1.0);
        CHECK(r.ppv == 1.0);
        CHECK(r.npv == 1.0);
    }
}

TEST_CASE("the two weightings match the worked example") {
    // sequence A: 10 eligible frames, accuracy 1.0
    // sequence B: 30 eligible frames, accuracy 0.5
    std::vector<EvalPair> pairs;
    {
        std::vector<double> gt(10, 1.0);
        std::vector<int> pred(10, 1);
        pairs.push_back(EvalPair::make(gt, pred));
    }
    {
        std::vector<double> gt(30, 1.0);
        std::vector<int> pred(30, 1);
        for (int i = 0; i < 15; ++i) pred[static_cast<std::size_t>(i)] = 0;
        pairs.push_back(EvalPair::make(gt, pred));
    }
    CHECK(metrics::confusion_metrics(pairs, metrics::Weighting::per_angiography).accuracy ==
          doctest::Approx(0.75));
    CHECK(metrics::confusion_metrics(pairs, metrics::Weighting::per_frame).accuracy ==
          doctest::Approx(0.625));
}

TEST_CASE("weighting equivalence for identical per-sequence tables") {
    std::vector<EvalPair> pairs;
    for (int s = 0; s < 3; ++s) {
        std::vector<double> gt = {1, 1, 1, 1, 0, 0, 0, 0};
        std::vector<int> pred = {1, 1, 1, 0, 0, 0, 1, 0};
        pairs.push_back(EvalPair::make(gt, pred));
    }
    const auto a = metrics::confusion_metrics(pairs, metrics::Weighting::per_angiography);
    const auto b = metrics::confusion_metrics(pairs, metrics::Weighting::per_frame);
    CHECK(a.accuracy == b.accuracy);
    CHECK(a.sensitivity == b.sensitivity);
    CHECK(a.specificity == b.specificity);
    CHECK(a.ppv == b.ppv);
    CHECK(a.npv == b.npv);
}

TEST_CASE("no eligible frames raises EmptyEvaluation") {
    std::vector<EvalPair> pairs;
    pairs.push_back(EvalPair::make({0.5, 0.4, 0.6}, {1, 1, 1}));
    CHECK_THROWS_AS(metrics::confusion_metrics(pairs, metrics::Weighting::per_frame),
                    EmptyEvaluation);
}

TEST_CASE("prediction EDFs are diastole followed by systole") {
    CHECK(metrics::edf_frames({1, 1, 0, 0, 1, 1, 1, 0}, metrics::EdfSource::prediction) ==
          std::vector<int>{1, 6});
    CHECK(metrics::edf_frames({1, 1, 1}, metrics::EdfSource::prediction).empty());
}

TEST_CASE("ground-truth EDFs accept transition frames as followers") {
    CHECK(metrics::edf_frames({1, 0.3, 0, 1}, metrics::EdfSource::ground_truth) ==
          std::vector<int>{0});
}

TEST_CASE("edf matching within tolerance") {
    const auto s = metrics::edf_match({5, 20}, {6, 20}, 1);
    CHECK(s.precision == 1.0);
    CHECK(s.recall == 1.0);
    CHECK(s.f1 == 1.0);

    const auto miss = metrics::edf_match({5}, {8}, 1);
    CHECK(miss.precision == 0.0);
    CHECK(miss.recall == 0.0);

    const auto empty = metrics::edf_match({}, {}, 1);
    CHECK(empty.precision == 1.0);
    CHECK(empty.recall == 1.0);
    CHECK(empty.f1 == 1.0);
}

TEST_CASE("edf matching is one-to-one") {
    // two predictions near one ground truth: only one may match
    const auto s = metrics::edf_match({9, 10}, {10}, 1);
    CHECK(s.matched == 1);
    CHECK(s.precision == doctest::Approx(0.5));
    CHECK(s.recall == 1.0);
}

TEST_CASE("edf match swaps precision and recall when pred/gt swap") {
    Rng rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<int> a, b;
        int pos = 0;
        for (int i = 0; i < 6; ++i) {
            pos += static_cast<int>(rng.integer(2, 10));
            if (rng.bernoulli(0.7)) a.push_back(pos);
            if (rng.bernoulli(0.7)) b.push_back(pos + static_cast<int>(rng.integer(-2, 2)));
        }
        const auto ab = metrics::edf_match(a, b, 1);
        const auto ba = metrics::edf_match(b, a, 1);
        CHECK(ab.precision == doctest::Approx(ba.recall));
        CHECK(ab.recall == doctest::Approx(ba.precision));
    }
}

TEST_CASE("greedy matching agrees with brute-force optimal when EDFs are sparse") {
    // brute force: maximum bipartite matching by trying all assignments
    auto brute_force = [](const std::vector<int>& pred, const std::vector<int>& gt, int tol) {
        long best = 0;
        const int np = static_cast<int>(pred.size());
        std::vector<int> assign(static_cast<std::size_t>(np), -1);
        auto rec = [&](auto&& self, int i, std::vector<bool>& used, long matched) -> void {
            if (i == np) {
                best = std::max(best, matched);
                return;
            }
            self(self, i + 1, used, matched);
            for (std::size_t g = 0; g < gt.size(); ++g)
                if (!used[g] && std::abs(gt[g] - pred[static_cast<std::size_t>(i)]) <= tol) {
                    used[g] = true;
                    self(self, i + 1, used, matched + 1);
                    used[g] = false;
                }
        };
        std::vector<bool> used(gt.size(), false);
        rec(rec, 0, used, 0);
        return best;
    };

    Rng rng(5);
    for (int trial = 0; trial < 60; ++trial) {
        std::vector<int> pred, gt;
        int pos = 0;
        for (int i = 0; i < 5; ++i) {
            pos += static_cast<int>(rng.integer(3, 12)); // gaps >= 3
            if (rng.bernoulli(0.8)) gt.push_back(pos);
            if (rng.bernoulli(0.8)) pred.push_back(pos + static_cast<int>(rng.integer(-1, 1)));
        }
        const auto greedy = metrics::edf_match(pred, gt, 1);
        CHECK(greedy.matched == brute_force(pred, gt, 1));
    }
}

TEST_CASE("transition split attributes errors to the nearest transition") {
    // S->D transition between frames 2|3, D->S between 6|7
    std::vector<double> gt = {0, 0, 0, 1, 1, 1, 1, 0, 0, 0};
    std::vector<int> p(gt.size());
    for (std::size_t i = 0; i < gt.size(); ++i) p[i] = static_cast<int>(gt[i]);
    p[4] = 0; // eligible frame near the S->D transition misclassified
    std::vector<EvalPair> pairs{EvalPair::make(gt, p)};
    const auto split = metrics::transition_error_split(pairs);
    CHECK(split.present);
    CHECK(split.sys_to_dia == 1.0);
    CHECK(split.dia_to_sys == 0.0);
}

TEST_CASE("one error near each transition type splits 50/50") {
    std::vector<double> gt = {0, 0, 0, 1, 1, 1, 1, 0, 0, 0};
    std::vector<int> p(gt.size());
    for (std::size_t i = 0; i < gt.size(); ++i) p[i] = static_cast<int>(gt[i]);
    p[4] = 0; // near S->D
    p[5] = 0; // near D->S
    std::vector<EvalPair> pairs{EvalPair::make(gt, p)};
    const auto split = metrics::transition_error_split(pairs);
    CHECK(split.sys_to_dia == doctest::Approx(0.5));
    CHECK(split.dia_to_sys == doctest::Approx(0.5));
}

TEST_CASE("zero errors reports an absent split") {
    std::vector<double> gt = {0, 0, 1, 1};
    std::vector<int> p = {0, 0, 1, 1};
    std::vector<EvalPair> pairs{EvalPair::make(gt, p)};
    CHECK_FALSE(metrics::transition_error_split(pairs).present);
}

TEST_CASE("heart-rate bins follow the table edges with boundaries going up") {
    std::vector<double> acc = {0.9, 0.8, 0.7, 0.6, 0.95};
    std::vector<double> bpm = {60.0, 95.0, 54.9, 29.0, 65.0};
    const auto bins = metrics::heart_rate_bins(acc, bpm);
    REQUIRE(bins.size() == 7);
    CHECK(bins[1].count == 1);                   // 60 -> [55,65)
    CHECK(bins[5].count == 1);                   // 95 -> >= 95 (upper bin)
    CHECK(bins[0].count == 1);                   // 54.9 -> [30,55)
    CHECK(bins[6].count == 1);                   // 29 -> out of range
    CHECK(bins[2].count == 1);                   // 65 -> [65,75)
    CHECK(bins[2].mean_accuracy == doctest::Approx(0.95));
    CHECK(bins[3].count == 0);
    CHECK_FALSE(bins[3].mean_accuracy.has_value()); // empty bin: accuracy absent
}

TEST_CASE("rates are invariant under sequence reordering") {
    Rng rng(13);
    std::vector<EvalPair> pairs;
    for (int s = 0; s < 6; ++s) {
        std::vector<double> gt;
        std::vector<int> pred;
        int phase = 0;
        for (int i = 0; i < 40; ++i) {
            if (rng.bernoulli(0.15)) phase = 1 - phase;
            gt.push_back(phase);
            pred.push_back(rng.bernoulli(0.9) ? phase : 1 - phase);
        }
        pairs.push_back(EvalPair::make(gt, pred));
    }
    const auto fwd = metrics::confusion_metrics(pairs, metrics::Weighting::per_angiography);
    std::reverse(pairs.begin(), pairs.end());
    const auto rev = metrics::confusion_metrics(pairs, metrics::Weighting::per_angiography);
    CHECK(fwd.accuracy == doctest::Approx(rev.accuracy).epsilon(1e-15));
    CHECK(fwd.sensitivity == doctest::Approx(rev.sensitivity).epsilon(1e-15));
}

TEST_CASE("frames without predictions are left out of the counts") {
    std::vector<double> gt = {1, 1, 1, 1};
    std::vector<int> pred = {-1, 1, 1, -1};
    const auto pair = EvalPair::make(gt, pred);
    const auto c = metrics::count_confusion(pair);
    CHECK(c.tp == 2);
    CHECK(c.total() == 2);
}
