#include "cardio/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cardio::metrics {

namespace {

// -1 for values exactly at 0.5: they round to neither phase.
int rounded_phase(double v) {
    if (v < 0.5) return 0;
    if (v > 0.5) return 1;
    return -1;
}

bool is_hard(double v) { return v == 0.0 || v == 1.0; }

} // namespace

EvalPair EvalPair::make(std::vector<double> gt, std::vector<int> pred) {
    EvalPair pair;
    pair.eligible = eligibility(gt);
    pair.gt = std::move(gt);
    pair.pred = std::move(pred);
    if (pair.gt.size() != pair.pred.size())
        throw ShapeError("EvalPair: gt and pred lengths differ");
    return pair;
}

std::vector<std::uint8_t> eligibility(const std::vector<double>& gt) {
    const int n = static_cast<int>(gt.size());
    std::vector<std::uint8_t> flags(gt.size(), 0);
    for (int i = 0; i < n; ++i) {
        if (!is_hard(gt[i])) continue;
        const int own = static_cast<int>(gt[i]);
        bool ok = true;
        if (i > 0 && rounded_phase(gt[i - 1]) != own) ok = false;
        if (i + 1 < n && rounded_phase(gt[i + 1]) != own) ok = false;
        flags[static_cast<std::size_t>(i)] = ok ? 1 : 0;
    }
    return flags;
}

Confusion count_confusion(const EvalPair& pair) {
    Confusion c;
    for (std::size_t i = 0; i < pair.gt.size(); ++i) {
        if (!pair.eligible[i] || pair.pred[i] < 0) continue;
        const int gt = static_cast<int>(pair.gt[i]);
        if (gt == 1) {
            pair.pred[i] == 1 ? ++c.tp : ++c.fn;
        } else {
            pair.pred[i] == 1 ? ++c.fp : ++c.tn;
        }
    }
    return c;
}

namespace {

// Rates from one confusion table; denominator-free entries are vacuously 1.
struct RawRates {
    std::optional<double> accuracy, sensitivity, specificity, ppv, npv;
};

RawRates raw_rates(const Confusion& c) {
    RawRates r;
    if (c.total() > 0) r.accuracy = static_cast<double>(c.tp + c.tn) / c.total();
    if (c.tp + c.fn > 0) r.sensitivity = static_cast<double>(c.tp) / (c.tp + c.fn);
    if (c.tn + c.fp > 0) r.specificity = static_cast<double>(c.tn) / (c.tn + c.fp);
    if (c.tp + c.fp > 0) r.ppv = static_cast<double>(c.tp) / (c.tp + c.fp);
    if (c.tn + c.fn > 0) r.npv = static_cast<double>(c.tn) / (c.tn + c.fn);
    return r;
}

double mean_or_one(const std::vector<double>& values) {
    if (values.empty()) return 1.0;
    double acc = 0.0;
    for (double v : values) acc += v;
    return acc / static_cast<double>(values.size());
}

} // namespace

Rates confusion_metrics(const std::vector<EvalPair>& pairs, Weighting weighting) {
    if (pairs.empty()) throw EmptyEvaluation("no evaluation pairs");
    long eligible_total = 0;
    for (const auto& p : pairs) eligible_total += count_confusion(p).total();
    if (eligible_total == 0) throw EmptyEvaluation("no eligible frames in any sequence");

    Rates out;
    if (weighting == Weighting::per_frame) {
        Confusion pooled;
        for (const auto& p : pairs) {
            const Confusion c = count_confusion(p);
            pooled.tp += c.tp;
            pooled.tn += c.tn;
            pooled.fp += c.fp;
            pooled.fn += c.fn;
        }
        const RawRates r = raw_rates(pooled);
        out.accuracy = r.accuracy.value_or(1.0);
        out.sensitivity = r.sensitivity.value_or(1.0);
        out.specificity = r.specificity.value_or(1.0);
        out.ppv = r.ppv.value_or(1.0);
        out.npv = r.npv.value_or(1.0);
        return out;
    }

    std::vector<double> acc, sens, spec, ppv, npv;
    for (const auto& p : pairs) {
        const RawRates r = raw_rates(count_confusion(p));
        if (r.accuracy) acc.push_back(*r.accuracy);
        if (r.sensitivity) sens.push_back(*r.sensitivity);
        if (r.specificity) spec.push_back(*r.specificity);
        if (r.ppv) ppv.push_back(*r.ppv);
        if (r.npv) npv.push_back(*r.npv);
    }
    out.accuracy = mean_or_one(acc);
    out.sensitivity = mean_or_one(sens);
    out.specificity = mean_or_one(spec);
    out.ppv = mean_or_one(ppv);
    out.npv = mean_or_one(npv);
    return out;
}

std::vector<int> edf_frames(const std::vector<double>& labels, EdfSource source) {
    std::vector<int> edfs;
    for (std::size_t i = 0; i + 1 < labels.size(); ++i) {
        if (labels[i] != 1.0) continue;
        const double next = labels[i + 1];
        const bool is_edf =
            source == EdfSource::prediction ? next == 0.0 : (next >= 0.0 && next < 1.0);
        if (is_edf) edfs.push_back(static_cast<int>(i));
    }
    return edfs;
}

EdfScores edf_match(const std::vector<int>& pred_edfs, const std::vector<int>& gt_edfs, int tol) {
    EdfScores s;
    s.n_pred = static_cast<long>(pred_edfs.size());
    s.n_gt = static_cast<long>(gt_edfs.size());
    std::vector<bool> used(gt_edfs.size(), false);
    for (int p : pred_edfs) {
        int best = -1;
        for (std::size_t g = 0; g < gt_edfs.size(); ++g) {
            if (used[g] || std::abs(gt_edfs[g] - p) > tol) continue;
            if (best < 0 || std::abs(gt_edfs[g] - p) < std::abs(gt_edfs[static_cast<std::size_t>(best)] - p))
                best = static_cast<int>(g);
        }
        if (best >= 0) {
            used[static_cast<std::size_t>(best)] = true;
            ++s.matched;
        }
    }
    s.precision = s.n_pred == 0 ? 1.0 : static_cast<double>(s.matched) / s.n_pred;
    s.recall = s.n_gt == 0 ? 1.0 : static_cast<double>(s.matched) / s.n_gt;
    s.f1 = s.precision + s.recall > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
                                        : 0.0;
    return s;
}

namespace {

struct Transition {
    double position; // midpoint between the two definite frames
    bool sys_to_dia;
};

std::vector<Transition> gt_transitions(const std::vector<double>& gt) {
    std::vector<Transition> out;
    int prev_idx = -1, prev_val = -1;
    for (std::size_t i = 0; i < gt.size(); ++i) {
        const int v = rounded_phase(gt[i]);
        if (v < 0) continue;
        if (prev_val >= 0 && v != prev_val)
            out.push_back({(prev_idx + static_cast<double>(i)) / 2.0, prev_val == 0});
        prev_idx = static_cast<int>(i);
        prev_val = v;
    }
    return out;
}

} // namespace

TransitionSplit transition_error_split(const std::vector<EvalPair>& pairs) {
    long sd = 0, ds = 0;
    for (const auto& pair : pairs) {
        const auto transitions = gt_transitions(pair.gt);
        if (transitions.empty()) continue;
        for (std::size_t i = 0; i < pair.gt.size(); ++i) {
            if (!pair.eligible[i] || pair.pred[i] < 0) continue;
            if (pair.pred[i] == static_cast<int>(pair.gt[i])) continue;
            const Transition* nearest = nullptr;
            double best_dist = 0.0;
            for (const auto& t : transitions) {
                const double dist = std::abs(static_cast<double>(i) - t.position);
                // ties keep the preceding transition (scanned in order)
                if (!nearest || dist < best_dist) {
                    nearest = &t;
                    best_dist = dist;
                }
            }
            nearest->sys_to_dia ? ++sd : ++ds;
        }
    }
    TransitionSplit split;
    split.error_count = sd + ds;
    if (split.error_count > 0) {
        split.present = true;
        split.sys_to_dia = static_cast<double>(sd) / split.error_count;
        split.dia_to_sys = static_cast<double>(ds) / split.error_count;
    }
    return split;
}

std::vector<HrBin> heart_rate_bins(const std::vector<double>& per_seq_accuracy,
                                   const std::vector<double>& bpm) {
    if (per_seq_accuracy.size() != bpm.size())
        throw ShapeError("heart_rate_bins: accuracy and bpm lengths differ");
    const double edges[] = {30.0, 55.0, 65.0, 75.0, 85.0, 95.0};
    std::vector<HrBin> bins;
    for (int i = 0; i < 6; ++i)
        bins.push_back({edges[i], i + 1 < 6 ? edges[i + 1] : -1.0, 0, 0.0, std::nullopt});
    bins.push_back({-1.0, 30.0, 0, 0.0, std::nullopt}); // out of range (< 30 bpm)

    std::vector<double> sums(bins.size(), 0.0);
    std::vector<long> with_acc(bins.size(), 0);
    for (std::size_t i = 0; i < bpm.size(); ++i) {
        std::size_t b = bins.size() - 1;
        if (bpm[i] >= 95.0) b = 5;
        else if (bpm[i] >= 30.0)
            for (std::size_t j = 0; j + 1 < 6; ++j)
                if (bpm[i] >= edges[j] && bpm[i] < edges[j + 1]) b = j;
        ++bins[b].count;
        if (!std::isnan(per_seq_accuracy[i])) {
            sums[b] += per_seq_accuracy[i];
            ++with_acc[b];
        }
    }
    const long total = static_cast<long>(bpm.size());
    for (std::size_t b = 0; b < bins.size(); ++b) {
        bins[b].share = total > 0 ? static_cast<double>(bins[b].count) / total : 0.0;
        if (with_acc[b] > 0) bins[b].mean_accuracy = sums[b] / with_acc[b];
    }
    return bins;
}

MetricReport evaluate(const std::vector<EvalPair>& pairs,
                      const std::vector<std::vector<int>>& pred_edfs,
                      const std::vector<std::vector<int>>& gt_edfs, int edf_tol) {
    if (pairs.size() != pred_edfs.size() || pairs.size() != gt_edfs.size())
        throw ShapeError("evaluate: pair/EDF list sizes differ");

    MetricReport report;
    report.sequences = static_cast<long>(pairs.size());
    report.per_angiography = confusion_metrics(pairs, Weighting::per_angiography);
    report.per_frame = confusion_metrics(pairs, Weighting::per_frame);
    report.transitions = transition_error_split(pairs);

    EdfScores pooled;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const EdfScores s = edf_match(pred_edfs[i], gt_edfs[i], edf_tol);
        pooled.matched += s.matched;
        pooled.n_pred += s.n_pred;
        pooled.n_gt += s.n_gt;
    }
    pooled.precision = pooled.n_pred == 0 ? 1.0 : static_cast<double>(pooled.matched) / pooled.n_pred;
    pooled.recall = pooled.n_gt == 0 ? 1.0 : static_cast<double>(pooled.matched) / pooled.n_gt;
    pooled.f1 = pooled.precision + pooled.recall > 0.0
                    ? 2.0 * pooled.precision * pooled.recall / (pooled.precision + pooled.recall)
                    : 0.0;
    report.edf = pooled;

    for (const auto& pair : pairs) {
        const Confusion c = count_confusion(pair);
        report.eligible_frames += c.total();
        report.per_seq_accuracy.push_back(
            c.total() > 0 ? static_cast<double>(c.tp + c.tn) / c.total()
                          : std::numeric_limits<double>::quiet_NaN());
        report.per_seq_id.push_back(pair.id);
        report.per_seq_bpm.push_back(pair.bpm);
    }
    report.hr_bins = heart_rate_bins(report.per_seq_accuracy, report.per_seq_bpm);
    return report;
}

} // namespace cardio::metrics
