#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cardio/errors.hpp"

namespace cardio::metrics {

// Diastole (label 1) is the positive class in every rate below.

// One evaluated sequence: fractional ground truth, binary predictions (-1
// where no prediction exists) and the exclusion flags.
struct EvalPair {
    std::vector<double> gt;
    std::vector<int> pred;
    std::vector<std::uint8_t> eligible;
    double bpm = 0.0;
    std::string id;

    static EvalPair make(std::vector<double> gt, std::vector<int> pred);
};

// A frame is eligible iff its label is exactly 0 or 1 and no +-1 neighbour
// rounds to a different phase (values at exactly 0.5 round to neither, so
// they exclude both neighbours).
std::vector<std::uint8_t> eligibility(const std::vector<double>& gt);

struct Confusion {
    long tp = 0, tn = 0, fp = 0, fn = 0;
    long total() const { return tp + tn + fp + fn; }
};

Confusion count_confusion(const EvalPair& pair);

struct Rates {
    double accuracy = 0.0, sensitivity = 0.0, specificity = 0.0, ppv = 0.0, npv = 0.0;
};

enum class Weighting { per_angiography, per_frame };

// per_angiography: rates per sequence, then an unweighted mean (sequences
// where a rate is undefined are left out of that rate's mean).
// per_frame: all eligible frames pooled, rates computed once.
Rates confusion_metrics(const std::vector<EvalPair>& pairs, Weighting weighting);

enum class EdfSource { prediction, ground_truth };

// prediction: diastolic frame followed by a systolic frame.
// ground_truth: diastolic frame followed by a transition or systolic frame.
std::vector<int> edf_frames(const std::vector<double>& labels, EdfSource source);

struct EdfScores {
    double precision = 1.0, recall = 1.0, f1 = 1.0;
    long matched = 0, n_pred = 0, n_gt = 0;
};

// Greedy one-to-one matching in increasing prediction order; a prediction
// takes the nearest unmatched ground truth within +-tol frames.
EdfScores edf_match(const std::vector<int>& pred_edfs, const std::vector<int>& gt_edfs,
                    int tol = 1);

struct TransitionSplit {
    bool present = false;        // false when there were no errors
    double sys_to_dia = 0.0;     // fraction of errors nearest an S->D transition
    double dia_to_sys = 0.0;
    long error_count = 0;
};

// Each misclassified eligible frame is attributed to the nearest ground-truth
// transition (ties go to the preceding transition).
TransitionSplit transition_error_split(const std::vector<EvalPair>& pairs);

struct HrBin {
    double lo = 0.0, hi = 0.0; // [lo, hi), hi <= 0 means open-ended
    long count = 0;
    double share = 0.0;
    std::optional<double> mean_accuracy;
};

// Bins [30,55), [55,65), [65,75), [75,85), [85,95), [95,inf); bpm below 30
// lands in a separate out-of-range bucket appended at the end.
std::vector<HrBin> heart_rate_bins(const std::vector<double>& per_seq_accuracy,
                                   const std::vector<double>& bpm);

struct MetricReport {
    Rates per_angiography;
    Rates per_frame;
    EdfScores edf;
    TransitionSplit transitions;
    std::vector<HrBin> hr_bins;
    long sequences = 0;
    long eligible_frames = 0;
    std::vector<double> per_seq_accuracy;
    std::vector<std::string> per_seq_id;
    std::vector<double> per_seq_bpm;
};

// pred/gt EDF lists per sequence accompany the frame-level pairs.
MetricReport evaluate(const std::vector<EvalPair>& pairs,
                      const std::vector<std::vector<int>>& pred_edfs,
                      const std::vector<std::vector<int>>& gt_edfs, int edf_tol = 1);

} // namespace cardio::metrics
