#include "cardio/ecg.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace cardio::ecg {

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> hamming_window(int n) {
    std::vector<double> w(n);
    for (int i = 0; i < n; ++i)
        w[i] = 0.54 - 0.46 * std::cos(2.0 * kPi * i / (n - 1));
    return w;
}

// Windowed-sinc low-pass kernel normalised to unit DC gain.
std::vector<double> lowpass_kernel(double cutoff_hz, double fs, int taps) {
    const double fc = cutoff_hz / fs;
    const int m = (taps - 1) / 2;
    auto w = hamming_window(taps);
    std::vector<double> h(taps);
    double sum = 0.0;
    for (int i = 0; i < taps; ++i) {
        const int k = i - m;
        const double s = k == 0 ? 2.0 * fc : std::sin(2.0 * kPi * fc * k) / (kPi * k);
        h[i] = s * w[i];
        sum += h[i];
    }
    for (double& v : h) v /= sum;
    return h;
}

// Symmetric "same" convolution with reflection padding at both ends.
std::vector<double> conv_same_reflect(const std::vector<double>& x, const std::vector<double>& h) {
    const int n = static_cast<int>(x.size());
    const int m = (static_cast<int>(h.size()) - 1) / 2;
    auto sample = [&](int i) {
        if (i < 0) i = -i;                      // reflect around 0
        if (i >= n) i = 2 * (n - 1) - i;        // reflect around n-1
        return x[static_cast<std::size_t>(std::clamp(i, 0, n - 1))];
    };
    std::vector<double> y(x.size());
    for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int k = 0; k < static_cast<int>(h.size()); ++k) acc += h[k] * sample(i + k - m);
        y[i] = acc;
    }
    return y;
}

ECGTrace apply_zero_phase(const ECGTrace& trace, const std::vector<double>& h) {
    if (trace.samples.size() < h.size())
        throw SignalTooShort("trace has " + std::to_string(trace.samples.size()) +
                             " samples, filter needs " + std::to_string(h.size()));
    // forward pass, then the same filter over the reversed signal
    std::vector<double> y = conv_same_reflect(trace.samples, h);
    std::reverse(y.begin(), y.end());
    y = conv_same_reflect(y, h);
    std::reverse(y.begin(), y.end());
    return {std::move(y), trace.fs};
}

int default_taps(double fs, double seconds) {
    int taps = static_cast<int>(std::lround(seconds * fs));
    if (taps % 2 == 0) ++taps;
    return std::max(taps, 5);
}

// Strict local extrema with plateau handling: a flat run is an extremum when
// both sides fall (max) or both rise (min); the run's first index is reported.
struct Extremum {
    int index;
    bool is_max;
};

std::vector<Extremum> local_extrema(const std::vector<double>& s, int begin, int end) {
    std::vector<Extremum> out;
    int i = begin + 1;
    while (i < end - 1) {
        if (s[i] == s[i - 1]) {
            ++i;
            continue;
        }
        int j = i;
        while (j + 1 < end && s[j + 1] == s[i]) ++j; // plateau [i, j]
        if (j + 1 >= end) break;
        const bool rising_in = s[i] > s[i - 1];
        const bool falling_out = s[j + 1] < s[j];
        if (rising_in && falling_out) out.push_back({i, true});
        else if (!rising_in && !falling_out) out.push_back({i, false});
        i = j + 1;
    }
    return out;
}

} // namespace

ECGTrace bandpass_zero_phase(const ECGTrace& trace, double lo_hz, double hi_hz, int taps) {
    if (!(0.0 < lo_hz && lo_hz < hi_hz && hi_hz < trace.fs / 2.0))
        throw ConfigError("band-pass corners must satisfy 0 < lo < hi < fs/2");
    // 0.75 s of taps: the low corner sits at a few Hz, so the transition band
    // has to be narrow enough to actually reject baseline wander below it.
    if (taps < 0) taps = default_taps(trace.fs, 0.75);
    auto lp_hi = lowpass_kernel(hi_hz, trace.fs, taps);
    auto lp_lo = lowpass_kernel(lo_hz, trace.fs, taps);
    std::vector<double> h(taps);
    for (int i = 0; i < taps; ++i) h[i] = lp_hi[i] - lp_lo[i];
    return apply_zero_phase(trace, h);
}

ECGTrace lowpass_zero_phase(const ECGTrace& trace, double cutoff_hz, int taps) {
    if (!(0.0 < cutoff_hz && cutoff_hz < trace.fs / 2.0))
        throw ConfigError("low-pass cutoff must satisfy 0 < cutoff < fs/2");
    if (taps < 0) taps = default_taps(trace.fs, 0.5);
    return apply_zero_phase(trace, lowpass_kernel(cutoff_hz, trace.fs, taps));
}

std::vector<int> detect_r_peaks(const ECGTrace& filtered) {
    const auto& x = filtered.samples;
    const double fs = filtered.fs;
    const int n = static_cast<int>(x.size());
    if (n < static_cast<int>(2 * fs))
        throw SignalTooShort("need at least 2 s of signal for R-peak detection");

    // squared central-difference derivative
    std::vector<double> energy(x.size(), 0.0);
    for (int i = 1; i + 1 < n; ++i) {
        const double d = (x[i + 1] - x[i - 1]) * 0.5 * fs;
        energy[i] = d * d;
    }
    // moving-window integration, centered, 150 ms
    const int win = std::max(1, static_cast<int>(std::lround(0.15 * fs)));
    std::vector<double> integ(x.size(), 0.0);
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        acc += energy[i];
        if (i - win >= 0) acc -= energy[i - win];
        const int center = i - win / 2;
        if (center >= 0) integ[center] = acc / win;
    }

    const int refractory = static_cast<int>(std::lround(0.2 * fs));

    auto run_detection = [&](double thr_scale) {
        // adaptive threshold seeded from the first two seconds
        const int seed_len = std::min(n, static_cast<int>(2 * fs));
        double spk = *std::max_element(integ.begin(), integ.begin() + seed_len);
        double npk = 0.0;
        for (int i = 0; i < seed_len; ++i) npk += integ[i];
        npk /= seed_len;
        double thr = (npk + 0.25 * (spk - npk)) * thr_scale;

        std::vector<int> peaks;
        for (int i = 1; i + 1 < n; ++i) {
            if (!(integ[i] > integ[i - 1] && integ[i] >= integ[i + 1])) continue;
            if (integ[i] > thr) {
                if (!peaks.empty() && i - peaks.back() < refractory) {
                    if (integ[i] > integ[peaks.back()]) peaks.back() = i;
                } else {
                    peaks.push_back(i);
                }
                spk = 0.125 * integ[i] + 0.875 * spk;
            } else {
                npk = 0.125 * integ[i] + 0.875 * npk;
            }
            thr = (npk + 0.25 * (spk - npk)) * thr_scale;
        }
        return peaks;
    };

    std::vector<int> peaks = run_detection(1.0);
    if (peaks.size() < 2) peaks = run_detection(0.4);
    if (peaks.size() < 2)
        throw InsufficientBeats("fewer than 2 R peaks detected");

    // refine each detection to the absolute maximum of the QRS complex
    const int refine = static_cast<int>(std::lround(0.1 * fs));
    std::vector<int> refined;
    for (int p : peaks) {
        const int lo = std::max(0, p - refine);
        const int hi = std::min(n, p + refine + 1);
        int best = lo;
        for (int i = lo; i < hi; ++i)
            if (std::abs(x[i]) > std::abs(x[best])) best = i;
        refined.push_back(best);
    }
    std::sort(refined.begin(), refined.end());
    refined.erase(std::unique(refined.begin(), refined.end()), refined.end());

    // enforce refractory spacing on refined locations, keeping the larger complex
    std::vector<int> out;
    for (int p : refined) {
        if (!out.empty() && p - out.back() < refractory) {
            if (std::abs(x[p]) > std::abs(x[out.back()])) out.back() = p;
        } else {
            out.push_back(p);
        }
    }
    if (out.size() < 2) throw InsufficientBeats("fewer than 2 R peaks detected");
    return out;
}

namespace {

struct TPeakWindow {
    int lo, hi; // half-open sample window [lo, hi)
};

TPeakWindow t_search_window(int r0, int r1) {
    const double len = static_cast<double>(r1 - r0);
    return {r0 + static_cast<int>(std::lround(0.20 * len)),
            r0 + static_cast<int>(std::lround(0.65 * len))};
}

} // namespace

int detect_t_peak(const ECGTrace& smoothed, int r0, int r1) {
    const auto& s = smoothed.samples;
    if (r0 < 0 || r1 <= r0 || r1 > static_cast<int>(s.size()))
        throw ConfigError("invalid beat window");
    const auto [win_lo, win_hi] = t_search_window(r0, r1);

    const auto beat_extrema = local_extrema(s, r0, r1);
    std::vector<Extremum> candidates;
    for (const auto& e : beat_extrema)
        if (e.index >= win_lo && e.index < win_hi) candidates.push_back(e);
    if (candidates.empty())
        throw TPeakNotFound("no local extremum in [" + std::to_string(win_lo) + ", " +
                            std::to_string(win_hi) + ")");

    // filter-ripple extrema are excluded before the span comparison: a
    // candidate must reach half of the largest deviation from the window mean
    double mean = 0.0;
    for (int i = win_lo; i < win_hi; ++i) mean += s[i];
    mean /= std::max(1, win_hi - win_lo);
    double max_dev = 0.0;
    for (const auto& cand : candidates)
        max_dev = std::max(max_dev, std::abs(s[cand.index] - mean));
    std::vector<Extremum> prominent;
    for (const auto& cand : candidates)
        if (std::abs(s[cand.index] - mean) >= 0.5 * max_dev) prominent.push_back(cand);
    candidates = std::move(prominent);

    int best = -1;
    int best_span = -1;
    for (const auto& cand : candidates) {
        // span measured between the neighbouring local maxima (beat edges when
        // a side has none); the T wave dominates the stretch between the QRS
        // remnant and the following P wave under this measure
        int left = r0, right = r1 - 1;
        for (const auto& e : beat_extrema) {
            if (!e.is_max || e.index == cand.index) continue;
            if (e.index < cand.index) left = std::max(left, e.index);
            else {
                right = std::min(right, e.index);
                break;
            }
        }
        const int span = right - left;
        if (span > best_span) { // ties keep the earliest candidate
            best_span = span;
            best = cand.index;
        }
    }
    return best;
}

int detect_end_of_systole(const ECGTrace& smoothed, int t_peak, int r0, int r1, bool* degraded) {
    const auto& s = smoothed.samples;
    const auto [win_lo, win_hi] = t_search_window(r0, r1);
    double mean = 0.0;
    for (int i = win_lo; i < win_hi; ++i) mean += s[i];
    mean /= std::max(1, win_hi - win_lo);

    int extremum_idx = -1;
    for (const auto& e : local_extrema(s, t_peak, r1))
        if (e.index > t_peak) {
            extremum_idx = e.index;
            break;
        }

    int crossing_idx = -1;
    const double side = s[t_peak] - mean;
    for (int i = t_peak + 1; i < r1; ++i) {
        if ((s[i] - mean) * side <= 0.0) {
            crossing_idx = i;
            break;
        }
    }

    if (degraded) *degraded = false;
    if (extremum_idx < 0 && crossing_idx < 0) {
        if (degraded) *degraded = true;
        return win_hi; // r0 + 0.65 L fallback
    }
    if (extremum_idx < 0) return crossing_idx;
    if (crossing_idx < 0) return extremum_idx;
    return std::min(extremum_idx, crossing_idx);
}

PeakSet detect_peaks(const ECGTrace& raw) {
    const ECGTrace band = bandpass_zero_phase(raw, 3.0, 45.0);
    PeakSet set;
    set.r_peaks = detect_r_peaks(band);
    const ECGTrace smooth = lowpass_zero_phase(band, 10.0);
    for (std::size_t k = 0; k + 1 < set.r_peaks.size(); ++k) {
        Beat beat;
        beat.r_begin = set.r_peaks[k];
        beat.r_end = set.r_peaks[k + 1];
        try {
            beat.t_peak = detect_t_peak(smooth, beat.r_begin, beat.r_end);
            beat.eos = detect_end_of_systole(smooth, beat.t_peak, beat.r_begin, beat.r_end,
                                             &beat.degraded);
        } catch (const TPeakNotFound&) {
            // beat kept with the 0.65 L fallback so the phase signal stays total
            beat.t_peak = -1;
            beat.degraded = true;
            beat.eos = t_search_window(beat.r_begin, beat.r_end).hi;
        }
        set.beats.push_back(beat);
    }
    return set;
}

std::vector<int> PeakSet::t_peaks() const {
    std::vector<int> out;
    for (const auto& b : beats)
        if (b.t_peak >= 0) out.push_back(b.t_peak);
    return out;
}

std::vector<int> PeakSet::eos_points() const {
    std::vector<int> out;
    for (const auto& b : beats) out.push_back(b.eos);
    return out;
}

PhaseSignal build_phase_signal(const PeakSet& peaks, int n_samples, double fs) {
    if (peaks.r_peaks.size() < 2 || peaks.beats.empty())
        throw InsufficientBeats("phase signal needs at least two R peaks");
    PhaseSignal phase;
    phase.values.assign(static_cast<std::size_t>(n_samples), 0);
    phase.fs = fs;
    phase.valid_begin = peaks.r_peaks.front();
    phase.valid_end = std::min(peaks.r_peaks.back(), n_samples - 1);
    for (const auto& beat : peaks.beats) {
        const int sys_end = std::min(beat.eos, n_samples);
        for (int i = beat.r_begin; i < sys_end; ++i) phase.values[i] = 0;
        const int dia_end = std::min(beat.r_end, n_samples);
        for (int i = sys_end; i < dia_end; ++i) phase.values[i] = 1;
    }
    if (peaks.r_peaks.back() < n_samples)
        phase.values[static_cast<std::size_t>(peaks.r_peaks.back())] = 0; // last R opens a systole
    return phase;
}

double heart_rate(const std::vector<int>& r_peaks, double fs) {
    if (r_peaks.size() < 2) throw InsufficientBeats("heart rate needs at least two R peaks");
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < r_peaks.size(); ++i)
        acc += 60.0 * fs / static_cast<double>(r_peaks[i + 1] - r_peaks[i]);
    return acc / static_cast<double>(r_peaks.size() - 1);
}

} // namespace cardio::ecg
