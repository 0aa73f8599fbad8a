#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "cardio/errors.hpp"

namespace cardio::ecg {

struct ECGTrace {
    std::vector<double> samples; // millivolts
    double fs = 400.0;           // Hz
};

struct Beat {
    int r_begin = 0; // R peak opening the beat
    int r_end = 0;   // next R peak
    int t_peak = -1; // -1 when no extremum was found in the search window
    int eos = -1;    // end of systole; always set for beats kept in a PeakSet
    bool degraded = false;
};

// Detected beat landmarks. For every beat: r_begin < t_peak < eos < r_end
// (degraded beats skip the t_peak part of the invariant).
struct PeakSet {
    std::vector<int> r_peaks;
    std::vector<Beat> beats; // r_peaks.size() - 1 entries

    std::vector<int> t_peaks() const;
    std::vector<int> eos_points() const;
};

// Per-sample binary labels: 0 systole, 1 diastole. Samples outside
// [valid_begin, valid_end] carry no label.
struct PhaseSignal {
    std::vector<std::uint8_t> values;
    double fs = 400.0;
    int valid_begin = 0;
    int valid_end = 0; // inclusive
};

// Linear-phase FIR (windowed sinc, Hamming) applied forward then backward,
// with reflection padding; net phase delay is zero. taps < 0 selects the
// default length for the operation.
ECGTrace bandpass_zero_phase(const ECGTrace& trace, double lo_hz, double hi_hz, int taps = -1);
ECGTrace lowpass_zero_phase(const ECGTrace& trace, double cutoff_hz, int taps = -1);

// QRS detection on the band-passed trace: squared-derivative energy, moving
// integration, adaptive threshold, 200 ms refractory period. Each returned
// index is the absolute maximum of its QRS complex in the filtered trace.
std::vector<int> detect_r_peaks(const ECGTrace& filtered);

// T peak inside [r0 + 0.20 L, r0 + 0.65 L), L = r1 - r0: the local extremum
// (max or min) with the largest temporal span. Span of a candidate is the
// distance between its nearest opposite-polarity neighbours within the beat
// (beat edges when a side has none); ties pick the earliest candidate.
int detect_t_peak(const ECGTrace& smoothed, int r0, int r1);

// First post-T event: local extremum or crossing of the 20%-65% window mean,
// whichever comes first. Falls back to r0 + 0.65 L when neither occurs before
// r1 (degraded set to true).
int detect_end_of_systole(const ECGTrace& smoothed, int t_peak, int r0, int r1, bool* degraded);

// Full chain: band-pass, R peaks, low-pass, per-beat T and end of systole.
PeakSet detect_peaks(const ECGTrace& raw);

PhaseSignal build_phase_signal(const PeakSet& peaks, int n_samples, double fs);

double heart_rate(const std::vector<int>& r_peaks, double fs); // mean of 60/RR

} // namespace cardio::ecg
