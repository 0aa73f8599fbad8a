#include "cardio/synthcine.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include <json.hpp>

#include "cardio/rng.hpp"

namespace cardio::synthcine {

using nlohmann::json;

namespace {

constexpr double kPi = std::numbers::pi;

struct BeatPlan {
    double r_time, rr, t_time, eos_time;
};

// Beats covering [-RR, duration + RR] so the phase is defined everywhere.
std::vector<BeatPlan> plan_beats(const SynthConfig& cfg, Rng& rng) {
    std::vector<double> rr_seq;
    if (!cfg.rr_list.empty()) {
        rr_seq = cfg.rr_list;
    } else {
        const double base_rr = 60.0 / cfg.heart_rate_bpm;
        const int approx = static_cast<int>(cfg.duration_s / base_rr) + 4;
        for (int i = 0; i < approx; ++i)
            rr_seq.push_back(base_rr * (1.0 + rng.uniform(-cfg.rr_jitter, cfg.rr_jitter)));
    }
    if (rr_seq.empty()) throw ConfigError("synth: empty RR list");

    std::vector<BeatPlan> beats;
    double t = rng.uniform(0.25, 0.45) - rr_seq.front(); // one beat before time zero
    std::size_t k = 0;
    while (t < cfg.duration_s + 2.0) {
        const double rr = rr_seq[k % rr_seq.size()];
        BeatPlan b;
        b.r_time = t;
        b.rr = rr;
        b.t_time = t + cfg.t_frac * rr;
        b.eos_time = b.t_time + cfg.eos_offset_sigmas * cfg.t_sigma_s;
        beats.push_back(b);
        t += rr;
        ++k;
    }
    if (beats.size() < 3) throw ConfigError("synth: duration too short for one full beat");
    return beats;
}

double gaussian(double t, double center, double sigma) {
    const double d = (t - center) / sigma;
    return std::exp(-0.5 * d * d);
}

// Exact mean of the analytic phase over [a, b): 1 minus the systole overlap.
double phase_interval_mean(const std::vector<BeatPlan>& beats, double a, double b) {
    double systole = 0.0;
    for (const auto& bt : beats) {
        const double lo = std::max(a, bt.r_time);
        const double hi = std::min(b, bt.eos_time);
        if (hi > lo) systole += hi - lo;
    }
    return 1.0 - systole / (b - a);
}

// Raised-cosine contraction over systole, linear relaxation over diastole.
double motion_profile(const std::vector<BeatPlan>& beats, double t) {
    for (std::size_t k = 0; k < beats.size(); ++k) {
        const auto& b = beats[k];
        const double next_r = k + 1 < beats.size() ? beats[k + 1].r_time : b.r_time + b.rr;
        if (t < b.r_time || t >= next_r) continue;
        if (t < b.eos_time) {
            const double u = (t - b.r_time) / (b.eos_time - b.r_time);
            return 0.5 * (1.0 - std::cos(kPi * u));
        }
        const double v = (t - b.eos_time) / (next_r - b.eos_time);
        return 1.0 - v;
    }
    return 0.0;
}

struct Vessel {
    std::vector<vesselness::CenterlinePoint> control; // base positions + radii
    double dir_x, dir_y;                              // motion direction
};

// Catmull-Rom interpolation through the control points.
std::vector<vesselness::CenterlinePoint> sample_spline(
    const std::vector<vesselness::CenterlinePoint>& cp, int samples_per_segment) {
    std::vector<vesselness::CenterlinePoint> out;
    const int n = static_cast<int>(cp.size());
    auto at = [&](int i) { return cp[static_cast<std::size_t>(std::clamp(i, 0, n - 1))]; };
    for (int seg = 0; seg + 1 < n; ++seg) {
        const auto p0 = at(seg - 1), p1 = at(seg), p2 = at(seg + 1), p3 = at(seg + 2);
        for (int s = 0; s < samples_per_segment; ++s) {
            const double u = static_cast<double>(s) / samples_per_segment;
            const double u2 = u * u, u3 = u2 * u;
            auto cr = [&](double a, double b, double c, double d) {
                return 0.5 * ((2 * b) + (-a + c) * u + (2 * a - 5 * b + 4 * c - d) * u2 +
                              (-a + 3 * b - 3 * c + d) * u3);
            };
            out.push_back({cr(p0.x, p1.x, p2.x, p3.x), cr(p0.y, p1.y, p2.y, p3.y),
                           cr(p0.radius, p1.radius, p2.radius, p3.radius)});
        }
    }
    out.push_back(cp.back());
    return out;
}

std::vector<Vessel> make_vessels(const SynthConfig& cfg, Rng& rng) {
    std::vector<Vessel> vessels;
    const double s = cfg.frame_size;
    for (int v = 0; v < cfg.vessel_count; ++v) {
        Vessel vessel;
        const int n_cp = static_cast<int>(rng.integer(4, 7));
        // wander roughly top-to-bottom with lateral drift, margins for motion
        double x = rng.uniform(0.2 * s, 0.8 * s);
        double y = rng.uniform(0.08 * s, 0.25 * s);
        const double step = (0.75 * s - y) / (n_cp - 1);
        for (int i = 0; i < n_cp; ++i) {
            vessel.control.push_back({x, y, rng.uniform(1.0, std::min(4.0, 1.0 + s / 24.0))});
            x = std::clamp(x + rng.uniform(-0.22 * s, 0.22 * s), 0.1 * s, 0.9 * s);
            y += step * rng.uniform(0.7, 1.3);
        }
        const double angle = rng.uniform(0.0, 2.0 * kPi);
        vessel.dir_x = std::cos(angle);
        vessel.dir_y = std::sin(angle);
        vessels.push_back(std::move(vessel));
    }
    return vessels;
}

double contrast_opacity(int frame, int fade_in, int fade_out) {
    if (frame < fade_in) return 0.0;
    if (frame <= fade_out) return 1.0;
    return 0.25; // washed out
}

} // namespace

std::pair<ecg::ECGTrace, SynthTruth> gen_ecg(const SynthConfig& cfg) {
    Rng rng(derive_seed(cfg.seed, 0xec6));
    const auto beats = plan_beats(cfg, rng);
    const int n = static_cast<int>(std::lround(cfg.duration_s * cfg.ecg_fs));
    if (n < static_cast<int>(cfg.ecg_fs))
        throw ConfigError("synth: duration too short for one beat of ECG");

    ecg::ECGTrace trace;
    trace.fs = cfg.ecg_fs;
    trace.samples.assign(static_cast<std::size_t>(n), 0.0);

    const double wander_phase = rng.uniform(0.0, 2.0 * kPi);
    for (int i = 0; i < n; ++i) {
        const double t = i / cfg.ecg_fs;
        double v = 0.0;
        for (const auto& b : beats) {
            if (t < b.r_time - 1.5 || t > b.r_time + 1.5) continue;
            v += 0.12 * gaussian(t, b.r_time - 0.16, 0.025);  // P
            v -= 0.12 * gaussian(t, b.r_time - 0.025, 0.010); // Q
            v += 1.00 * gaussian(t, b.r_time, 0.012);         // R
            v -= 0.18 * gaussian(t, b.r_time + 0.030, 0.012); // S
            v += 0.30 * gaussian(t, b.t_time, cfg.t_sigma_s); // T
        }
        v += cfg.baseline_wander_mv * std::sin(2.0 * kPi * 0.25 * t + wander_phase);
        trace.samples[static_cast<std::size_t>(i)] = v;
    }

    double rms = 0.0;
    for (double v : trace.samples) rms += v * v;
    rms = std::sqrt(rms / n);
    const double noise_sigma = rms / std::pow(10.0, cfg.ecg_snr_db / 20.0);
    for (double& v : trace.samples) v += rng.normal(0.0, noise_sigma);

    SynthTruth truth;
    for (const auto& b : beats) {
        const auto in_range = [&](double t) { return t >= 0.0 && t < cfg.duration_s; };
        if (in_range(b.r_time))
            truth.r_samples.push_back(static_cast<int>(std::lround(b.r_time * cfg.ecg_fs)));
        if (in_range(b.t_time))
            truth.t_samples.push_back(static_cast<int>(std::lround(b.t_time * cfg.ecg_fs)));
        if (in_range(b.eos_time))
            truth.eos_samples.push_back(static_cast<int>(std::lround(b.eos_time * cfg.ecg_fs)));
    }
    if (truth.r_samples.size() >= 2) {
        double acc = 0.0;
        for (std::size_t i = 0; i + 1 < truth.r_samples.size(); ++i)
            acc += 60.0 * cfg.ecg_fs / (truth.r_samples[i + 1] - truth.r_samples[i]);
        truth.bpm = acc / static_cast<double>(truth.r_samples.size() - 1);
    }
    return {std::move(trace), std::move(truth)};
}

SynthResult gen_sequence(const SynthConfig& cfg) {
    // same beat plan as gen_ecg: identical seed stream
    Rng beat_rng(derive_seed(cfg.seed, 0xec6));
    const auto beats = plan_beats(cfg, beat_rng);

    auto [trace, truth] = gen_ecg(cfg);

    const int n_frames = static_cast<int>(std::lround(cfg.duration_s * cfg.fps));
    if (n_frames < 1) throw ConfigError("synth: no frames in duration");
    const int fade_out =
        cfg.fade_out_frame >= 0 ? cfg.fade_out_frame : static_cast<int>(0.9 * n_frames);
    if (!(cfg.fade_in_frame < fade_out && fade_out <= n_frames))
        throw ConfigError("synth: fade_in must precede fade_out within the sequence");
    if (cfg.vessel_count < 1) throw ConfigError("synth: vessel count must be positive");

    Rng img_rng(derive_seed(cfg.seed, 0x1a6e));
    const auto vessels = make_vessels(cfg, img_rng);
    const int size = cfg.frame_size;

    // smooth background: base level plus two broad blobs
    std::vector<double> background(static_cast<std::size_t>(size) * size, 0.82);
    for (int blob = 0; blob < 2; ++blob) {
        const double bx = img_rng.uniform(0.2 * size, 0.8 * size);
        const double by = img_rng.uniform(0.2 * size, 0.8 * size);
        const double amp = img_rng.uniform(-0.06, 0.06);
        const double sigma = img_rng.uniform(0.35 * size, 0.6 * size);
        for (int y = 0; y < size; ++y)
            for (int x = 0; x < size; ++x)
                background[static_cast<std::size_t>(y) * size + x] +=
                    amp * gaussian(std::hypot(x - bx, y - by), 0.0, sigma);
    }
    const double pan_angle = img_rng.uniform(0.0, 2.0 * kPi);
    const double pan_x = std::cos(pan_angle) * cfg.panning_px_per_frame;
    const double pan_y = std::sin(pan_angle) * cfg.panning_px_per_frame;

    SynthResult result;
    result.truth = std::move(truth);
    result.bundle.meta.width = size;
    result.bundle.meta.height = size;
    result.bundle.meta.frame_count = n_frames;
    result.bundle.meta.bit_depth = 8;
    result.bundle.meta.fps = cfg.fps;
    result.bundle.meta.primary_angle = img_rng.uniform(-60.0, 60.0);
    result.bundle.meta.secondary_angle = img_rng.uniform(-40.0, 40.0);
    result.bundle.meta.sequence_id = "synth-" + std::to_string(cfg.seed);
    result.bundle.ecg = std::move(trace);
    result.bundle.frames_raw.resize(static_cast<std::size_t>(n_frames) * size * size);
    result.bundle.annotations.resize(static_cast<std::size_t>(n_frames));

    std::vector<double> coverage(static_cast<std::size_t>(size) * size);
    for (int f = 0; f < n_frames; ++f) {
        const double t = f / cfg.fps;
        const double s = motion_profile(beats, t);
        const double opacity = contrast_opacity(f, cfg.fade_in_frame, fade_out);

        std::fill(coverage.begin(), coverage.end(), 0.0);
        vesselness::CenterlineAnnotation ann;
        for (const auto& vessel : vessels) {
            std::vector<vesselness::CenterlinePoint> moved = vessel.control;
            for (auto& p : moved) {
                p.x += vessel.dir_x * cfg.motion_amplitude_px * s + pan_x * f;
                p.y += vessel.dir_y * cfg.motion_amplitude_px * s + pan_y * f;
            }
            const auto points = sample_spline(moved, 2 * size / 8);
            if (opacity > 0.0) {
                for (const auto& p : points) {
                    const int x_lo = std::max(0, static_cast<int>(std::floor(p.x - p.radius - 1)));
                    const int x_hi = std::min(size - 1, static_cast<int>(std::ceil(p.x + p.radius + 1)));
                    const int y_lo = std::max(0, static_cast<int>(std::floor(p.y - p.radius - 1)));
                    const int y_hi = std::min(size - 1, static_cast<int>(std::ceil(p.y + p.radius + 1)));
                    for (int y = y_lo; y <= y_hi; ++y)
                        for (int x = x_lo; x <= x_hi; ++x) {
                            const double d = std::hypot(x - p.x, y - p.y);
                            const double cov = std::clamp(p.radius + 0.5 - d, 0.0, 1.0);
                            double& slot = coverage[static_cast<std::size_t>(y) * size + x];
                            slot = std::max(slot, cov);
                        }
                }
            }
            if (opacity >= 0.5) {
                // annotation decimated to roughly one point per pixel of arc
                std::vector<vesselness::CenterlinePoint> kept;
                for (std::size_t i = 0; i < points.size(); i += 2) kept.push_back(points[i]);
                ann.vessels.push_back(std::move(kept));
            }
        }
        result.bundle.annotations[static_cast<std::size_t>(f)] = std::move(ann);

        std::uint8_t* dst =
            result.bundle.frames_raw.data() + static_cast<std::size_t>(f) * size * size;
        for (int i = 0; i < size * size; ++i) {
            double v = background[static_cast<std::size_t>(i)] *
                       (1.0 - 0.55 * opacity * coverage[static_cast<std::size_t>(i)]);
            v += img_rng.normal(0.0, cfg.image_noise_sigma);
            dst[i] = static_cast<std::uint8_t>(std::clamp(v, 0.0, 1.0) * 255.0 + 0.5);
        }
    }

    // exact fractional labels and the derived EDF list
    for (int f = 0; f < n_frames; ++f) {
        const double a = f / cfg.fps;
        const double b = (f + 1) / cfg.fps;
        result.truth.frame_labels.push_back(phase_interval_mean(beats, a, b));
    }
    for (int f = 0; f + 1 < n_frames; ++f)
        if (result.truth.frame_labels[static_cast<std::size_t>(f)] == 1.0 &&
            result.truth.frame_labels[static_cast<std::size_t>(f + 1)] < 1.0)
            result.truth.edf_frames.push_back(f);

    result.truth.contrast_begin = cfg.fade_in_frame;
    result.truth.contrast_end = std::min(fade_out, n_frames - 1);
    return result;
}

void save_truth(const SynthTruth& truth, const std::filesystem::path& path) {
    json j;
    j["r_samples"] = truth.r_samples;
    j["t_samples"] = truth.t_samples;
    j["eos_samples"] = truth.eos_samples;
    j["frame_labels"] = truth.frame_labels;
    j["edf_frames"] = truth.edf_frames;
    j["contrast_begin"] = truth.contrast_begin;
    j["contrast_end"] = truth.contrast_end;
    j["bpm"] = truth.bpm;
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << "\n";
}

SynthTruth load_truth(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw FormatError("truth.json: " + std::string(e.what()));
    }
    SynthTruth truth;
    truth.r_samples = j.at("r_samples").get<std::vector<int>>();
    truth.t_samples = j.at("t_samples").get<std::vector<int>>();
    truth.eos_samples = j.at("eos_samples").get<std::vector<int>>();
    truth.frame_labels = j.at("frame_labels").get<std::vector<double>>();
    truth.edf_frames = j.at("edf_frames").get<std::vector<int>>();
    truth.contrast_begin = j.at("contrast_begin").get<int>();
    truth.contrast_end = j.at("contrast_end").get<int>();
    truth.bpm = j.value("bpm", 0.0);
    return truth;
}

std::vector<std::filesystem::path> gen_dataset(int count, const SynthConfig& base,
                                               const DatasetDistribution& dist,
                                               const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    std::vector<std::filesystem::path> paths;
    for (int i = 0; i < count; ++i) {
        SynthConfig cfg = base;
        cfg.seed = derive_seed(base.seed, static_cast<std::uint64_t>(i));
        Rng rng(derive_seed(cfg.seed, 0xd15));
        cfg.heart_rate_bpm = rng.uniform(dist.hr_lo, dist.hr_hi);
        cfg.fps = dist.fps_choices[static_cast<std::size_t>(
            rng.integer(0, static_cast<long long>(dist.fps_choices.size()) - 1))];
        cfg.ecg_snr_db = rng.uniform(dist.snr_lo, dist.snr_hi);
        if (rng.uniform() < dist.panning_probability)
            cfg.panning_px_per_frame = rng.uniform(0.3, 1.0);

        SynthResult result = gen_sequence(cfg);
        char name[32];
        std::snprintf(name, sizeof name, "bundle_%04d", i);
        result.bundle.meta.sequence_id = name;
        result.bundle.meta.patient_id = "synth";
        const auto dir = out_dir / name;
        bundle::save_bundle(result.bundle, dir);
        save_truth(result.truth, dir / "truth.json");
        paths.push_back(dir);
    }
    return paths;
}

} // namespace cardio::synthcine
