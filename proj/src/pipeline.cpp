#include "cardio/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <thread>

#include <json.hpp>

#include "cardio/labeling.hpp"

namespace cardio::pipeline {

using nlohmann::json;

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

} // namespace

PredictionTrace predict(const bundle::StudyBundle& bundle,
                        const vesselness::VesselNet& vessel_net, const ParamStore& vessel_params,
                        const phasenet::PhaseNet& phase_net, const ParamStore& phase_params,
                        const PredictConfig& config) {
    const auto t_total = std::chrono::steady_clock::now();

    PredictionTrace trace;
    trace.sequence_id = bundle.meta.sequence_id;
    trace.fps = bundle.meta.fps;

    const auto prep = bundle::preprocess_frames(bundle, phase_net.config().resolution);
    const int n = static_cast<int>(prep.frames.size());

    // vesselness scores for every frame, then the contrast-filled interval
    const auto t_vessel = std::chrono::steady_clock::now();
    trace.vesselness_scores.assign(static_cast<std::size_t>(n), 0.0);
    {
        const int threads = std::clamp(config.threads, 1, n);
        auto worker = [&](int begin, int end) {
            for (int i = begin; i < end; ++i)
                trace.vesselness_scores[static_cast<std::size_t>(i)] = vesselness::vesselness_score(
                    vessel_net.forward(vessel_params, prep.frames[static_cast<std::size_t>(i)]));
        };
        if (threads == 1) {
            worker(0, n);
        } else {
            std::vector<std::thread> pool;
            const int chunk = (n + threads - 1) / threads;
            for (int t = 0; t < threads; ++t) {
                const int begin = t * chunk;
                const int end = std::min(n, begin + chunk);
                if (begin < end) pool.emplace_back(worker, begin, end);
            }
            for (auto& th : pool) th.join();
        }
    }
    trace.interval = vesselness::select_frame_interval(trace.vesselness_scores);
    trace.vesselness_seconds = seconds_since(t_vessel);

    // 10 fps subset of the selected interval
    const auto t_phase = std::chrono::steady_clock::now();
    const auto local_indices = labeling::decimation_indices(trace.interval.length(), trace.fps);
    std::vector<Tensor> resampled;
    for (int local : local_indices) {
        trace.resampled_frames.push_back(trace.interval.begin + local);
        resampled.push_back(prep.frames[static_cast<std::size_t>(trace.interval.begin + local)]);
    }
    if (static_cast<int>(resampled.size()) < phase_net.config().window)
        throw SequenceTooShort("resampled interval has " + std::to_string(resampled.size()) +
                               " frames, need " + std::to_string(phase_net.config().window));

    const auto stack = phasenet::spatial_features(phase_net, phase_params, resampled,
                                                  config.threads);
    trace.spatial_invocations = stack.invocations;
    trace.candidates = phasenet::sliding_window_predict(phase_net, phase_params, stack.features);
    trace.windows = static_cast<long>(resampled.size()) - phase_net.config().window + 1;
    trace.selected = phasenet::aggregate(trace.candidates);

    std::vector<std::pair<int, double>> knots;
    for (std::size_t k = 0; k < trace.selected.size(); ++k)
        if (trace.selected[k])
            knots.emplace_back(trace.resampled_frames[k], *trace.selected[k]);

    const auto probs = phasenet::upsample_probs(knots, trace.interval.begin, trace.interval.end);
    const auto labels = phasenet::schmitt_filter(probs, config.schmitt_hi, config.schmitt_lo);
    trace.phase_seconds = seconds_since(t_phase);

    for (int f = trace.interval.begin; f <= trace.interval.end; ++f) {
        FramePrediction fp;
        fp.frame = f;
        fp.prob = probs[static_cast<std::size_t>(f - trace.interval.begin)];
        fp.label = labels[static_cast<std::size_t>(f - trace.interval.begin)];
        trace.frames.push_back(fp);
    }
    for (std::size_t i = 0; i + 1 < trace.frames.size(); ++i)
        if (trace.frames[i].label == 1 && trace.frames[i + 1].label == 0)
            trace.frames[i].edf = true;

    trace.total_seconds = seconds_since(t_total);
    return trace;
}

void save_trace(const PredictionTrace& trace, const std::filesystem::path& path) {
    json j;
    j["sequence_id"] = trace.sequence_id;
    j["fps"] = trace.fps;
    j["interval"] = {{"begin", trace.interval.begin}, {"end", trace.interval.end}};
    j["vesselness_scores"] = trace.vesselness_scores;
    json resampled;
    resampled["frames"] = trace.resampled_frames;
    resampled["candidates"] = trace.candidates;
    json selected = json::array();
    for (const auto& s : trace.selected)
        selected.push_back(s ? json(*s) : json(nullptr));
    resampled["selected"] = selected;
    j["resampled"] = resampled;
    json frames = json::array();
    for (const auto& f : trace.frames)
        frames.push_back({{"frame", f.frame}, {"prob", f.prob}, {"label", f.label}, {"edf", f.edf}});
    j["frames"] = frames;
    j["stats"] = {{"spatial_invocations", trace.spatial_invocations}, {"windows", trace.windows}};
    j["timings"] = {{"vesselness_s", trace.vesselness_seconds},
                    {"phase_s", trace.phase_seconds},
                    {"total_s", trace.total_seconds}};
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << "\n";
}

PredictionTrace load_trace(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw FormatError("trace " + path.string() + ": " + e.what());
    }
    PredictionTrace trace;
    trace.sequence_id = j.value("sequence_id", "");
    trace.fps = j.at("fps").get<double>();
    trace.interval.begin = j.at("interval").at("begin").get<int>();
    trace.interval.end = j.at("interval").at("end").get<int>();
    trace.vesselness_scores = j.value("vesselness_scores", std::vector<double>{});
    trace.resampled_frames = j.at("resampled").at("frames").get<std::vector<int>>();
    trace.candidates = j.at("resampled").at("candidates").get<std::vector<std::vector<double>>>();
    for (const auto& s : j.at("resampled").at("selected"))
        trace.selected.push_back(s.is_null() ? std::optional<double>{}
                                             : std::optional<double>{s.get<double>()});
    for (const auto& f : j.at("frames")) {
        FramePrediction fp;
        fp.frame = f.at("frame").get<int>();
        fp.prob = f.at("prob").get<double>();
        fp.label = f.at("label").get<int>();
        fp.edf = f.at("edf").get<bool>();
        trace.frames.push_back(fp);
    }
    trace.spatial_invocations = j.at("stats").at("spatial_invocations").get<long>();
    trace.windows = j.at("stats").at("windows").get<long>();
    trace.vesselness_seconds = j.at("timings").at("vesselness_s").get<double>();
    trace.phase_seconds = j.at("timings").at("phase_s").get<double>();
    trace.total_seconds = j.at("timings").at("total_s").get<double>();
    return trace;
}

GroundTruth truth_from_sidecar(const synthcine::SynthTruth& truth) {
    GroundTruth gt;
    gt.frame_labels = truth.frame_labels;
    gt.bpm = truth.bpm;
    return gt;
}

GroundTruth truth_from_ecg(const bundle::StudyBundle& bundle) {
    if (!bundle.ecg) throw ConfigError("bundle has no ECG trace");
    const auto peaks = ecg::detect_peaks(*bundle.ecg);
    const auto phase = ecg::build_phase_signal(peaks, static_cast<int>(bundle.ecg->samples.size()),
                                               bundle.ecg->fs);
    const auto track = labeling::map_phase_to_frames(phase, bundle.meta.frame_count,
                                                     bundle.meta.fps);
    GroundTruth gt;
    gt.frame_labels.assign(static_cast<std::size_t>(bundle.meta.frame_count),
                           std::numeric_limits<double>::quiet_NaN());
    for (int f = track.first_frame; f <= track.last_frame; ++f)
        gt.frame_labels[static_cast<std::size_t>(f)] =
            track.labels[static_cast<std::size_t>(f - track.first_frame)];
    gt.bpm = ecg::heart_rate(peaks.r_peaks, bundle.ecg->fs);
    return gt;
}

metrics::EvalPair make_eval_pair(const PredictionTrace& trace, const GroundTruth& truth,
                                 const std::string& id) {
    std::vector<double> gt;
    std::vector<int> pred;
    for (const auto& f : trace.frames) {
        double label = std::numeric_limits<double>::quiet_NaN();
        if (f.frame >= 0 && f.frame < static_cast<int>(truth.frame_labels.size()))
            label = truth.frame_labels[static_cast<std::size_t>(f.frame)];
        // unlabeled frames become intermediate values, excluded by eligibility
        gt.push_back(std::isnan(label) ? 0.5 : label);
        pred.push_back(f.label);
    }
    metrics::EvalPair pair = metrics::EvalPair::make(std::move(gt), std::move(pred));
    pair.id = id;
    pair.bpm = truth.bpm;
    return pair;
}

std::vector<int> trace_pred_edfs(const PredictionTrace& trace) {
    std::vector<int> edfs;
    for (const auto& f : trace.frames)
        if (f.edf) edfs.push_back(f.frame);
    return edfs;
}

std::vector<int> gt_edfs_in_interval(const GroundTruth& truth,
                                     const vesselness::FrameInterval& interval) {
    std::vector<int> edfs;
    const int n = static_cast<int>(truth.frame_labels.size());
    for (int f = std::max(0, interval.begin); f < std::min(n - 1, interval.end + 1); ++f) {
        const double cur = truth.frame_labels[static_cast<std::size_t>(f)];
        const double next = truth.frame_labels[static_cast<std::size_t>(f + 1)];
        if (cur == 1.0 && next >= 0.0 && next < 1.0) edfs.push_back(f);
    }
    return edfs;
}

} // namespace cardio::pipeline
