#include "cardio/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "cardio/bundle.hpp"
#include "cardio/ecg.hpp"
#include "cardio/labeling.hpp"
#include "cardio/metrics.hpp"
#include "cardio/phasenet.hpp"
#include "cardio/pipeline.hpp"
#include "cardio/report.hpp"
#include "cardio/synthcine.hpp"
#include "cardio/vesselness.hpp"
#include "cardio/weights_io.hpp"

namespace cardio::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Defaults that a --config file may override; explicit flags win over both.
struct FileConfig {
    std::uint64_t seed = 1;
    int threads = 1;
    int resolution = 512; // 64 is the usual desk-scale choice
    double schmitt_hi = 0.6;
    double schmitt_lo = 0.4;
    double lr = 1e-3;
    int phase_epochs = 12;
    int vessel_epochs = 40;
    bool augment = true;
    int edf_tol = 1;
};

FileConfig load_file_config(const std::string& path) {
    FileConfig cfg;
    if (path.empty()) return cfg;
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config " + path + ": " + e.what());
    }
    cfg.seed = j.value("seed", cfg.seed);
    cfg.threads = j.value("threads", cfg.threads);
    cfg.resolution = j.value("resolution", cfg.resolution);
    if (j.contains("schmitt")) {
        cfg.schmitt_hi = j["schmitt"].value("hi", cfg.schmitt_hi);
        cfg.schmitt_lo = j["schmitt"].value("lo", cfg.schmitt_lo);
    }
    if (j.contains("adam")) cfg.lr = j["adam"].value("lr", cfg.lr);
    if (j.contains("train")) {
        cfg.phase_epochs = j["train"].value("epochs", cfg.phase_epochs);
        cfg.augment = j["train"].value("augment", cfg.augment);
    }
    if (j.contains("vessel")) cfg.vessel_epochs = j["vessel"].value("epochs", cfg.vessel_epochs);
    cfg.edf_tol = j.value("edf_tol", cfg.edf_tol);
    if (!(0.0 <= cfg.schmitt_lo && cfg.schmitt_lo < cfg.schmitt_hi && cfg.schmitt_hi <= 1.0))
        throw ConfigError("config: schmitt thresholds must satisfy 0 <= lo < hi <= 1");
    if (cfg.resolution < 16) throw ConfigError("config: resolution must be >= 16");
    return cfg;
}

std::vector<fs::path> list_bundles(const fs::path& dir) {
    std::vector<fs::path> out;
    if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_directory() && fs::exists(entry.path() / "meta.json"))
            out.push_back(entry.path());
    std::sort(out.begin(), out.end());
    if (out.empty()) throw IoError("no study bundles under " + dir.string());
    return out;
}

phasenet::PhaseNet phase_net_from_weights(const WeightsMeta& meta) {
    phasenet::PhaseNetConfig cfg;
    auto it = meta.extra.find("resolution");
    if (it == meta.extra.end())
        throw FormatError("phase weights manifest lacks the resolution tag");
    cfg.resolution = std::stoi(it->second);
    phasenet::PhaseNet net(cfg);
    if (!meta.config_hash.empty() && meta.config_hash != net.config_hash())
        std::cerr << "warning: weights config hash " << meta.config_hash
                  << " differs from reconstructed architecture " << net.config_hash() << "\n";
    return net;
}

// Scaled centerline annotation matching a preprocessed frame.
vesselness::CenterlineAnnotation scale_annotation(const vesselness::CenterlineAnnotation& ann,
                                                  const bundle::PreprocessResult& prep,
                                                  int orig_w, int orig_h, int target) {
    const double iw = orig_w - prep.crop_left - prep.crop_right;
    const double ih = orig_h - prep.crop_top - prep.crop_bottom;
    const double sx = target / iw, sy = target / ih;
    vesselness::CenterlineAnnotation out;
    for (const auto& vessel : ann.vessels) {
        std::vector<vesselness::CenterlinePoint> pts;
        for (const auto& p : vessel)
            pts.push_back({(p.x - prep.crop_left) * sx, (p.y - prep.crop_top) * sy,
                           p.radius * 0.5 * (sx + sy)});
        out.vessels.push_back(std::move(pts));
    }
    return out;
}

struct LabeledSequence {
    bool usable = false;
    std::string reject_reason;
    phasenet::PhaseTrainSequence sequence;
};

// Shared by train-phase: preprocess, vesselness interval, ECG (or sidecar)
// labels, inclusion filter, 10 fps resampling.
LabeledSequence build_labeled_sequence(const fs::path& dir, const vesselness::VesselNet& vnet,
                                       const ParamStore& vparams, int resolution,
                                       const std::string& label_source) {
    LabeledSequence out;
    const auto b = bundle::load_bundle(dir);
    const auto prep = bundle::preprocess_frames(b, resolution);

    std::vector<double> scores;
    scores.reserve(prep.frames.size());
    for (const auto& f : prep.frames)
        scores.push_back(vesselness::vesselness_score(vnet.forward(vparams, f)));
    const auto interval = vesselness::select_frame_interval(scores);

    labeling::FrameLabelTrack track;
    int r_peak_count = 0;
    if (label_source == "truth") {
        const auto truth = synthcine::load_truth(dir / "truth.json");
        track.labels = truth.frame_labels;
        track.fps = b.meta.fps;
        track.first_frame = 0;
        track.last_frame = b.meta.frame_count - 1;
        r_peak_count = static_cast<int>(truth.r_samples.size());
    } else {
        if (!b.ecg) {
            out.reject_reason = "ECG missing";
            return out;
        }
        const auto peaks = ecg::detect_peaks(*b.ecg);
        r_peak_count = static_cast<int>(peaks.r_peaks.size());
        const auto phase = ecg::build_phase_signal(
            peaks, static_cast<int>(b.ecg->samples.size()), b.ecg->fs);
        track = labeling::map_phase_to_frames(phase, b.meta.frame_count, b.meta.fps);
    }

    const auto decision = bundle::inclusion_filter(b, interval.length(), r_peak_count,
                                                   bundle::PipelineMode::evaluate);
    if (!decision.accepted) {
        out.reject_reason = decision.reason;
        return out;
    }

    // intersect the vesselness interval with the labeled range
    const int lo = std::max(interval.begin, track.first_frame);
    const int hi = std::min(interval.end, track.last_frame);
    if (hi - lo + 1 < 10) {
        out.reject_reason = "labeled interval too short";
        return out;
    }
    labeling::FrameLabelTrack clipped;
    clipped.fps = b.meta.fps;
    clipped.first_frame = lo;
    clipped.last_frame = hi;
    clipped.labels.assign(track.labels.begin() + (lo - track.first_frame),
                          track.labels.begin() + (hi - track.first_frame + 1));

    const auto resampled = labeling::resample_to_10fps(clipped);
    if (resampled.labels.size() < 10) {
        out.reject_reason = "fewer than 10 resampled frames";
        return out;
    }
    out.usable = true;
    out.sequence.labels = resampled.labels;
    for (int src : resampled.source_frames)
        out.sequence.frames.push_back(prep.frames[static_cast<std::size_t>(src)]);
    return out;
}

// ---------------------------------------------------------------- commands

int cmd_synth(const fs::path& out_dir, int count, const synthcine::SynthConfig& base,
              const synthcine::DatasetDistribution& dist) {
    const auto paths = synthcine::gen_dataset(count, base, dist, out_dir);
    std::cout << "wrote " << paths.size() << " bundles under " << out_dir.string() << "\n";
    return 0;
}

int cmd_annotate_ecg(const fs::path& bundle_dir, const std::string& out_file) {
    const auto b = bundle::load_bundle(bundle_dir);
    if (!b.ecg) throw ConfigError("bundle has no ECG trace");
    const auto peaks = ecg::detect_peaks(*b.ecg);
    json j;
    j["fs"] = b.ecg->fs;
    j["r_peaks"] = peaks.r_peaks;
    j["t_peaks"] = peaks.t_peaks();
    j["eos_points"] = peaks.eos_points();
    j["heart_rate_bpm"] = ecg::heart_rate(peaks.r_peaks, b.ecg->fs);
    int degraded = 0;
    for (const auto& beat : peaks.beats) degraded += beat.degraded ? 1 : 0;
    j["degraded_beats"] = degraded;
    if (out_file.empty()) {
        std::cout << j.dump(2) << "\n";
    } else {
        std::ofstream out(out_file);
        out << j.dump(2) << "\n";
    }
    return 0;
}

int cmd_label(const fs::path& bundle_dir, const std::string& out_file) {
    const auto b = bundle::load_bundle(bundle_dir);
    const auto gt = pipeline::truth_from_ecg(b);
    json j;
    j["fps"] = b.meta.fps;
    json labels = json::array();
    for (double v : gt.frame_labels) labels.push_back(std::isnan(v) ? json(nullptr) : json(v));
    j["labels"] = labels;
    j["heart_rate_bpm"] = gt.bpm;
    if (out_file.empty()) {
        std::cout << j.dump(2) << "\n";
    } else {
        std::ofstream out(out_file);
        out << j.dump(2) << "\n";
    }
    return 0;
}

int cmd_train_vessel(const fs::path& data_dir, const fs::path& out_path, int resolution,
                     int epochs, int frames_per_bundle, double lr, std::uint64_t seed,
                     bool verbose) {
    std::vector<std::pair<Tensor, Tensor>> pairs;
    for (const auto& dir : list_bundles(data_dir)) {
        const auto b = bundle::load_bundle(dir);
        if (b.annotations.empty()) continue;
        const auto prep = bundle::preprocess_frames(b, resolution);
        const int n = b.meta.frame_count;
        for (int j = 0; j < frames_per_bundle; ++j) {
            const int f = frames_per_bundle == 1
                              ? n / 2
                              : static_cast<int>(std::lround(j * (n - 1.0) / (frames_per_bundle - 1)));
            const auto scaled = scale_annotation(b.annotations[static_cast<std::size_t>(f)], prep,
                                                 b.meta.width, b.meta.height, resolution);
            pairs.emplace_back(prep.frames[static_cast<std::size_t>(f)],
                               vesselness::rasterize_mask(scaled, resolution, resolution));
        }
    }
    if (pairs.empty()) throw EmptyDataset("no annotated bundles under " + data_dir.string());

    vesselness::VesselTrainConfig cfg;
    cfg.epochs = epochs;
    cfg.adam.lr = lr;
    cfg.seed = seed;
    cfg.verbose = verbose;
    const auto result = vesselness::train_vesselness(pairs, cfg);

    WeightsMeta meta;
    meta.arch = vesselness::VesselNet::arch_tag();
    meta.config_hash = config_hash(meta.arch);
    meta.extra["resolution"] = std::to_string(resolution);
    save_weights(out_path, result.params, meta);
    std::cout << "trained vesselness on " << pairs.size() << " frames, final loss "
              << result.epoch_loss.back() << ", weights at " << out_path.string() << "\n";
    return 0;
}

int cmd_train_phase(const fs::path& data_dir, const fs::path& vessel_weights,
                    const fs::path& out_path, int resolution, int epochs,
                    const std::string& label_source, bool augment, double lr,
                    std::uint64_t seed, bool verbose) {
    WeightsMeta vmeta;
    const ParamStore vparams = load_weights(vessel_weights, &vmeta);
    vesselness::VesselNet vnet;

    std::vector<phasenet::PhaseTrainSequence> sequences;
    int rejected = 0;
    for (const auto& dir : list_bundles(data_dir)) {
        auto labeled = build_labeled_sequence(dir, vnet, vparams, resolution, label_source);
        if (!labeled.usable) {
            ++rejected;
            if (verbose)
                std::cerr << "skipping " << dir.filename().string() << ": "
                          << labeled.reject_reason << "\n";
            continue;
        }
        sequences.push_back(std::move(labeled.sequence));
    }
    if (sequences.empty()) throw EmptyDataset("no usable sequences under " + data_dir.string());
    std::cout << "training on " << sequences.size() << " sequences (" << rejected
              << " rejected)\n";

    phasenet::PhaseNetConfig net_cfg;
    net_cfg.resolution = resolution;
    phasenet::PhaseNet net(net_cfg);

    phasenet::PhaseTrainConfig cfg;
    cfg.epochs = epochs;
    cfg.adam.lr = lr;
    cfg.seed = seed;
    cfg.augment = augment;
    cfg.verbose = verbose;
    const auto result = phasenet::train_phasenet(net, sequences, cfg);

    WeightsMeta meta;
    meta.arch = net.config().describe();
    meta.config_hash = net.config_hash();
    meta.extra["resolution"] = std::to_string(resolution);
    save_weights(out_path, result.params, meta);
    std::cout << "final training loss " << result.epoch_loss.back() << ", weights at "
              << out_path.string() << "\n";
    return 0;
}

int cmd_predict(const std::vector<fs::path>& bundle_dirs, const fs::path& vessel_weights,
                const fs::path& phase_weights, const fs::path& out_dir,
                const pipeline::PredictConfig& config) {
    WeightsMeta vmeta, pmeta;
    const ParamStore vparams = load_weights(vessel_weights, &vmeta);
    const ParamStore pparams = load_weights(phase_weights, &pmeta);
    vesselness::VesselNet vnet;
    const phasenet::PhaseNet pnet = phase_net_from_weights(pmeta);

    fs::create_directories(out_dir);
    int written = 0;
    for (const auto& dir : bundle_dirs) {
        const auto b = bundle::load_bundle(dir);
        if (b.meta.frame_count <= 20) {
            std::cerr << "rejected " << dir.filename().string() << ": frame count "
                      << b.meta.frame_count << " <= 20\n";
            continue;
        }
        auto trace = pipeline::predict(b, vnet, vparams, pnet, pparams, config);
        const auto decision = bundle::inclusion_filter(b, trace.interval.length(), 2,
                                                       bundle::PipelineMode::predict);
        if (!decision.accepted) {
            std::cerr << "rejected " << dir.filename().string() << ": " << decision.reason << "\n";
            continue;
        }
        if (trace.sequence_id.empty()) trace.sequence_id = dir.filename().string();
        pipeline::save_trace(trace, out_dir / (dir.filename().string() + ".trace.json"));
        ++written;
    }
    if (written == 0) throw EmptyDataset("no bundle produced a prediction trace");
    std::cout << "wrote " << written << " traces under " << out_dir.string() << "\n";
    return 0;
}

int cmd_evaluate(const fs::path& data_dir, const fs::path& pred_dir, const std::string& gt_source,
                 const fs::path& out_dir, int edf_tol, bool plot) {
    std::vector<fs::path> trace_files;
    for (const auto& entry : fs::directory_iterator(pred_dir)) {
        const auto name = entry.path().filename().string();
        if (name.size() > 11 && name.substr(name.size() - 11) == ".trace.json")
            trace_files.push_back(entry.path());
    }
    std::sort(trace_files.begin(), trace_files.end());
    if (trace_files.empty()) throw EmptyDataset("no traces under " + pred_dir.string());

    std::vector<metrics::EvalPair> pairs;
    std::vector<std::vector<int>> pred_edfs, gt_edfs;
    std::vector<std::pair<pipeline::PredictionTrace, pipeline::GroundTruth>> plot_items;
    for (const auto& tf : trace_files) {
        const auto trace = pipeline::load_trace(tf);
        auto name = tf.filename().string();
        name = name.substr(0, name.size() - 11);
        const fs::path bundle_dir = data_dir / name;

        pipeline::GroundTruth gt;
        if (gt_source == "truth") {
            gt = pipeline::truth_from_sidecar(synthcine::load_truth(bundle_dir / "truth.json"));
        } else {
            gt = pipeline::truth_from_ecg(bundle::load_bundle(bundle_dir));
        }
        pairs.push_back(pipeline::make_eval_pair(trace, gt, name));
        pred_edfs.push_back(pipeline::trace_pred_edfs(trace));
        gt_edfs.push_back(pipeline::gt_edfs_in_interval(gt, trace.interval));
        if (plot) plot_items.emplace_back(trace, gt);
    }

    const auto report = metrics::evaluate(pairs, pred_edfs, gt_edfs, edf_tol);
    fs::create_directories(out_dir);
    report::write_metrics_json(report, out_dir / "metrics.json");
    report::write_metrics_csv(report, out_dir / "metrics.csv");
    if (plot)
        for (const auto& [trace, gt] : plot_items)
            report::write_probability_plot(trace, gt,
                                           out_dir / (trace.sequence_id + ".plot.svg"));
    std::cout << report::format_table(report);
    return 0;
}

int cmd_report(const fs::path& metrics_file, bool plot, const fs::path& pred_dir,
               const fs::path& data_dir, const std::string& gt_source, const fs::path& out_dir) {
    const auto report = report::load_metrics_json(metrics_file);
    std::cout << report::format_table(report);
    if (!plot) return 0;

    fs::create_directories(out_dir);
    for (const auto& entry : fs::directory_iterator(pred_dir)) {
        const auto name = entry.path().filename().string();
        if (name.size() <= 11 || name.substr(name.size() - 11) != ".trace.json") continue;
        const auto trace = pipeline::load_trace(entry.path());
        const auto stem = name.substr(0, name.size() - 11);
        pipeline::GroundTruth gt;
        if (gt_source == "truth")
            gt = pipeline::truth_from_sidecar(synthcine::load_truth(data_dir / stem / "truth.json"));
        else
            gt = pipeline::truth_from_ecg(bundle::load_bundle(data_dir / stem));
        report::write_probability_plot(trace, gt, out_dir / (stem + ".plot.svg"));
    }
    return 0;
}

} // namespace

int run(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args);
}

int run(const std::vector<std::string>& args) {
    // --config is honored as a defaults file; explicit flags override it.
    std::string config_path;
    for (std::size_t i = 0; i + 1 < args.size(); ++i)
        if (args[i] == "--config") config_path = args[i + 1];

    try {
        const FileConfig fc = load_file_config(config_path);

        CLI::App app{"ECG-free cardiac phase and end-diastolic frame detection"};
        app.require_subcommand(1);
        std::string config_opt;
        app.add_option("--config", config_opt, "JSON defaults file");

        // synth
        auto* synth = app.add_subcommand("synth", "generate synthetic study bundles");
        std::string synth_out;
        int synth_count = 10;
        synthcine::SynthConfig base;
        base.seed = fc.seed;
        synthcine::DatasetDistribution dist;
        double synth_fps = 0.0;
        synth->add_option("--out", synth_out, "output directory")->required();
        synth->add_option("--count", synth_count, "number of sequences");
        synth->add_option("--seed", base.seed, "master seed");
        synth->add_option("--duration", base.duration_s, "sequence duration [s]");
        synth->add_option("--size", base.frame_size, "frame side [px]");
        synth->add_option("--vessels", base.vessel_count, "vessels per sequence");
        synth->add_option("--motion", base.motion_amplitude_px, "motion amplitude [px]");
        synth->add_option("--fade-in", base.fade_in_frame, "first contrast-filled frame");
        synth->add_option("--fade-out", base.fade_out_frame, "last contrast-filled frame");
        synth->add_option("--fps", synth_fps, "fixed frame rate (0: mix of 10/15/30)");
        synth->add_option("--hr-lo", dist.hr_lo, "heart rate range low [bpm]");
        synth->add_option("--hr-hi", dist.hr_hi, "heart rate range high [bpm]");
        synth->add_option("--snr-lo", dist.snr_lo, "ECG SNR range low [dB]");
        synth->add_option("--snr-hi", dist.snr_hi, "ECG SNR range high [dB]");
        synth->add_option("--panning-prob", dist.panning_probability, "panning probability");

        // annotate-ecg
        auto* annotate = app.add_subcommand("annotate-ecg", "detect and emit ECG peaks");
        std::string ann_bundle, ann_out;
        annotate->add_option("--bundle", ann_bundle, "bundle directory")->required();
        annotate->add_option("--out", ann_out, "output file (stdout when omitted)");

        // label
        auto* label = app.add_subcommand("label", "ECG-derived per-frame labels");
        std::string label_bundle, label_out;
        label->add_option("--bundle", label_bundle, "bundle directory")->required();
        label->add_option("--out", label_out, "output file (stdout when omitted)");

        // train-vessel
        auto* trainv = app.add_subcommand("train-vessel", "train the vesselness segmenter");
        std::string tv_data, tv_out;
        int tv_resolution = fc.resolution, tv_epochs = fc.vessel_epochs, tv_frames = 5;
        double tv_lr = fc.lr;
        std::uint64_t tv_seed = fc.seed;
        bool tv_verbose = false;
        trainv->add_option("--data", tv_data, "bundle directory")->required();
        trainv->add_option("--out", tv_out, "weights manifest path")->required();
        trainv->add_option("--resolution", tv_resolution, "training resolution");
        trainv->add_option("--epochs", tv_epochs, "epochs");
        trainv->add_option("--frames-per-bundle", tv_frames, "frames sampled per bundle");
        trainv->add_option("--lr", tv_lr, "Adam learning rate");
        trainv->add_option("--seed", tv_seed, "seed");
        trainv->add_flag("--verbose", tv_verbose, "per-epoch loss");

        // train-phase
        auto* trainp = app.add_subcommand("train-phase", "train the cardiac phase classifier");
        std::string tp_data, tp_vessel, tp_out, tp_labels = "ecg";
        int tp_resolution = fc.resolution, tp_epochs = fc.phase_epochs;
        double tp_lr = fc.lr;
        std::uint64_t tp_seed = fc.seed;
        bool tp_augment = fc.augment, tp_no_augment = false, tp_verbose = false;
        trainp->add_option("--data", tp_data, "bundle directory")->required();
        trainp->add_option("--vessel-weights", tp_vessel, "vesselness weights")->required();
        trainp->add_option("--out", tp_out, "weights manifest path")->required();
        trainp->add_option("--resolution", tp_resolution, "input resolution");
        trainp->add_option("--epochs", tp_epochs, "epochs");
        trainp->add_option("--labels", tp_labels, "label source: ecg | truth")
            ->check(CLI::IsMember({"ecg", "truth"}));
        trainp->add_option("--lr", tp_lr, "Adam learning rate");
        trainp->add_option("--seed", tp_seed, "seed");
        trainp->add_flag("--no-augment", tp_no_augment, "disable augmentation");
        trainp->add_flag("--verbose", tp_verbose, "per-epoch loss");

        // predict
        auto* predict = app.add_subcommand("predict", "run the online prediction chain");
        std::string pr_bundle, pr_data, pr_vessel, pr_phase, pr_out;
        pipeline::PredictConfig pr_cfg;
        pr_cfg.schmitt_hi = fc.schmitt_hi;
        pr_cfg.schmitt_lo = fc.schmitt_lo;
        pr_cfg.threads = fc.threads;
        predict->add_option("--bundle", pr_bundle, "single bundle directory");
        predict->add_option("--data", pr_data, "directory of bundles");
        predict->add_option("--vessel-weights", pr_vessel, "vesselness weights")->required();
        predict->add_option("--phase-weights", pr_phase, "phase weights")->required();
        predict->add_option("--out", pr_out, "trace output directory")->required();
        predict->add_option("--hi", pr_cfg.schmitt_hi, "Schmitt rise threshold");
        predict->add_option("--lo", pr_cfg.schmitt_lo, "Schmitt fall threshold");
        predict->add_option("--threads", pr_cfg.threads, "parallelism degree");

        // evaluate
        auto* evaluate = app.add_subcommand("evaluate", "score traces against ground truth");
        std::string ev_data, ev_pred, ev_gt = "truth", ev_out;
        int ev_tol = fc.edf_tol;
        bool ev_plot = false;
        evaluate->add_option("--data", ev_data, "bundle directory")->required();
        evaluate->add_option("--pred", ev_pred, "trace directory")->required();
        evaluate->add_option("--gt", ev_gt, "ground truth source: truth | ecg")
            ->check(CLI::IsMember({"truth", "ecg"}));
        evaluate->add_option("--out", ev_out, "report output directory")->required();
        evaluate->add_option("--edf-tol", ev_tol, "EDF matching tolerance [frames]");
        evaluate->add_flag("--plot", ev_plot, "write SVG probability plots");

        // report
        auto* rep = app.add_subcommand("report", "pretty-print a metrics report");
        std::string rp_metrics, rp_pred, rp_data, rp_gt = "truth", rp_out = ".";
        bool rp_plot = false;
        rep->add_option("--metrics", rp_metrics, "metrics.json path")->required();
        rep->add_flag("--plot", rp_plot, "render SVG plots (needs --pred/--data)");
        rep->add_option("--pred", rp_pred, "trace directory");
        rep->add_option("--data", rp_data, "bundle directory");
        rep->add_option("--gt", rp_gt, "ground truth source: truth | ecg");
        rep->add_option("--out", rp_out, "plot output directory");

        std::vector<std::string> reversed(args.rbegin(), args.rend());
        try {
            app.parse(reversed);
        } catch (const CLI::ParseError& e) {
            return app.exit(e);
        }

        if (*synth) {
            if (synth_fps > 0.0) dist.fps_choices = {synth_fps};
            return cmd_synth(synth_out, synth_count, base, dist);
        }
        if (*annotate) return cmd_annotate_ecg(ann_bundle, ann_out);
        if (*label) return cmd_label(label_bundle, label_out);
        if (*trainv)
            return cmd_train_vessel(tv_data, tv_out, tv_resolution, tv_epochs, tv_frames, tv_lr,
                                    tv_seed, tv_verbose);
        if (*trainp)
            return cmd_train_phase(tp_data, tp_vessel, tp_out, tp_resolution, tp_epochs, tp_labels,
                                   tp_augment && !tp_no_augment, tp_lr, tp_seed, tp_verbose);
        if (*predict) {
            std::vector<fs::path> dirs;
            if (!pr_bundle.empty()) dirs.push_back(pr_bundle);
            else if (!pr_data.empty()) dirs = list_bundles(pr_data);
            else throw ConfigError("predict needs --bundle or --data");
            return cmd_predict(dirs, pr_vessel, pr_phase, pr_out, pr_cfg);
        }
        if (*evaluate) return cmd_evaluate(ev_data, ev_pred, ev_gt, ev_out, ev_tol, ev_plot);
        if (*rep) return cmd_report(rp_metrics, rp_plot, rp_pred, rp_data, rp_gt, rp_out);
        return 1;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        const std::string& cat = e.category();
        return cat == "ConfigError" || cat == "FormatError" || cat == "IoError" ? 2 : 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}

} // namespace cardio::cli
