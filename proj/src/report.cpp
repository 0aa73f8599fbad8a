#include "cardio/report.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace cardio::report {

using nlohmann::json;

namespace {

json rates_to_json(const metrics::Rates& r) {
    return {{"accuracy", r.accuracy},
            {"sensitivity", r.sensitivity},
            {"specificity", r.specificity},
            {"ppv", r.ppv},
            {"npv", r.npv}};
}

metrics::Rates rates_from_json(const json& j) {
    metrics::Rates r;
    r.accuracy = j.at("accuracy").get<double>();
    r.sensitivity = j.at("sensitivity").get<double>();
    r.specificity = j.at("specificity").get<double>();
    r.ppv = j.at("ppv").get<double>();
    r.npv = j.at("npv").get<double>();
    return r;
}

} // namespace

void write_metrics_json(const metrics::MetricReport& report, const std::filesystem::path& path) {
    json j;
    j["sequences"] = report.sequences;
    j["eligible_frames"] = report.eligible_frames;
    j["per_angiography"] = rates_to_json(report.per_angiography);
    j["per_frame"] = rates_to_json(report.per_frame);
    j["edf"] = {{"precision", report.edf.precision}, {"recall", report.edf.recall},
                {"f1", report.edf.f1},               {"matched", report.edf.matched},
                {"n_pred", report.edf.n_pred},       {"n_gt", report.edf.n_gt}};
    j["transitions"] = {{"present", report.transitions.present},
                        {"sys_to_dia", report.transitions.sys_to_dia},
                        {"dia_to_sys", report.transitions.dia_to_sys},
                        {"error_count", report.transitions.error_count}};
    json bins = json::array();
    for (const auto& b : report.hr_bins) {
        json bj;
        bj["lo"] = b.lo;
        bj["hi"] = b.hi;
        bj["count"] = b.count;
        bj["share"] = b.share;
        bj["mean_accuracy"] = b.mean_accuracy ? json(*b.mean_accuracy) : json(nullptr);
        bins.push_back(bj);
    }
    j["hr_bins"] = bins;

    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << "\n";
}

metrics::MetricReport load_metrics_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw FormatError("metrics " + path.string() + ": " + e.what());
    }
    metrics::MetricReport report;
    report.sequences = j.at("sequences").get<long>();
    report.eligible_frames = j.at("eligible_frames").get<long>();
    report.per_angiography = rates_from_json(j.at("per_angiography"));
    report.per_frame = rates_from_json(j.at("per_frame"));
    report.edf.precision = j.at("edf").at("precision").get<double>();
    report.edf.recall = j.at("edf").at("recall").get<double>();
    report.edf.f1 = j.at("edf").at("f1").get<double>();
    report.edf.matched = j.at("edf").at("matched").get<long>();
    report.edf.n_pred = j.at("edf").at("n_pred").get<long>();
    report.edf.n_gt = j.at("edf").at("n_gt").get<long>();
    report.transitions.present = j.at("transitions").at("present").get<bool>();
    report.transitions.sys_to_dia = j.at("transitions").at("sys_to_dia").get<double>();
    report.transitions.dia_to_sys = j.at("transitions").at("dia_to_sys").get<double>();
    report.transitions.error_count = j.at("transitions").at("error_count").get<long>();
    for (const auto& bj : j.at("hr_bins")) {
        metrics::HrBin b;
        b.lo = bj.at("lo").get<double>();
        b.hi = bj.at("hi").get<double>();
        b.count = bj.at("count").get<long>();
        b.share = bj.at("share").get<double>();
        if (!bj.at("mean_accuracy").is_null()) b.mean_accuracy = bj.at("mean_accuracy").get<double>();
        report.hr_bins.push_back(b);
    }
    return report;
}

void write_metrics_csv(const metrics::MetricReport& report, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "sequence,bpm,accuracy\n";
    for (std::size_t i = 0; i < report.per_seq_accuracy.size(); ++i) {
        out << report.per_seq_id[i] << "," << report.per_seq_bpm[i] << ",";
        if (!std::isnan(report.per_seq_accuracy[i])) out << report.per_seq_accuracy[i];
        out << "\n";
    }
}

std::string format_table(const metrics::MetricReport& report) {
    std::ostringstream os;
    auto pct = [](double v) {
        std::ostringstream s;
        s.precision(1);
        s << std::fixed << 100.0 * v << "%";
        return s.str();
    };
    os << "sequences: " << report.sequences << ", eligible frames: " << report.eligible_frames
       << "\n\n";
    os << "measure       per-angiography  per-frame\n";
    os << "accuracy      " << pct(report.per_angiography.accuracy) << "            "
       << pct(report.per_frame.accuracy) << "\n";
    os << "sensitivity   " << pct(report.per_angiography.sensitivity) << "            "
       << pct(report.per_frame.sensitivity) << "\n";
    os << "specificity   " << pct(report.per_angiography.specificity) << "            "
       << pct(report.per_frame.specificity) << "\n";
    os << "ppv           " << pct(report.per_angiography.ppv) << "            "
       << pct(report.per_frame.ppv) << "\n";
    os << "npv           " << pct(report.per_angiography.npv) << "            "
       << pct(report.per_frame.npv) << "\n\n";
    os << "EDF (+-1 frame): precision " << pct(report.edf.precision) << ", recall "
       << pct(report.edf.recall) << ", F1 " << pct(report.edf.f1) << " (" << report.edf.matched
       << "/" << report.edf.n_pred << " pred, " << report.edf.n_gt << " gt)\n";
    if (report.transitions.present)
        os << "errors near transitions: S->D " << pct(report.transitions.sys_to_dia) << ", D->S "
           << pct(report.transitions.dia_to_sys) << " (" << report.transitions.error_count
           << " errors)\n";
    else
        os << "errors near transitions: none\n";
    os << "\nheart-rate bins (per-angiography accuracy):\n";
    for (const auto& b : report.hr_bins) {
        if (b.lo < 0)
            os << "  < 30 bpm   ";
        else if (b.hi < 0)
            os << "  > " << b.lo << " bpm   ";
        else
            os << "  " << b.lo << " - " << b.hi << " bpm";
        os << "  n=" << b.count << " (" << pct(b.share) << ")";
        if (b.mean_accuracy) os << "  accuracy " << pct(*b.mean_accuracy);
        os << "\n";
    }
    return os.str();
}

namespace {

std::string polyline(const std::vector<std::pair<double, double>>& pts) {
    std::ostringstream os;
    for (const auto& [x, y] : pts) os << x << "," << y << " ";
    return os.str();
}

} // namespace

void write_probability_plot(const pipeline::PredictionTrace& trace,
                            const pipeline::GroundTruth& truth,
                            const std::filesystem::path& path) {
    const int width = 900, height = 240, pad = 30;
    if (trace.frames.empty()) throw ConfigError("cannot plot an empty trace");
    const int f_lo = trace.frames.front().frame;
    const int f_hi = trace.frames.back().frame;
    auto sx = [&](double f) {
        return pad + (f - f_lo) / std::max(1.0, static_cast<double>(f_hi - f_lo)) *
                         (width - 2 * pad);
    };
    auto sy = [&](double p) { return height - pad - p * (height - 2 * pad); };

    std::vector<std::pair<double, double>> prob_pts, label_pts, gt_pts;
    for (const auto& f : trace.frames) {
        prob_pts.emplace_back(sx(f.frame), sy(f.prob));
        label_pts.emplace_back(sx(f.frame), sy(f.label * 0.98 + 0.01));
        if (f.frame < static_cast<int>(truth.frame_labels.size())) {
            const double g = truth.frame_labels[static_cast<std::size_t>(f.frame)];
            if (!std::isnan(g)) gt_pts.emplace_back(sx(f.frame), sy(g));
        }
    }

    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width << "' height='" << height
        << "'>\n";
    out << "<rect width='100%' height='100%' fill='white'/>\n";
    out << "<text x='" << pad << "' y='18' font-size='12'>" << trace.sequence_id
        << " (probability, predicted label, ground truth)</text>\n";
    out << "<polyline fill='none' stroke='#bbbbbb' stroke-width='1' points='"
        << polyline(gt_pts) << "'/>\n";
    out << "<polyline fill='none' stroke='#cc3333' stroke-width='1.5' points='"
        << polyline(label_pts) << "'/>\n";
    out << "<polyline fill='none' stroke='#3355cc' stroke-width='1.5' points='"
        << polyline(prob_pts) << "'/>\n";
    for (const auto& f : trace.frames)
        if (f.edf)
            out << "<circle cx='" << sx(f.frame) << "' cy='" << sy(1.02) << "' r='3' fill='#119933'/>\n";
    out << "</svg>\n";
}

} // namespace cardio::report
