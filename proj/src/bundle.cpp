#include "cardio/bundle.hpp"

#include <fstream>

#include <json.hpp>

namespace cardio::bundle {

using nlohmann::json;

namespace {

json meta_to_json(const BundleMeta& meta) {
    json j;
    j["format"] = "cardiophase-bundle";
    j["version"] = 1;
    j["width"] = meta.width;
    j["height"] = meta.height;
    j["frame_count"] = meta.frame_count;
    j["bit_depth"] = meta.bit_depth;
    j["fps"] = meta.fps;
    if (meta.primary_angle) j["primary_angle"] = *meta.primary_angle;
    if (meta.secondary_angle) j["secondary_angle"] = *meta.secondary_angle;
    if (!meta.patient_id.empty()) j["patient_id"] = meta.patient_id;
    if (!meta.sequence_id.empty()) j["sequence_id"] = meta.sequence_id;
    return j;
}

template <typename T>
T require_field(const json& j, const char* field) {
    if (!j.contains(field)) throw FormatError(std::string("meta.json: missing field '") + field + "'");
    try {
        return j.at(field).get<T>();
    } catch (const json::exception&) {
        throw FormatError(std::string("meta.json: field '") + field + "' has wrong type");
    }
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw IoError("cannot open " + path.string());
    const auto size = in.tellg();
    in.seekg(0);
    std::vector<std::uint8_t> data(static_cast<std::size_t>(size));
    in.read(reinterpret_cast<char*>(data.data()), size);
    if (!in) throw IoError("failed reading " + path.string());
    return data;
}

} // namespace

StudyBundle load_bundle(const std::filesystem::path& dir) {
    const auto meta_path = dir / "meta.json";
    std::ifstream meta_in(meta_path);
    if (!meta_in) throw IoError("cannot open " + meta_path.string());
    json j;
    try {
        meta_in >> j;
    } catch (const json::exception& e) {
        throw FormatError("meta.json: " + std::string(e.what()));
    }

    StudyBundle bundle;
    bundle.meta.width = require_field<int>(j, "width");
    bundle.meta.height = require_field<int>(j, "height");
    bundle.meta.frame_count = require_field<int>(j, "frame_count");
    bundle.meta.bit_depth = require_field<int>(j, "bit_depth");
    bundle.meta.fps = require_field<double>(j, "fps");
    if (j.contains("primary_angle")) bundle.meta.primary_angle = j["primary_angle"].get<double>();
    if (j.contains("secondary_angle"))
        bundle.meta.secondary_angle = j["secondary_angle"].get<double>();
    bundle.meta.patient_id = j.value("patient_id", "");
    bundle.meta.sequence_id = j.value("sequence_id", "");

    if (bundle.meta.fps <= 0.0) throw FormatError("meta.json: fps must be positive");
    if (bundle.meta.bit_depth != 8 && bundle.meta.bit_depth != 16)
        throw FormatError("meta.json: bit_depth must be 8 or 16");
    if (bundle.meta.width <= 0 || bundle.meta.height <= 0 || bundle.meta.frame_count <= 0)
        throw FormatError("meta.json: width/height/frame_count must be positive");

    bundle.frames_raw = read_file(dir / "frames.raw");
    const std::size_t expected = static_cast<std::size_t>(bundle.meta.width) * bundle.meta.height *
                                 bundle.meta.frame_count * (bundle.meta.bit_depth / 8);
    if (bundle.frames_raw.size() != expected)
        throw FormatError("frames.raw: expected " + std::to_string(expected) + " bytes, got " +
                          std::to_string(bundle.frames_raw.size()));

    if (std::filesystem::exists(dir / "ecg.json")) {
        std::ifstream ecg_in(dir / "ecg.json");
        json ej;
        try {
            ecg_in >> ej;
        } catch (const json::exception& e) {
            throw FormatError("ecg.json: " + std::string(e.what()));
        }
        ecg::ECGTrace trace;
        trace.fs = require_field<double>(ej, "fs");
        trace.samples = require_field<std::vector<double>>(ej, "samples");
        if (trace.fs <= 0.0) throw FormatError("ecg.json: fs must be positive");
        bundle.ecg = std::move(trace);
    }

    if (std::filesystem::exists(dir / "annotations.json")) {
        std::ifstream ann_in(dir / "annotations.json");
        json aj;
        try {
            ann_in >> aj;
        } catch (const json::exception& e) {
            throw FormatError("annotations.json: " + std::string(e.what()));
        }
        bundle.annotations.resize(static_cast<std::size_t>(bundle.meta.frame_count));
        for (const auto& frame_entry : aj.at("frames")) {
            const int idx = require_field<int>(frame_entry, "frame");
            if (idx < 0 || idx >= bundle.meta.frame_count)
                throw FormatError("annotations.json: frame index out of range");
            vesselness::CenterlineAnnotation ann;
            for (const auto& vessel : frame_entry.at("vessels")) {
                std::vector<vesselness::CenterlinePoint> points;
                for (const auto& p : vessel.at("points"))
                    points.push_back({p.at(0).get<double>(), p.at(1).get<double>(),
                                      p.at(2).get<double>()});
                ann.vessels.push_back(std::move(points));
            }
            bundle.annotations[static_cast<std::size_t>(idx)] = std::move(ann);
        }
    }
    return bundle;
}

void save_bundle(const StudyBundle& bundle, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / "meta.json");
        if (!out) throw IoError("cannot write " + (dir / "meta.json").string());
        out << meta_to_json(bundle.meta).dump(2) << "\n";
    }
    {
        std::ofstream out(dir / "frames.raw", std::ios::binary);
        if (!out) throw IoError("cannot write " + (dir / "frames.raw").string());
        out.write(reinterpret_cast<const char*>(bundle.frames_raw.data()),
                  static_cast<std::streamsize>(bundle.frames_raw.size()));
    }
    if (bundle.ecg) {
        json ej;
        ej["fs"] = bundle.ecg->fs;
        ej["samples"] = bundle.ecg->samples;
        std::ofstream out(dir / "ecg.json");
        out << ej.dump() << "\n";
    }
    if (!bundle.annotations.empty()) {
        json frames = json::array();
        for (std::size_t i = 0; i < bundle.annotations.size(); ++i) {
            const auto& ann = bundle.annotations[i];
            if (ann.vessels.empty()) continue;
            json fe;
            fe["frame"] = static_cast<int>(i);
            json vessels = json::array();
            for (const auto& vessel : ann.vessels) {
                json points = json::array();
                for (const auto& p : vessel) points.push_back({p.x, p.y, p.radius});
                json v;
                v["points"] = points;
                vessels.push_back(v);
            }
            fe["vessels"] = vessels;
            frames.push_back(fe);
        }
        json aj;
        aj["frames"] = frames;
        std::ofstream out(dir / "annotations.json");
        out << aj.dump() << "\n";
    }
}

Tensor frame_as_tensor(const StudyBundle& bundle, int index) {
    const auto& m = bundle.meta;
    if (index < 0 || index >= m.frame_count)
        throw ConfigError("frame index " + std::to_string(index) + " out of range");
    Tensor t({1, m.height, m.width});
    const std::size_t px = static_cast<std::size_t>(m.width) * m.height;
    if (m.bit_depth == 8) {
        const std::uint8_t* base = bundle.frames_raw.data() + px * static_cast<std::size_t>(index);
        for (std::size_t i = 0; i < px; ++i) t.data[i] = base[i] / 255.0;
    } else {
        const std::uint8_t* base =
            bundle.frames_raw.data() + 2 * px * static_cast<std::size_t>(index);
        for (std::size_t i = 0; i < px; ++i) {
            const std::uint16_t v =
                static_cast<std::uint16_t>(base[2 * i] | (base[2 * i + 1] << 8));
            t.data[i] = v / 65535.0;
        }
    }
    return t;
}

InclusionDecision inclusion_filter(const StudyBundle& bundle, int visible_interval_length,
                                   int r_peak_count, PipelineMode mode) {
    if (bundle.meta.frame_count <= 20)
        return {false, "frame count: " + std::to_string(bundle.meta.frame_count) + " <= 20"};
    if (visible_interval_length <= 15)
        return {false, "well-visible frames: " + std::to_string(visible_interval_length) + " <= 15"};
    if (mode == PipelineMode::evaluate) {
        if (!bundle.ecg) return {false, "ECG missing"};
        if (r_peak_count < 2)
            return {false, "R peaks: " + std::to_string(r_peak_count) + " < 2"};
    }
    return {true, ""};
}

namespace {

Tensor bilinear_resize(const Tensor& src, int out_h, int out_w) {
    const int h = src.shape[1], w = src.shape[2];
    Tensor dst({1, out_h, out_w});
    const double sy = static_cast<double>(h) / out_h;
    const double sx = static_cast<double>(w) / out_w;
    for (int y = 0; y < out_h; ++y) {
        const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(h - 1));
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, h - 1);
        const double wy = fy - y0;
        for (int x = 0; x < out_w; ++x) {
            const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(w - 1));
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, w - 1);
            const double wx = fx - x0;
            const auto at = [&](int yy, int xx) {
                return src.data[static_cast<std::size_t>(yy) * w + xx];
            };
            dst.data[static_cast<std::size_t>(y) * out_w + x] =
                (1 - wy) * ((1 - wx) * at(y0, x0) + wx * at(y0, x1)) +
                wy * ((1 - wx) * at(y1, x0) + wx * at(y1, x1));
        }
    }
    return dst;
}

} // namespace

PreprocessResult preprocess_frames(const StudyBundle& bundle, int target_resolution,
                                   double collimation_eps) {
    const int h = bundle.meta.height, w = bundle.meta.width;
    const int n = bundle.meta.frame_count;

    std::vector<Tensor> raw;
    raw.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) raw.push_back(frame_as_tensor(bundle, i));

    // per-pixel temporal variance
    std::vector<double> mean(static_cast<std::size_t>(h) * w, 0.0);
    std::vector<double> var(static_cast<std::size_t>(h) * w, 0.0);
    for (const auto& f : raw)
        for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += f.data[i];
    for (double& v : mean) v /= n;
    for (const auto& f : raw)
        for (std::size_t i = 0; i < var.size(); ++i) {
            const double d = f.data[i] - mean[i];
            var[i] += d * d;
        }
    for (double& v : var) v /= n;

    auto row_static = [&](int y) {
        for (int x = 0; x < w; ++x)
            if (var[static_cast<std::size_t>(y) * w + x] >= collimation_eps) return false;
        return true;
    };
    auto col_static = [&](int x) {
        for (int y = 0; y < h; ++y)
            if (var[static_cast<std::size_t>(y) * w + x] >= collimation_eps) return false;
        return true;
    };

    PreprocessResult result;
    while (result.crop_top < h - 1 && row_static(result.crop_top)) ++result.crop_top;
    while (result.crop_bottom < h - 1 - result.crop_top && row_static(h - 1 - result.crop_bottom))
        ++result.crop_bottom;
    while (result.crop_left < w - 1 && col_static(result.crop_left)) ++result.crop_left;
    while (result.crop_right < w - 1 - result.crop_left && col_static(w - 1 - result.crop_right))
        ++result.crop_right;

    if ((result.crop_top + result.crop_bottom) * 2 > h &&
        (result.crop_left + result.crop_right) * 2 > w)
        throw CollimationError("collimation borders cover more than half of both dimensions");

    const int ih = h - result.crop_top - result.crop_bottom;
    const int iw = w - result.crop_left - result.crop_right;
    for (auto& f : raw) {
        Tensor interior({1, ih, iw});
        for (int y = 0; y < ih; ++y)
            for (int x = 0; x < iw; ++x)
                interior.data[static_cast<std::size_t>(y) * iw + x] =
                    f.data[static_cast<std::size_t>(y + result.crop_top) * w + x +
                           result.crop_left];
        result.frames.push_back(ih == target_resolution && iw == target_resolution
                                    ? std::move(interior)
                                    : bilinear_resize(interior, target_resolution,
                                                      target_resolution));
    }
    return result;
}

} // namespace cardio::bundle
