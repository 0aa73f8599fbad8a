#include "cardio/weights_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

static_assert(std::endian::native == std::endian::little,
              "weight blobs are little-endian; big-endian hosts are not supported");

namespace cardio {

using nlohmann::json;

std::string config_hash(const std::string& text) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void save_weights(const std::filesystem::path& manifest_path, const ParamStore& params,
                  const WeightsMeta& meta) {
    const std::filesystem::path blob_path =
        std::filesystem::path(manifest_path).replace_extension(".bin");

    json manifest;
    manifest["version"] = meta.version;
    manifest["dtype"] = meta.dtype;
    manifest["arch"] = meta.arch;
    manifest["config_hash"] = meta.config_hash;
    for (const auto& [k, v] : meta.extra) manifest["extra"][k] = v;
    manifest["blob"] = blob_path.filename().string();

    json tensors = json::array();
    std::uint64_t offset = 0;
    std::ofstream blob(blob_path, std::ios::binary);
    if (!blob) throw IoError("cannot write " + blob_path.string());
    for (const auto& [name, p] : params.params()) {
        json entry;
        entry["name"] = name;
        entry["shape"] = p.shape;
        entry["offset"] = offset;
        entry["count"] = p.data.size();
        tensors.push_back(entry);
        blob.write(reinterpret_cast<const char*>(p.data.data()),
                   static_cast<std::streamsize>(p.data.size() * sizeof(double)));
        offset += p.data.size() * sizeof(double);
    }
    blob.close();
    if (!blob) throw IoError("failed writing " + blob_path.string());
    manifest["tensors"] = tensors;

    std::ofstream out(manifest_path);
    if (!out) throw IoError("cannot write " + manifest_path.string());
    out << manifest.dump(2) << "\n";
}

ParamStore load_weights(const std::filesystem::path& manifest_path, WeightsMeta* meta) {
    std::ifstream in(manifest_path);
    if (!in) throw IoError("cannot open " + manifest_path.string());
    json manifest;
    try {
        in >> manifest;
    } catch (const json::exception& e) {
        throw FormatError("weights manifest " + manifest_path.string() + ": " + e.what());
    }
    if (!manifest.contains("version"))
        throw FormatError("weights manifest missing mandatory 'version' field");
    if (manifest.value("dtype", "") != "f64")
        throw FormatError("unsupported weights dtype: " + manifest.value("dtype", "<missing>"));

    if (meta) {
        meta->version = manifest["version"].get<int>();
        meta->dtype = manifest["dtype"].get<std::string>();
        meta->arch = manifest.value("arch", "");
        meta->config_hash = manifest.value("config_hash", "");
        if (manifest.contains("extra"))
            for (auto& [k, v] : manifest["extra"].items()) meta->extra[k] = v.get<std::string>();
    }

    const std::filesystem::path blob_path =
        manifest_path.parent_path() / manifest.value("blob", "");
    std::ifstream blob(blob_path, std::ios::binary);
    if (!blob) throw IoError("cannot open weight blob " + blob_path.string());

    ParamStore params;
    for (const auto& entry : manifest.at("tensors")) {
        const std::string name = entry.at("name").get<std::string>();
        const std::vector<int> shape = entry.at("shape").get<std::vector<int>>();
        const std::uint64_t offset = entry.at("offset").get<std::uint64_t>();
        const std::uint64_t count = entry.at("count").get<std::uint64_t>();
        if (static_cast<std::uint64_t>(Tensor::numel(shape)) != count)
            throw FormatError("tensor " + name + ": count does not match shape");
        Tensor t(shape);
        blob.seekg(static_cast<std::streamoff>(offset));
        blob.read(reinterpret_cast<char*>(t.data.data()),
                  static_cast<std::streamsize>(count * sizeof(double)));
        if (!blob) throw FormatError("weight blob truncated while reading " + name);
        params.add(name, std::move(t));
    }
    return params;
}

} // namespace cardio
