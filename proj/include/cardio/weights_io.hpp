#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "cardio/net.hpp"

namespace cardio {

// Weight persistence: a JSON manifest (names, shapes, dtype, byte offsets,
// mandatory version field) next to one raw little-endian binary blob.
struct WeightsMeta {
    int version = 1;
    std::string dtype = "f64";
    std::string arch;        // free-form architecture tag
    std::string config_hash; // hash of the producing configuration
    std::map<std::string, std::string> extra;
};

void save_weights(const std::filesystem::path& manifest_path, const ParamStore& params,
                  const WeightsMeta& meta);

ParamStore load_weights(const std::filesystem::path& manifest_path, WeightsMeta* meta = nullptr);

// FNV-1a over a configuration string; used to tag weight files.
std::string config_hash(const std::string& text);

} // namespace cardio
