#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "pfdiff/nn/param_store.h"

namespace pfdiff::nn {

inline constexpr int kCheckpointSchemaVersion = 1;

/// Binary container: 8-byte magic, little-endian u64 header length, JSON
/// header, then every tensor of every group as raw f64 in header order.
/// The header carries `meta` verbatim plus a tensor directory.
void save_checkpoint(const std::filesystem::path& path, const nlohmann::json& meta,
                     const std::vector<std::pair<std::string, const ParamStore*>>& groups);

/// Reads only the header (meta plus directory).
nlohmann::json read_checkpoint_header(const std::filesystem::path& path);

/// Fills the given groups, whose names and shapes must match the file.
/// Returns the stored meta. Throws IoError on any mismatch.
nlohmann::json load_checkpoint(const std::filesystem::path& path,
                               const std::vector<std::pair<std::string, ParamStore*>>& groups);

}  // namespace pfdiff::nn
