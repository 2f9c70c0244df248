#pragma once

#include <filesystem>
#include <numbers>
#include <string>
#include <string_view>

#include "pfdiff/grid/network_case.h"

namespace pfdiff::grid {

struct ParseOptions {
    /// Symmetric bus-angle box used when the case carries no angle limits.
    double default_angle_bound = std::numbers::pi / 6.0;
};

/// Parses either the native JSON case schema or a MATPOWER `mpc` script
/// (bus, gen, branch and gencost tables). The format is detected from the
/// first non-blank character. The result is validated.
NetworkCase parse_case(std::string_view text, const ParseOptions& options = {});

NetworkCase parse_matpower(std::string_view text, const ParseOptions& options = {});
NetworkCase parse_native(std::string_view text, const ParseOptions& options = {});

NetworkCase load_case(const std::filesystem::path& path, const ParseOptions& options = {});

/// Serializes to the native schema (MW, MVAr, degrees), the inverse of parse_native.
std::string to_native_json(const NetworkCase& network);

}  // namespace pfdiff::grid
