#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pfdiff/eval/metrics.h"

namespace pfdiff::eval {

inline constexpr int kReportSchemaVersion = 1;

struct ReportInputs {
    std::string grid;
    std::string model_tag;
    ImbalanceSummary imbalance;
    std::array<double, 6> constraint_rates{};
    std::optional<FidelityReport> fidelity;
    std::optional<FidelityReport> noise_floor;  ///< real vs real split halves
    std::optional<LinearityScore> linearity;
    std::optional<double> trace_fraction;
    nlohmann::json seeds = nlohmann::json::object();
};

nlohmann::json make_report(const ReportInputs& inputs);
/// Plain-text table of the headline numbers.
std::string format_report(const nlohmann::json& report);

/// CSV with columns t, gamma, R for t = 0..T.
void write_curve_csv(const std::filesystem::path& path, const std::vector<double>& curve,
                     const diffusion::ImbalanceBound& bound);
std::vector<double> read_curve_csv(const std::filesystem::path& path);

}  // namespace pfdiff::eval
