#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "pfdiff/grid/admittance.h"
#include "pfdiff/grid/layout.h"
#include "pfdiff/grid/network_case.h"
#include "pfdiff/grid/normalization.h"
#include "pfdiff/pf/constraints.h"
#include "pfdiff/pf/dispatch.h"
#include "pfdiff/pf/newton_raphson.h"

namespace pfdiff::pf {

inline constexpr int kDatasetSchemaVersion = 1;

struct DatasetConfig {
    std::size_t n = 1000;
    std::uint64_t seed = 0;
    std::size_t workers = 1;
    DispatchRanges ranges;
    DispatchOptions dispatch;
    NrOptions solver;
    ConstraintTolerance tolerance;
    grid::BoundsOptions bounds;
    /// When the slack unit's reactive output leaves its limits, search the
    /// slack voltage setpoint inside its window for a feasible point.
    bool repair_slack_voltage = true;
    /// Corrective passes for line overloads (sensitivity-based redispatch),
    /// bus voltage band violations (uniform setpoint shift) and slack limits.
    int repair_rounds = 8;
    /// Re-dispatch passes using the losses of the previous solve.
    int loss_rounds = 2;
    std::size_t window = 250;
    double max_rejection_rate = 0.9;
    std::size_t max_attempts_per_sample = 200;
};

struct RejectionStats {
    std::size_t attempts = 0;
    std::size_t accepted = 0;
    std::size_t diverged = 0;
    std::size_t infeasible_dispatch = 0;
    std::array<std::size_t, 6> constraint_failures{};  ///< first failing constraint per rejection
    std::size_t repaired = 0;

    double rate() const { return attempts ? 1.0 - static_cast<double>(accepted) / static_cast<double>(attempts) : 0.0; }
    nlohmann::json to_json() const;
};

/// Normalized samples (D x n, one column per sample) with self-description.
struct Dataset {
    grid::SampleLayout layout;
    grid::NormalizationBounds bounds;
    Eigen::MatrixXd unit;
    nlohmann::json meta;

    std::size_t size() const { return static_cast<std::size_t>(unit.cols()); }
    std::size_t dim() const { return static_cast<std::size_t>(unit.rows()); }
    Eigen::MatrixXd physical() const { return bounds.denormalize(unit); }
};

/// Outcome of one solve attempt; `sample` holds the solved state whenever
/// the solver converged, accepted or not.
struct SampleAttempt {
    bool accepted = false;
    bool diverged = false;
    bool infeasible_dispatch = false;
    bool repaired = false;
    int failed_constraint = -1;
    std::vector<double> sample;
};

SampleAttempt solve_scenario(const grid::NetworkCase& network, const grid::AdmittanceMatrix& admittance,
                             const grid::SampleLayout& layout, const DispatchScenario& scenario,
                             const DatasetConfig& config);

/// NR-solved, constraint-checked dataset. Rejected draws are replaced by
/// fresh draws; generation aborts with NumericError when the rejection rate
/// of any window of `config.window` samples exceeds `max_rejection_rate`.
Dataset generate_dataset(const grid::NetworkCase& network, const DatasetConfig& config);

/// Writes samples (CSV when the extension is .csv, raw little-endian f64
/// otherwise, sample-major) plus a `<path>.json` sidecar.
void save_dataset(const Dataset& dataset, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);
std::filesystem::path sidecar_path(const std::filesystem::path& path);

/// Builds a dataset from physical samples (D x n), e.g. sampler output.
Dataset make_dataset(const grid::SampleLayout& layout, const grid::NormalizationBounds& bounds,
                     const Eigen::MatrixXd& physical, nlohmann::json meta);

}  // namespace pfdiff::pf
