#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "pfdiff/grid/layout.h"
#include "pfdiff/grid/network_case.h"

namespace pfdiff::grid {

struct BoundsOptions {
    double demand_low = 0.8;   ///< fraction of nominal demand
    double demand_high = 1.2;
    /// Half-width used when a demand component is nominally zero.
    double min_half_width = 1e-4;
};

/// Per-dimension physical box [lo, hi] used to map samples onto the unit
/// hypercube. Generation and voltage dimensions take the case limits;
/// demand dimensions take the perturbation range around nominal.
class NormalizationBounds {
  public:
    NormalizationBounds() = default;
    NormalizationBounds(std::vector<double> lo, std::vector<double> hi);

    std::size_t dim() const { return lo_.size(); }
    const std::vector<double>& lo() const { return lo_; }
    const std::vector<double>& hi() const { return hi_; }
    double width(std::size_t i) const { return hi_[i] - lo_[i]; }

    /// u = (v - lo) / (hi - lo); no clipping.
    std::vector<double> normalize(std::span<const double> physical) const;
    std::vector<double> denormalize(std::span<const double> unit) const;
    void denormalize_into(std::span<const double> unit, std::span<double> physical) const;

    /// Column-wise versions for D x n matrices.
    Eigen::MatrixXd normalize(const Eigen::MatrixXd& physical) const;
    Eigen::MatrixXd denormalize(const Eigen::MatrixXd& unit) const;

    nlohmann::json to_json() const;
    static NormalizationBounds from_json(const nlohmann::json& j);

    bool operator==(const NormalizationBounds&) const = default;

  private:
    std::vector<double> lo_;
    std::vector<double> hi_;
};

NormalizationBounds make_bounds(const NetworkCase& network, const SampleLayout& layout,
                                const BoundsOptions& options = {});

}  // namespace pfdiff::grid
