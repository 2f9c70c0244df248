#pragma once

#include <array>
#include <vector>

#include <Eigen/Dense>

#include "pfdiff/diffusion/noise_schedule.h"
#include "pfdiff/grid/admittance.h"
#include "pfdiff/grid/layout.h"
#include "pfdiff/grid/network_case.h"
#include "pfdiff/pf/constraints.h"
#include "pfdiff/pf/imbalance.h"

namespace pfdiff::eval {

struct ImbalanceSummary {
    double mean = 0.0;
    double median = 0.0;
    double p95 = 0.0;
    std::vector<double> per_sample;
};

/// R over physical samples (D x n, one per column).
ImbalanceSummary mean_imbalance(const Eigen::MatrixXd& physical, const pf::ImbalanceEvaluator& evaluator,
                                std::size_t workers = 1);

/// Fraction of samples satisfying each of [C1]..[C6].
std::array<double, 6> constraint_satisfaction(const Eigen::MatrixXd& physical, const grid::SampleLayout& layout,
                                              const grid::AdmittanceMatrix& admittance,
                                              const grid::NetworkCase& network,
                                              const pf::ConstraintTolerance& tolerance = {}, std::size_t workers = 1);

/// Wasserstein-1 distance between two 1-D empirical distributions.
double wasserstein1(std::vector<double> a, std::vector<double> b);
/// Kolmogorov-Smirnov statistic sup |F_a - F_b|.
double ks_statistic(std::vector<double> a, std::vector<double> b);

struct FidelityReport {
    std::vector<double> w1, ks;
    /// Fraction of synthetic values outside the real [min, max], per dimension.
    std::vector<double> support_extension;
    double mean_w1 = 0.0, max_w1 = 0.0, mean_ks = 0.0, max_ks = 0.0, mean_support_extension = 0.0;
};

/// Per-dimension marginal comparison of physical datasets sharing a layout.
FidelityReport distribution_fidelity(const Eigen::MatrixXd& synthetic, const Eigen::MatrixXd& real);

struct LinearityScore {
    double rmse = 0.0;
    double max_deviation = 0.0;
};

/// Deviation of a curve over t = 0..T from gamma_t. The RMSE averages
/// t = 1..T; the maximum also covers t = 0.
LinearityScore linearity_score(const std::vector<double>& curve, const diffusion::ImbalanceBound& bound);

/// Fraction of steps t = 1..T with trace[t] <= gamma_t.
double reverse_trace_check(const std::vector<double>& trace, const diffusion::ImbalanceBound& bound);

}  // namespace pfdiff::eval
