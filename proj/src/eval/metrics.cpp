#include "pfdiff/eval/metrics.h"

#include <algorithm>
#include <cmath>

#include "pfdiff/common/error.h"
#include "pfdiff/common/parallel.h"

namespace pfdiff::eval {

namespace {

std::span<const double> column(const Eigen::MatrixXd& m, Eigen::Index j) {
    return {m.col(j).data(), static_cast<std::size_t>(m.rows())};
}

// Linear-interpolated quantile of sorted values.
double quantile(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) return 0.0;
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

ImbalanceSummary mean_imbalance(const Eigen::MatrixXd& physical, const pf::ImbalanceEvaluator& evaluator,
                                std::size_t workers) {
    if (physical.cols() == 0) throw ValidationError("no samples to evaluate");
    if (static_cast<std::size_t>(physical.rows()) != evaluator.layout().dim())
        throw DimensionError("sample dimension differs from layout");
    ImbalanceSummary s;
    s.per_sample.resize(static_cast<std::size_t>(physical.cols()));
    parallel_for(s.per_sample.size(), workers, [&](std::size_t j) {
        s.per_sample[j] = evaluator.residual(column(physical, static_cast<Eigen::Index>(j)));
    });
    double sum = 0.0;
    for (double r : s.per_sample) sum += r;
    s.mean = sum / static_cast<double>(s.per_sample.size());
    auto sorted = s.per_sample;
    std::sort(sorted.begin(), sorted.end());
    s.median = quantile(sorted, 0.5);
    s.p95 = quantile(sorted, 0.95);
    return s;
}

std::array<double, 6> constraint_satisfaction(const Eigen::MatrixXd& physical, const grid::SampleLayout& layout,
                                              const grid::AdmittanceMatrix& admittance,
                                              const grid::NetworkCase& network,
                                              const pf::ConstraintTolerance& tolerance, std::size_t workers) {
    if (physical.cols() == 0) throw ValidationError("no samples to evaluate");
    std::vector<pf::ConstraintReport> reports(static_cast<std::size_t>(physical.cols()));
    parallel_for(reports.size(), workers, [&](std::size_t j) {
        reports[j] = pf::check_constraints(column(physical, static_cast<Eigen::Index>(j)), layout, admittance, network,
                                           tolerance);
    });
    std::array<double, 6> rates{};
    for (const auto& r : reports)
        for (std::size_t c = 0; c < 6; ++c) rates[c] += r.verdicts[c].satisfied ? 1.0 : 0.0;
    for (auto& r : rates) r /= static_cast<double>(reports.size());
    return rates;
}

double wasserstein1(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw ValidationError("empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    // integrate |F_a - F_b| over the merged support
    std::size_t i = 0, j = 0;
    double prev = std::min(a.front(), b.front());
    double total = 0.0;
    while (i < a.size() || j < b.size()) {
        const double x = j >= b.size() || (i < a.size() && a[i] <= b[j]) ? a[i] : b[j];
        total += std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb) * (x - prev);
        prev = x;
        while (i < a.size() && a[i] == x) ++i;
        while (j < b.size() && b[j] == x) ++j;
    }
    return total;
}

double ks_statistic(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw ValidationError("empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double best = 0.0;
    while (i < a.size() || j < b.size()) {
        const double x = j >= b.size() || (i < a.size() && a[i] <= b[j]) ? a[i] : b[j];
        while (i < a.size() && a[i] == x) ++i;
        while (j < b.size() && b[j] == x) ++j;
        best = std::max(best, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return best;
}

FidelityReport distribution_fidelity(const Eigen::MatrixXd& synthetic, const Eigen::MatrixXd& real) {
    if (synthetic.rows() != real.rows()) throw DimensionError("datasets have different dimensions");
    if (synthetic.cols() == 0 || real.cols() == 0) throw ValidationError("empty dataset");
    FidelityReport f;
    const Eigen::Index d = real.rows();
    for (Eigen::Index i = 0; i < d; ++i) {
        std::vector<double> s(static_cast<std::size_t>(synthetic.cols()));
        for (Eigen::Index j = 0; j < synthetic.cols(); ++j) s[static_cast<std::size_t>(j)] = synthetic(i, j);
        std::vector<double> r(static_cast<std::size_t>(real.cols()));
        for (Eigen::Index j = 0; j < real.cols(); ++j) r[static_cast<std::size_t>(j)] = real(i, j);
        const auto [lo, hi] = std::minmax_element(r.begin(), r.end());
        const double outside =
            static_cast<double>(std::count_if(s.begin(), s.end(), [&](double v) { return v < *lo || v > *hi; }));
        f.support_extension.push_back(outside / static_cast<double>(s.size()));
        f.w1.push_back(wasserstein1(s, r));
        f.ks.push_back(ks_statistic(std::move(s), std::move(r)));
    }
    const double dd = static_cast<double>(d);
    for (Eigen::Index i = 0; i < d; ++i) {
        const auto k = static_cast<std::size_t>(i);
        f.mean_w1 += f.w1[k] / dd;
        f.mean_ks += f.ks[k] / dd;
        f.mean_support_extension += f.support_extension[k] / dd;
        f.max_w1 = std::max(f.max_w1, f.w1[k]);
        f.max_ks = std::max(f.max_ks, f.ks[k]);
    }
    return f;
}

LinearityScore linearity_score(const std::vector<double>& curve, const diffusion::ImbalanceBound& bound) {
    if (static_cast<int>(curve.size()) != bound.steps + 1) throw DimensionError("curve must cover t = 0..T");
    LinearityScore s;
    double sq = 0.0;
    for (int t = 0; t <= bound.steps; ++t) {
        const double dev = curve[static_cast<std::size_t>(t)] - bound.at(t);
        if (t > 0) sq += dev * dev;
        s.max_deviation = std::max(s.max_deviation, std::abs(dev));
    }
    s.rmse = std::sqrt(sq / static_cast<double>(bound.steps));
    return s;
}

double reverse_trace_check(const std::vector<double>& trace, const diffusion::ImbalanceBound& bound) {
    if (static_cast<int>(trace.size()) != bound.steps + 1) throw DimensionError("trace must cover t = 0..T");
    if (bound.steps < 1) throw ValidationError("trace check needs T >= 1");
    int below = 0;
    for (int t = 1; t <= bound.steps; ++t)
        if (trace[static_cast<std::size_t>(t)] <= bound.at(t)) ++below;
    return static_cast<double>(below) / static_cast<double>(bound.steps);
}

}  // namespace pfdiff::eval
