#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pfdiff/common/rng.h"
#include "pfdiff/grid/case_parser.h"
#include "pfdiff/grid/layout.h"
#include "pfdiff/grid/network_case.h"

namespace testing {

inline std::string data_file(const std::string& name) { return std::string(PFDIFF_DATA_DIR) + "/" + name; }

inline pfdiff::grid::NetworkCase case14() { return pfdiff::grid::load_case(data_file("case14.m")); }
inline pfdiff::grid::NetworkCase case30() { return pfdiff::grid::load_case(data_file("case30.m")); }

/// Slack bus feeding one load over a lossy line.
inline const char* kTwoBus = R"({
  "name": "two-bus", "base_mva": 100,
  "buses": [
    {"id": 1, "type": "slack", "vm_min": 0.95, "vm_max": 1.05},
    {"id": 2, "type": "load", "pd": 40, "qd": 15, "bs": 5, "vm_min": 0.9, "vm_max": 1.1}
  ],
  "generators": [
    {"bus": 1, "pg_min": 0, "pg_max": 100, "qg_min": -50, "qg_max": 50, "vg": 1.02, "cost": [0.01, 20, 0]}
  ],
  "branches": [
    {"from": 1, "to": 2, "r": 0.02, "x": 0.1, "b": 0.04, "rate_a": 80}
  ]
})";

/// Slack, PV and PQ buses with an off-nominal, phase-shifting transformer.
inline const char* kThreeBus = R"({
  "name": "three-bus", "base_mva": 100,
  "buses": [
    {"id": 1, "type": "slack", "vm_min": 0.95, "vm_max": 1.05},
    {"id": 2, "type": "generator", "pd": 20, "qd": 5, "vm_min": 0.95, "vm_max": 1.05},
    {"id": 3, "type": "load", "pd": 60, "qd": 25, "gs": 2, "bs": -3, "vm_min": 0.9, "vm_max": 1.1}
  ],
  "generators": [
    {"bus": 1, "pg_min": 0, "pg_max": 150, "qg_min": -60, "qg_max": 60, "vg": 1.03, "cost": [0.02, 18, 0]},
    {"bus": 2, "pg_min": 10, "pg_max": 60, "qg_min": -30, "qg_max": 40, "vg": 1.01, "cost": [0.04, 25, 0]}
  ],
  "branches": [
    {"from": 1, "to": 2, "r": 0.01, "x": 0.08, "b": 0.03, "rate_a": 120},
    {"from": 1, "to": 3, "r": 0.03, "x": 0.15, "b": 0.02, "rate_a": 90},
    {"from": 2, "to": 3, "r": 0.02, "x": 0.12, "tap": 0.97, "shift_deg": 2.5, "rate_a": 60}
  ]
})";

inline pfdiff::grid::NetworkCase two_bus() { return pfdiff::grid::parse_case(kTwoBus); }
inline pfdiff::grid::NetworkCase three_bus() { return pfdiff::grid::parse_case(kThreeBus); }

/// Dense pi-model admittance assembled straight from the branch list.
inline Eigen::MatrixXcd reference_admittance(const pfdiff::grid::NetworkCase& net) {
    using C = std::complex<double>;
    const auto n = static_cast<Eigen::Index>(net.bus_count());
    Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(n, n);
    for (const auto& br : net.branches) {
        const C ys = 1.0 / C(br.r, br.x);
        const C half_b(0.0, br.b / 2.0);
        const C a = std::polar(br.tap, br.shift);
        const auto f = static_cast<Eigen::Index>(br.from), t = static_cast<Eigen::Index>(br.to);
        y(f, f) += (ys + half_b) / (br.tap * br.tap);
        y(t, t) += ys + half_b;
        y(f, t) += -ys / std::conj(a);
        y(t, f) += -ys / a;
    }
    for (Eigen::Index i = 0; i < n; ++i) y(i, i) += C(net.buses[i].gs, net.buses[i].bs);
    return y;
}

/// R(x) written out term by term: mean over buses of |S_G - S_D - V_i sum_j conj(Y_ij V_j)|.
inline double brute_force_residual(const pfdiff::grid::NetworkCase& net, const Eigen::MatrixXcd& y,
                                   const std::vector<double>& x) {
    using pfdiff::grid::Quantity;
    using C = std::complex<double>;
    const auto layout = pfdiff::grid::make_layout(net);
    const std::size_t n = net.bus_count();
    std::vector<C> v(n), s(n, C(0.0, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        v[i] = std::polar(x[layout.index(Quantity::v_magnitude, i)], x[layout.index(Quantity::v_angle, i)]);
    for (std::size_t k = 0; k < layout.demand_buses().size(); ++k) {
        const std::size_t b = layout.demand_buses()[k];
        s[b] -= C(x[layout.index(Quantity::p_demand, k)], x[layout.index(Quantity::q_demand, k)]);
    }
    for (std::size_t g = 0; g < net.generators.size(); ++g)
        s[net.generators[g].bus] += C(x[layout.index(Quantity::p_gen, g)], x[layout.index(Quantity::q_gen, g)]);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        C flow(0.0, 0.0);
        for (std::size_t j = 0; j < n; ++j)
            flow += v[i] * std::conj(y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * v[j]);
        total += std::abs(s[i] - flow);
    }
    return total / static_cast<double>(n);
}

/// Random physical sample drawn uniformly inside a loose box around a plausible operating point.
inline std::vector<double> random_sample(const pfdiff::grid::NetworkCase& net, pfdiff::Rng& rng) {
    using pfdiff::grid::Quantity;
    const auto layout = pfdiff::grid::make_layout(net);
    std::vector<double> x(layout.dim());
    for (std::size_t k = 0; k < layout.count(Quantity::p_demand); ++k) {
        const auto& bus = net.buses[layout.demand_buses()[k]];
        x[layout.index(Quantity::p_demand, k)] = bus.pd * rng.uniform(0.8, 1.2);
        x[layout.index(Quantity::q_demand, k)] = bus.qd * rng.uniform(0.8, 1.2);
    }
    for (std::size_t i = 0; i < net.bus_count(); ++i) {
        x[layout.index(Quantity::v_magnitude, i)] = rng.uniform(0.92, 1.08);
        x[layout.index(Quantity::v_angle, i)] = rng.uniform(-0.4, 0.4);
    }
    for (std::size_t g = 0; g < net.generators.size(); ++g) {
        const auto& gen = net.generators[g];
        x[layout.index(Quantity::p_gen, g)] = rng.uniform(gen.pg_min, gen.pg_max);
        x[layout.index(Quantity::q_gen, g)] = rng.uniform(gen.qg_min, gen.qg_max);
    }
    return x;
}

inline double relative_error(double a, double b, double floor = 1e-12) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

/// Central difference of f at x along coordinate i.
inline double central_difference(const std::function<double(const std::vector<double>&)>& f, std::vector<double> x,
                                 std::size_t i, double h) {
    const double x0 = x[i];
    x[i] = x0 + h;
    const double fp = f(x);
    x[i] = x0 - h;
    const double fm = f(x);
    return (fp - fm) / (2.0 * h);
}

}  // namespace testing
