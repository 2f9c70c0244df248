#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "pfdiff/grid/admittance.h"
#include "pfdiff/grid/layout.h"
#include "pfdiff/grid/network_case.h"

namespace pfdiff::pf {

enum class BusRole { slack, pv, pq };

struct VoltageState {
    std::vector<double> vm;
    std::vector<double> va;

    static VoltageState flat(std::size_t n) { return {std::vector<double>(n, 1.0), std::vector<double>(n, 0.0)}; }
};

/// Polar power-flow equations for fixed bus roles and specified injections.
/// Unknowns are the angles of non-slack buses followed by the magnitudes of
/// PQ buses; the mismatch is [P_calc - P_spec; Q_calc - Q_spec] over the
/// same bus sets.
class PowerFlowEquations {
  public:
    PowerFlowEquations(const grid::AdmittanceMatrix& admittance, std::vector<BusRole> roles,
                       std::vector<double> p_spec, std::vector<double> q_spec);

    std::size_t unknown_count() const { return angle_buses_.size() + magnitude_buses_.size(); }

    Eigen::VectorXd mismatch(const VoltageState& state) const;
    Eigen::MatrixXd jacobian(const VoltageState& state) const;
    Eigen::VectorXd unknowns(const VoltageState& state) const;
    void set_unknowns(VoltageState& state, const Eigen::VectorXd& x) const;
    /// Complex power injected at every bus by the network, V .* conj(Y V).
    Eigen::VectorXcd injections(const VoltageState& state) const;

  private:
    const grid::AdmittanceMatrix* y_;
    std::vector<BusRole> roles_;
    std::vector<double> p_spec_, q_spec_;
    std::vector<std::size_t> angle_buses_;      // pv + pq
    std::vector<std::size_t> magnitude_buses_;  // pq
};

struct GeneratorSetpoints {
    std::vector<double> p;   ///< per generator; ignored for generators at the slack bus
    std::vector<double> vm;  ///< per generator; the first generator at a bus sets its voltage
};

struct NrOptions {
    double tolerance = 1e-8;
    int max_iterations = 30;
    bool enforce_q_limits = true;
    int max_switch_rounds = 10;
};

struct NrResult {
    std::vector<double> sample;  ///< complete physical sample in layout order
    VoltageState voltage;
    int iterations = 0;          ///< Newton steps, summed over PV->PQ rounds
    double mismatch = 0.0;       ///< final infinity norm (p.u.)
    std::vector<std::size_t> switched_to_pq;
};

/// Solves AC power flow by Newton-Raphson from `init` (flat start when null).
/// pd/qd are per-bus demands. Reactive limits at PV buses are enforced by
/// PV->PQ switching. Throws DivergedError or NumericError (singular Jacobian).
NrResult solve_newton_raphson(const grid::NetworkCase& network, const grid::AdmittanceMatrix& admittance,
                              const grid::SampleLayout& layout, std::span<const double> pd,
                              std::span<const double> qd, const GeneratorSetpoints& setpoints,
                              const NrOptions& options = {}, const VoltageState* init = nullptr);

/// Setpoints taken from the case file itself (scheduled P, Vg).
GeneratorSetpoints nominal_setpoints(const grid::NetworkCase& network);
std::vector<double> nominal_pd(const grid::NetworkCase& network);
std::vector<double> nominal_qd(const grid::NetworkCase& network);

}  // namespace pfdiff::pf
