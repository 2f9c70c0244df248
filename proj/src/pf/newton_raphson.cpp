#include "pfdiff/pf/newton_raphson.h"

#include <cmath>

#include "pfdiff/common/error.h"

namespace pfdiff::pf {

using grid::Complex;
using grid::Quantity;

PowerFlowEquations::PowerFlowEquations(const grid::AdmittanceMatrix& admittance, std::vector<BusRole> roles,
                                       std::vector<double> p_spec, std::vector<double> q_spec)
    : y_(&admittance), roles_(std::move(roles)), p_spec_(std::move(p_spec)), q_spec_(std::move(q_spec)) {
    const std::size_t n = y_->size();
    if (roles_.size() != n || p_spec_.size() != n || q_spec_.size() != n)
        throw DimensionError("power flow specification does not match the admittance matrix");
    for (std::size_t i = 0; i < n; ++i) {
        if (roles_[i] != BusRole::slack) angle_buses_.push_back(i);
        if (roles_[i] == BusRole::pq) magnitude_buses_.push_back(i);
    }
}

Eigen::VectorXcd PowerFlowEquations::injections(const VoltageState& state) const {
    const std::size_t n = y_->size();
    Eigen::VectorXcd v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = std::polar(1.0, state.va[i]) * state.vm[i];
    const Eigen::VectorXcd current = y_->dense() * v;
    return v.array() * current.conjugate().array();
}

Eigen::VectorXd PowerFlowEquations::mismatch(const VoltageState& state) const {
    const Eigen::VectorXcd s = injections(state);
    Eigen::VectorXd f(unknown_count());
    std::size_t r = 0;
    for (auto i : angle_buses_) f[r++] = s[i].real() - p_spec_[i];
    for (auto i : magnitude_buses_) f[r++] = s[i].imag() - q_spec_[i];
    return f;
}

Eigen::MatrixXd PowerFlowEquations::jacobian(const VoltageState& state) const {
    const std::size_t n = y_->size();
    const Eigen::MatrixXcd& y = y_->dense();
    Eigen::VectorXcd v(n), vnorm(n);
    for (std::size_t i = 0; i < n; ++i) {
        vnorm[i] = std::polar(1.0, state.va[i]);
        v[i] = vnorm[i] * state.vm[i];
    }
    const Eigen::VectorXcd current = y * v;
    // dS/dVa = j diag(V) conj(diag(I) - Y diag(V))
    // dS/dVm = diag(V) conj(Y diag(Vnorm)) + conj(diag(I)) diag(Vnorm)
    Eigen::MatrixXcd ds_dva = -(y * v.asDiagonal()).conjugate();
    ds_dva.diagonal() += current.conjugate();
    ds_dva = (Complex(0.0, 1.0) * v).asDiagonal() * ds_dva;
    Eigen::MatrixXcd ds_dvm = v.asDiagonal() * (y * vnorm.asDiagonal()).conjugate();
    ds_dvm.diagonal() += (current.conjugate().array() * vnorm.array()).matrix();

    const std::size_t na = angle_buses_.size();
    const std::size_t nm = magnitude_buses_.size();
    Eigen::MatrixXd j(na + nm, na + nm);
    for (std::size_t r = 0; r < na; ++r) {
        const auto i = angle_buses_[r];
        for (std::size_t c = 0; c < na; ++c) j(r, c) = ds_dva(i, angle_buses_[c]).real();
        for (std::size_t c = 0; c < nm; ++c) j(r, na + c) = ds_dvm(i, magnitude_buses_[c]).real();
    }
    for (std::size_t r = 0; r < nm; ++r) {
        const auto i = magnitude_buses_[r];
        for (std::size_t c = 0; c < na; ++c) j(na + r, c) = ds_dva(i, angle_buses_[c]).imag();
        for (std::size_t c = 0; c < nm; ++c) j(na + r, na + c) = ds_dvm(i, magnitude_buses_[c]).imag();
    }
    return j;
}

Eigen::VectorXd PowerFlowEquations::unknowns(const VoltageState& state) const {
    Eigen::VectorXd x(unknown_count());
    std::size_t r = 0;
    for (auto i : angle_buses_) x[r++] = state.va[i];
    for (auto i : magnitude_buses_) x[r++] = state.vm[i];
    return x;
}

void PowerFlowEquations::set_unknowns(VoltageState& state, const Eigen::VectorXd& x) const {
    std::size_t r = 0;
    for (auto i : angle_buses_) state.va[i] = x[r++];
    for (auto i : magnitude_buses_) state.vm[i] = x[r++];
}

namespace {

struct SolveOutcome {
    int iterations = 0;
    double mismatch = 0.0;
};

SolveOutcome newton(const PowerFlowEquations& eq, VoltageState& state, const NrOptions& options) {
    SolveOutcome out;
    Eigen::VectorXd f = eq.mismatch(state);
    out.mismatch = f.size() ? f.lpNorm<Eigen::Infinity>() : 0.0;
    while (out.mismatch > options.tolerance) {
        if (out.iterations >= options.max_iterations)
            throw DivergedError("Newton-Raphson did not converge in " + std::to_string(options.max_iterations) +
                                    " iterations (mismatch " + std::to_string(out.mismatch) + " p.u.)",
                                out.mismatch);
        const Eigen::MatrixXd jac = eq.jacobian(state);
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(jac);
        if (!(lu.rcond() > 1e-14)) throw NumericError("singular power flow Jacobian");
        const Eigen::VectorXd dx = lu.solve(-f);
        if (!dx.allFinite()) throw NumericError("non-finite Newton step");
        eq.set_unknowns(state, eq.unknowns(state) + dx);
        ++out.iterations;
        f = eq.mismatch(state);
        out.mismatch = f.lpNorm<Eigen::Infinity>();
        if (!std::isfinite(out.mismatch) || out.mismatch > 1e10)
            throw DivergedError("Newton-Raphson diverged", out.mismatch);
    }
    return out;
}

}  // namespace

NrResult solve_newton_raphson(const grid::NetworkCase& network, const grid::AdmittanceMatrix& admittance,
                              const grid::SampleLayout& layout, std::span<const double> pd,
                              std::span<const double> qd, const GeneratorSetpoints& setpoints,
                              const NrOptions& options, const VoltageState* init) {
    const std::size_t n = network.bus_count();
    const std::size_t ng = network.generators.size();
    if (pd.size() != n || qd.size() != n) throw DimensionError("demand vectors must have one entry per bus");
    if (setpoints.p.size() != ng || setpoints.vm.size() != ng)
        throw DimensionError("setpoints must have one entry per generator");
    if (admittance.size() != n || layout.bus_count() != n) throw DimensionError("admittance/layout mismatch");

    const std::size_t slack = network.slack_bus();
    std::vector<BusRole> roles(n, BusRole::pq);
    std::vector<double> p_spec(n), q_spec(n);
    std::vector<double> q_min(n, 0.0), q_max(n, 0.0);
    std::vector<bool> voltage_set(n, false);
    std::vector<int> at_limit(n, 0);  // -1 / +1 once a PV bus is pinned to Qmin / Qmax
    VoltageState state = init ? *init : VoltageState::flat(n);
    if (state.vm.size() != n || state.va.size() != n) throw DimensionError("initial state has wrong size");

    for (std::size_t i = 0; i < n; ++i) {
        p_spec[i] = -pd[i];
        q_spec[i] = -qd[i];
    }
    for (std::size_t g = 0; g < ng; ++g) {
        const auto& gen = network.generators[g];
        const std::size_t b = gen.bus;
        if (b != slack) p_spec[b] += setpoints.p[g];
        q_min[b] += gen.qg_min;
        q_max[b] += gen.qg_max;
        roles[b] = b == slack ? BusRole::slack : BusRole::pv;
        if (!voltage_set[b]) {
            state.vm[b] = setpoints.vm[g];
            voltage_set[b] = true;
        }
    }
    state.va[slack] = 0.0;

    NrResult result;
    for (int round = 0;; ++round) {
        PowerFlowEquations eq(admittance, roles, p_spec, q_spec);
        const auto outcome = newton(eq, state, options);
        result.iterations += outcome.iterations;
        result.mismatch = outcome.mismatch;
        if (!options.enforce_q_limits || round >= options.max_switch_rounds) break;

        const Eigen::VectorXcd s = eq.injections(state);
        bool switched = false;
        for (std::size_t i = 0; i < n; ++i) {
            if (roles[i] != BusRole::pv) continue;
            const double q_gen = s[i].imag() + qd[i];
            if (q_gen > q_max[i] || q_gen < q_min[i]) {
                roles[i] = BusRole::pq;
                at_limit[i] = q_gen > q_max[i] ? 1 : -1;
                q_spec[i] = (at_limit[i] > 0 ? q_max[i] : q_min[i]) - qd[i];
                result.switched_to_pq.push_back(i);
                switched = true;
            }
        }
        if (!switched) break;
    }

    // Assemble the flat sample.
    const PowerFlowEquations final_eq(admittance, roles, p_spec, q_spec);
    const Eigen::VectorXcd s = final_eq.injections(state);
    std::vector<double> x(layout.dim());
    const auto& demand = layout.demand_buses();
    for (std::size_t k = 0; k < demand.size(); ++k) {
        x[layout.index(Quantity::p_demand, k)] = pd[demand[k]];
        x[layout.index(Quantity::q_demand, k)] = qd[demand[k]];
    }
    for (std::size_t i = 0; i < n; ++i) {
        x[layout.index(Quantity::v_magnitude, i)] = state.vm[i];
        x[layout.index(Quantity::v_angle, i)] = state.va[i];
    }
    for (std::size_t b = 0; b < n; ++b) {
        const auto gens = network.generators_at(b);
        if (gens.empty()) continue;
        const double p_bus = s[b].real() + pd[b];
        const double q_bus = s[b].imag() + qd[b];
        double q_range = 0.0;
        for (auto g : gens) q_range += network.generators[g].qg_max - network.generators[g].qg_min;
        for (auto g : gens) {
            const auto& gen = network.generators[g];
            double p = setpoints.p[g];
            if (b == slack) p = p_bus / static_cast<double>(gens.size());
            double q = q_bus / static_cast<double>(gens.size());
            if (gens.size() > 1 && q_range > 0.0) {
                // share reactive output proportionally to capability
                double q_lo_total = 0.0;
                for (auto h : gens) q_lo_total += network.generators[h].qg_min;
                q = gen.qg_min + (q_bus - q_lo_total) * (gen.qg_max - gen.qg_min) / q_range;
            }
            // A pinned bus sits on its limit up to solver tolerance; report the
            // limit itself so the exact box check sees it.
            if (at_limit[b] != 0) q = at_limit[b] > 0 ? gen.qg_max : gen.qg_min;
            x[layout.index(Quantity::p_gen, g)] = p;
            x[layout.index(Quantity::q_gen, g)] = q;
        }
    }
    result.sample = std::move(x);
    result.voltage = std::move(state);
    return result;
}

GeneratorSetpoints nominal_setpoints(const grid::NetworkCase& network) {
    GeneratorSetpoints sp;
    for (const auto& gen : network.generators) {
        sp.p.push_back(gen.pg_init);
        sp.vm.push_back(gen.vg);
    }
    return sp;
}

std::vector<double> nominal_pd(const grid::NetworkCase& network) {
    std::vector<double> out;
    for (const auto& bus : network.buses) out.push_back(bus.pd);
    return out;
}

std::vector<double> nominal_qd(const grid::NetworkCase& network) {
    std::vector<double> out;
    for (const auto& bus : network.buses) out.push_back(bus.qd);
    return out;
}

}  // namespace pfdiff::pf
