#include "pfdiff/pf/constraints.h"

#include <algorithm>

#include "pfdiff/common/error.h"
#include "pfdiff/pf/imbalance.h"
#include "pfdiff/pf/line_flow.h"

namespace pfdiff::pf {

using grid::Quantity;

bool ConstraintReport::all_satisfied() const {
    return std::all_of(verdicts.begin(), verdicts.end(), [](const auto& v) { return v.satisfied; });
}

namespace {

void box(ConstraintVerdict& verdict, double value, double lo, double hi, double tolerance) {
    const double excess = std::max({lo - value, value - hi, 0.0});
    verdict.worst_violation = std::max(verdict.worst_violation, excess);
    if (excess > tolerance) verdict.satisfied = false;
}

}  // namespace

ConstraintReport check_constraints(std::span<const double> x, const grid::SampleLayout& layout,
                                   const grid::AdmittanceMatrix& admittance, const grid::NetworkCase& network,
                                   const ConstraintTolerance& tol) {
    if (x.size() != layout.dim()) throw DimensionError("sample dimension does not match layout");
    ConstraintReport report;
    auto& c1 = report.verdicts[0];
    auto& c2 = report.verdicts[1];
    auto& c3 = report.verdicts[2];
    auto& c4 = report.verdicts[3];
    auto& c5 = report.verdicts[4];
    auto& c6 = report.verdicts[5];
    for (std::size_t g = 0; g < network.generators.size(); ++g) {
        const auto& gen = network.generators[g];
        box(c1, x[layout.index(Quantity::p_gen, g)], gen.pg_min, gen.pg_max, tol.box);
        box(c2, x[layout.index(Quantity::q_gen, g)], gen.qg_min, gen.qg_max, tol.box);
    }
    for (std::size_t i = 0; i < network.bus_count(); ++i) {
        const auto& bus = network.buses[i];
        box(c3, x[layout.index(Quantity::v_magnitude, i)], bus.vm_min, bus.vm_max, tol.box);
        box(c4, x[layout.index(Quantity::v_angle, i)], bus.va_min, bus.va_max, tol.box);
    }
    const auto balance = residual_imbalance(x, layout, admittance);
    c5.worst_violation = *std::max_element(balance.bus_mismatch.begin(), balance.bus_mismatch.end());
    c5.satisfied = c5.worst_violation <= tol.equality;
    const auto flows = line_flow_check(x, layout, admittance, network, tol.line);
    c6.worst_violation = flows.worst_violation;
    c6.satisfied = flows.worst_violation <= tol.line;
    return report;
}

}  // namespace pfdiff::pf
