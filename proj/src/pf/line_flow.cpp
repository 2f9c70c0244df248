#include "pfdiff/pf/line_flow.h"

#include <algorithm>
#include <cmath>

#include "pfdiff/common/error.h"

namespace pfdiff::pf {

using grid::Complex;
using grid::Quantity;

LineFlowReport line_flow_check(std::span<const double> x, const grid::SampleLayout& layout,
                               const grid::AdmittanceMatrix& y, const grid::NetworkCase& network,
                               double tolerance) {
    if (x.size() != layout.dim()) throw DimensionError("sample dimension does not match layout");
    if (y.size() != network.bus_count() || layout.bus_count() != network.bus_count())
        throw DimensionError("admittance/layout do not match the case");
    const std::size_t vm = layout.offset(Quantity::v_magnitude);
    const std::size_t va = layout.offset(Quantity::v_angle);
    auto voltage = [&](std::size_t i) { return std::polar(1.0, x[va + i]) * x[vm + i]; };

    LineFlowReport report;
    report.flow.reserve(network.branches.size());
    for (const auto& br : network.branches) {
        const Complex vf = voltage(br.from);
        const Complex vt = voltage(br.to);
        const double from_end = std::abs(vf * (std::conj(vf) - std::conj(vt)) * std::conj(y(br.from, br.to)));
        const double to_end = std::abs(vt * (std::conj(vt) - std::conj(vf)) * std::conj(y(br.to, br.from)));
        const double flow = std::max(from_end, to_end);
        report.flow.push_back(flow);
        const double excess = br.s_max > 0.0 ? flow - br.s_max : 0.0;
        report.within_limit.push_back(excess <= tolerance);
        report.worst_violation = std::max(report.worst_violation, std::max(excess, 0.0));
    }
    return report;
}

}  // namespace pfdiff::pf
