#pragma once

#include <span>
#include <vector>

#include "pfdiff/grid/admittance.h"
#include "pfdiff/grid/layout.h"
#include "pfdiff/grid/network_case.h"

namespace pfdiff::pf {

struct LineFlowReport {
    /// max over both ends of |V_i (V_i* - V_j*) Y_ij*|, per branch (p.u.)
    std::vector<double> flow;
    /// flow <= S_max (+ tolerance); always true for unrated branches
    std::vector<bool> within_limit;
    double worst_violation = 0.0;
};

LineFlowReport line_flow_check(std::span<const double> physical, const grid::SampleLayout& layout,
                               const grid::AdmittanceMatrix& admittance, const grid::NetworkCase& network,
                               double tolerance = 0.0);

}  // namespace pfdiff::pf
