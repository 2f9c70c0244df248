#pragma once

#include <array>
#include <span>

#include "pfdiff/grid/admittance.h"
#include "pfdiff/grid/layout.h"
#include "pfdiff/grid/network_case.h"

namespace pfdiff::pf {

/// Indices into ConstraintReport::verdicts: [C1]..[C6].
enum class Constraint { p_gen = 0, q_gen, v_magnitude, v_angle, power_balance, line_flow };

struct ConstraintVerdict {
    bool satisfied = true;
    double worst_violation = 0.0;  ///< >= 0
};

struct ConstraintTolerance {
    double equality = 1e-6;  ///< per-bus power balance mismatch
    double box = 0.0;        ///< [C1]-[C4]
    double line = 0.0;       ///< [C6]
};

struct ConstraintReport {
    std::array<ConstraintVerdict, 6> verdicts;

    const ConstraintVerdict& operator[](Constraint c) const { return verdicts[static_cast<std::size_t>(c)]; }
    bool all_satisfied() const;
};

ConstraintReport check_constraints(std::span<const double> physical, const grid::SampleLayout& layout,
                                   const grid::AdmittanceMatrix& admittance, const grid::NetworkCase& network,
                                   const ConstraintTolerance& tolerance = {});

}  // namespace pfdiff::pf
