#pragma once

#include <span>
#include <vector>

#include "pfdiff/grid/admittance.h"
#include "pfdiff/grid/layout.h"
#include "pfdiff/grid/normalization.h"

namespace pfdiff::pf {

struct ImbalanceResult {
    std::vector<double> bus_mismatch;  ///< |S_G - S_D - V conj(Y V)| per bus (p.u.)
    double mean = 0.0;                 ///< R(x)
};

/// Power-balance residual R(x): the mean over buses of the complex
/// mismatch magnitude. Samples are physical (p.u. / rad) flat vectors.
class ImbalanceEvaluator {
  public:
    ImbalanceEvaluator(grid::SampleLayout layout, grid::AdmittanceMatrix admittance);

    const grid::SampleLayout& layout() const { return layout_; }
    const grid::AdmittanceMatrix& admittance() const { return y_; }

    ImbalanceResult evaluate(std::span<const double> physical) const;
    double residual(std::span<const double> physical) const;
    /// Returns R and writes dR/dx into `gradient` (same length as the sample).
    /// At buses with exactly zero mismatch the zero subgradient is used.
    double residual_with_gradient(std::span<const double> physical, std::span<double> gradient) const;

  private:
    grid::SampleLayout layout_;
    grid::AdmittanceMatrix y_;
};

ImbalanceResult residual_imbalance(std::span<const double> physical, const grid::SampleLayout& layout,
                                   const grid::AdmittanceMatrix& admittance);

/// R evaluated on unit-scale vectors: denormalize (no clamping), then R.
/// Gradients are returned with respect to the unit-scale input.
class UnitImbalance {
  public:
    UnitImbalance(const ImbalanceEvaluator& evaluator, const grid::NormalizationBounds& bounds);

    std::size_t dim() const { return bounds_->dim(); }
    const grid::NormalizationBounds& bounds() const { return *bounds_; }
    const ImbalanceEvaluator& evaluator() const { return *evaluator_; }

    double value(std::span<const double> unit) const;
    double value_with_gradient(std::span<const double> unit, std::span<double> gradient) const;

  private:
    const ImbalanceEvaluator* evaluator_;
    const grid::NormalizationBounds* bounds_;
};

}  // namespace pfdiff::pf
