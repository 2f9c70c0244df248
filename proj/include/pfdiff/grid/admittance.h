#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "pfdiff/grid/network_case.h"

namespace pfdiff::grid {

using Complex = std::complex<double>;

/// Nodal admittance matrix in per-unit, indexed by NetworkCase bus order.
/// Holds a dense copy for inspection and a compressed row view for the hot
/// residual and Jacobian loops.
class AdmittanceMatrix {
  public:
    AdmittanceMatrix() = default;
    explicit AdmittanceMatrix(Eigen::MatrixXcd dense);

    std::size_t size() const { return static_cast<std::size_t>(dense_.rows()); }
    Complex operator()(std::size_t i, std::size_t j) const { return dense_(i, j); }
    const Eigen::MatrixXcd& dense() const { return dense_; }

    /// Structural nonzeros of row i: columns and values.
    std::span<const std::size_t> row_columns(std::size_t i) const {
        return {cols_.data() + row_start_[i], row_start_[i + 1] - row_start_[i]};
    }
    std::span<const Complex> row_values(std::size_t i) const {
        return {vals_.data() + row_start_[i], row_start_[i + 1] - row_start_[i]};
    }
    std::size_t nonzeros() const { return vals_.size(); }

    /// out = Y * v
    void multiply(std::span<const Complex> v, std::span<Complex> out) const;

  private:
    Eigen::MatrixXcd dense_;
    std::vector<std::size_t> row_start_{0};
    std::vector<std::size_t> cols_;
    std::vector<Complex> vals_;
};

/// Standard pi-model construction with off-nominal taps and phase shifters.
/// Throws ValidationError for a branch with r = x = 0.
AdmittanceMatrix build_admittance(const NetworkCase& network);

}  // namespace pfdiff::grid
