#include "pfdiff/grid/admittance.h"

#include "pfdiff/common/error.h"

namespace pfdiff::grid {

AdmittanceMatrix::AdmittanceMatrix(Eigen::MatrixXcd dense) : dense_(std::move(dense)) {
    const auto n = static_cast<std::size_t>(dense_.rows());
    row_start_.assign(1, 0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (dense_(i, j) != Complex(0.0, 0.0) || i == j) {
                cols_.push_back(j);
                vals_.push_back(dense_(i, j));
            }
        }
        row_start_.push_back(cols_.size());
    }
}

void AdmittanceMatrix::multiply(std::span<const Complex> v, std::span<Complex> out) const {
    const std::size_t n = size();
    for (std::size_t i = 0; i < n; ++i) {
        Complex acc(0.0, 0.0);
        for (std::size_t k = row_start_[i]; k < row_start_[i + 1]; ++k) acc += vals_[k] * v[cols_[k]];
        out[i] = acc;
    }
}

AdmittanceMatrix build_admittance(const NetworkCase& network) {
    const std::size_t n = network.bus_count();
    Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(n, n);
    for (std::size_t k = 0; k < network.branches.size(); ++k) {
        const auto& br = network.branches[k];
        if (br.r == 0.0 && br.x == 0.0)
            throw ValidationError("branch " + std::to_string(k + 1) + " has zero series impedance");
        const Complex ys = 1.0 / Complex(br.r, br.x);
        const Complex charging(0.0, br.b / 2.0);
        const Complex tap = std::polar(br.tap, br.shift);
        const Complex ytt = ys + charging;
        y(br.from, br.from) += ytt / std::norm(tap);
        y(br.to, br.to) += ytt;
        y(br.from, br.to) += -ys / std::conj(tap);
        y(br.to, br.from) += -ys / tap;
    }
    for (std::size_t i = 0; i < n; ++i) y(i, i) += Complex(network.buses[i].gs, network.buses[i].bs);
    return AdmittanceMatrix(std::move(y));
}

}  // namespace pfdiff::grid
