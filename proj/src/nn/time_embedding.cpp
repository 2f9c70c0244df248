#include "pfdiff/nn/time_embedding.h"

#include <cmath>

#include "pfdiff/common/error.h"

namespace pfdiff::nn {

Eigen::VectorXd time_embedding(int t, Eigen::Index width) {
    if (width < 2 || width % 2 != 0) throw ValidationError("time embedding width must be even and >= 2");
    const Eigen::Index half = width / 2;
    Eigen::VectorXd e(width);
    for (Eigen::Index k = 0; k < half; ++k) {
        const double freq = std::exp(-std::log(10000.0) * static_cast<double>(k) / static_cast<double>(half));
        e[k] = std::sin(t * freq);
        e[half + k] = std::cos(t * freq);
    }
    return e;
}

Eigen::MatrixXd time_embedding(std::span<const int> steps, Eigen::Index width) {
    Eigen::MatrixXd out(width, static_cast<Eigen::Index>(steps.size()));
    for (std::size_t j = 0; j < steps.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = time_embedding(steps[j], width);
    return out;
}

}  // namespace pfdiff::nn
