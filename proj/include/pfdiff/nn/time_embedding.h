#pragma once

#include <span>

#include <Eigen/Dense>

namespace pfdiff::nn {

/// Sinusoidal features of a diffusion step: width/2 sines followed by
/// width/2 cosines at geometric frequencies 10000^(-k/(width/2)).
Eigen::VectorXd time_embedding(int t, Eigen::Index width);
/// One column per entry of `steps`.
Eigen::MatrixXd time_embedding(std::span<const int> steps, Eigen::Index width);

}  // namespace pfdiff::nn
