#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "pfdiff/diffusion/noise_schedule.h"
#include "pfdiff/pf/imbalance.h"

namespace pfdiff::schedule {

/// Monte Carlo mean of R(x_t) on forward samples of the data, t = 0..T.
/// Step t draws data columns and noise from the stream (seed, "curve", t).
std::vector<double> forward_imbalance_curve(const Eigen::MatrixXd& unit_data, const diffusion::NoiseSchedule& schedule,
                                            const pf::UnitImbalance& physics, std::size_t draws_per_t,
                                            std::uint64_t seed, std::size_t workers = 1);

/// Mean R of denormalized standard-normal vectors: the terminal imbalance
/// of pure noise under the given bounds.
double measure_noise_imbalance(const pf::UnitImbalance& physics, std::size_t draws, std::uint64_t seed);

}  // namespace pfdiff::schedule
