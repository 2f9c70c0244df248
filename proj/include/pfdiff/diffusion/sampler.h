#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "pfdiff/diffusion/noise_schedule.h"
#include "pfdiff/nn/denoiser.h"
#include "pfdiff/pf/imbalance.h"

namespace pfdiff::diffusion {

struct SamplerConfig {
    std::size_t n = 500;
    std::uint64_t seed = 0;
    std::size_t workers = 1;
    /// Chains advanced together; fixed so results do not depend on workers.
    std::size_t block = 64;
    bool record_trace = true;
};

struct SampleResult {
    Eigen::MatrixXd unit;      ///< D x n, clamped into [0, 1]
    Eigen::MatrixXd physical;  ///< D x n, denormalized and inside the bounds box
    /// trace[t] for t = 0..T: mean over chains of R at step t. Steps t >= 1 use
    /// the unclamped state; t = 0 uses the delivered samples.
    std::vector<double> trace;
};

/// Noise estimate for a batch, converting x0-mode outputs when needed.
Eigen::MatrixXd predict_noise(const nn::Denoiser& model, const Eigen::MatrixXd& xt, int t,
                              const NoiseSchedule& schedule);

/// Ancestral sampling from x_T ~ N(0, I). Chain j draws all of its noise
/// from its own stream (seed, "sampling", j).
SampleResult sample(const nn::Denoiser& model, const NoiseSchedule& schedule, const pf::UnitImbalance& physics,
                    const SamplerConfig& config);

}  // namespace pfdiff::diffusion
