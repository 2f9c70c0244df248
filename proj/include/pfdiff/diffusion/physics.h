#pragma once

#include <Eigen/Dense>

#include "pfdiff/diffusion/noise_schedule.h"

namespace pfdiff::diffusion {

/// x_t = sqrt(abar_t) x_0 + sqrt(1 - abar_t) eps, for 1 <= t <= T.
Eigen::VectorXd forward_sample(const Eigen::VectorXd& x0, int t, const Eigen::VectorXd& eps,
                               const NoiseSchedule& schedule);

/// Mean of the reverse transition with eps_hat in place of the true noise:
/// (x_t - beta_t / sqrt(1 - abar_t) eps_hat) / sqrt(alpha_t).
Eigen::VectorXd posterior_mean(const Eigen::VectorXd& xt, int t, const Eigen::VectorXd& eps_hat,
                               const NoiseSchedule& schedule);
/// d posterior_mean / d eps_hat (a scalar multiple of the identity).
double posterior_mean_slope(int t, const NoiseSchedule& schedule);

/// Clean-sample estimate (x_t - sqrt(1 - abar_t) eps_hat) / sqrt(abar_t).
Eigen::VectorXd predict_x0(const Eigen::VectorXd& xt, int t, const Eigen::VectorXd& eps_hat,
                           const NoiseSchedule& schedule);
double predict_x0_slope(int t, const NoiseSchedule& schedule);

/// Inverse of predict_x0: the noise implied by a clean-sample estimate.
Eigen::VectorXd epsilon_from_x0(const Eigen::VectorXd& xt, int t, const Eigen::VectorXd& x0_hat,
                                const NoiseSchedule& schedule);

/// x_{t-1} = posterior_mean + sigma_t z; z is ignored at t = 1.
Eigen::VectorXd reverse_step(const Eigen::VectorXd& xt, int t, const Eigen::VectorXd& eps_hat,
                             const Eigen::VectorXd& z, const NoiseSchedule& schedule);

/// max(R - gamma, 0) and its derivative in R (0 at the kink).
double physics_hinge(double residual, double gamma);
double physics_hinge_slope(double residual, double gamma);

}  // namespace pfdiff::diffusion
