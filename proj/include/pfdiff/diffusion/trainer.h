#pragma once

#include <cstdint>
#include <functional>
#include <span>

#include <Eigen/Dense>
#include <json.hpp>

#include "pfdiff/common/rng.h"
#include "pfdiff/diffusion/noise_schedule.h"
#include "pfdiff/nn/adam.h"
#include "pfdiff/nn/denoiser.h"
#include "pfdiff/pf/imbalance.h"

namespace pfdiff::diffusion {

/// Where the physics hinge is evaluated during training.
enum class PhysicsAttach {
    posterior_mean,  ///< one-step denoised mean of x_{t-1} against gamma_{t-1}
    x0_estimate,     ///< clean-sample estimate against gamma_0 = 0
};

struct TrainingConfig {
    double eta = 1.0;
    std::size_t batch_size = 1024;
    std::size_t steps = 2000;
    PhysicsAttach attach = PhysicsAttach::posterior_mean;
    nn::AdamConfig adam{2e-4, 0.9, 0.999, 1e-8};
    std::size_t workers = 1;
    std::size_t log_every = 50;

    nlohmann::json to_json() const;
    static TrainingConfig from_json(const nlohmann::json& j);
};

struct StepLosses {
    double ddpm = 0.0;     ///< mean over the batch of |eps - eps_hat|^2
    double physics = 0.0;  ///< mean over batch of the hinge
    double total = 0.0;    ///< ddpm + eta * physics
};

/// Physics-informed DDPM objective and optimizer loop for one denoiser.
class DdpmTrainer {
  public:
    /// `physics` may be null only when eta is 0.
    DdpmTrainer(nn::Denoiser& model, NoiseSchedule schedule, ImbalanceBound bound, const pf::UnitImbalance* physics,
                TrainingConfig config);

    /// Loss for fixed steps and noise; accumulates parameter gradients into
    /// `grads` when given. Does not touch the optimizer.
    StepLosses compute(const Eigen::MatrixXd& x0, std::span<const int> steps, const Eigen::MatrixXd& eps,
                       nn::ParamStore* grads) const;

    /// Draws t ~ U{1..T} and eps ~ N(0, I) per column, then applies one
    /// optimizer step. Throws NumericError on a non-finite loss.
    StepLosses step(const Eigen::MatrixXd& x0, Rng& rng);

    /// Runs `count` steps on minibatches drawn with replacement from the
    /// columns of `data`; calls `log` every config.log_every steps.
    void train(const Eigen::MatrixXd& data, Rng& rng, std::size_t count,
               const std::function<void(std::int64_t, const StepLosses&)>& log = {});

    nn::Adam& optimizer() { return adam_; }
    const nn::Adam& optimizer() const { return adam_; }
    const TrainingConfig& config() const { return config_; }
    const NoiseSchedule& schedule() const { return schedule_; }
    const ImbalanceBound& bound() const { return bound_; }

  private:
    nn::Denoiser* model_;
    NoiseSchedule schedule_;
    ImbalanceBound bound_;
    const pf::UnitImbalance* physics_;
    TrainingConfig config_;
    nn::Adam adam_;
    nn::ParamStore grads_;
};

}  // namespace pfdiff::diffusion
