#pragma once

#include <vector>

#include <Eigen/Dense>

#include "pfdiff/diffusion/noise_schedule.h"
#include "pfdiff/nn/schedule_net.h"
#include "pfdiff/pf/imbalance.h"

namespace pfdiff::schedule {

struct AuxLossValue {
    double loss = 0.0;
    std::vector<double> mean_residual;  ///< per t = 1..T (index t - 1), mean over the batch
};

/// Mismatch between forward-process imbalance and the linear budget:
/// mean over the batch of sum_t (R(sqrt(abar_t) x0 + sqrt(1 - abar_t) eps) - gamma_t)^2.
/// Each column of `eps` is reused for every t.
class AuxLoss {
  public:
    AuxLoss(const pf::UnitImbalance& physics, diffusion::ImbalanceBound bound, std::size_t workers = 1);

    /// alpha_bar is T x B, x0 and eps are D x B. Writes dL/d alpha_bar when given.
    AuxLossValue evaluate(const Eigen::MatrixXd& alpha_bar, const Eigen::MatrixXd& x0, const Eigen::MatrixXd& eps,
                          Eigen::MatrixXd* d_alpha_bar = nullptr) const;

    const diffusion::ImbalanceBound& bound() const { return bound_; }

  private:
    const pf::UnitImbalance* physics_;
    diffusion::ImbalanceBound bound_;
    std::size_t workers_;
};

/// Loss of the network's own schedules; accumulates parameter gradients when `grads` is given.
AuxLossValue aux_loss(const nn::ScheduleNet& net, const Eigen::MatrixXd& x0, const Eigen::MatrixXd& eps,
                      const AuxLoss& loss, nn::ParamStore* grads = nullptr);

}  // namespace pfdiff::schedule
