#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "pfdiff/common/rng.h"
#include "pfdiff/nn/layers.h"
#include "pfdiff/nn/param_store.h"

namespace pfdiff::nn {

struct ScheduleNetConfig {
    Eigen::Index dim = 0;
    std::vector<Eigen::Index> hidden{512, 256};
    Eigen::Index steps = 200;

    nlohmann::json to_json() const;
    static ScheduleNetConfig from_json(const nlohmann::json& j);
};

/// Maps a clean sample to T logits a_t and the schedule
/// alpha_bar_t = prod_{tau <= t} sigmoid(a_tau), strictly decreasing in (0, 1).
class ScheduleNet {
  public:
    struct Tape {
        std::vector<Eigen::MatrixXd> inputs, pre;
        Eigen::MatrixXd logits;
        Eigen::MatrixXd alpha_bar;
    };

    ScheduleNet() = default;
    /// `initial_alpha` (length T, values in (0,1)) seeds the output bias with
    /// logit(alpha_t) so training starts near that schedule; empty means zero bias.
    ScheduleNet(ScheduleNetConfig config, Rng& rng, std::span<const double> initial_alpha = {});

    const ScheduleNetConfig& config() const { return config_; }
    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }
    std::size_t parameter_count() const { return params_.scalar_count(); }

    /// x0 is D x B; returns T x B alpha_bar.
    Eigen::MatrixXd forward(const Eigen::MatrixXd& x0, Tape* tape = nullptr) const;
    void backward(const Tape& tape, const Eigen::MatrixXd& d_alpha_bar, ParamStore& grads) const;

    /// alpha_bar from logits, computed in log space.
    static Eigen::MatrixXd alpha_bar_from_logits(const Eigen::MatrixXd& logits);
    /// dL/d logits given dL/d alpha_bar.
    static Eigen::MatrixXd logits_gradient(const Eigen::MatrixXd& logits, const Eigen::MatrixXd& alpha_bar,
                                           const Eigen::MatrixXd& d_alpha_bar);

  private:
    ScheduleNetConfig config_;
    ParamStore params_;
    std::vector<Dense> layers_;  ///< hidden layers then the output layer
};

}  // namespace pfdiff::nn
