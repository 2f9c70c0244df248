#pragma once

#include <cstdint>

#include <json.hpp>

#include "pfdiff/nn/param_store.h"

namespace pfdiff::nn {

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    nlohmann::json to_json() const;
    static AdamConfig from_json(const nlohmann::json& j);
};

/// Adaptive-moment optimizer with bias correction.
class Adam {
  public:
    Adam() = default;
    Adam(const ParamStore& params, AdamConfig config);

    /// Applies one update. Throws NumericError, leaving parameters untouched,
    /// when any gradient is not finite.
    void step(ParamStore& params, const ParamStore& grads);

    const AdamConfig& config() const { return config_; }
    void set_learning_rate(double lr) { config_.learning_rate = lr; }
    std::int64_t steps() const { return steps_; }
    ParamStore& first_moment() { return m_; }
    ParamStore& second_moment() { return v_; }
    const ParamStore& first_moment() const { return m_; }
    const ParamStore& second_moment() const { return v_; }
    void set_steps(std::int64_t s) { steps_ = s; }

  private:
    AdamConfig config_;
    ParamStore m_, v_;
    std::int64_t steps_ = 0;
};

}  // namespace pfdiff::nn
