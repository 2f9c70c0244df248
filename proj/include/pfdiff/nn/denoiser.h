#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "pfdiff/common/rng.h"
#include "pfdiff/nn/attention.h"
#include "pfdiff/nn/layers.h"
#include "pfdiff/nn/param_store.h"

namespace pfdiff::nn {

/// What the network output means. `epsilon` is an unbounded noise estimate;
/// `x0` is a sigmoid-bounded estimate of the clean sample.
enum class Prediction { epsilon, x0 };

struct DenoiserConfig {
    Eigen::Index dim = 0;
    /// Hidden widths, down path then up path; the count must be odd. Up
    /// layer k also receives the activation of down layer (count - 1 - k).
    std::vector<Eigen::Index> widths{256, 128, 64, 32, 64, 128, 256};
    Eigen::Index time_width = 64;
    bool attention = true;
    Eigen::Index token_dim = 4;
    /// x0 ends in a sigmoid rescaled to the unit box; epsilon is a linear head.
    Prediction prediction = Prediction::x0;

    nlohmann::json to_json() const;
    static DenoiserConfig from_json(const nlohmann::json& j);
    void validate() const;
};

/// Encoder-decoder MLP over flat samples with concatenated skips, additive
/// per-layer time conditioning and an optional bottleneck self-attention.
/// Columns are samples.
class Denoiser {
  public:
    struct Tape {
        Eigen::MatrixXd time_features, time_pre, time_hidden;
        std::vector<Eigen::MatrixXd> inputs, pre, hidden;  ///< per hidden layer
        Eigen::MatrixXd bottleneck;                          ///< activation before attention
        SelfAttention::Tape attention;
        Eigen::MatrixXd out_pre;
    };

    Denoiser() = default;
    Denoiser(DenoiserConfig config, Rng& rng);

    const DenoiserConfig& config() const { return config_; }
    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }
    std::size_t parameter_count() const { return params_.scalar_count(); }

    /// x is D x B on the unit scale; `steps` holds one t in [1, T] per column.
    Eigen::MatrixXd forward(const Eigen::MatrixXd& x, std::span<const int> steps, Tape* tape = nullptr) const;
    /// Accumulates parameter gradients of a loss with dL/d(output) = d_out.
    void backward(const Tape& tape, const Eigen::MatrixXd& d_out, ParamStore& grads) const;

  private:
    DenoiserConfig config_;
    ParamStore params_;
    Dense time_dense_;
    std::vector<Dense> layers_;
    std::vector<Dense> time_proj_;
    SelfAttention attention_;
    Dense output_;
    std::size_t mid_ = 0;

    std::ptrdiff_t skip_source(std::size_t k) const {
        return k > mid_ ? static_cast<std::ptrdiff_t>(layers_.size() - 1 - k) : -1;
    }
};

}  // namespace pfdiff::nn
