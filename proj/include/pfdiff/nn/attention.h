#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pfdiff/common/rng.h"
#include "pfdiff/nn/param_store.h"

namespace pfdiff::nn {

/// Single-head self-attention over a token view of a flat feature vector:
/// a width-W column is read as W/d tokens of d features (row-major), and the
/// attended tokens are projected and added back (residual).
class SelfAttention {
  public:
    struct Tape {
        Eigen::MatrixXd input;  ///< W x B
        std::vector<Eigen::MatrixXd> attn;  ///< per column, n x n softmax weights
        std::vector<Eigen::MatrixXd> q, k, v, o;
    };

    SelfAttention() = default;
    SelfAttention(ParamStore& params, Rng& rng, const std::string& name, Eigen::Index width, Eigen::Index token_dim);

    Eigen::Index width() const { return width_; }
    Eigen::MatrixXd forward(const ParamStore& params, const Eigen::MatrixXd& x, Tape* tape) const;
    void backward(const ParamStore& params, ParamStore& grads, const Tape& tape, const Eigen::MatrixXd& dy,
                  Eigen::MatrixXd& dx) const;

  private:
    Eigen::Index width_ = 0, token_dim_ = 0, tokens_ = 0;
    std::size_t wq_ = 0, wk_ = 0, wv_ = 0, wo_ = 0;
};

}  // namespace pfdiff::nn
