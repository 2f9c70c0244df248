#pragma once

#include <string>

#include <Eigen/Dense>

#include "pfdiff/common/rng.h"
#include "pfdiff/nn/param_store.h"

namespace pfdiff::nn {

enum class Init { fan_in_uniform, zero };

/// Affine map y = W x + b on column batches.
struct Dense {
    std::size_t weight = 0;
    std::size_t bias = 0;
    bool has_bias = true;
    Eigen::Index in = 0;
    Eigen::Index out = 0;

    static Dense create(ParamStore& params, Rng& rng, const std::string& name, Eigen::Index in, Eigen::Index out,
                        bool bias = true, Init init = Init::fan_in_uniform);

    Eigen::MatrixXd forward(const ParamStore& params, const Eigen::MatrixXd& x) const;
    /// Accumulates dW, db into `grads`; writes dL/dx when `dx` is non-null.
    void backward(const ParamStore& params, ParamStore& grads, const Eigen::MatrixXd& x, const Eigen::MatrixXd& dy,
                  Eigen::MatrixXd* dx) const;
    std::size_t parameter_count() const { return static_cast<std::size_t>(in * out + (has_bias ? out : 0)); }
};

double sigmoid(double x);
/// SiLU x * sigmoid(x), elementwise.
Eigen::MatrixXd silu(const Eigen::MatrixXd& x);
/// Returns dy * silu'(x).
Eigen::MatrixXd silu_backward(const Eigen::MatrixXd& x, const Eigen::MatrixXd& dy);

}  // namespace pfdiff::nn
