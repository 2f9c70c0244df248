#include "pfdiff/nn/layers.h"

#include <cmath>

#include "pfdiff/common/error.h"

namespace pfdiff::nn {

Dense Dense::create(ParamStore& params, Rng& rng, const std::string& name, Eigen::Index in, Eigen::Index out,
                    bool bias, Init init) {
    Dense d;
    d.in = in;
    d.out = out;
    d.has_bias = bias;
    d.weight = params.add(name + ".weight", out, in);
    if (bias) d.bias = params.add(name + ".bias", out, 1);
    if (init == Init::fan_in_uniform) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(in));
        auto& w = params[d.weight];
        for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = rng.uniform(-bound, bound);
        if (bias)
            for (Eigen::Index i = 0; i < out; ++i) params[d.bias](i, 0) = rng.uniform(-bound, bound);
    }
    return d;
}

Eigen::MatrixXd Dense::forward(const ParamStore& params, const Eigen::MatrixXd& x) const {
    if (x.rows() != in) throw DimensionError("dense layer expects " + std::to_string(in) + " inputs");
    Eigen::MatrixXd y = params[weight] * x;
    if (has_bias) y.colwise() += params[bias].col(0);
    return y;
}

void Dense::backward(const ParamStore& params, ParamStore& grads, const Eigen::MatrixXd& x, const Eigen::MatrixXd& dy,
                     Eigen::MatrixXd* dx) const {
    grads[weight].noalias() += dy * x.transpose();
    if (has_bias) grads[bias].col(0) += dy.rowwise().sum();
    if (dx) dx->noalias() = params[weight].transpose() * dy;
}

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

Eigen::MatrixXd silu(const Eigen::MatrixXd& x) {
    return x.unaryExpr([](double v) { return v * sigmoid(v); });
}

Eigen::MatrixXd silu_backward(const Eigen::MatrixXd& x, const Eigen::MatrixXd& dy) {
    return x.binaryExpr(dy, [](double v, double g) {
        const double s = sigmoid(v);
        return g * s * (1.0 + v * (1.0 - s));
    });
}

}  // namespace pfdiff::nn
