#include "pfdiff/nn/schedule_net.h"

#include <cmath>

#include "pfdiff/common/error.h"

namespace pfdiff::nn {

nlohmann::json ScheduleNetConfig::to_json() const { return {{"dim", dim}, {"hidden", hidden}, {"steps", steps}}; }

ScheduleNetConfig ScheduleNetConfig::from_json(const nlohmann::json& j) {
    ScheduleNetConfig c;
    c.dim = j.at("dim").get<Eigen::Index>();
    c.hidden = j.at("hidden").get<std::vector<Eigen::Index>>();
    c.steps = j.at("steps").get<Eigen::Index>();
    return c;
}

ScheduleNet::ScheduleNet(ScheduleNetConfig config, Rng& rng, std::span<const double> initial_alpha)
    : config_(std::move(config)) {
    if (config_.dim <= 0 || config_.steps <= 0) throw ValidationError("schedule network needs positive sizes");
    Eigen::Index in = config_.dim;
    for (std::size_t k = 0; k < config_.hidden.size(); ++k) {
        layers_.push_back(Dense::create(params_, rng, "hidden" + std::to_string(k), in, config_.hidden[k]));
        in = config_.hidden[k];
    }
    layers_.push_back(Dense::create(params_, rng, "logits", in, config_.steps));
    auto& last = layers_.back();
    if (!initial_alpha.empty()) {
        if (static_cast<Eigen::Index>(initial_alpha.size()) != config_.steps)
            throw DimensionError("initial schedule length must equal T");
        // Small output weights keep the starting schedule close to the seed.
        params_[last.weight] *= 0.1;
        for (Eigen::Index t = 0; t < config_.steps; ++t) {
            const double a = initial_alpha[static_cast<std::size_t>(t)];
            if (!(a > 0.0 && a < 1.0)) throw ValidationError("initial alpha values must lie in (0, 1)");
            params_[last.bias](t, 0) = std::log(a / (1.0 - a));
        }
    }
}

Eigen::MatrixXd ScheduleNet::alpha_bar_from_logits(const Eigen::MatrixXd& logits) {
    Eigen::MatrixXd out(logits.rows(), logits.cols());
    for (Eigen::Index c = 0; c < logits.cols(); ++c) {
        double log_sum = 0.0;
        for (Eigen::Index t = 0; t < logits.rows(); ++t) {
            const double a = logits(t, c);
            // log sigmoid(a) = -softplus(-a)
            log_sum -= a >= 0.0 ? std::log1p(std::exp(-a)) : -a + std::log1p(std::exp(a));
            out(t, c) = std::exp(log_sum);
        }
    }
    return out;
}

Eigen::MatrixXd ScheduleNet::logits_gradient(const Eigen::MatrixXd& logits, const Eigen::MatrixXd& alpha_bar,
                                             const Eigen::MatrixXd& d_alpha_bar) {
    Eigen::MatrixXd d(logits.rows(), logits.cols());
    for (Eigen::Index c = 0; c < logits.cols(); ++c) {
        double tail = 0.0;
        for (Eigen::Index t = logits.rows(); t-- > 0;) {
            tail += d_alpha_bar(t, c) * alpha_bar(t, c);
            d(t, c) = (1.0 - sigmoid(logits(t, c))) * tail;
        }
    }
    return d;
}

Eigen::MatrixXd ScheduleNet::forward(const Eigen::MatrixXd& x0, Tape* tape) const {
    if (x0.rows() != config_.dim) throw DimensionError("schedule network input has wrong dimension");
    Tape local;
    Tape& tp = tape ? *tape : local;
    tp.inputs.resize(layers_.size());
    tp.pre.resize(layers_.size());
    Eigen::MatrixXd h = x0;
    for (std::size_t k = 0; k < layers_.size(); ++k) {
        tp.inputs[k] = h;
        tp.pre[k] = layers_[k].forward(params_, h);
        if (k + 1 < layers_.size()) h = silu(tp.pre[k]);
    }
    tp.logits = tp.pre.back();
    tp.alpha_bar = alpha_bar_from_logits(tp.logits);
    return tp.alpha_bar;
}

void ScheduleNet::backward(const Tape& tp, const Eigen::MatrixXd& d_alpha_bar, ParamStore& grads) const {
    if (!grads.same_shapes(params_)) throw DimensionError("gradient store does not match schedule parameters");
    Eigen::MatrixXd d = logits_gradient(tp.logits, tp.alpha_bar, d_alpha_bar);
    for (std::size_t k = layers_.size(); k-- > 0;) {
        if (k + 1 < layers_.size()) d = silu_backward(tp.pre[k], d);
        Eigen::MatrixXd d_in;
        layers_[k].backward(params_, grads, tp.inputs[k], d, k > 0 ? &d_in : nullptr);
        d = std::move(d_in);
    }
}

}  // namespace pfdiff::nn
