#include "pfdiff/nn/denoiser.h"

#include "pfdiff/common/error.h"
#include "pfdiff/nn/time_embedding.h"

namespace pfdiff::nn {

nlohmann::json DenoiserConfig::to_json() const {
    return {{"dim", dim},
            {"widths", widths},
            {"time_width", time_width},
            {"attention", attention},
            {"token_dim", token_dim},
            {"prediction", prediction == Prediction::epsilon ? "epsilon" : "x0"}};
}

DenoiserConfig DenoiserConfig::from_json(const nlohmann::json& j) {
    DenoiserConfig c;
    c.dim = j.at("dim").get<Eigen::Index>();
    c.widths = j.at("widths").get<std::vector<Eigen::Index>>();
    c.time_width = j.value("time_width", c.time_width);
    c.attention = j.value("attention", c.attention);
    c.token_dim = j.value("token_dim", c.token_dim);
    const auto p = j.value("prediction", std::string("epsilon"));
    if (p == "epsilon")
        c.prediction = Prediction::epsilon;
    else if (p == "x0")
        c.prediction = Prediction::x0;
    else
        throw ValidationError("unknown prediction mode " + p);
    c.validate();
    return c;
}

void DenoiserConfig::validate() const {
    if (dim <= 0) throw ValidationError("denoiser input dimension must be positive");
    if (widths.empty() || widths.size() % 2 == 0) throw ValidationError("denoiser needs an odd number of hidden layers");
    for (auto w : widths)
        if (w <= 0) throw ValidationError("hidden widths must be positive");
    if (time_width < 2 || time_width % 2) throw ValidationError("time width must be even");
    if (attention && (token_dim <= 0 || widths[widths.size() / 2] % token_dim))
        throw ValidationError("bottleneck width must be a multiple of the attention token size");
}

Denoiser::Denoiser(DenoiserConfig config, Rng& rng) : config_(std::move(config)) {
    config_.validate();
    const auto& w = config_.widths;
    mid_ = w.size() / 2;
    time_dense_ = Dense::create(params_, rng, "time.dense", config_.time_width, config_.time_width);
    for (std::size_t k = 0; k < w.size(); ++k) {
        Eigen::Index in = k == 0 ? config_.dim : w[k - 1];
        if (k > mid_) in += w[w.size() - 1 - k];
        layers_.push_back(Dense::create(params_, rng, "layer" + std::to_string(k), in, w[k]));
        time_proj_.push_back(
            Dense::create(params_, rng, "layer" + std::to_string(k) + ".time", config_.time_width, w[k], false));
    }
    if (config_.attention) attention_ = SelfAttention(params_, rng, "attention", w[mid_], config_.token_dim);
    output_ = Dense::create(params_, rng, "output", w.back(), config_.dim, true, Init::zero);
}

Eigen::MatrixXd Denoiser::forward(const Eigen::MatrixXd& x, std::span<const int> steps, Tape* tape) const {
    if (x.rows() != config_.dim) throw DimensionError("denoiser input has wrong dimension");
    if (static_cast<std::size_t>(x.cols()) != steps.size()) throw DimensionError("one step index per column required");
    Tape local;
    Tape& tp = tape ? *tape : local;
    tp.time_features = time_embedding(steps, config_.time_width);
    tp.time_pre = time_dense_.forward(params_, tp.time_features);
    tp.time_hidden = silu(tp.time_pre);
    const std::size_t L = layers_.size();
    tp.inputs.resize(L);
    tp.pre.resize(L);
    tp.hidden.resize(L);
    for (std::size_t k = 0; k < L; ++k) {
        const Eigen::MatrixXd& prev = k == 0 ? x : tp.hidden[k - 1];
        const auto s = skip_source(k);
        if (s >= 0) {
            const auto& skip = tp.hidden[static_cast<std::size_t>(s)];
            tp.inputs[k].resize(prev.rows() + skip.rows(), prev.cols());
            tp.inputs[k] << prev, skip;
        } else {
            tp.inputs[k] = prev;
        }
        tp.pre[k] = layers_[k].forward(params_, tp.inputs[k]);
        tp.pre[k].noalias() += params_[time_proj_[k].weight] * tp.time_hidden;
        tp.hidden[k] = silu(tp.pre[k]);
        if (k == mid_ && config_.attention) {
            tp.bottleneck = tp.hidden[k];
            tp.hidden[k] = attention_.forward(params_, tp.bottleneck, &tp.attention);
        }
    }
    tp.out_pre = output_.forward(params_, tp.hidden.back());
    if (config_.prediction == Prediction::x0) return tp.out_pre.unaryExpr([](double v) { return sigmoid(v); });
    return tp.out_pre;
}

void Denoiser::backward(const Tape& tp, const Eigen::MatrixXd& d_out, ParamStore& grads) const {
    if (!grads.same_shapes(params_)) throw DimensionError("gradient store does not match denoiser parameters");
    Eigen::MatrixXd d_pre_out = d_out;
    if (config_.prediction == Prediction::x0)
        d_pre_out = d_out.binaryExpr(tp.out_pre, [](double g, double v) {
            const double s = sigmoid(v);
            return g * s * (1.0 - s);
        });
    const std::size_t L = layers_.size();
    std::vector<Eigen::MatrixXd> d_hidden(L);
    for (std::size_t k = 0; k < L; ++k) d_hidden[k] = Eigen::MatrixXd::Zero(tp.hidden[k].rows(), tp.hidden[k].cols());
    Eigen::MatrixXd d_in;
    output_.backward(params_, grads, tp.hidden.back(), d_pre_out, &d_in);
    d_hidden[L - 1] += d_in;
    Eigen::MatrixXd d_time = Eigen::MatrixXd::Zero(tp.time_hidden.rows(), tp.time_hidden.cols());
    for (std::size_t k = L; k-- > 0;) {
        Eigen::MatrixXd d_act = d_hidden[k];
        const Eigen::MatrixXd* act_in = &tp.pre[k];
        if (k == mid_ && config_.attention) {
            Eigen::MatrixXd d_b;
            attention_.backward(params_, grads, tp.attention, d_act, d_b);
            d_act = std::move(d_b);
        }
        const Eigen::MatrixXd d_pre = silu_backward(*act_in, d_act);
        grads[time_proj_[k].weight].noalias() += d_pre * tp.time_hidden.transpose();
        d_time.noalias() += params_[time_proj_[k].weight].transpose() * d_pre;
        if (k == 0) {
            layers_[k].backward(params_, grads, tp.inputs[k], d_pre, nullptr);
            continue;
        }
        layers_[k].backward(params_, grads, tp.inputs[k], d_pre, &d_in);
        const auto prev_rows = tp.hidden[k - 1].rows();
        d_hidden[k - 1] += d_in.topRows(prev_rows);
        const auto s = skip_source(k);
        if (s >= 0) d_hidden[static_cast<std::size_t>(s)] += d_in.bottomRows(d_in.rows() - prev_rows);
    }
    time_dense_.backward(params_, grads, tp.time_features, silu_backward(tp.time_pre, d_time), nullptr);
}

}  // namespace pfdiff::nn
