#include "pfdiff/nn/attention.h"

#include <cmath>

#include "pfdiff/common/error.h"

namespace pfdiff::nn {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Token view (n x d) of one column.
Eigen::MatrixXd tokens_of(const Eigen::MatrixXd& x, Eigen::Index col, Eigen::Index n, Eigen::Index d) {
    return Eigen::Map<const RowMajor>(x.col(col).data(), n, d);
}

void store_tokens(Eigen::MatrixXd& x, Eigen::Index col, const Eigen::MatrixXd& tok) {
    Eigen::Map<RowMajor>(x.col(col).data(), tok.rows(), tok.cols()) = tok;
}

}  // namespace

SelfAttention::SelfAttention(ParamStore& params, Rng& rng, const std::string& name, Eigen::Index width,
                             Eigen::Index token_dim)
    : width_(width), token_dim_(token_dim) {
    if (token_dim <= 0 || width % token_dim != 0)
        throw ValidationError("attention width must be a multiple of the token size");
    tokens_ = width / token_dim;
    const double bound = 1.0 / std::sqrt(static_cast<double>(token_dim));
    auto init = [&](const std::string& suffix, double scale) {
        const auto idx = params.add(name + "." + suffix, token_dim, token_dim);
        auto& w = params[idx];
        for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = scale * rng.uniform(-bound, bound);
        return idx;
    };
    wq_ = init("query", 1.0);
    wk_ = init("key", 1.0);
    wv_ = init("value", 1.0);
    wo_ = init("output", 0.1);
}

Eigen::MatrixXd SelfAttention::forward(const ParamStore& params, const Eigen::MatrixXd& x, Tape* tape) const {
    if (x.rows() != width_) throw DimensionError("attention input has wrong width");
    const double scale = 1.0 / std::sqrt(static_cast<double>(token_dim_));
    Eigen::MatrixXd y = x;
    if (tape) {
        tape->input = x;
        tape->attn.resize(static_cast<std::size_t>(x.cols()));
        tape->q.resize(tape->attn.size());
        tape->k.resize(tape->attn.size());
        tape->v.resize(tape->attn.size());
        tape->o.resize(tape->attn.size());
    }
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
        const Eigen::MatrixXd tok = tokens_of(x, c, tokens_, token_dim_);
        Eigen::MatrixXd q = tok * params[wq_].transpose();
        Eigen::MatrixXd k = tok * params[wk_].transpose();
        Eigen::MatrixXd v = tok * params[wv_].transpose();
        Eigen::MatrixXd s = scale * q * k.transpose();
        for (Eigen::Index r = 0; r < s.rows(); ++r) {
            const double m = s.row(r).maxCoeff();
            s.row(r) = (s.row(r).array() - m).exp();
            s.row(r) /= s.row(r).sum();
        }
        Eigen::MatrixXd o = s * v;
        const Eigen::MatrixXd out = o * params[wo_].transpose();
        store_tokens(y, c, tokens_of(x, c, tokens_, token_dim_) + out);
        if (tape) {
            const auto i = static_cast<std::size_t>(c);
            tape->attn[i] = std::move(s);
            tape->q[i] = std::move(q);
            tape->k[i] = std::move(k);
            tape->v[i] = std::move(v);
            tape->o[i] = std::move(o);
        }
    }
    return y;
}

void SelfAttention::backward(const ParamStore& params, ParamStore& grads, const Tape& tape, const Eigen::MatrixXd& dy,
                             Eigen::MatrixXd& dx) const {
    const double scale = 1.0 / std::sqrt(static_cast<double>(token_dim_));
    dx = dy;
    for (Eigen::Index c = 0; c < dy.cols(); ++c) {
        const auto i = static_cast<std::size_t>(c);
        const Eigen::MatrixXd tok = tokens_of(tape.input, c, tokens_, token_dim_);
        const Eigen::MatrixXd d_out = tokens_of(dy, c, tokens_, token_dim_);
        const auto& a = tape.attn[i];
        grads[wo_].noalias() += d_out.transpose() * tape.o[i];
        const Eigen::MatrixXd d_o = d_out * params[wo_];
        const Eigen::MatrixXd d_a = d_o * tape.v[i].transpose();
        const Eigen::MatrixXd d_v = a.transpose() * d_o;
        Eigen::MatrixXd d_s = a.cwiseProduct(d_a);
        const Eigen::VectorXd row = d_s.rowwise().sum();
        d_s -= a.cwiseProduct(row.replicate(1, a.cols()));
        d_s *= scale;
        const Eigen::MatrixXd d_q = d_s * tape.k[i];
        const Eigen::MatrixXd d_k = d_s.transpose() * tape.q[i];
        grads[wq_].noalias() += d_q.transpose() * tok;
        grads[wk_].noalias() += d_k.transpose() * tok;
        grads[wv_].noalias() += d_v.transpose() * tok;
        const Eigen::MatrixXd d_tok = d_q * params[wq_] + d_k * params[wk_] + d_v * params[wv_];
        store_tokens(dx, c, tokens_of(dx, c, tokens_, token_dim_) + d_tok);
    }
}

}  // namespace pfdiff::nn
