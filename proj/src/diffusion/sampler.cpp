#include "pfdiff/diffusion/sampler.h"

#include <algorithm>
#include <cmath>

#include "pfdiff/common/error.h"
#include "pfdiff/common/parallel.h"
#include "pfdiff/common/rng.h"

namespace pfdiff::diffusion {

Eigen::MatrixXd predict_noise(const nn::Denoiser& model, const Eigen::MatrixXd& xt, int t,
                              const NoiseSchedule& schedule) {
    const std::vector<int> steps(static_cast<std::size_t>(xt.cols()), t);
    Eigen::MatrixXd out = model.forward(xt, steps);
    if (model.config().prediction == nn::Prediction::x0) {
        const double a = schedule.alpha_bar_at(t);
        out = (xt - std::sqrt(a) * out) / std::sqrt(1.0 - a);
    }
    return out;
}

SampleResult sample(const nn::Denoiser& model, const NoiseSchedule& schedule, const pf::UnitImbalance& physics,
                    const SamplerConfig& config) {
    if (config.n == 0) throw ValidationError("sample count must be positive");
    if (config.block == 0) throw ValidationError("sampler block size must be positive");
    const Eigen::Index d = model.config().dim;
    if (static_cast<Eigen::Index>(physics.dim()) != d) throw DimensionError("model and bounds disagree on dimension");
    const int T = schedule.steps();
    const std::size_t blocks = (config.n + config.block - 1) / config.block;

    SampleResult result;
    result.unit.resize(d, static_cast<Eigen::Index>(config.n));
    std::vector<std::vector<double>> block_trace(blocks, std::vector<double>(static_cast<std::size_t>(T) + 1, 0.0));

    parallel_for(blocks, config.workers, [&](std::size_t blk) {
        const std::size_t first = blk * config.block;
        const std::size_t count = std::min(config.block, config.n - first);
        std::vector<Rng> rngs;
        for (std::size_t j = 0; j < count; ++j) rngs.push_back(Rng::stream(config.seed, "sampling", first + j));
        Eigen::MatrixXd x(d, static_cast<Eigen::Index>(count));
        for (std::size_t j = 0; j < count; ++j)
            for (Eigen::Index i = 0; i < d; ++i) x(i, static_cast<Eigen::Index>(j)) = rngs[j].normal();
        auto& trace = block_trace[blk];
        auto record = [&](int t, const Eigen::MatrixXd& state) {
            if (!config.record_trace) return;
            double sum = 0.0;
            for (Eigen::Index j = 0; j < state.cols(); ++j)
                sum += physics.value({state.col(j).data(), static_cast<std::size_t>(d)});
            trace[static_cast<std::size_t>(t)] = sum;
        };
        record(T, x);
        for (int t = T; t >= 1; --t) {
            const Eigen::MatrixXd eps_hat = predict_noise(model, x, t, schedule);
            const double coef = schedule.beta_at(t) / std::sqrt(1.0 - schedule.alpha_bar_at(t));
            x = (x - coef * eps_hat) / std::sqrt(schedule.alpha_at(t));
            if (t > 1) {
                const double sigma = schedule.sigma_at(t);
                for (std::size_t j = 0; j < count; ++j)
                    for (Eigen::Index i = 0; i < d; ++i) x(i, static_cast<Eigen::Index>(j)) += sigma * rngs[j].normal();
                record(t - 1, x);
            }
        }
        x = x.cwiseMax(0.0).cwiseMin(1.0);
        record(0, x);
        result.unit.middleCols(static_cast<Eigen::Index>(first), static_cast<Eigen::Index>(count)) = x;
    });

    result.physical = physics.bounds().denormalize(result.unit);
    // exact box endpoints despite rounding in the affine map
    const auto& lo = physics.bounds().lo();
    const auto& hi = physics.bounds().hi();
    for (Eigen::Index i = 0; i < d; ++i)
        result.physical.row(i) = result.physical.row(i).cwiseMax(lo[static_cast<std::size_t>(i)]).cwiseMin(hi[static_cast<std::size_t>(i)]);
    if (config.record_trace) {
        result.trace.assign(static_cast<std::size_t>(T) + 1, 0.0);
        for (const auto& bt : block_trace)
            for (std::size_t t = 0; t < bt.size(); ++t) result.trace[t] += bt[t];
        for (auto& v : result.trace) v /= static_cast<double>(config.n);
    }
    return result;
}

}  // namespace pfdiff::diffusion
