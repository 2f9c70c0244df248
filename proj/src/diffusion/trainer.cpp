#include "pfdiff/diffusion/trainer.h"

#include <cmath>
#include <vector>

#include "pfdiff/common/error.h"
#include "pfdiff/common/parallel.h"
#include "pfdiff/diffusion/physics.h"

namespace pfdiff::diffusion {

nlohmann::json TrainingConfig::to_json() const {
    return {{"eta", eta},
            {"batch_size", batch_size},
            {"steps", steps},
            {"physics_attach", attach == PhysicsAttach::posterior_mean ? "posterior_mean" : "x0_estimate"},
            {"adam", adam.to_json()},
            {"log_every", log_every}};
}

TrainingConfig TrainingConfig::from_json(const nlohmann::json& j) {
    TrainingConfig c;
    c.eta = j.value("eta", c.eta);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.steps = j.value("steps", c.steps);
    const auto attach = j.value("physics_attach", std::string("posterior_mean"));
    if (attach == "posterior_mean")
        c.attach = PhysicsAttach::posterior_mean;
    else if (attach == "x0_estimate")
        c.attach = PhysicsAttach::x0_estimate;
    else
        throw ValidationError("unknown physics_attach " + attach);
    if (j.contains("adam")) c.adam = nn::AdamConfig::from_json(j.at("adam"));
    c.log_every = j.value("log_every", c.log_every);
    return c;
}

DdpmTrainer::DdpmTrainer(nn::Denoiser& model, NoiseSchedule schedule, ImbalanceBound bound,
                         const pf::UnitImbalance* physics, TrainingConfig config)
    : model_(&model),
      schedule_(std::move(schedule)),
      bound_(bound),
      physics_(physics),
      config_(config),
      adam_(model.params(), config.adam),
      grads_(model.params().zeros_like()) {
    if (config_.eta < 0.0) throw ValidationError("eta must be non-negative");
    if (config_.eta > 0.0 && !physics_) throw ValidationError("physics loss requested without a residual evaluator");
    if (config_.batch_size == 0) throw ValidationError("batch size must be positive");
    if (bound_.steps != schedule_.steps()) throw ValidationError("bound and schedule disagree on T");
    if (physics_ && static_cast<Eigen::Index>(physics_->dim()) != model.config().dim)
        throw DimensionError("residual evaluator and denoiser disagree on dimension");
}

StepLosses DdpmTrainer::compute(const Eigen::MatrixXd& x0, std::span<const int> steps, const Eigen::MatrixXd& eps,
                                nn::ParamStore* grads) const {
    const Eigen::Index d = x0.rows();
    const Eigen::Index b = x0.cols();
    if (eps.rows() != d || eps.cols() != b || static_cast<Eigen::Index>(steps.size()) != b)
        throw DimensionError("batch, noise and steps disagree");
    Eigen::MatrixXd xt(d, b);
    for (Eigen::Index j = 0; j < b; ++j) {
        const int t = steps[static_cast<std::size_t>(j)];
        if (t < 1 || t > schedule_.steps()) throw ValidationError("diffusion step outside [1, T]");
        const double a = schedule_.alpha_bar_at(t);
        xt.col(j) = std::sqrt(a) * x0.col(j) + std::sqrt(1.0 - a) * eps.col(j);
    }

    nn::Denoiser::Tape tape;
    const Eigen::MatrixXd out = model_->forward(xt, steps, grads ? &tape : nullptr);
    const bool x0_mode = model_->config().prediction == nn::Prediction::x0;
    Eigen::MatrixXd eps_hat = out;
    // d eps_hat / d out, per column (x0 mode only)
    Eigen::VectorXd out_slope = Eigen::VectorXd::Ones(b);
    if (x0_mode) {
        for (Eigen::Index j = 0; j < b; ++j) {
            const double a = schedule_.alpha_bar_at(steps[static_cast<std::size_t>(j)]);
            eps_hat.col(j) = (xt.col(j) - std::sqrt(a) * out.col(j)) / std::sqrt(1.0 - a);
            out_slope[j] = -std::sqrt(a) / std::sqrt(1.0 - a);
        }
    }

    StepLosses losses;
    const Eigen::MatrixXd diff = eps_hat - eps;
    losses.ddpm = diff.squaredNorm() / static_cast<double>(b);
    Eigen::MatrixXd d_eps = (2.0 / static_cast<double>(b)) * diff;

    if (config_.eta > 0.0) {
        std::vector<double> hinge(static_cast<std::size_t>(b), 0.0);
        Eigen::MatrixXd d_phys = Eigen::MatrixXd::Zero(d, b);
        parallel_for(static_cast<std::size_t>(b), config_.workers, [&](std::size_t jj) {
            const auto j = static_cast<Eigen::Index>(jj);
            const int t = steps[jj];
            Eigen::VectorXd target;
            double slope = 0.0;
            double gamma = 0.0;
            if (config_.attach == PhysicsAttach::posterior_mean) {
                target = posterior_mean(xt.col(j), t, eps_hat.col(j), schedule_);
                slope = posterior_mean_slope(t, schedule_);
                gamma = bound_.at(t - 1);
            } else {
                target = predict_x0(xt.col(j), t, eps_hat.col(j), schedule_);
                slope = predict_x0_slope(t, schedule_);
            }
            Eigen::VectorXd g(d);
            const double r = physics_->value_with_gradient({target.data(), static_cast<std::size_t>(d)},
                                                          {g.data(), static_cast<std::size_t>(d)});
            hinge[jj] = physics_hinge(r, gamma);
            const double k = physics_hinge_slope(r, gamma);
            if (k != 0.0) d_phys.col(j) = (k * slope / static_cast<double>(b)) * g;
        });
        for (double h : hinge) losses.physics += h;
        losses.physics /= static_cast<double>(b);
        d_eps += config_.eta * d_phys;
    }
    losses.total = losses.ddpm + config_.eta * losses.physics;

    if (grads) {
        Eigen::MatrixXd d_out = d_eps;
        if (x0_mode) d_out = d_eps * out_slope.asDiagonal();
        model_->backward(tape, d_out, *grads);
    }
    return losses;
}

StepLosses DdpmTrainer::step(const Eigen::MatrixXd& x0, Rng& rng) {
    const Eigen::Index d = x0.rows();
    const Eigen::Index b = x0.cols();
    std::vector<int> steps(static_cast<std::size_t>(b));
    Eigen::MatrixXd eps(d, b);
    for (Eigen::Index j = 0; j < b; ++j) {
        steps[static_cast<std::size_t>(j)] = static_cast<int>(rng.range(1, schedule_.steps()));
        for (Eigen::Index i = 0; i < d; ++i) eps(i, j) = rng.normal();
    }
    grads_.set_zero();
    const auto losses = compute(x0, steps, eps, &grads_);
    if (!std::isfinite(losses.total))
        throw NumericError("non-finite training loss at step " + std::to_string(adam_.steps() + 1) +
                           " (L_DDPM " + std::to_string(losses.ddpm) + ", L_R " + std::to_string(losses.physics) + ")");
    adam_.step(model_->params(), grads_);
    return losses;
}

void DdpmTrainer::train(const Eigen::MatrixXd& data, Rng& rng, std::size_t count,
                        const std::function<void(std::int64_t, const StepLosses&)>& log) {
    if (data.cols() == 0) throw ValidationError("training data is empty");
    const auto n = static_cast<std::size_t>(data.cols());
    Eigen::MatrixXd batch(data.rows(), static_cast<Eigen::Index>(config_.batch_size));
    for (std::size_t s = 0; s < count; ++s) {
        for (Eigen::Index j = 0; j < batch.cols(); ++j) batch.col(j) = data.col(static_cast<Eigen::Index>(rng.index(n)));
        const auto losses = step(batch, rng);
        if (log && config_.log_every && (adam_.steps() % static_cast<std::int64_t>(config_.log_every) == 0 || s + 1 == count))
            log(adam_.steps(), losses);
    }
}

}  // namespace pfdiff::diffusion
