#include "pfdiff/diffusion/physics.h"

#include <algorithm>
#include <cmath>

#include "pfdiff/common/error.h"

namespace pfdiff::diffusion {

namespace {

void check_step(int t, const NoiseSchedule& s) {
    if (t < 1 || t > s.steps()) throw ValidationError("diffusion step outside [1, T]");
}

}  // namespace

Eigen::VectorXd forward_sample(const Eigen::VectorXd& x0, int t, const Eigen::VectorXd& eps,
                               const NoiseSchedule& s) {
    check_step(t, s);
    if (x0.size() != eps.size()) throw DimensionError("noise and sample dimensions differ");
    const double a = s.alpha_bar_at(t);
    return std::sqrt(a) * x0 + std::sqrt(1.0 - a) * eps;
}

double posterior_mean_slope(int t, const NoiseSchedule& s) {
    check_step(t, s);
    return -s.beta_at(t) / (std::sqrt(1.0 - s.alpha_bar_at(t)) * std::sqrt(s.alpha_at(t)));
}

Eigen::VectorXd posterior_mean(const Eigen::VectorXd& xt, int t, const Eigen::VectorXd& eps_hat,
                               const NoiseSchedule& s) {
    check_step(t, s);
    if (xt.size() != eps_hat.size()) throw DimensionError("noise and sample dimensions differ");
    return (xt - s.beta_at(t) / std::sqrt(1.0 - s.alpha_bar_at(t)) * eps_hat) / std::sqrt(s.alpha_at(t));
}

double predict_x0_slope(int t, const NoiseSchedule& s) {
    check_step(t, s);
    return -std::sqrt(1.0 - s.alpha_bar_at(t)) / std::sqrt(s.alpha_bar_at(t));
}

Eigen::VectorXd predict_x0(const Eigen::VectorXd& xt, int t, const Eigen::VectorXd& eps_hat,
                           const NoiseSchedule& s) {
    check_step(t, s);
    if (xt.size() != eps_hat.size()) throw DimensionError("noise and sample dimensions differ");
    const double a = s.alpha_bar_at(t);
    return (xt - std::sqrt(1.0 - a) * eps_hat) / std::sqrt(a);
}

Eigen::VectorXd epsilon_from_x0(const Eigen::VectorXd& xt, int t, const Eigen::VectorXd& x0_hat,
                                const NoiseSchedule& s) {
    check_step(t, s);
    const double a = s.alpha_bar_at(t);
    return (xt - std::sqrt(a) * x0_hat) / std::sqrt(1.0 - a);
}

Eigen::VectorXd reverse_step(const Eigen::VectorXd& xt, int t, const Eigen::VectorXd& eps_hat,
                             const Eigen::VectorXd& z, const NoiseSchedule& s) {
    Eigen::VectorXd out = posterior_mean(xt, t, eps_hat, s);
    if (t > 1) {
        if (z.size() != xt.size()) throw DimensionError("noise and sample dimensions differ");
        out += s.sigma_at(t) * z;
    }
    return out;
}

double physics_hinge(double residual, double gamma) { return std::max(residual - gamma, 0.0); }

double physics_hinge_slope(double residual, double gamma) { return residual > gamma ? 1.0 : 0.0; }

}  // namespace pfdiff::diffusion
