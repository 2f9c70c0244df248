#include "pfdiff/schedule/aux_loss.h"

#include <cmath>

#include "pfdiff/common/error.h"
#include "pfdiff/common/parallel.h"

namespace pfdiff::schedule {

AuxLoss::AuxLoss(const pf::UnitImbalance& physics, diffusion::ImbalanceBound bound, std::size_t workers)
    : physics_(&physics), bound_(bound), workers_(workers) {}

AuxLossValue AuxLoss::evaluate(const Eigen::MatrixXd& alpha_bar, const Eigen::MatrixXd& x0, const Eigen::MatrixXd& eps,
                               Eigen::MatrixXd* d_alpha_bar) const {
    const Eigen::Index T = alpha_bar.rows();
    const Eigen::Index B = alpha_bar.cols();
    const Eigen::Index D = x0.rows();
    if (T != bound_.steps) throw DimensionError("schedule length differs from the bound");
    if (x0.cols() != B || eps.rows() != D || eps.cols() != B) throw DimensionError("batch shapes disagree");
    if (static_cast<Eigen::Index>(physics_->dim()) != D) throw DimensionError("batch dimension differs from bounds");
    if (d_alpha_bar) d_alpha_bar->setZero(T, B);

    std::vector<double> per_t_loss(static_cast<std::size_t>(T), 0.0);
    AuxLossValue value;
    value.mean_residual.assign(static_cast<std::size_t>(T), 0.0);
    parallel_for(static_cast<std::size_t>(T), workers_, [&](std::size_t tt) {
        const auto t = static_cast<Eigen::Index>(tt);
        const double gamma = bound_.at(static_cast<int>(tt) + 1);
        Eigen::VectorXd xt(D), grad(D);
        double loss = 0.0, r_sum = 0.0;
        for (Eigen::Index b = 0; b < B; ++b) {
            const double a = alpha_bar(t, b);
            const double sa = std::sqrt(a), sn = std::sqrt(1.0 - a);
            xt = sa * x0.col(b) + sn * eps.col(b);
            const std::span<const double> xs{xt.data(), static_cast<std::size_t>(D)};
            double r;
            if (d_alpha_bar) {
                r = physics_->value_with_gradient(xs, {grad.data(), static_cast<std::size_t>(D)});
                // d x_t / d abar = x0 / (2 sqrt(abar)) - eps / (2 sqrt(1 - abar))
                const double dr = grad.dot(x0.col(b)) / (2.0 * sa) - grad.dot(eps.col(b)) / (2.0 * sn);
                (*d_alpha_bar)(t, b) = 2.0 * (r - gamma) * dr / static_cast<double>(B);
            } else {
                r = physics_->value(xs);
            }
            loss += (r - gamma) * (r - gamma);
            r_sum += r;
        }
        per_t_loss[tt] = loss / static_cast<double>(B);
        value.mean_residual[tt] = r_sum / static_cast<double>(B);
    });
    for (double l : per_t_loss) value.loss += l;
    return value;
}

AuxLossValue aux_loss(const nn::ScheduleNet& net, const Eigen::MatrixXd& x0, const Eigen::MatrixXd& eps,
                      const AuxLoss& loss, nn::ParamStore* grads) {
    nn::ScheduleNet::Tape tape;
    const Eigen::MatrixXd alpha_bar = net.forward(x0, &tape);
    if (!grads) return loss.evaluate(alpha_bar, x0, eps, nullptr);
    Eigen::MatrixXd d_alpha_bar;
    auto value = loss.evaluate(alpha_bar, x0, eps, &d_alpha_bar);
    net.backward(tape, d_alpha_bar, *grads);
    return value;
}

}  // namespace pfdiff::schedule
