#include "pfdiff/schedule/schedule_trainer.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pfdiff/common/error.h"
#include "pfdiff/schedule/aux_loss.h"

namespace pfdiff::schedule {

nlohmann::json ScheduleTrainingConfig::to_json() const {
    return {{"T", steps},
            {"gamma_T", gamma_terminal},
            {"hidden", hidden},
            {"batch_size", batch_size},
            {"max_epochs", max_epochs},
            {"tolerance", tolerance},
            {"patience", patience},
            {"adam", adam.to_json()},
            {"init_beta", {init_beta_first, init_beta_last}}};
}

ScheduleTrainingConfig ScheduleTrainingConfig::from_json(const nlohmann::json& j) {
    ScheduleTrainingConfig c;
    c.steps = j.value("T", c.steps);
    c.gamma_terminal = j.value("gamma_T", c.gamma_terminal);
    if (j.contains("hidden")) c.hidden = j.at("hidden").get<std::vector<Eigen::Index>>();
    c.batch_size = j.value("batch_size", c.batch_size);
    c.max_epochs = j.value("max_epochs", c.max_epochs);
    c.tolerance = j.value("tolerance", c.tolerance);
    c.patience = j.value("patience", c.patience);
    if (j.contains("adam")) c.adam = nn::AdamConfig::from_json(j.at("adam"));
    if (j.contains("init_beta")) {
        c.init_beta_first = j.at("init_beta").at(0).get<double>();
        c.init_beta_last = j.at("init_beta").at(1).get<double>();
    }
    return c;
}

std::vector<double> unified_alpha_bar(const nn::ScheduleNet& net, const Eigen::MatrixXd& unit_data, std::size_t chunk) {
    const Eigen::Index n = unit_data.cols();
    if (n == 0) throw ValidationError("unified schedule needs data");
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(net.config().steps);
    for (Eigen::Index start = 0; start < n; start += static_cast<Eigen::Index>(chunk)) {
        const Eigen::Index len = std::min<Eigen::Index>(static_cast<Eigen::Index>(chunk), n - start);
        sum += net.forward(unit_data.middleCols(start, len)).rowwise().sum();
    }
    sum /= static_cast<double>(n);
    return {sum.data(), sum.data() + sum.size()};
}

ScheduleTrainingResult train_schedule(const Eigen::MatrixXd& unit_data, const pf::UnitImbalance& physics,
                                      const ScheduleTrainingConfig& config, Rng& rng) {
    if (unit_data.cols() == 0) throw ValidationError("schedule training needs data");
    if (!(config.gamma_terminal > 0.0)) throw ValidationError("gamma_T must be positive");
    if (config.batch_size == 0) throw ValidationError("batch size must be positive");
    const Eigen::Index d = unit_data.rows();
    const auto n = static_cast<std::size_t>(unit_data.cols());

    const auto seed_schedule = diffusion::linear_beta_schedule(config.steps, config.init_beta_first, config.init_beta_last);
    ScheduleTrainingResult result;
    result.bound = {config.steps, config.gamma_terminal};
    result.net = nn::ScheduleNet({d, config.hidden, config.steps}, rng, seed_schedule.alpha);
    auto& net = result.net;
    nn::Adam adam(net.params(), config.adam);
    nn::ParamStore grads = net.params().zeros_like();
    const AuxLoss loss(physics, result.bound, config.workers);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Eigen::MatrixXd eps(d, static_cast<Eigen::Index>(n));
    for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
        // one noise vector per sample per epoch, shared across t
        for (Eigen::Index j = 0; j < eps.cols(); ++j)
            for (Eigen::Index i = 0; i < d; ++i) eps(i, j) = rng.normal();
        std::shuffle(order.begin(), order.end(), rng.engine());
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < n; start += config.batch_size) {
            const std::size_t len = std::min(config.batch_size, n - start);
            Eigen::MatrixXd x0(d, static_cast<Eigen::Index>(len)), e(d, static_cast<Eigen::Index>(len));
            for (std::size_t k = 0; k < len; ++k) {
                x0.col(static_cast<Eigen::Index>(k)) = unit_data.col(static_cast<Eigen::Index>(order[start + k]));
                e.col(static_cast<Eigen::Index>(k)) = eps.col(static_cast<Eigen::Index>(order[start + k]));
            }
            grads.set_zero();
            const auto value = aux_loss(net, x0, e, loss, &grads);
            if (!std::isfinite(value.loss))
                throw NumericError("non-finite auxiliary loss in epoch " + std::to_string(epoch + 1));
            adam.step(net.params(), grads);
            epoch_loss += value.loss * static_cast<double>(len);
        }
        result.epoch_loss.push_back(epoch_loss / static_cast<double>(n));
        const auto e = result.epoch_loss.size();
        if (config.tolerance > 0.0 && e > config.patience) {
            const double before = result.epoch_loss[e - 1 - config.patience];
            if ((before - result.epoch_loss.back()) / before < config.tolerance) break;
        }
    }

    result.schedule = diffusion::schedule_from_alpha_bar(unified_alpha_bar(net, unit_data));
    diffusion::validate_schedule(result.schedule, config.checks);
    return result;
}

}  // namespace pfdiff::schedule
