#pragma once

#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "pfdiff/common/rng.h"
#include "pfdiff/diffusion/noise_schedule.h"
#include "pfdiff/nn/adam.h"
#include "pfdiff/nn/schedule_net.h"
#include "pfdiff/pf/imbalance.h"

namespace pfdiff::schedule {

struct ScheduleTrainingConfig {
    int steps = 200;
    double gamma_terminal = 0.0;
    std::vector<Eigen::Index> hidden{512, 256};
    std::size_t batch_size = 1024;
    std::size_t max_epochs = 200;
    /// Stop once the epoch loss improved by less than this fraction over
    /// the last `patience` epochs. Zero disables early stopping.
    double tolerance = 1e-4;
    std::size_t patience = 10;
    nn::AdamConfig adam{1e-3, 0.9, 0.999, 1e-8};
    /// The untrained network starts near this linear schedule.
    double init_beta_first = 1e-4;
    double init_beta_last = 0.05;
    diffusion::ScheduleChecks checks;
    std::size_t workers = 1;

    nlohmann::json to_json() const;
    static ScheduleTrainingConfig from_json(const nlohmann::json& j);
};

struct ScheduleTrainingResult {
    diffusion::NoiseSchedule schedule;
    diffusion::ImbalanceBound bound;
    nn::ScheduleNet net;
    std::vector<double> epoch_loss;
};

/// Fits the schedule network on the normalized data (D x n) and exports the
/// unified schedule: the mean of its alpha_bar outputs over all samples.
ScheduleTrainingResult train_schedule(const Eigen::MatrixXd& unit_data, const pf::UnitImbalance& physics,
                                      const ScheduleTrainingConfig& config, Rng& rng);

/// Mean alpha_bar of `net` over the columns of `unit_data`, streamed in chunks.
std::vector<double> unified_alpha_bar(const nn::ScheduleNet& net, const Eigen::MatrixXd& unit_data,
                                      std::size_t chunk = 1024);

}  // namespace pfdiff::schedule
