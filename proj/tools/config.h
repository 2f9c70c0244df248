#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "pfdiff/diffusion/sampler.h"
#include "pfdiff/diffusion/trainer.h"
#include "pfdiff/grid/case_parser.h"
#include "pfdiff/nn/denoiser.h"
#include "pfdiff/pf/dataset.h"
#include "pfdiff/schedule/schedule_trainer.h"

namespace pfdiff::cli {

inline constexpr int kConfigSchemaVersion = 1;

/// The built-in defaults; config/default.json is a verbatim copy.
nlohmann::json default_config();

/// Defaults, then the optional file (JSON merge patch), then PFDIFF_* environment variables.
nlohmann::json load_config(const std::optional<std::filesystem::path>& path);

/// Applies PFDIFF_SEED, PFDIFF_WORKERS, PFDIFF_N, PFDIFF_ETA, PFDIFF_STEPS,
/// PFDIFF_SCHEDULE, PFDIFF_CASE and PFDIFF_OUT when set.
void apply_environment(nlohmann::json& config);

std::uint64_t config_seed(const nlohmann::json& config);
std::size_t config_workers(const nlohmann::json& config);

grid::ParseOptions parse_options(const nlohmann::json& config);
pf::DatasetConfig dataset_config(const nlohmann::json& config);
schedule::ScheduleTrainingConfig schedule_config(const nlohmann::json& config);
nn::DenoiserConfig denoiser_config(const nlohmann::json& config, Eigen::Index dim);
diffusion::TrainingConfig training_config(const nlohmann::json& config);
diffusion::SamplerConfig sampler_config(const nlohmann::json& config);

/// "linear" or "learned:<path>".
struct ScheduleChoice {
    bool learned = false;
    std::filesystem::path path;
};
ScheduleChoice parse_schedule_choice(const std::string& text);

}  // namespace pfdiff::cli
