#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

namespace pfdiff::cli {

struct TrainScheduleArgs {
    std::filesystem::path data;
    std::optional<std::size_t> epochs;  ///< fixed epoch count, early stopping off
};

struct TrainDdpmArgs {
    std::filesystem::path data;
    std::optional<std::filesystem::path> resume;
};

struct SampleArgs {
    std::filesystem::path checkpoint;
};

struct EvaluateArgs {
    std::filesystem::path synthetic;
    std::optional<std::filesystem::path> real;
    std::optional<std::filesystem::path> curve;  ///< forward imbalance curve CSV for the linearity score
    std::string model_tag;
};

/// Each command reads its settings from the resolved config document,
/// writes its artifacts under config["out"] and returns nothing; failures
/// surface as pfdiff::Error subclasses.
void cmd_gen_data(const nlohmann::json& config);
void cmd_train_schedule(const nlohmann::json& config, const TrainScheduleArgs& args);
void cmd_train_ddpm(const nlohmann::json& config, const TrainDdpmArgs& args);
void cmd_sample(const nlohmann::json& config, const SampleArgs& args);
void cmd_evaluate(const nlohmann::json& config, const EvaluateArgs& args);

}  // namespace pfdiff::cli
