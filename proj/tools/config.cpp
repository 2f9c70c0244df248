#include "config.h"

#include <cstdlib>
#include <fstream>

#include "pfdiff/common/error.h"

namespace pfdiff::cli {

using nlohmann::json;

json default_config() {
    const grid::ParseOptions parse;
    const grid::BoundsOptions bounds;
    const pf::DatasetConfig data;
    const schedule::ScheduleTrainingConfig sched;
    const nn::DenoiserConfig model;
    const diffusion::TrainingConfig train;
    const diffusion::SamplerConfig sampling;
    const pf::ConstraintTolerance tol;

    json model_json = model.to_json();
    model_json.erase("dim");
    json sched_json = sched.to_json();
    sched_json["gamma_T"] = "auto";
    sched_json["noise_draws"] = 4096;
    sched_json["checks"] = {{"max_first_gap", sched.checks.max_first_gap},
                            {"max_terminal", sched.checks.max_terminal}};
    json train_json = train.to_json();
    train_json["schedule"] = "linear";
    train_json["linear_beta"] = {1e-4, 0.05};

    return {
        {"schema_version", kConfigSchemaVersion},
        {"seed", 0},
        {"workers", 1},
        {"case", "data/case14.m"},
        {"out", ""},
        {"grid",
         {{"default_angle_bound", parse.default_angle_bound},
          {"demand_low", bounds.demand_low},
          {"demand_high", bounds.demand_high},
          {"min_half_width", bounds.min_half_width}}},
        {"data",
         {{"n", 70000},
          {"load_range", {data.ranges.load_low, data.ranges.load_high}},
          {"cost_range", {data.ranges.cost_low, data.ranges.cost_high}},
          {"loss_factor", data.dispatch.loss_factor},
          {"setpoint_vm_window", {data.dispatch.setpoint_vm_low, data.dispatch.setpoint_vm_high}},
          {"nr",
           {{"tolerance", data.solver.tolerance},
            {"max_iterations", data.solver.max_iterations},
            {"enforce_q_limits", data.solver.enforce_q_limits},
            {"max_switch_rounds", data.solver.max_switch_rounds}}},
          {"tolerance", {{"equality", data.tolerance.equality}, {"box", data.tolerance.box}, {"line", data.tolerance.line}}},
          {"repair_slack_voltage", data.repair_slack_voltage},
          {"repair_rounds", data.repair_rounds},
          {"loss_rounds", data.loss_rounds},
          {"window", data.window},
          {"max_rejection_rate", data.max_rejection_rate},
          {"max_attempts_per_sample", data.max_attempts_per_sample}}},
        {"schedule", sched_json},
        {"model", model_json},
        {"training", train_json},
        {"sampling", {{"n", sampling.n}, {"block", sampling.block}, {"record_trace", sampling.record_trace}}},
        {"evaluation",
         {{"curve_draws", 256},
          {"tolerance", {{"equality", tol.equality}, {"box", tol.box}, {"line", tol.line}}}}},
    };
}

namespace {

const char* env(const char* name) {
    const char* v = std::getenv(name);
    return v && *v ? v : nullptr;
}

template <typename T>
T env_number(const char* name, const char* text) {
    try {
        std::size_t used = 0;
        T value;
        if constexpr (std::is_floating_point_v<T>)
            value = static_cast<T>(std::stod(text, &used));
        else
            value = static_cast<T>(std::stoull(text, &used));
        if (used != std::string(text).size()) throw std::invalid_argument(text);
        return value;
    } catch (const std::exception&) {
        throw ValidationError(std::string(name) + " is not a valid number: " + text);
    }
}

std::pair<double, double> range(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

}  // namespace

void apply_environment(json& config) {
    if (auto v = env("PFDIFF_SEED")) config["seed"] = env_number<std::uint64_t>("PFDIFF_SEED", v);
    if (auto v = env("PFDIFF_WORKERS")) config["workers"] = env_number<std::size_t>("PFDIFF_WORKERS", v);
    if (auto v = env("PFDIFF_N")) {
        const auto n = env_number<std::size_t>("PFDIFF_N", v);
        config["data"]["n"] = n;
        config["sampling"]["n"] = n;
    }
    if (auto v = env("PFDIFF_ETA")) config["training"]["eta"] = env_number<double>("PFDIFF_ETA", v);
    if (auto v = env("PFDIFF_STEPS")) config["training"]["steps"] = env_number<std::size_t>("PFDIFF_STEPS", v);
    if (auto v = env("PFDIFF_SCHEDULE")) config["training"]["schedule"] = v;
    if (auto v = env("PFDIFF_CASE")) config["case"] = v;
    if (auto v = env("PFDIFF_OUT")) config["out"] = v;
}

json load_config(const std::optional<std::filesystem::path>& path) {
    json config = default_config();
    if (path) {
        std::ifstream in(*path);
        if (!in) throw IoError("cannot open config " + path->string());
        json patch;
        try {
            patch = json::parse(in);
        } catch (const json::parse_error& e) {
            throw ParseError(path->string() + ": " + e.what(), 0);
        }
        if (patch.contains("schema_version") && patch["schema_version"] != kConfigSchemaVersion)
            throw ValidationError("unsupported config schema_version " + patch["schema_version"].dump());
        config.merge_patch(patch);
    }
    apply_environment(config);
    return config;
}

std::uint64_t config_seed(const json& config) { return config.at("seed").get<std::uint64_t>(); }
std::size_t config_workers(const json& config) { return std::max<std::size_t>(1, config.at("workers").get<std::size_t>()); }

grid::ParseOptions parse_options(const json& config) {
    grid::ParseOptions o;
    o.default_angle_bound = config.at("grid").at("default_angle_bound").get<double>();
    return o;
}

pf::DatasetConfig dataset_config(const json& config) {
    const json& d = config.at("data");
    const json& g = config.at("grid");
    pf::DatasetConfig c;
    c.n = d.at("n").get<std::size_t>();
    c.seed = config_seed(config);
    c.workers = config_workers(config);
    std::tie(c.ranges.load_low, c.ranges.load_high) = range(d.at("load_range"));
    std::tie(c.ranges.cost_low, c.ranges.cost_high) = range(d.at("cost_range"));
    c.dispatch.loss_factor = d.at("loss_factor").get<double>();
    std::tie(c.dispatch.setpoint_vm_low, c.dispatch.setpoint_vm_high) = range(d.at("setpoint_vm_window"));
    const json& nr = d.at("nr");
    c.solver.tolerance = nr.at("tolerance").get<double>();
    c.solver.max_iterations = nr.at("max_iterations").get<int>();
    c.solver.enforce_q_limits = nr.at("enforce_q_limits").get<bool>();
    c.solver.max_switch_rounds = nr.at("max_switch_rounds").get<int>();
    const json& tol = d.at("tolerance");
    c.tolerance.equality = tol.at("equality").get<double>();
    c.tolerance.box = tol.at("box").get<double>();
    c.tolerance.line = tol.at("line").get<double>();
    c.bounds.demand_low = g.at("demand_low").get<double>();
    c.bounds.demand_high = g.at("demand_high").get<double>();
    c.bounds.min_half_width = g.at("min_half_width").get<double>();
    c.repair_slack_voltage = d.at("repair_slack_voltage").get<bool>();
    c.repair_rounds = d.at("repair_rounds").get<int>();
    c.loss_rounds = d.at("loss_rounds").get<int>();
    c.window = d.at("window").get<std::size_t>();
    c.max_rejection_rate = d.at("max_rejection_rate").get<double>();
    c.max_attempts_per_sample = d.at("max_attempts_per_sample").get<std::size_t>();
    return c;
}

schedule::ScheduleTrainingConfig schedule_config(const json& config) {
    json s = config.at("schedule");
    const json checks = s.at("checks");
    s.erase("gamma_T");
    auto c = schedule::ScheduleTrainingConfig::from_json(s);
    c.checks.max_first_gap = checks.at("max_first_gap").get<double>();
    c.checks.max_terminal = checks.at("max_terminal").get<double>();
    c.workers = config_workers(config);
    return c;
}

nn::DenoiserConfig denoiser_config(const json& config, Eigen::Index dim) {
    json m = config.at("model");
    m["dim"] = dim;
    return nn::DenoiserConfig::from_json(m);
}

diffusion::TrainingConfig training_config(const json& config) {
    auto c = diffusion::TrainingConfig::from_json(config.at("training"));
    if (c.eta < 0) throw ValidationError("eta must be non-negative");
    c.workers = config_workers(config);
    return c;
}

diffusion::SamplerConfig sampler_config(const json& config) {
    const json& s = config.at("sampling");
    diffusion::SamplerConfig c;
    c.n = s.at("n").get<std::size_t>();
    c.block = s.at("block").get<std::size_t>();
    c.record_trace = s.at("record_trace").get<bool>();
    c.seed = config_seed(config);
    c.workers = config_workers(config);
    return c;
}

ScheduleChoice parse_schedule_choice(const std::string& text) {
    if (text == "linear") return {};
    const std::string prefix = "learned:";
    if (text.rfind(prefix, 0) == 0 && text.size() > prefix.size()) return {true, text.substr(prefix.size())};
    throw ValidationError("schedule must be 'linear' or 'learned:<path>', got '" + text + "'");
}

}  // namespace pfdiff::cli
