#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "commands.h"
#include "config.h"
#include "pfdiff/common/error.h"

namespace {

enum Exit { ok = 0, usage = 2, numeric = 3, io = 4 };

struct Common {
    std::optional<std::string> config, case_path, out, schedule;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> workers, n, steps;
    std::optional<double> eta;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config, "JSON config patch applied over the defaults");
    cmd->add_option("--seed", c.seed, "global seed");
    cmd->add_option("--workers", c.workers, "worker threads");
    cmd->add_option("--out", c.out, "output path");
}

/// Flags win over the config file and the environment.
nlohmann::json resolve(const Common& c) {
    auto config = pfdiff::cli::load_config(c.config ? std::optional<std::filesystem::path>(*c.config) : std::nullopt);
    if (c.seed) config["seed"] = *c.seed;
    if (c.workers) config["workers"] = *c.workers;
    if (c.out) config["out"] = *c.out;
    if (c.case_path) config["case"] = *c.case_path;
    if (c.n) {
        config["data"]["n"] = *c.n;
        config["sampling"]["n"] = *c.n;
    }
    if (c.eta) config["training"]["eta"] = *c.eta;
    if (c.steps) config["training"]["steps"] = *c.steps;
    if (c.schedule) config["training"]["schedule"] = *c.schedule;
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    using namespace pfdiff;
    CLI::App app{"Physics-informed diffusion model for synthetic power flow data"};
    app.require_subcommand(1);
    Common common;

    auto* gen = app.add_subcommand("gen-data", "solve randomized operating points into a dataset");
    add_common(gen, common);
    gen->add_option("--case", common.case_path, "MATPOWER or native JSON case file");
    gen->add_option("--n", common.n, "number of accepted samples");

    cli::TrainScheduleArgs sched_args;
    std::size_t epochs = 0;
    auto* sched = app.add_subcommand("train-schedule", "learn the noise schedule from a dataset");
    add_common(sched, common);
    sched->add_option("--data", sched_args.data, "training dataset")->required();
    auto* epochs_opt = sched->add_option("--epochs", epochs, "train exactly this many epochs");

    cli::TrainDdpmArgs ddpm_args;
    std::string resume;
    auto* ddpm = app.add_subcommand("train-ddpm", "train the denoiser");
    add_common(ddpm, common);
    ddpm->add_option("--data", ddpm_args.data, "training dataset")->required();
    ddpm->add_option("--schedule", common.schedule, "linear or learned:<path>");
    ddpm->add_option("--eta", common.eta, "physics loss weight");
    ddpm->add_option("--steps", common.steps, "optimizer steps to run");
    auto* resume_opt = ddpm->add_option("--resume", resume, "continue from a checkpoint");

    cli::SampleArgs sample_args;
    auto* smp = app.add_subcommand("sample", "generate synthetic samples from a checkpoint");
    add_common(smp, common);
    smp->add_option("--checkpoint", sample_args.checkpoint, "denoiser checkpoint")->required();
    smp->add_option("--n", common.n, "number of samples");

    cli::EvaluateArgs eval_args;
    std::string real, curve;
    auto* ev = app.add_subcommand("evaluate", "score a synthetic dataset");
    add_common(ev, common);
    ev->add_option("--synthetic", eval_args.synthetic, "synthetic dataset")->required();
    auto* real_opt = ev->add_option("--real", real, "real dataset for distribution fidelity");
    auto* curve_opt = ev->add_option("--curve", curve, "forward imbalance curve CSV");
    ev->add_option("--case", common.case_path, "case file when the dataset does not embed one");
    ev->add_option("--tag", eval_args.model_tag, "model label for the report");

    auto* show = app.add_subcommand("print-config", "print the resolved configuration");
    show->add_option("--config", common.config, "JSON config patch applied over the defaults");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? Exit::ok : Exit::usage;
    }

    try {
        const auto config = resolve(common);
        if (*gen) {
            cli::cmd_gen_data(config);
        } else if (*sched) {
            if (*epochs_opt) sched_args.epochs = epochs;
            cli::cmd_train_schedule(config, sched_args);
        } else if (*ddpm) {
            if (*resume_opt) ddpm_args.resume = resume;
            cli::cmd_train_ddpm(config, ddpm_args);
        } else if (*smp) {
            cli::cmd_sample(config, sample_args);
        } else if (*ev) {
            if (*real_opt) eval_args.real = real;
            if (*curve_opt) eval_args.curve = curve;
            cli::cmd_evaluate(config, eval_args);
        } else if (*show) {
            std::cout << config.dump(2) << '\n';
        }
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return Exit::usage;
    } catch (const DimensionError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return Exit::usage;
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << '\n';
        return Exit::numeric;
    } catch (const IoError& e) {
        std::cerr << "i/o error: " << e.what() << '\n';
        return Exit::io;
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << '\n';
        return Exit::io;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return Exit::usage;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "i/o error: " << e.what() << '\n';
        return Exit::io;
    }
    return Exit::ok;
}
