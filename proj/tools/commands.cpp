#include "commands.h"

#include <fstream>
#include <iostream>
#include <memory>

#include "config.h"
#include "pfdiff/common/error.h"
#include "pfdiff/common/rng.h"
#include "pfdiff/diffusion/noise_schedule.h"
#include "pfdiff/diffusion/sampler.h"
#include "pfdiff/diffusion/trainer.h"
#include "pfdiff/eval/metrics.h"
#include "pfdiff/eval/report.h"
#include "pfdiff/grid/admittance.h"
#include "pfdiff/grid/case_parser.h"
#include "pfdiff/nn/checkpoint.h"
#include "pfdiff/pf/dataset.h"
#include "pfdiff/pf/imbalance.h"
#include "pfdiff/schedule/imbalance_curve.h"
#include "pfdiff/schedule/schedule_trainer.h"

namespace pfdiff::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path output_path(const json& config, const char* fallback) {
    const auto out = config.at("out").get<std::string>();
    return out.empty() ? fs::path(fallback) : fs::path(out);
}

fs::path with_suffix(const fs::path& path, const std::string& suffix) { return fs::path(path.string() + suffix); }

void ensure_parent(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

void require_file(const fs::path& path, const char* what) {
    if (!fs::exists(path)) throw IoError(std::string(what) + " not found: " + path.string());
}

/// Network, admittance and residual evaluator shared by the commands.
struct Grid {
    grid::NetworkCase network;
    grid::AdmittanceMatrix admittance;
    std::unique_ptr<pf::ImbalanceEvaluator> evaluator;

    Grid(grid::NetworkCase n, const grid::SampleLayout& layout)
        : network(std::move(n)), admittance(grid::build_admittance(network)),
          evaluator(std::make_unique<pf::ImbalanceEvaluator>(layout, admittance)) {}
};

json network_json(const grid::NetworkCase& network) { return json::parse(grid::to_native_json(network)); }

/// The case embedded in an artifact, falling back to the configured case file.
grid::NetworkCase resolve_network(const json& meta, const json& config) {
    if (meta.contains("network")) return grid::parse_native(meta.at("network").dump(), parse_options(config));
    return grid::load_case(config.at("case").get<std::string>(), parse_options(config));
}

pf::Dataset load_training_data(const fs::path& path) {
    require_file(path, "dataset");
    return pf::load_dataset(path);
}

double resolve_gamma(const json& config, const pf::UnitImbalance& physics) {
    const json& g = config.at("schedule").at("gamma_T");
    if (g.is_string()) {
        if (g.get<std::string>() != "auto") throw ValidationError("gamma_T must be a number or \"auto\"");
        return schedule::measure_noise_imbalance(physics, config.at("schedule").at("noise_draws").get<std::size_t>(),
                                                 config_seed(config));
    }
    const double v = g.get<double>();
    if (!(v > 0)) throw ValidationError("gamma_T must be positive");
    return v;
}

diffusion::NoiseSchedule linear_schedule(const json& config) {
    const json& b = config.at("training").at("linear_beta");
    return diffusion::linear_beta_schedule(config.at("schedule").at("T").get<int>(), b.at(0).get<double>(),
                                           b.at(1).get<double>());
}

class CsvLog {
  public:
    CsvLog(const fs::path& path, const std::string& header, bool append) {
        const bool fresh = !append || !fs::exists(path);
        out_.open(path, append ? std::ios::app : std::ios::trunc);
        if (!out_) throw IoError("cannot write log " + path.string());
        out_.precision(10);
        if (fresh) out_ << header << '\n';
    }
    template <typename... Ts>
    void row(const Ts&... values) {
        std::size_t k = 0;
        ((out_ << (k++ ? "," : "") << values), ...);
        out_ << '\n';
        out_.flush();
    }

  private:
    std::ofstream out_;
};

}  // namespace

void cmd_gen_data(const json& config) {
    const auto cfg = dataset_config(config);
    if (cfg.n == 0) throw ValidationError("--n must be positive");
    const fs::path out = output_path(config, "dataset.bin");
    const auto network = grid::load_case(config.at("case").get<std::string>(), parse_options(config));

    auto dataset = pf::generate_dataset(network, cfg);
    dataset.meta["network"] = network_json(network);
    ensure_parent(out);
    pf::save_dataset(dataset, out);

    const auto& rej = dataset.meta.at("rejection");
    std::cerr << "generated " << dataset.size() << " samples (D = " << dataset.dim() << ") in "
              << rej.at("attempts").get<std::size_t>() << " attempts, rejection rate " << rej.at("rejection_rate").get<double>()
              << "\n";
    std::ofstream log(with_suffix(out, ".log.json"));
    if (!log) throw IoError("cannot write log for " + out.string());
    log << rej.dump(2) << '\n';
}

void cmd_train_schedule(const json& config, const TrainScheduleArgs& args) {
    const auto data = load_training_data(args.data);
    const Grid g(resolve_network(data.meta, config), data.layout);
    const pf::UnitImbalance physics(*g.evaluator, data.bounds);
    const fs::path out = output_path(config, "schedule.json");
    ensure_parent(out);

    auto cfg = schedule_config(config);
    cfg.gamma_terminal = resolve_gamma(config, physics);
    if (args.epochs) {
        if (*args.epochs == 0) throw ValidationError("--epochs must be positive");
        cfg.max_epochs = *args.epochs;
        cfg.tolerance = 0.0;
    }
    std::cerr << "gamma_T = " << cfg.gamma_terminal << " p.u.\n";

    Rng rng = Rng::stream(config_seed(config), "schedule");
    const auto result = schedule::train_schedule(data.unit, physics, cfg, rng);
    diffusion::save_schedule(out, result.schedule, result.bound);

    CsvLog log(with_suffix(out, ".log.csv"), "epoch,loss", false);
    for (std::size_t e = 0; e < result.epoch_loss.size(); ++e) log.row(e + 1, result.epoch_loss[e]);

    // Forward imbalance of the learned and the linear baseline schedules.
    const auto draws = config.at("evaluation").at("curve_draws").get<std::size_t>();
    const auto seed = config_seed(config);
    const auto workers = config_workers(config);
    const auto learned = schedule::forward_imbalance_curve(data.unit, result.schedule, physics, draws, seed, workers);
    const auto baseline = schedule::forward_imbalance_curve(data.unit, linear_schedule(config), physics, draws, seed, workers);
    eval::write_curve_csv(with_suffix(out, ".curve.csv"), learned, result.bound);
    eval::write_curve_csv(with_suffix(out, ".linear_curve.csv"), baseline, result.bound);

    const auto ls = eval::linearity_score(learned, result.bound);
    const auto lb = eval::linearity_score(baseline, result.bound);
    std::cerr << "epochs " << result.epoch_loss.size() << ", final loss " << result.epoch_loss.back()
              << "; linearity RMSE learned " << ls.rmse << " vs linear " << lb.rmse << " p.u.\n";
}

void cmd_train_ddpm(const json& config, const TrainDdpmArgs& args) {
    const auto data = load_training_data(args.data);
    const fs::path out = output_path(config, "model.ckpt");
    ensure_parent(out);

    json meta;
    nn::DenoiserConfig model_cfg;
    diffusion::TrainingConfig train_cfg;
    diffusion::NoiseSchedule sched;
    diffusion::ImbalanceBound bound;
    std::string rng_state;

    if (args.resume) {
        require_file(*args.resume, "checkpoint");
        meta = nn::read_checkpoint_header(*args.resume).at("meta");
        if (meta.value("kind", "") != "ddpm") throw ValidationError("not a denoiser checkpoint: " + args.resume->string());
        if (grid::SampleLayout::from_json(meta.at("layout")) != data.layout ||
            grid::NormalizationBounds::from_json(meta.at("bounds")) != data.bounds)
            throw ValidationError("checkpoint does not match the dataset layout or bounds");
        model_cfg = nn::DenoiserConfig::from_json(meta.at("model"));
        train_cfg = diffusion::TrainingConfig::from_json(meta.at("training"));
        train_cfg.steps = training_config(config).steps;
        train_cfg.workers = config_workers(config);
        sched = diffusion::schedule_from_json(meta.at("schedule"), &bound);
        rng_state = meta.at("rng_state").get<std::string>();
    } else {
        model_cfg = denoiser_config(config, static_cast<Eigen::Index>(data.dim()));
        train_cfg = training_config(config);
        const auto choice = parse_schedule_choice(config.at("training").at("schedule").get<std::string>());
        if (choice.learned) {
            require_file(choice.path, "schedule");
            sched = diffusion::load_schedule(choice.path, &bound);
            if (bound.steps != sched.steps()) throw ValidationError("schedule file has inconsistent T");
        }
    }

    const Grid g(resolve_network(data.meta, config), data.layout);
    const pf::UnitImbalance physics(*g.evaluator, data.bounds);
    if (!args.resume && sched.steps() == 0) {
        sched = linear_schedule(config);
        bound = {sched.steps(), resolve_gamma(config, physics)};
    }

    const auto seed = args.resume ? meta.at("seed").get<std::uint64_t>() : config_seed(config);
    Rng init = Rng::stream(seed, "ddpm", 0);
    nn::Denoiser model(model_cfg, init);
    diffusion::DdpmTrainer trainer(model, sched, bound, train_cfg.eta > 0 ? &physics : nullptr, train_cfg);
    Rng rng = Rng::stream(seed, "ddpm", 1);
    if (args.resume) {
        nn::load_checkpoint(*args.resume, {{"model", &model.params()},
                                           {"adam_m", &trainer.optimizer().first_moment()},
                                           {"adam_v", &trainer.optimizer().second_moment()}});
        trainer.optimizer().set_steps(meta.at("step").get<std::int64_t>());
        rng.load_state(rng_state);
    }

    CsvLog log(with_suffix(out, ".log.csv"), "step,ddpm,physics,total", args.resume.has_value());
    std::cerr << "denoiser: " << model.parameter_count() << " parameters, schedule " << diffusion::to_string(sched.kind)
              << ", eta " << train_cfg.eta << ", from step " << trainer.optimizer().steps() << "\n";
    trainer.train(data.unit, rng, train_cfg.steps, [&](std::int64_t step, const diffusion::StepLosses& l) {
        log.row(step, l.ddpm, l.physics, l.total);
    });

    json saved;
    saved["schema_version"] = nn::kCheckpointSchemaVersion;
    saved["kind"] = "ddpm";
    saved["model"] = model_cfg.to_json();
    saved["training"] = train_cfg.to_json();
    saved["schedule"] = diffusion::schedule_to_json(sched, bound);
    saved["layout"] = data.layout.to_json();
    saved["bounds"] = data.bounds.to_json();
    saved["network"] = network_json(g.network);
    saved["step"] = trainer.optimizer().steps();
    saved["rng_state"] = rng.save_state();
    saved["seed"] = seed;
    nn::save_checkpoint(out, saved, {{"model", &model.params()},
                                     {"adam_m", &trainer.optimizer().first_moment()},
                                     {"adam_v", &trainer.optimizer().second_moment()}});
    std::cerr << "saved " << out.string() << " at step " << trainer.optimizer().steps() << "\n";
}

void cmd_sample(const json& config, const SampleArgs& args) {
    require_file(args.checkpoint, "checkpoint");
    const json meta = nn::read_checkpoint_header(args.checkpoint).at("meta");
    if (meta.value("kind", "") != "ddpm") throw ValidationError("not a denoiser checkpoint: " + args.checkpoint.string());
    const auto layout = grid::SampleLayout::from_json(meta.at("layout"));
    const auto bounds = grid::NormalizationBounds::from_json(meta.at("bounds"));
    diffusion::ImbalanceBound bound;
    const auto sched = diffusion::schedule_from_json(meta.at("schedule"), &bound);

    Rng unused(0);
    nn::Denoiser model(nn::DenoiserConfig::from_json(meta.at("model")), unused);
    nn::ParamStore m = model.params().zeros_like(), v = model.params().zeros_like();
    nn::load_checkpoint(args.checkpoint, {{"model", &model.params()}, {"adam_m", &m}, {"adam_v", &v}});

    const Grid g(resolve_network(meta, config), layout);
    const pf::UnitImbalance physics(*g.evaluator, bounds);
    const auto cfg = sampler_config(config);
    if (cfg.n == 0) throw ValidationError("--n must be positive");
    const auto result = diffusion::sample(model, sched, physics, cfg);

    const fs::path out = output_path(config, "samples.bin");
    ensure_parent(out);
    json dmeta;
    dmeta["schema_version"] = pf::kDatasetSchemaVersion;
    dmeta["case"] = g.network.name;
    dmeta["n"] = cfg.n;
    dmeta["seed"] = cfg.seed;
    dmeta["generator_of_record"] = "ddpm";
    dmeta["checkpoint_step"] = meta.at("step");
    dmeta["schedule_kind"] = diffusion::to_string(sched.kind);
    dmeta["eta"] = meta.at("training").at("eta");
    dmeta["gamma_T"] = bound.gamma_terminal;
    dmeta["T"] = bound.steps;
    dmeta["network"] = meta.at("network");
    pf::save_dataset(pf::make_dataset(layout, bounds, result.physical, dmeta), out);
    if (cfg.record_trace) eval::write_curve_csv(with_suffix(out, ".trace.csv"), result.trace, bound);
    std::cerr << "sampled " << cfg.n << " points; mean R at t = 0 is " << result.trace.front() << " p.u.\n";
}

void cmd_evaluate(const json& config, const EvaluateArgs& args) {
    require_file(args.synthetic, "synthetic dataset");
    const auto synth = pf::load_dataset(args.synthetic);
    const Grid g(resolve_network(synth.meta, config), synth.layout);
    const auto workers = config_workers(config);
    pf::ConstraintTolerance tol;
    const json& t = config.at("evaluation").at("tolerance");
    tol.equality = t.at("equality").get<double>();
    tol.box = t.at("box").get<double>();
    tol.line = t.at("line").get<double>();

    eval::ReportInputs in;
    in.grid = g.network.name;
    in.model_tag = args.model_tag.empty() ? synth.meta.value("generator_of_record", std::string("unknown")) : args.model_tag;
    const Eigen::MatrixXd phys = synth.physical();
    in.imbalance = eval::mean_imbalance(phys, *g.evaluator, workers);
    in.constraint_rates = eval::constraint_satisfaction(phys, synth.layout, g.admittance, g.network, tol, workers);
    in.seeds["synthetic"] = synth.meta.value("seed", std::uint64_t{0});

    if (args.real) {
        require_file(*args.real, "real dataset");
        const auto real = pf::load_dataset(*args.real);
        if (real.layout != synth.layout) throw ValidationError("real and synthetic datasets have different layouts");
        const Eigen::MatrixXd rp = real.physical();
        in.fidelity = eval::distribution_fidelity(phys, rp);
        const Eigen::Index half = rp.cols() / 2;
        if (half > 0) in.noise_floor = eval::distribution_fidelity(rp.leftCols(half), rp.rightCols(rp.cols() - half));
        in.seeds["real"] = real.meta.value("seed", std::uint64_t{0});
    }

    if (synth.meta.contains("gamma_T")) {
        const diffusion::ImbalanceBound bound{synth.meta.at("T").get<int>(), synth.meta.at("gamma_T").get<double>()};
        const fs::path trace = with_suffix(args.synthetic, ".trace.csv");
        if (fs::exists(trace)) in.trace_fraction = eval::reverse_trace_check(eval::read_curve_csv(trace), bound);
        if (args.curve) {
            require_file(*args.curve, "curve");
            in.linearity = eval::linearity_score(eval::read_curve_csv(*args.curve), bound);
        }
    } else if (args.curve) {
        throw ValidationError("--curve needs a synthetic dataset that records gamma_T");
    }

    const json report = eval::make_report(in);
    const fs::path out = output_path(config, "report.json");
    ensure_parent(out);
    std::ofstream o(out);
    if (!o) throw IoError("cannot write " + out.string());
    o << report.dump(2) << '\n';
    if (!o) throw IoError("failed writing " + out.string());
    std::cout << eval::format_report(report);
}

}  // namespace pfdiff::cli
