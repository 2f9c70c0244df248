// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "commands.h"
#include "config.h"
#include "pfdiff/diffusion/noise_schedule.h"
#include "pfdiff/diffusion/sampler.h"
#include "pfdiff/diffusion/trainer.h"
#include "pfdiff/eval/metrics.h"
#include "pfdiff/eval/report.h"
#include "pfdiff/grid/admittance.h"
#include "pfdiff/grid/normalization.h"
#include "pfdiff/pf/dataset.h"
#include "pfdiff/pf/imbalance.h"
#include "pfdiff/pf/newton_raphson.h"
#include "pfdiff/schedule/aux_loss.h"
#include "pfdiff/schedule/imbalance_curve.h"
#include "pfdiff/schedule/schedule_trainer.h"
#include "reference_power_flow.h"
#include "test_support.h"

using namespace pfdiff;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace tol {
// 1
constexpr std::size_t kOracleSamples = 1000;
constexpr double kOracleRelative = 1e-12;
constexpr double kOracleSeconds = 1.0;
// 2
constexpr double kNrMismatch = 1e-8;
constexpr int kNrIterations = 10;
constexpr double kNrVm = 1e-4;
constexpr double kNrVa = 1e-4;
constexpr double kNrSeconds = 1.0;
// 3
constexpr double kAlphaBar1 = 0.9999, kAlphaBar1Tol = 1e-6;
constexpr double kAlphaBarT = 4e-5, kAlphaBarTTol = 1e-5;
constexpr double kScheduleSeconds = 1e-3;
// 4
constexpr std::size_t kNoiseDraws = 4096;
constexpr double kNoise14 = 2.75, kNoise30 = 2.87, kNoiseRelative = 0.10;
constexpr double kNoiseSeconds = 10.0;
// 5
constexpr std::size_t kDeskSamples = 5000;
constexpr int kSteps = 200;
constexpr double kLinearityRatio = 2.0;
constexpr double kBaselineHalfFraction = 0.8;
constexpr double kLearnedBand = 0.10;
constexpr std::size_t kCurveDraws = 512;
// 6
constexpr std::size_t kGenerated = 500;
constexpr double kProposedCeiling = 0.1;
// 7
constexpr double kLineFlowRate = 0.95;
// 8
constexpr int kGradientCoordinates = 24;
constexpr double kGradientRelative = 1e-4;
constexpr double kGradientFloor = 1e-8;
constexpr double kGradientStep = 1e-4;
// 9
constexpr double kTraceFraction = 0.8;
}  // namespace tol

/// Desk-scale denoiser and training settings shared by criteria 6, 7 and 9.
namespace desk {
const std::vector<Eigen::Index> kWidths{128, 64, 32, 64, 128};
constexpr std::size_t kBatch = 256;
constexpr double kLearningRate = 1e-3;
constexpr std::size_t kTrainSteps = 15000;
constexpr std::uint64_t kSeed = 0;
}  // namespace desk

namespace {

int failures = 0;
nlohmann::json summary = nlohmann::json::object();

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

void report(int id, bool pass, const std::string& detail, double secs) {
    if (!pass) ++failures;
    std::cout << "criterion " << id << ": " << (pass ? "PASS" : "FAIL") << "  " << detail << "  [" << num(secs)
              << " s]" << std::endl;
    summary[std::to_string(id)] = {{"pass", pass}, {"detail", detail}, {"seconds", secs}};
}

void run(int id, const std::function<std::pair<bool, std::string>()>& body) {
    const auto t0 = Clock::now();
    try {
        auto [pass, detail] = body();
        report(id, pass, detail, seconds_since(t0));
    } catch (const std::exception& e) {
        report(id, false, std::string("threw: ") + e.what(), seconds_since(t0));
    }
}

// 1 ---------------------------------------------------------------------------

std::pair<bool, std::string> residual_oracle() {
    const auto t0 = Clock::now();
    double worst = 0.0;
    for (const auto& net : {testing::two_bus(), testing::three_bus()}) {
        const auto layout = grid::make_layout(net);
        const auto y = grid::build_admittance(net);
        const auto ref = testing::reference_admittance(net);
        Rng rng(1);
        for (std::size_t k = 0; k < tol::kOracleSamples; ++k) {
            const auto x = testing::random_sample(net, rng);
            const double got = pf::residual_imbalance(x, layout, y).mean;
            worst = std::max(worst, testing::relative_error(got, testing::brute_force_residual(net, ref, x), 1e-300));
        }
    }
    const double secs = seconds_since(t0);
    return {worst <= tol::kOracleRelative && secs < tol::kOracleSeconds,
            "max relative error " + num(worst) + " over 2 x " + std::to_string(tol::kOracleSamples) + " samples"};
}

// 2 ---------------------------------------------------------------------------

std::pair<bool, std::string> solver_correctness() {
    const auto net = testing::case14();
    const auto t0 = Clock::now();
    const auto y = grid::build_admittance(net);
    const auto r = pf::solve_newton_raphson(net, y, grid::make_layout(net), pf::nominal_pd(net), pf::nominal_qd(net),
                                            pf::nominal_setpoints(net));
    const double secs = seconds_since(t0);
    const auto ref = testing::reference_power_flow(net, testing::reference_admittance(net));
    double dvm = 0.0, dva = 0.0;
    for (std::size_t i = 0; i < net.bus_count(); ++i) {
        dvm = std::max(dvm, std::abs(r.voltage.vm[i] - ref.vm[i]));
        dva = std::max(dva, std::abs(r.voltage.va[i] - ref.va[i]));
    }
    const bool pass = r.mismatch <= tol::kNrMismatch && r.iterations <= tol::kNrIterations && dvm <= tol::kNrVm &&
                      dva <= tol::kNrVa && secs < tol::kNrSeconds;
    return {pass, "mismatch " + num(r.mismatch) + " in " + std::to_string(r.iterations) + " iterations, max |dV| " +
                      num(dvm) + ", max |dphi| " + num(dva)};
}

// 3 ---------------------------------------------------------------------------

std::pair<bool, std::string> schedule_sanity() {
    const auto t0 = Clock::now();
    const auto s = diffusion::linear_beta_schedule(1000, 1e-4, 0.02);
    const double secs = seconds_since(t0);
    const double a1 = s.alpha_bar_at(1), aT = s.alpha_bar_at(1000);
    const bool pass = std::abs(a1 - tol::kAlphaBar1) <= tol::kAlphaBar1Tol &&
                      std::abs(aT - tol::kAlphaBarT) <= tol::kAlphaBarTTol && secs < tol::kScheduleSeconds;
    return {pass, "alpha_bar_1 " + num(a1) + ", alpha_bar_T " + num(aT)};
}

// 4 ---------------------------------------------------------------------------

double noise_imbalance_of(const grid::NetworkCase& net) {
    const auto layout = grid::make_layout(net);
    const auto bounds = grid::make_bounds(net, layout);
    const pf::ImbalanceEvaluator ev(layout, grid::build_admittance(net));
    const pf::UnitImbalance unit(ev, bounds);
    return schedule::measure_noise_imbalance(unit, tol::kNoiseDraws, 0);
}

std::pair<bool, std::string> noise_endpoint() {
    const auto t0 = Clock::now();
    const double r14 = noise_imbalance_of(testing::case14());
    const double r30 = noise_imbalance_of(testing::case30());
    const double secs = seconds_since(t0);
    const bool pass = std::abs(r14 - tol::kNoise14) <= tol::kNoiseRelative * tol::kNoise14 &&
                      std::abs(r30 - tol::kNoise30) <= tol::kNoiseRelative * tol::kNoise30 && secs < tol::kNoiseSeconds;
    return {pass, "14-bus " + num(r14) + " p.u. (target " + num(tol::kNoise14) + "), 30-bus " + num(r30) +
                      " p.u. (target " + num(tol::kNoise30) + ")"};
}

// Desk-scale pipeline shared by 5, 6, 7 and 9 ---------------------------------

struct Model {
    std::string name;
    std::unique_ptr<nn::Denoiser> net;
    diffusion::SampleResult samples;
    eval::ImbalanceSummary imbalance;
    std::array<double, 6> rates{};
    double trace_fraction = 0.0;
    double train_seconds = 0.0;
};

struct Desk {
    grid::NetworkCase network = testing::case14();
    nlohmann::json config = cli::default_config();
    pf::Dataset data;
    grid::AdmittanceMatrix admittance;
    std::unique_ptr<pf::ImbalanceEvaluator> evaluator;
    std::unique_ptr<pf::UnitImbalance> physics;
    diffusion::ImbalanceBound bound;
    diffusion::NoiseSchedule linear, learned;
    std::vector<double> linear_curve, learned_curve;
    double data_seconds = 0.0, schedule_seconds = 0.0;
    std::vector<Model> models;

    Desk() {
        config["seed"] = desk::kSeed;
        config["data"]["n"] = tol::kDeskSamples;
        config["schedule"]["T"] = tol::kSteps;
        auto t0 = Clock::now();
        data = pf::generate_dataset(network, cli::dataset_config(config));
        data_seconds = seconds_since(t0);
        admittance = grid::build_admittance(network);
        evaluator = std::make_unique<pf::ImbalanceEvaluator>(data.layout, admittance);
        physics = std::make_unique<pf::UnitImbalance>(*evaluator, data.bounds);
        const auto& beta = config["training"]["linear_beta"];
        linear = diffusion::linear_beta_schedule(tol::kSteps, beta[0].get<double>(), beta[1].get<double>());
    }

    void train_schedule() {
        const auto t0 = Clock::now();
        auto cfg = cli::schedule_config(config);
        cfg.gamma_terminal = schedule::measure_noise_imbalance(*physics, config["schedule"]["noise_draws"].get<std::size_t>(),
                                                               desk::kSeed);
        Rng rng = Rng::stream(desk::kSeed, "schedule");
        const auto result = schedule::train_schedule(data.unit, *physics, cfg, rng);
        learned = result.schedule;
        bound = result.bound;
        schedule_seconds = seconds_since(t0);
        linear_curve = schedule::forward_imbalance_curve(data.unit, linear, *physics, tol::kCurveDraws, 1);
        learned_curve = schedule::forward_imbalance_curve(data.unit, learned, *physics, tol::kCurveDraws, 1);
        eval::write_curve_csv("acceptance_linear_curve.csv", linear_curve, bound);
        eval::write_curve_csv("acceptance_learned_curve.csv", learned_curve, bound);
        diffusion::save_schedule("acceptance_schedule.json", learned, bound);
    }

    Model& train_model(const std::string& name, const diffusion::NoiseSchedule& schedule, double eta) {
        nn::DenoiserConfig mc = cli::denoiser_config(config, static_cast<Eigen::Index>(data.dim()));
        mc.widths = desk::kWidths;
        diffusion::TrainingConfig tc = cli::training_config(config);
        tc.eta = eta;
        tc.batch_size = desk::kBatch;
        tc.adam.learning_rate = desk::kLearningRate;

        Model m;
        m.name = name;
        const auto t0 = Clock::now();
        Rng init = Rng::stream(desk::kSeed, "ddpm", 0);
        m.net = std::make_unique<nn::Denoiser>(mc, init);
        diffusion::DdpmTrainer trainer(*m.net, schedule, bound, eta > 0 ? physics.get() : nullptr, tc);
        Rng rng = Rng::stream(desk::kSeed, "ddpm", 1);
        trainer.train(data.unit, rng, desk::kTrainSteps);
        m.train_seconds = seconds_since(t0);

        diffusion::SamplerConfig sc;
        sc.n = tol::kGenerated;
        sc.seed = desk::kSeed;
        m.samples = diffusion::sample(*m.net, schedule, *physics, sc);
        m.imbalance = eval::mean_imbalance(m.samples.physical, *evaluator);
        m.rates = eval::constraint_satisfaction(m.samples.physical, data.layout, admittance, network);
        m.trace_fraction = eval::reverse_trace_check(m.samples.trace, bound);
        eval::write_curve_csv("acceptance_trace_" + name + ".csv", m.samples.trace, bound);
        std::cout << "  trained " << name << ": mean R " << num(m.imbalance.mean) << " p.u., trace fraction "
                  << num(m.trace_fraction) << "  [" << num(m.train_seconds) << " s]" << std::endl;
        models.push_back(std::move(m));
        return models.back();
    }

    const Model& model(const std::string& name) const {
        for (const auto& m : models)
            if (m.name == name) return m;
        throw std::runtime_error("model " + name + " was not trained");
    }
};

std::unique_ptr<Desk> desk_state;

Desk& desk_setup() {
    if (!desk_state) {
        desk_state = std::make_unique<Desk>();
        std::cout << "  desk dataset: " << desk_state->data.size() << " samples  [" << num(desk_state->data_seconds)
                  << " s]" << std::endl;
    }
    return *desk_state;
}

// 5 ---------------------------------------------------------------------------

std::pair<bool, std::string> auxiliary_training() {
    auto& d = desk_setup();
    d.train_schedule();
    const auto lin = eval::linearity_score(d.linear_curve, d.bound);
    const auto lrn = eval::linearity_score(d.learned_curve, d.bound);
    const double gamma = d.bound.gamma_terminal;
    const double half = d.linear_curve[tol::kSteps / 2] / gamma;
    double band = 0.0;
    for (int t = 0; t <= tol::kSteps; ++t)
        band = std::max(band, std::abs(d.learned_curve[static_cast<std::size_t>(t)] - d.bound.at(t)) / gamma);
    const bool pass = lin.rmse >= tol::kLinearityRatio * lrn.rmse && half > tol::kBaselineHalfFraction &&
                      band <= tol::kLearnedBand;
    return {pass, "linearity RMSE learned " + num(lrn.rmse) + " vs linear " + num(lin.rmse) + " p.u. (ratio " +
                      num(lin.rmse / lrn.rmse) + "), linear curve at T/2 " + num(100 * half) +
                      "% of gamma_T, learned max deviation " + num(100 * band) + "% of gamma_T (gamma_T " +
                      num(gamma) + ")"};
}

// 6 ---------------------------------------------------------------------------

std::pair<bool, std::string> ablation_ordering() {
    auto& d = desk_setup();
    if (d.learned.steps() == 0) throw std::runtime_error("learned schedule unavailable");
    const double proposed = d.train_model("proposed", d.learned, 1.0).imbalance.mean;
    const double physics_linear = d.train_model("physics_linear", d.linear, 1.0).imbalance.mean;
    const double no_physics = d.train_model("no_physics", d.linear, 0.0).imbalance.mean;
    const bool pass = proposed < physics_linear && physics_linear < no_physics && proposed <= tol::kProposedCeiling;
    return {pass, "mean R proposed " + num(proposed) + " < physics+linear " + num(physics_linear) + " < no physics " +
                      num(no_physics) + " p.u.; proposed ceiling " + num(tol::kProposedCeiling)};
}

// 7 ---------------------------------------------------------------------------

std::pair<bool, std::string> feasibility() {
    const auto& m = desk_setup().model("proposed");
    const bool box = m.rates[0] == 1.0 && m.rates[1] == 1.0 && m.rates[2] == 1.0 && m.rates[3] == 1.0;
    const bool pass = box && m.rates[5] >= tol::kLineFlowRate;
    return {pass, "C1-C4 rates " + num(m.rates[0]) + " " + num(m.rates[1]) + " " + num(m.rates[2]) + " " +
                      num(m.rates[3]) + ", C6 rate " + num(m.rates[5])};
}

// 8 ---------------------------------------------------------------------------

struct GradientTally {
    int checked = 0;
    double worst = 0.0;
    void add(double analytic, double numeric) {
        ++checked;
        worst = std::max(worst, testing::relative_error(analytic, numeric, tol::kGradientFloor));
    }
};

std::pair<bool, std::string> gradient_suite() {
    const auto net = testing::case14();
    pf::DatasetConfig dc;
    dc.n = 32;
    dc.seed = 3;
    const auto data = pf::generate_dataset(net, dc);
    const pf::ImbalanceEvaluator ev(data.layout, grid::build_admittance(net));
    const pf::UnitImbalance unit(ev, data.bounds);
    const auto dim = static_cast<Eigen::Index>(data.dim());
    const double gamma = schedule::measure_noise_imbalance(unit, 1024, 0);
    const double h = tol::kGradientStep;
    Rng rng(21);

    auto normals = [&](Eigen::Index r, Eigen::Index c) {
        Eigen::MatrixXd m(r, c);
        for (Eigen::Index j = 0; j < c; ++j)
            for (Eigen::Index i = 0; i < r; ++i) m(i, j) = rng.normal();
        return m;
    };

    // DDPM and physics losses of a small denoiser, both prediction modes.
    GradientTally ddpm, phys, aux;
    const auto sched = diffusion::linear_beta_schedule(tol::kSteps, 1e-4, 0.05);
    for (auto mode : {nn::Prediction::x0, nn::Prediction::epsilon}) {
        nn::DenoiserConfig mc;
        mc.dim = dim;
        mc.widths = {32, 16, 32};
        mc.time_width = 16;
        mc.prediction = mode;
        nn::Denoiser model(mc, rng);
        diffusion::TrainingConfig tc;
        tc.eta = 0.0;
        diffusion::DdpmTrainer plain(model, sched, {tol::kSteps, gamma}, nullptr, tc);
        tc.eta = 1.0;
        // A tight budget keeps every hinge on its linear branch.
        diffusion::DdpmTrainer hinged(model, sched, {tol::kSteps, 1e-6}, &unit, tc);
        const Eigen::Index b = 8;
        const Eigen::MatrixXd x0 = data.unit.leftCols(b);
        const Eigen::MatrixXd eps = normals(dim, b);
        const std::vector<int> steps{1, 2, 7, 30, 75, 120, 180, 200};

        nn::ParamStore g_ddpm = model.params().zeros_like(), g_total = model.params().zeros_like();
        plain.compute(x0, steps, eps, &g_ddpm);
        const auto base = hinged.compute(x0, steps, eps, &g_total);
        if (!(base.physics > 0.0)) throw std::runtime_error("physics hinge inactive");
        for (int c = 0; c < tol::kGradientCoordinates; ++c) {
            const std::size_t k = rng.index(model.params().scalar_count());
            double& p = model.params().scalar(k);
            const double saved = p;
            p = saved + h;
            const auto up = hinged.compute(x0, steps, eps, nullptr);
            p = saved - h;
            const auto down = hinged.compute(x0, steps, eps, nullptr);
            p = saved;
            ddpm.add(g_ddpm.scalar(k), (up.ddpm - down.ddpm) / (2 * h));
            phys.add(g_total.scalar(k) - g_ddpm.scalar(k), (up.physics - down.physics) / (2 * h));
        }
    }

    // Auxiliary schedule loss.
    nn::ScheduleNet snet({dim, {64, 32}, tol::kSteps}, rng, sched.alpha);
    const schedule::AuxLoss loss(unit, {tol::kSteps, gamma});
    const Eigen::MatrixXd x0 = data.unit.leftCols(6);
    const Eigen::MatrixXd eps = normals(dim, 6);
    nn::ParamStore g_aux = snet.params().zeros_like();
    schedule::aux_loss(snet, x0, eps, loss, &g_aux);
    for (int c = 0; c < tol::kGradientCoordinates; ++c) {
        const std::size_t k = rng.index(snet.params().scalar_count());
        double& p = snet.params().scalar(k);
        const double saved = p;
        p = saved + h;
        const double up = schedule::aux_loss(snet, x0, eps, loss).loss;
        p = saved - h;
        const double down = schedule::aux_loss(snet, x0, eps, loss).loss;
        p = saved;
        aux.add(g_aux.scalar(k), (up - down) / (2 * h));
    }

    const bool pass = ddpm.checked >= 20 && phys.checked >= 20 && aux.checked >= 20 &&
                      std::max({ddpm.worst, phys.worst, aux.worst}) <= tol::kGradientRelative;
    return {pass, "max relative error: DDPM loss " + num(ddpm.worst) + " (" + std::to_string(ddpm.checked) +
                      " coords), physics hinge " + num(phys.worst) + " (" + std::to_string(phys.checked) +
                      " coords), schedule loss " + num(aux.worst) + " (" + std::to_string(aux.checked) + " coords)"};
}

// 9 ---------------------------------------------------------------------------

std::pair<bool, std::string> reverse_trace() {
    const auto& m = desk_setup().model("proposed");
    return {m.trace_fraction >= tol::kTraceFraction,
            "fraction of steps with R(x_t) <= gamma_t: " + num(m.trace_fraction) + " (need " +
                num(tol::kTraceFraction) + ")"};
}

// 10 --------------------------------------------------------------------------

std::string bytes_of(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error("missing artifact " + p.string());
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::pair<bool, std::string> determinism() {
    const fs::path root = fs::temp_directory_path() / "pfdiff_acceptance_determinism";
    fs::remove_all(root);
    auto base = cli::default_config();
    base.merge_patch(nlohmann::json::parse(R"({
      "seed": 5,
      "data": {"n": 300},
      "schedule": {"max_epochs": 2, "batch_size": 128, "hidden": [64, 32], "noise_draws": 1024},
      "model": {"widths": [32, 16, 32], "time_width": 16},
      "training": {"steps": 40, "batch_size": 64},
      "sampling": {"n": 50},
      "evaluation": {"curve_draws": 16}
    })"));
    base["case"] = testing::data_file("case14.m");

    const std::vector<std::string> artifacts{"data.bin", "data.bin.json", "schedule.json", "model.ckpt",
                                             "synth.bin", "synth.bin.json", "synth.bin.trace.csv"};
    std::vector<std::vector<std::string>> runs;
    for (int r = 0; r < 2; ++r) {
        const fs::path dir = root / ("run" + std::to_string(r));
        fs::create_directories(dir);
        auto at = [&](const std::string& name) {
            auto c = base;
            c["out"] = (dir / name).string();
            return c;
        };
        cli::cmd_gen_data(at("data.bin"));
        cli::cmd_train_schedule(at("schedule.json"), {dir / "data.bin", 2});
        auto ddpm = at("model.ckpt");
        ddpm["training"]["schedule"] = "learned:" + (dir / "schedule.json").string();
        cli::cmd_train_ddpm(ddpm, {dir / "data.bin", std::nullopt});
        cli::cmd_sample(at("synth.bin"), {dir / "model.ckpt"});
        std::vector<std::string> bytes;
        for (const auto& a : artifacts) bytes.push_back(bytes_of(dir / a));
        runs.push_back(std::move(bytes));
    }
    std::string differing;
    for (std::size_t i = 0; i < artifacts.size(); ++i) {
        std::string a = runs[0][i], b = runs[1][i];
        // sidecars and checkpoints name their own location; compare with the run directory masked
        for (auto* s : {&a, &b})
            for (const std::string& dir : {(root / "run0").string(), (root / "run1").string()})
                for (std::size_t pos; (pos = s->find(dir)) != std::string::npos;) s->replace(pos, dir.size(), "<run>");
        if (a != b) differing += " " + artifacts[i];
    }
    fs::remove_all(root);
    return {differing.empty(), differing.empty() ? "gen-data, train-schedule, train-ddpm and sample artifacts identical "
                                                   "across two seeded runs (" +
                                                       std::to_string(artifacts.size()) + " files)"
                                                 : "differing:" + differing};
}

}  // namespace

int main() {
    std::cout << "acceptance run (desk scale: " << tol::kDeskSamples << " IEEE 14-bus samples, T = " << tol::kSteps
              << ", " << desk::kTrainSteps << " denoiser steps per model)" << std::endl;
    run(1, residual_oracle);
    run(2, solver_correctness);
    run(3, schedule_sanity);
    run(4, noise_endpoint);
    run(5, auxiliary_training);
    run(6, ablation_ordering);
    run(7, feasibility);
    run(8, gradient_suite);
    run(9, reverse_trace);
    run(10, determinism);

    std::ofstream("acceptance_summary.json") << summary.dump(2) << '\n';
    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
    return failures == 0 ? 0 : 1;
}
