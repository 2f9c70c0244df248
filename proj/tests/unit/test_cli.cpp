#include <doctest.h>

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "commands.h"
#include "config.h"
#include "pfdiff/common/error.h"
#include "pfdiff/diffusion/noise_schedule.h"
#include "pfdiff/eval/report.h"
#include "pfdiff/nn/checkpoint.h"
#include "pfdiff/pf/dataset.h"
#include "test_support.h"

using namespace pfdiff;
using namespace pfdiff::cli;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

/// Scratch directory holding the three-bus case and a tiny pipeline config.
struct Workspace {
    fs::path dir;
    json config;

    explicit Workspace(const std::string& name) : dir(fs::temp_directory_path() / ("pfdiff_cli_" + name)) {
        fs::remove_all(dir);
        fs::create_directories(dir);
        std::ofstream(dir / "three.json") << testing::kThreeBus;
        config = default_config();
        config.merge_patch(json::parse(R"({
          "data": {"n": 60},
          "schedule": {"T": 10, "hidden": [16], "batch_size": 32, "noise_draws": 256,
                       "init_beta": [0.01, 0.5], "checks": {"max_terminal": 0.9}},
          "model": {"widths": [16, 8, 16], "time_width": 8, "token_dim": 2},
          "training": {"steps": 10, "batch_size": 16, "linear_beta": [0.01, 0.5], "log_every": 1},
          "sampling": {"n": 12, "block": 8},
          "evaluation": {"curve_draws": 32}
        })"));
        config["case"] = (dir / "three.json").string();
    }
    ~Workspace() { fs::remove_all(dir); }

    json with_out(const std::string& name) const {
        json c = config;
        c["out"] = (dir / name).string();
        return c;
    }
    fs::path operator/(const std::string& name) const { return dir / name; }
};

int run_cli(const std::string& args) {
    const std::string cmd = std::string(PFDIFF_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

/// Tensor payload of a checkpoint, i.e. everything after the JSON header.
std::string checkpoint_tensors(const fs::path& p) {
    const std::string bytes = slurp(p);
    std::uint64_t header = 0;
    std::memcpy(&header, bytes.data() + 8, sizeof header);
    return bytes.substr(16 + header);
}

std::size_t csv_rows(const fs::path& p) {
    std::ifstream in(p);
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) ++n;
    return n - 1;
}

}  // namespace

TEST_CASE("shipped default config matches the built-in defaults") {
    std::ifstream in(fs::path(PFDIFF_CONFIG_DIR) / "default.json");
    REQUIRE(in.good());
    CHECK(json::parse(in) == default_config());
    const auto d = default_config();
    CHECK(d["schema_version"] == kConfigSchemaVersion);
    CHECK(d["schedule"]["T"] == 200);
    CHECK(d["schedule"]["batch_size"] == 1024);
    CHECK(d["training"]["eta"] == 1.0);
    CHECK(d["data"]["n"] == 70000);
    CHECK(d["sampling"]["n"] == 500);
}

TEST_CASE("schedule choice parsing") {
    CHECK_FALSE(parse_schedule_choice("linear").learned);
    const auto c = parse_schedule_choice("learned:out/s.json");
    CHECK(c.learned);
    CHECK(c.path == fs::path("out/s.json"));
    CHECK_THROWS_AS(parse_schedule_choice("learned:"), ValidationError);
    CHECK_THROWS_AS(parse_schedule_choice("cosine"), ValidationError);
}

TEST_CASE("config layering") {
    Workspace ws("config");
    std::ofstream(ws / "patch.json") << R"({"seed": 9, "training": {"eta": 0.5}})";
    auto c = load_config(ws / "patch.json");
    CHECK(c["seed"] == 9);
    CHECK(c["training"]["eta"] == 0.5);
    CHECK(c["training"]["steps"] == default_config()["training"]["steps"]);

    setenv("PFDIFF_SEED", "17", 1);
    setenv("PFDIFF_N", "33", 1);
    setenv("PFDIFF_SCHEDULE", "learned:x.json", 1);
    c = load_config(ws / "patch.json");
    unsetenv("PFDIFF_SEED");
    unsetenv("PFDIFF_N");
    unsetenv("PFDIFF_SCHEDULE");
    CHECK(c["seed"] == 17);
    CHECK(c["data"]["n"] == 33);
    CHECK(c["sampling"]["n"] == 33);
    CHECK(c["training"]["schedule"] == "learned:x.json");

    setenv("PFDIFF_ETA", "abc", 1);
    CHECK_THROWS_AS(load_config(std::nullopt), ValidationError);
    unsetenv("PFDIFF_ETA");

    std::ofstream(ws / "future.json") << R"({"schema_version": 99})";
    CHECK_THROWS_AS(load_config(ws / "future.json"), ValidationError);
    std::ofstream(ws / "broken.json") << "{ seed: ";
    CHECK_THROWS_AS(load_config(ws / "broken.json"), ParseError);
    CHECK_THROWS_AS(load_config(ws / "absent.json"), IoError);

    json neg = default_config();
    neg["training"]["eta"] = -1.0;
    CHECK_THROWS_AS(training_config(neg), ValidationError);
    CHECK(denoiser_config(default_config(), 60).dim == 60);
}

TEST_CASE("pipeline end to end") {
    Workspace ws("pipeline");

    cmd_gen_data(ws.with_out("data.bin"));
    const auto data = pf::load_dataset(ws / "data.bin");
    CHECK(data.size() == 60);
    CHECK(data.meta.contains("network"));
    CHECK(fs::exists(ws / "data.bin.log.json"));
    cmd_gen_data(ws.with_out("data2.bin"));
    CHECK(slurp(ws / "data.bin") == slurp(ws / "data2.bin"));

    cmd_train_schedule(ws.with_out("schedule.json"), {ws / "data.bin", 3});
    diffusion::ImbalanceBound bound;
    const auto sched = diffusion::load_schedule(ws / "schedule.json", &bound);
    CHECK(sched.steps() == 10);
    CHECK(bound.gamma_terminal > 0.0);
    CHECK(csv_rows(ws / "schedule.json.log.csv") == 3);
    CHECK(eval::read_curve_csv(ws / "schedule.json.curve.csv").size() == 11);
    CHECK(eval::read_curve_csv(ws / "schedule.json.linear_curve.csv").size() == 11);

    auto cfg = ws.with_out("model.ckpt");
    cfg["training"]["schedule"] = "learned:" + (ws / "schedule.json").string();
    cmd_train_ddpm(cfg, {ws / "data.bin", std::nullopt});
    const auto header = nn::read_checkpoint_header(ws / "model.ckpt");
    CHECK(header["meta"]["step"] == 10);
    CHECK(header["meta"]["schedule"]["kind"] == "learned");
    CHECK(csv_rows(ws / "model.ckpt.log.csv") == 10);

    cmd_sample(ws.with_out("synth.bin"), {ws / "model.ckpt"});
    const auto synth = pf::load_dataset(ws / "synth.bin");
    CHECK(synth.size() == 12);
    CHECK(synth.meta["generator_of_record"] == "ddpm");
    CHECK(eval::read_curve_csv(ws / "synth.bin.trace.csv").size() == 11);
    cmd_sample(ws.with_out("synth2.bin"), {ws / "model.ckpt"});
    CHECK(slurp(ws / "synth.bin") == slurp(ws / "synth2.bin"));

    EvaluateArgs ev{ws / "synth.bin", ws / "data.bin", ws / "schedule.json.curve.csv", ""};
    cmd_evaluate(ws.with_out("report.json"), ev);
    const auto report = json::parse(slurp(ws / "report.json"));
    CHECK(report["schema_version"] == eval::kReportSchemaVersion);
    CHECK(report["model_tag"] == "ddpm");
    CHECK(report["constraint_rates"].size() == 6);
    CHECK(report["fidelity"]["w1"].size() == data.dim());
    CHECK(report["fidelity_noise_floor"].is_object());
    CHECK(report["linearity"].is_object());
    CHECK(report["trace_fraction"].is_number());
    CHECK(report["constraint_rates"]["C1_p_gen"] == 1.0);

    // real versus itself sits on the noise floor
    cmd_evaluate(ws.with_out("self.json"), {ws / "data.bin", ws / "data.bin", std::nullopt, "real"});
    const auto self = json::parse(slurp(ws / "self.json"));
    CHECK(self["fidelity"]["mean_w1"] == 0.0);
    CHECK(self["mean_imbalance"]["mean"].get<double>() < 1e-8);
    for (const auto& [name, rate] : self["constraint_rates"].items()) CHECK(rate == 1.0);
}

TEST_CASE("resume continues the step counter and the trajectory") {
    Workspace ws("resume");
    cmd_gen_data(ws.with_out("data.bin"));

    auto straight = ws.with_out("straight.ckpt");
    straight["training"]["steps"] = 15;
    cmd_train_ddpm(straight, {ws / "data.bin", std::nullopt});

    cmd_train_ddpm(ws.with_out("part.ckpt"), {ws / "data.bin", std::nullopt});
    auto more = ws.with_out("part.ckpt");
    more["training"]["steps"] = 5;
    cmd_train_ddpm(more, {ws / "data.bin", ws / "part.ckpt"});
    CHECK(nn::read_checkpoint_header(ws / "part.ckpt")["meta"]["step"] == 15);
    CHECK(checkpoint_tensors(ws / "part.ckpt") == checkpoint_tensors(ws / "straight.ckpt"));
    CHECK(nn::read_checkpoint_header(ws / "part.ckpt")["meta"]["rng_state"] ==
          nn::read_checkpoint_header(ws / "straight.ckpt")["meta"]["rng_state"]);

    std::ifstream log(ws / "part.ckpt.log.csv");
    std::string line;
    std::getline(log, line);
    int last = 0, rows = 0;
    while (std::getline(log, line)) {
        const int step = std::stoi(line.substr(0, line.find(',')));
        CHECK(step > last);
        last = step;
        ++rows;
    }
    CHECK(rows == 15);
    CHECK(last == 15);

    CHECK_THROWS_AS(cmd_train_ddpm(ws.with_out("x.ckpt"), {ws / "data.bin", ws / "data.bin"}), IoError);
}

TEST_CASE("command errors") {
    Workspace ws("errors");
    auto zero = ws.with_out("d.bin");
    zero["data"]["n"] = 0;
    CHECK_THROWS_AS(cmd_gen_data(zero), ValidationError);
    CHECK_THROWS_AS(cmd_train_schedule(ws.config, {ws / "missing.bin", std::nullopt}), IoError);
    CHECK_THROWS_AS(cmd_sample(ws.config, {ws / "missing.ckpt"}), IoError);
    auto bad_case = ws.with_out("d.bin");
    bad_case["case"] = (ws / "nope.m").string();
    CHECK_THROWS_AS(cmd_gen_data(bad_case), IoError);
}

TEST_CASE("executable exit codes") {
    Workspace ws("exit");
    const std::string c = " --case " + (ws / "three.json").string();
    CHECK(run_cli("print-config") == 0);
    CHECK(run_cli("") == 2);
    CHECK(run_cli("gen-data --bogus") == 2);
    CHECK(run_cli("gen-data --n 0" + c) == 2);
    CHECK(run_cli("train-schedule --data " + (ws / "missing.bin").string()) == 4);
    CHECK(run_cli("gen-data --n 5" + c + " --out " + (ws / "d.bin").string()) == 0);
    CHECK(pf::load_dataset(ws / "d.bin").size() == 5);
    CHECK(run_cli("train-ddpm --eta -1 --data " + (ws / "d.bin").string()) == 2);
}
