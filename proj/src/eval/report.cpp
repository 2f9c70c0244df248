#include "pfdiff/eval/report.h"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "pfdiff/common/error.h"

namespace pfdiff::eval {

namespace {

const char* kConstraintNames[6] = {"C1_p_gen", "C2_q_gen", "C3_v_magnitude", "C4_v_angle", "C5_power_balance",
                                   "C6_line_flow"};

nlohmann::json fidelity_json(const FidelityReport& f) {
    return {{"mean_w1", f.mean_w1},
            {"max_w1", f.max_w1},
            {"mean_ks", f.mean_ks},
            {"max_ks", f.max_ks},
            {"mean_support_extension", f.mean_support_extension},
            {"w1", f.w1},
            {"ks", f.ks},
            {"support_extension", f.support_extension}};
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

}  // namespace

nlohmann::json make_report(const ReportInputs& in) {
    nlohmann::json r;
    r["schema_version"] = kReportSchemaVersion;
    r["grid"] = in.grid;
    r["model_tag"] = in.model_tag;
    r["mean_imbalance"] = {{"mean", in.imbalance.mean},
                           {"median", in.imbalance.median},
                           {"p95", in.imbalance.p95},
                           {"samples", in.imbalance.per_sample.size()}};
    for (std::size_t c = 0; c < 6; ++c) r["constraint_rates"][kConstraintNames[c]] = in.constraint_rates[c];
    r["fidelity"] = in.fidelity ? fidelity_json(*in.fidelity) : nlohmann::json();
    r["fidelity_noise_floor"] = in.noise_floor ? fidelity_json(*in.noise_floor) : nlohmann::json();
    r["linearity"] = in.linearity ? nlohmann::json{{"rmse", in.linearity->rmse}, {"max_deviation", in.linearity->max_deviation}}
                                  : nlohmann::json();
    r["trace_fraction"] = in.trace_fraction ? nlohmann::json(*in.trace_fraction) : nlohmann::json();
    r["seeds"] = in.seeds;
    return r;
}

std::string format_report(const nlohmann::json& r) {
    std::ostringstream out;
    out << "grid            " << r.value("grid", "") << "\n";
    out << "model           " << r.value("model_tag", "") << "\n";
    const auto& m = r.at("mean_imbalance");
    out << "imbalance p.u.  mean " << fmt(m.at("mean").get<double>()) << "  median " << fmt(m.at("median").get<double>())
        << "  p95 " << fmt(m.at("p95").get<double>()) << "\n";
    for (const auto& [name, rate] : r.at("constraint_rates").items())
        out << "  " << name << std::string(18 - std::min<std::size_t>(name.size(), 17), ' ') << fmt(rate.get<double>())
            << "\n";
    if (!r.at("fidelity").is_null())
        out << "fidelity        mean W1 " << fmt(r["fidelity"]["mean_w1"].get<double>()) << "  mean KS "
            << fmt(r["fidelity"]["mean_ks"].get<double>()) << "  support ext "
            << fmt(r["fidelity"]["mean_support_extension"].get<double>()) << "\n";
    if (!r.at("fidelity_noise_floor").is_null())
        out << "noise floor     mean W1 " << fmt(r["fidelity_noise_floor"]["mean_w1"].get<double>()) << "  mean KS "
            << fmt(r["fidelity_noise_floor"]["mean_ks"].get<double>()) << "\n";
    if (!r.at("linearity").is_null())
        out << "linearity       rmse " << fmt(r["linearity"]["rmse"].get<double>()) << "  max "
            << fmt(r["linearity"]["max_deviation"].get<double>()) << "\n";
    if (!r.at("trace_fraction").is_null())
        out << "trace fraction  " << fmt(r["trace_fraction"].get<double>()) << "\n";
    return out.str();
}

void write_curve_csv(const std::filesystem::path& path, const std::vector<double>& curve,
                     const diffusion::ImbalanceBound& bound) {
    if (static_cast<int>(curve.size()) != bound.steps + 1) throw DimensionError("curve must cover t = 0..T");
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "t,gamma,R\n";
    char buf[64];
    for (int t = 0; t <= bound.steps; ++t) {
        out << t;
        for (double v : {bound.at(t), curve[static_cast<std::size_t>(t)]}) {
            auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
            out << ',' << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf));
        }
        out << '\n';
    }
    if (!out) throw IoError("failed writing " + path.string());
}

std::vector<double> read_curve_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("curve not found: " + path.string());
    std::string line;
    std::getline(in, line);
    std::vector<double> curve;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto pos = line.rfind(',');
        double v = 0.0;
        if (pos == std::string::npos ||
            std::from_chars(line.data() + pos + 1, line.data() + line.size(), v).ec != std::errc())
            throw IoError("malformed curve row: " + line);
        curve.push_back(v);
    }
    return curve;
}

}  // namespace pfdiff::eval
