#include "pfdiff/diffusion/noise_schedule.h"

#include <cmath>
#include <fstream>

#include "pfdiff/common/error.h"

namespace pfdiff::diffusion {

std::string to_string(ScheduleKind kind) { return kind == ScheduleKind::linear ? "linear" : "learned"; }

namespace {

NoiseSchedule from_beta(std::vector<double> beta, ScheduleKind kind) {
    NoiseSchedule s;
    s.kind = kind;
    double prod = 1.0;
    for (double b : beta) {
        s.alpha.push_back(1.0 - b);
        prod *= 1.0 - b;
        s.alpha_bar.push_back(prod);
        s.sigma.push_back(std::sqrt(b));
    }
    s.beta = std::move(beta);
    return s;
}

}  // namespace

NoiseSchedule linear_beta_schedule(int steps, double beta_first, double beta_last) {
    if (steps < 1) throw ValidationError("schedule needs at least one step");
    if (!(beta_first > 0.0 && beta_first <= beta_last && beta_last < 1.0))
        throw ValidationError("linear schedule requires 0 < beta_1 <= beta_T < 1");
    std::vector<double> beta(static_cast<std::size_t>(steps));
    for (int t = 1; t <= steps; ++t)
        beta[static_cast<std::size_t>(t - 1)] =
            steps == 1 ? beta_first : beta_first + (beta_last - beta_first) * (t - 1) / (steps - 1);
    return from_beta(std::move(beta), ScheduleKind::linear);
}

NoiseSchedule schedule_from_alpha_bar(const std::vector<double>& alpha_bar, ScheduleKind kind) {
    if (alpha_bar.empty()) throw ValidationError("schedule needs at least one step");
    NoiseSchedule s;
    s.kind = kind;
    double prev = 1.0;
    for (std::size_t i = 0; i < alpha_bar.size(); ++i) {
        const double a = alpha_bar[i] / prev;
        s.alpha.push_back(a);
        s.beta.push_back(1.0 - a);
        s.sigma.push_back(std::sqrt(std::max(0.0, 1.0 - a)));
        s.alpha_bar.push_back(alpha_bar[i]);
        prev = alpha_bar[i];
    }
    return s;
}

void validate_schedule(const NoiseSchedule& s, const ScheduleChecks& checks) {
    const int T = s.steps();
    if (T < 1) throw ValidationError("empty schedule");
    for (int t = 1; t <= T; ++t) {
        const double b = s.beta_at(t);
        if (!(b > 0.0 && b < 1.0))
            throw ValidationError("beta out of (0, 1) at t = " + std::to_string(t) + " (" + std::to_string(b) + ")");
        if (!(s.alpha_bar_at(t) < s.alpha_bar_at(t - 1)) || !(s.alpha_bar_at(t) > 0.0))
            throw ValidationError("alpha_bar not strictly decreasing at t = " + std::to_string(t));
    }
    if (s.alpha_bar_at(1) < 1.0 - checks.max_first_gap)
        throw ValidationError("alpha_bar_1 = " + std::to_string(s.alpha_bar_at(1)) + " is too far from 1 at t = 1");
    if (s.alpha_bar_at(T) > checks.max_terminal)
        throw ValidationError("alpha_bar_T = " + std::to_string(s.alpha_bar_at(T)) + " is too far from 0 at t = " +
                              std::to_string(T));
}

double gamma_bound(int t, int steps, double gamma_terminal) {
    if (steps < 1 || t < 0 || t > steps) throw ValidationError("gamma index outside [0, T]");
    return t * gamma_terminal / steps;
}

double ImbalanceBound::at(int t) const { return gamma_bound(t, steps, gamma_terminal); }

std::vector<double> ImbalanceBound::sequence() const {
    std::vector<double> g;
    for (int t = 0; t <= steps; ++t) g.push_back(at(t));
    return g;
}

nlohmann::json schedule_to_json(const NoiseSchedule& s, const ImbalanceBound& bound) {
    nlohmann::json j;
    j["schema_version"] = kScheduleSchemaVersion;
    j["kind"] = to_string(s.kind);
    j["T"] = s.steps();
    j["gamma_T"] = bound.gamma_terminal;
    auto& e = j["entries"] = nlohmann::json::array();
    for (int t = 1; t <= s.steps(); ++t)
        e.push_back({{"t", t}, {"beta", s.beta_at(t)}, {"alpha_bar", s.alpha_bar_at(t)}, {"gamma", bound.at(t)}});
    return j;
}

NoiseSchedule schedule_from_json(const nlohmann::json& j, ImbalanceBound* bound) {
    try {
        if (j.value("schema_version", 0) != kScheduleSchemaVersion)
            throw ValidationError("unsupported schedule schema version");
        std::vector<double> beta;
        std::vector<double> alpha_bar;
        int expected = 1;
        for (const auto& e : j.at("entries")) {
            if (e.at("t").get<int>() != expected++) throw ValidationError("schedule entries must list t = 1..T in order");
            beta.push_back(e.at("beta").get<double>());
            alpha_bar.push_back(e.at("alpha_bar").get<double>());
        }
        if (static_cast<int>(beta.size()) != j.at("T").get<int>()) throw ValidationError("schedule length differs from T");
        const auto kind = j.at("kind").get<std::string>() == "linear" ? ScheduleKind::linear : ScheduleKind::learned;
        // alpha_bar is authoritative; beta is kept for readers of the file.
        NoiseSchedule s = schedule_from_alpha_bar(alpha_bar, kind);
        if (kind == ScheduleKind::linear) {
            s.beta = beta;
            for (std::size_t i = 0; i < beta.size(); ++i) {
                s.alpha[i] = 1.0 - beta[i];
                s.sigma[i] = std::sqrt(beta[i]);
            }
        }
        if (bound) *bound = {s.steps(), j.at("gamma_T").get<double>()};
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed schedule: ") + e.what());
    }
}

void save_schedule(const std::filesystem::path& path, const NoiseSchedule& s, const ImbalanceBound& bound) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << schedule_to_json(s, bound).dump(2) << '\n';
    if (!out) throw IoError("failed writing " + path.string());
}

NoiseSchedule load_schedule(const std::filesystem::path& path, ImbalanceBound* bound) {
    std::ifstream in(path);
    if (!in) throw IoError("schedule not found: " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw IoError("malformed schedule file " + path.string() + ": " + e.what());
    }
    return schedule_from_json(j, bound);
}

}  // namespace pfdiff::diffusion
