#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace pfdiff::diffusion {

inline constexpr int kScheduleSchemaVersion = 1;

enum class ScheduleKind { linear, learned };
std::string to_string(ScheduleKind kind);

/// Per-step noise parameters for t = 1..T, stored at index t - 1.
struct NoiseSchedule {
    ScheduleKind kind = ScheduleKind::linear;
    std::vector<double> beta, alpha, alpha_bar, sigma;

    int steps() const { return static_cast<int>(beta.size()); }
    double beta_at(int t) const { return beta[static_cast<std::size_t>(t - 1)]; }
    double alpha_at(int t) const { return alpha[static_cast<std::size_t>(t - 1)]; }
    double alpha_bar_at(int t) const { return t == 0 ? 1.0 : alpha_bar[static_cast<std::size_t>(t - 1)]; }
    double sigma_at(int t) const { return sigma[static_cast<std::size_t>(t - 1)]; }
};

/// beta_t linear from beta_1 to beta_T. Requires 0 < beta_1 <= beta_T < 1.
NoiseSchedule linear_beta_schedule(int steps, double beta_first, double beta_last);

/// Schedule with the given cumulative products; beta_t = 1 - abar_t / abar_{t-1}.
NoiseSchedule schedule_from_alpha_bar(const std::vector<double>& alpha_bar, ScheduleKind kind = ScheduleKind::learned);

struct ScheduleChecks {
    double max_first_gap = 0.05;     ///< require alpha_bar_1 >= 1 - max_first_gap
    double max_terminal = 0.05;      ///< require alpha_bar_T <= max_terminal
};

/// Throws ValidationError naming the first offending t when beta leaves
/// (0, 1), alpha_bar is not strictly decreasing, or the endpoints fail.
void validate_schedule(const NoiseSchedule& schedule, const ScheduleChecks& checks = {});

/// Linear imbalance budget gamma_t = t * gamma_T / T for t in [0, T].
struct ImbalanceBound {
    int steps = 0;
    double gamma_terminal = 0.0;

    double at(int t) const;
    std::vector<double> sequence() const;  ///< gamma_0 .. gamma_T
};

double gamma_bound(int t, int steps, double gamma_terminal);

/// {"schema_version", "kind", "T", "gamma_T", "entries": [{t, beta, alpha_bar, gamma}]}
nlohmann::json schedule_to_json(const NoiseSchedule& schedule, const ImbalanceBound& bound);
NoiseSchedule schedule_from_json(const nlohmann::json& j, ImbalanceBound* bound = nullptr);
void save_schedule(const std::filesystem::path& path, const NoiseSchedule& schedule, const ImbalanceBound& bound);
NoiseSchedule load_schedule(const std::filesystem::path& path, ImbalanceBound* bound = nullptr);

}  // namespace pfdiff::diffusion
