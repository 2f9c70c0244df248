#include "pfdiff/pf/dataset.h"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "pfdiff/common/error.h"
#include "pfdiff/common/parallel.h"
#include "pfdiff/common/rng.h"

namespace pfdiff::pf {

using grid::Complex;
using grid::Quantity;

nlohmann::json RejectionStats::to_json() const {
    nlohmann::json by_constraint;
    const char* names[6] = {"C1_p_gen", "C2_q_gen", "C3_v_magnitude", "C4_v_angle", "C5_power_balance", "C6_line_flow"};
    for (std::size_t c = 0; c < 6; ++c) by_constraint[names[c]] = constraint_failures[c];
    return {{"attempts", attempts},
            {"accepted", accepted},
            {"rejection_rate", rate()},
            {"diverged", diverged},
            {"infeasible_dispatch", infeasible_dispatch},
            {"constraint_failures", by_constraint},
            {"repaired", repaired}};
}

namespace {

double slack_q(const grid::NetworkCase& network, const grid::SampleLayout& layout, const std::vector<double>& x,
               double& q_min, double& q_max) {
    const std::size_t slack = network.slack_bus();
    double q = 0.0;
    q_min = q_max = 0.0;
    for (auto g : network.generators_at(slack)) {
        q += x[layout.index(Quantity::q_gen, g)];
        q_min += network.generators[g].qg_min;
        q_max += network.generators[g].qg_max;
    }
    return q;
}

int first_failure(const ConstraintReport& report) {
    for (std::size_t c = 0; c < report.verdicts.size(); ++c)
        if (!report.verdicts[c].satisfied) return static_cast<int>(c);
    return -1;
}

// DC power transfer distribution factors: change of active flow on each
// branch (from -> to) per unit injection at each bus, withdrawn at the slack.
Eigen::MatrixXd dc_ptdf(const grid::NetworkCase& network) {
    const std::size_t n = network.bus_count();
    const std::size_t slack = network.slack_bus();
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (const auto& br : network.branches) {
        if (br.x == 0.0) continue;
        const double s = 1.0 / (br.x * br.tap);
        const auto f = static_cast<Eigen::Index>(br.from), t = static_cast<Eigen::Index>(br.to);
        b(f, f) += s;
        b(t, t) += s;
        b(f, t) -= s;
        b(t, f) -= s;
    }
    b.row(static_cast<Eigen::Index>(slack)).setZero();
    b.col(static_cast<Eigen::Index>(slack)).setZero();
    b(static_cast<Eigen::Index>(slack), static_cast<Eigen::Index>(slack)) = 1.0;
    Eigen::MatrixXd x = b.inverse();
    x.row(static_cast<Eigen::Index>(slack)).setZero();
    x.col(static_cast<Eigen::Index>(slack)).setZero();
    Eigen::MatrixXd ptdf(static_cast<Eigen::Index>(network.branches.size()), static_cast<Eigen::Index>(n));
    for (std::size_t k = 0; k < network.branches.size(); ++k) {
        const auto& br = network.branches[k];
        const double s = br.x == 0.0 ? 0.0 : 1.0 / (br.x * br.tap);
        ptdf.row(static_cast<Eigen::Index>(k)) =
            s * (x.row(static_cast<Eigen::Index>(br.from)) - x.row(static_cast<Eigen::Index>(br.to)));
    }
    return ptdf;
}

// Shifts active generation between one pair of units to relieve the most
// overloaded branch. Returns false when no useful shift exists.
bool redispatch_for_lines(const grid::NetworkCase& network, const grid::AdmittanceMatrix& y,
                          const grid::SampleLayout& layout, const NrResult& solved, const Eigen::MatrixXd& ptdf,
                          double margin, GeneratorSetpoints& sp) {
    std::size_t worst = 0;
    double worst_ratio = 1.0;
    Complex worst_s;
    for (std::size_t k = 0; k < network.branches.size(); ++k) {
        const auto& br = network.branches[k];
        if (br.s_max <= 0.0) continue;
        const Complex vi = std::polar(solved.voltage.vm[br.from], solved.voltage.va[br.from]);
        const Complex vj = std::polar(solved.voltage.vm[br.to], solved.voltage.va[br.to]);
        const Complex yij = y(br.from, br.to);
        const Complex s_from = vi * std::conj(vi - vj) * std::conj(-yij);
        const Complex s_to = vj * std::conj(vj - vi) * std::conj(-yij);
        const double ratio = std::max(std::abs(s_from), std::abs(s_to)) / br.s_max;
        if (ratio > worst_ratio) {
            worst_ratio = ratio;
            worst = k;
            worst_s = std::abs(s_from) >= std::abs(s_to) ? s_from : -s_to;
        }
    }
    if (worst_ratio <= 1.0) return false;
    const auto& br = network.branches[worst];
    const double target = margin * br.s_max;
    if (std::abs(worst_s.imag()) >= target) return false;
    const double needed = std::abs(worst_s.real()) - std::sqrt(target * target - worst_s.imag() * worst_s.imag());
    const double dir = worst_s.real() >= 0.0 ? 1.0 : -1.0;

    const std::size_t ng = network.generators.size();
    std::vector<double> actual(ng);
    for (std::size_t g = 0; g < ng; ++g) actual[g] = solved.sample[layout.index(Quantity::p_gen, g)];
    const auto row = ptdf.row(static_cast<Eigen::Index>(worst));
    std::size_t up = ng, down = ng;
    double up_eff = 0.0, down_eff = 0.0;
    for (std::size_t g = 0; g < ng; ++g) {
        const auto& gen = network.generators[g];
        const double e = dir * row[static_cast<Eigen::Index>(gen.bus)];
        if (actual[g] < gen.pg_max - 1e-9 && (up == ng || e < up_eff)) {
            up = g;
            up_eff = e;
        }
        if (actual[g] > gen.pg_min + 1e-9 && (down == ng || e > down_eff)) {
            down = g;
            down_eff = e;
        }
    }
    if (up == ng || down == ng || up == down || down_eff - up_eff < 0.05) return false;
    const double shift = std::min({needed / (down_eff - up_eff) * 1.05,
                                   network.generators[up].pg_max - actual[up],
                                   actual[down] - network.generators[down].pg_min});
    if (shift <= 0.0) return false;
    for (std::size_t g = 0; g < ng; ++g) sp.p[g] = actual[g];
    sp.p[up] += shift;
    sp.p[down] -= shift;
    return true;
}

// Moves every voltage setpoint by the same amount to pull bus voltages back
// into their band. Returns false when the band cannot be met this way.
bool shift_voltages(const grid::NetworkCase& network, const NrResult& solved, const DispatchOptions& window,
                    double margin, GeneratorSetpoints& sp) {
    double low = 0.0, high = 0.0;
    for (std::size_t i = 0; i < network.bus_count(); ++i) {
        const auto& bus = network.buses[i];
        low = std::max(low, bus.vm_min + margin - solved.voltage.vm[i]);
        high = std::max(high, solved.voltage.vm[i] - (bus.vm_max - margin));
    }
    if ((low > 0.0) == (high > 0.0)) return false;
    const double delta = low > 0.0 ? low : -high;
    bool moved = false;
    for (std::size_t g = 0; g < network.generators.size(); ++g) {
        const auto& bus = network.buses[network.generators[g].bus];
        const double lo = std::max(window.setpoint_vm_low, bus.vm_min);
        const double hi = std::min(window.setpoint_vm_high, bus.vm_max);
        const double v = std::clamp(sp.vm[g] + delta, lo, hi);
        if (v != sp.vm[g]) moved = true;
        sp.vm[g] = v;
    }
    return moved;
}

// Slack reactive output rises with its voltage; bisect the slack setpoint
// toward a point just inside the violated limit.
bool repair_slack(const grid::NetworkCase& network, const grid::AdmittanceMatrix& admittance,
                  const grid::SampleLayout& layout, std::span<const double> pd, std::span<const double> qd,
                  const DatasetConfig& config, GeneratorSetpoints& sp, NrResult& result) {
    double q_min = 0.0, q_max = 0.0;
    const double q = slack_q(network, layout, result.sample, q_min, q_max);
    if (q >= q_min && q <= q_max) return false;
    const std::size_t slack = network.slack_bus();
    const auto& bus = network.buses[slack];
    double lo = std::max(config.dispatch.setpoint_vm_low, bus.vm_min);
    double hi = std::min(config.dispatch.setpoint_vm_high, bus.vm_max);
    const double margin = 0.02 * (q_max - q_min);
    const double target = q < q_min ? q_min + margin : q_max - margin;
    const auto gens = network.generators_at(slack);
    const auto original = sp.vm;
    for (int it = 0; it < 30 && hi - lo > 1e-7; ++it) {
        const double vm = 0.5 * (lo + hi);
        for (auto g : gens) sp.vm[g] = vm;
        NrResult trial;
        try {
            trial = solve_newton_raphson(network, admittance, layout, pd, qd, sp, config.solver, &result.voltage);
        } catch (const NumericError&) {
            break;
        }
        double a = 0.0, b = 0.0;
        const double qt = slack_q(network, layout, trial.sample, a, b);
        if (qt >= q_min && qt <= q_max) {
            result = std::move(trial);
            return true;
        }
        if (qt < target)
            lo = vm;
        else
            hi = vm;
    }
    sp.vm = original;
    return false;
}

}  // namespace

SampleAttempt solve_scenario(const grid::NetworkCase& network, const grid::AdmittanceMatrix& admittance,
                             const grid::SampleLayout& layout, const DispatchScenario& scenario,
                             const DatasetConfig& config) {
    SampleAttempt out;
    std::vector<double> pd, qd;
    scenario_demands(network, layout, scenario, pd, qd);
    double total = 0.0;
    for (double p : pd) total += p;
    GeneratorSetpoints sp;
    try {
        sp = dispatch_from_costs(network, scenario, total, config.dispatch);
    } catch (const ValidationError&) {
        out.infeasible_dispatch = true;
        return out;
    }

    NrResult result;
    try {
        result = solve_newton_raphson(network, admittance, layout, pd, qd, sp, config.solver);
        // Re-dispatch against the losses of the solved state so the slack
        // unit only absorbs the small remaining error.
        for (int round = 0; round < config.loss_rounds; ++round) {
            double generated = 0.0;
            for (std::size_t g = 0; g < network.generators.size(); ++g)
                generated += result.sample[layout.index(Quantity::p_gen, g)];
            const double losses = std::max(0.0, generated - total);
            sp.p = merit_order_dispatch(network, scenario.cost_multipliers, total + losses);
            result = solve_newton_raphson(network, admittance, layout, pd, qd, sp, config.solver, &result.voltage);
        }

        Eigen::MatrixXd ptdf;
        for (int round = 0; round < config.repair_rounds; ++round) {
            const auto report = check_constraints(result.sample, layout, admittance, network, config.tolerance);
            if (report.all_satisfied()) break;
            bool changed = false;
            if (!report[Constraint::line_flow].satisfied) {
                if (ptdf.size() == 0) ptdf = dc_ptdf(network);
                changed |= redispatch_for_lines(network, admittance, layout, result, ptdf, 0.97, sp);
            }
            if (!report[Constraint::v_magnitude].satisfied)
                changed |= shift_voltages(network, result, config.dispatch, 0.002, sp);
            if (changed) {
                result = solve_newton_raphson(network, admittance, layout, pd, qd, sp, config.solver, &result.voltage);
                out.repaired = true;
            }
            if (config.repair_slack_voltage && repair_slack(network, admittance, layout, pd, qd, config, sp, result)) {
                out.repaired = true;
                changed = true;
            }
            if (!changed) break;
        }
    } catch (const NumericError&) {
        out.diverged = true;
        return out;
    }

    const auto report = check_constraints(result.sample, layout, admittance, network, config.tolerance);
    out.failed_constraint = first_failure(report);
    out.accepted = out.failed_constraint < 0;
    out.sample = std::move(result.sample);
    return out;
}

Dataset generate_dataset(const grid::NetworkCase& network, const DatasetConfig& config) {
    if (config.n == 0) throw ValidationError("dataset size must be at least 1");
    if (config.window == 0) throw ValidationError("rejection window must be at least 1");
    const auto layout = grid::make_layout(network);
    const auto bounds = grid::make_bounds(network, layout, config.bounds);
    const auto admittance = grid::build_admittance(network);
    const std::size_t dim = layout.dim();

    Eigen::MatrixXd physical(dim, config.n);
    std::vector<RejectionStats> per_sample(config.n);
    RejectionStats total;

    for (std::size_t start = 0; start < config.n; start += config.window) {
        const std::size_t stop = std::min(config.n, start + config.window);
        std::vector<std::uint8_t> exhausted(stop - start, 0);
        parallel_for(stop - start, config.workers, [&](std::size_t k) {
            const std::size_t i = start + k;
            auto& stats = per_sample[i];
            for (std::size_t attempt = 0; attempt < config.max_attempts_per_sample; ++attempt) {
                const std::uint64_t index = (static_cast<std::uint64_t>(i) << 16) | attempt;
                Rng rng = Rng::stream(config.seed, "data", index);
                const auto scenario =
                    sample_dispatch(network, layout, rng, config.ranges, Rng::derive_seed(config.seed, "data", index));
                const auto result = solve_scenario(network, admittance, layout, scenario, config);
                ++stats.attempts;
                if (result.repaired) ++stats.repaired;
                if (result.accepted) {
                    ++stats.accepted;
                    std::copy(result.sample.begin(), result.sample.end(), physical.col(static_cast<Eigen::Index>(i)).data());
                    return;
                }
                if (result.diverged) ++stats.diverged;
                if (result.infeasible_dispatch) ++stats.infeasible_dispatch;
                if (result.failed_constraint >= 0) ++stats.constraint_failures[static_cast<std::size_t>(result.failed_constraint)];
            }
            exhausted[k] = 1;
        });

        RejectionStats window;
        for (std::size_t i = start; i < stop; ++i) {
            const auto& s = per_sample[i];
            window.attempts += s.attempts;
            window.accepted += s.accepted;
            window.diverged += s.diverged;
            window.infeasible_dispatch += s.infeasible_dispatch;
            window.repaired += s.repaired;
            for (std::size_t c = 0; c < 6; ++c) window.constraint_failures[c] += s.constraint_failures[c];
        }
        total.attempts += window.attempts;
        total.accepted += window.accepted;
        total.diverged += window.diverged;
        total.infeasible_dispatch += window.infeasible_dispatch;
        total.repaired += window.repaired;
        for (std::size_t c = 0; c < 6; ++c) total.constraint_failures[c] += window.constraint_failures[c];
        const bool any_exhausted = std::any_of(exhausted.begin(), exhausted.end(), [](auto e) { return e != 0; });
        if (window.rate() > config.max_rejection_rate || any_exhausted)
            throw NumericError("dataset generation aborted: rejection rate " + std::to_string(window.rate()) +
                               " in samples [" + std::to_string(start) + ", " + std::to_string(stop) +
                               "); statistics " + window.to_json().dump());
    }

    nlohmann::json meta;
    meta["schema_version"] = kDatasetSchemaVersion;
    meta["case"] = network.name;
    meta["n"] = config.n;
    meta["seed"] = config.seed;
    meta["generator_of_record"] =
        "merit-order economic dispatch + Newton-Raphson AC power flow with rejection of [C1]-[C6] violations "
        "(stands in for AC-OPF)";
    meta["load_range"] = {config.ranges.load_low, config.ranges.load_high};
    meta["cost_range"] = {config.ranges.cost_low, config.ranges.cost_high};
    meta["loss_factor"] = config.dispatch.loss_factor;
    meta["loss_rounds"] = config.loss_rounds;
    meta["setpoint_vm_window"] = {config.dispatch.setpoint_vm_low, config.dispatch.setpoint_vm_high};
    meta["nr_tolerance"] = config.solver.tolerance;
    meta["equality_tolerance"] = config.tolerance.equality;
    meta["repair_slack_voltage"] = config.repair_slack_voltage;
    meta["repair_rounds"] = config.repair_rounds;
    meta["rejection"] = total.to_json();
    return make_dataset(layout, bounds, physical, std::move(meta));
}

Dataset make_dataset(const grid::SampleLayout& layout, const grid::NormalizationBounds& bounds,
                     const Eigen::MatrixXd& physical, nlohmann::json meta) {
    if (static_cast<std::size_t>(physical.rows()) != layout.dim() || bounds.dim() != layout.dim())
        throw DimensionError("samples, layout and bounds disagree on dimension");
    Dataset d;
    d.layout = layout;
    d.bounds = bounds;
    d.unit = bounds.normalize(physical);
    d.meta = std::move(meta);
    return d;
}

std::filesystem::path sidecar_path(const std::filesystem::path& path) {
    auto p = path;
    p += ".json";
    return p;
}

namespace {

bool is_csv(const std::filesystem::path& path) {
    auto ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".csv";
}

}  // namespace

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
    const bool csv = is_csv(path);
    {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw IoError("cannot write " + path.string());
        if (csv) {
            for (std::size_t k = 0; k < dataset.dim(); ++k) out << (k ? "," : "") << dataset.layout.label(k);
            out << '\n';
            char buf[64];
            for (Eigen::Index j = 0; j < dataset.unit.cols(); ++j) {
                for (Eigen::Index k = 0; k < dataset.unit.rows(); ++k) {
                    auto res = std::to_chars(buf, buf + sizeof buf, dataset.unit(k, j), std::chars_format::general, 17);
                    if (k) out.put(',');
                    out.write(buf, res.ptr - buf);
                }
                out.put('\n');
            }
        } else {
            static_assert(std::endian::native == std::endian::little, "binary datasets assume little-endian hosts");
            // column-major D x n is sample-major on disk
            out.write(reinterpret_cast<const char*>(dataset.unit.data()),
                      static_cast<std::streamsize>(dataset.unit.size() * sizeof(double)));
        }
        if (!out) throw IoError("failed writing " + path.string());
    }
    nlohmann::json side = dataset.meta;
    side["schema_version"] = kDatasetSchemaVersion;
    side["format"] = csv ? "csv" : "f64le";
    side["n"] = dataset.size();
    side["dim"] = dataset.dim();
    side["layout"] = dataset.layout.to_json();
    side["bounds"] = dataset.bounds.to_json();
    std::ofstream out(sidecar_path(path));
    if (!out) throw IoError("cannot write " + sidecar_path(path).string());
    out << side.dump(2) << '\n';
    if (!out) throw IoError("failed writing " + sidecar_path(path).string());
}

Dataset load_dataset(const std::filesystem::path& path) {
    std::ifstream side_in(sidecar_path(path));
    if (!side_in) throw IoError("dataset sidecar not found: " + sidecar_path(path).string());
    nlohmann::json side;
    try {
        side = nlohmann::json::parse(side_in);
    } catch (const nlohmann::json::exception& e) {
        throw IoError("malformed dataset sidecar " + sidecar_path(path).string() + ": " + e.what());
    }
    Dataset d;
    try {
        d.layout = grid::SampleLayout::from_json(side.at("layout"));
        d.bounds = grid::NormalizationBounds::from_json(side.at("bounds"));
    } catch (const nlohmann::json::exception& e) {
        throw IoError("incomplete dataset sidecar: " + std::string(e.what()));
    }
    const std::size_t n = side.at("n").get<std::size_t>();
    const std::size_t dim = side.at("dim").get<std::size_t>();
    if (dim != d.layout.dim()) throw IoError("sidecar dimension does not match its layout");
    d.unit.resize(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(n));

    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("dataset not found: " + path.string());
    if (side.value("format", "f64le") == "csv") {
        std::string line;
        std::getline(in, line);  // header
        for (std::size_t j = 0; j < n; ++j) {
            if (!std::getline(in, line)) throw IoError("dataset truncated at sample " + std::to_string(j));
            const char* p = line.data();
            const char* end = p + line.size();
            for (std::size_t k = 0; k < dim; ++k) {
                double v = 0.0;
                auto res = std::from_chars(p, end, v);
                if (res.ec != std::errc()) throw IoError("bad number in dataset row " + std::to_string(j + 2));
                d.unit(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) = v;
                p = res.ptr;
                if (k + 1 < dim) {
                    if (p == end || *p != ',') throw IoError("short row " + std::to_string(j + 2));
                    ++p;
                }
            }
        }
    } else {
        in.read(reinterpret_cast<char*>(d.unit.data()), static_cast<std::streamsize>(d.unit.size() * sizeof(double)));
        if (in.gcount() != static_cast<std::streamsize>(d.unit.size() * sizeof(double)))
            throw IoError("dataset truncated: " + path.string());
    }
    side.erase("layout");
    side.erase("bounds");
    d.meta = std::move(side);
    return d;
}

}  // namespace pfdiff::pf
