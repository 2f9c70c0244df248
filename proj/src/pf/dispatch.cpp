#include "pfdiff/pf/dispatch.h"

#include <algorithm>
#include <cmath>

#include "pfdiff/common/error.h"

namespace pfdiff::pf {

DispatchScenario sample_dispatch(const grid::NetworkCase& network, const grid::SampleLayout& layout, Rng& rng,
                                 const DispatchRanges& ranges, std::uint64_t seed) {
    if (!(ranges.load_low <= ranges.load_high) || !(ranges.cost_low <= ranges.cost_high))
        throw ValidationError("dispatch ranges must be ordered");
    DispatchScenario s;
    s.seed = seed;
    for (std::size_t k = 0; k < layout.demand_buses().size(); ++k)
        s.load_multipliers.push_back(rng.uniform(ranges.load_low, ranges.load_high));
    for (std::size_t g = 0; g < network.generators.size(); ++g)
        s.cost_multipliers.push_back(rng.uniform(ranges.cost_low, ranges.cost_high));
    for (std::size_t g = 0; g < network.generators.size(); ++g) s.voltage_fractions.push_back(rng.uniform());
    return s;
}

void scenario_demands(const grid::NetworkCase& network, const grid::SampleLayout& layout,
                      const DispatchScenario& scenario, std::vector<double>& pd, std::vector<double>& qd) {
    const auto& demand = layout.demand_buses();
    if (scenario.load_multipliers.size() != demand.size())
        throw DimensionError("scenario load multipliers do not match the layout");
    pd.assign(network.bus_count(), 0.0);
    qd.assign(network.bus_count(), 0.0);
    for (std::size_t k = 0; k < demand.size(); ++k) {
        const auto& bus = network.buses[demand[k]];
        pd[demand[k]] = bus.pd * scenario.load_multipliers[k];
        qd[demand[k]] = bus.qd * scenario.load_multipliers[k];
    }
}

namespace {

struct Unit {
    double c2, c1, pmin, pmax;
    bool flat() const { return c2 <= 0.0; }
    double at(double lambda) const {
        if (flat()) return lambda > c1 ? pmax : pmin;
        return std::clamp((lambda - c1) / (2.0 * c2), pmin, pmax);
    }
};

// Output at price lambda with flat units priced exactly at lambda either
// all off (closed = false) or all on (closed = true).
double total_at(const std::vector<Unit>& units, double lambda, bool closed) {
    double sum = 0.0;
    for (const auto& u : units) {
        if (u.flat() && closed && u.c1 == lambda)
            sum += u.pmax;
        else
            sum += u.at(lambda);
    }
    return sum;
}

}  // namespace

std::vector<double> merit_order_dispatch(const grid::NetworkCase& network, const std::vector<double>& cost_multipliers,
                                         double target) {
    const std::size_t ng = network.generators.size();
    if (cost_multipliers.size() != ng) throw DimensionError("one cost multiplier per generator required");
    std::vector<Unit> units;
    double sum_min = 0.0, sum_max = 0.0;
    for (std::size_t g = 0; g < ng; ++g) {
        const auto& gen = network.generators[g];
        units.push_back({gen.c2 * cost_multipliers[g], gen.c1 * cost_multipliers[g], gen.pg_min, gen.pg_max});
        sum_min += gen.pg_min;
        sum_max += gen.pg_max;
    }
    std::vector<double> p(ng);
    if (target <= sum_min) {
        for (std::size_t g = 0; g < ng; ++g) p[g] = units[g].pmin;
        return p;
    }
    if (target >= sum_max) {
        for (std::size_t g = 0; g < ng; ++g) p[g] = units[g].pmax;
        return p;
    }

    std::vector<double> breaks;
    for (const auto& u : units) {
        if (u.flat()) {
            breaks.push_back(u.c1);
        } else {
            breaks.push_back(2.0 * u.c2 * u.pmin + u.c1);
            breaks.push_back(2.0 * u.c2 * u.pmax + u.c1);
        }
    }
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

    double prev = breaks.front();
    double prev_total = total_at(units, prev, false);
    for (std::size_t k = 0; k < breaks.size(); ++k) {
        const double b = breaks[k];
        const double open = total_at(units, b, false);
        if (k > 0 && target <= open) {
            // Output is linear in price strictly between breakpoints.
            const double lambda = prev + (target - prev_total) / (open - prev_total) * (b - prev);
            for (std::size_t g = 0; g < ng; ++g) {
                const auto& u = units[g];
                p[g] = u.flat() ? (u.c1 <= prev ? u.pmax : u.pmin) : u.at(lambda);
            }
            return p;
        }
        const double closed = total_at(units, b, true);
        if (target <= closed) {
            double remaining = target - open;
            for (std::size_t g = 0; g < ng; ++g) {
                const auto& u = units[g];
                if (u.flat() && u.c1 == b) {
                    const double add = std::min(u.pmax - u.pmin, remaining);
                    p[g] = u.pmin + add;
                    remaining -= add;
                } else {
                    p[g] = u.at(b);
                }
            }
            return p;
        }
        prev = b;
        prev_total = closed;
    }
    for (std::size_t g = 0; g < ng; ++g) p[g] = units[g].pmax;
    return p;
}

GeneratorSetpoints dispatch_from_costs(const grid::NetworkCase& network, const DispatchScenario& scenario,
                                       double total_demand, const DispatchOptions& options) {
    const std::size_t ng = network.generators.size();
    if (scenario.voltage_fractions.size() != ng) throw DimensionError("one voltage fraction per generator required");
    double capacity = 0.0;
    for (const auto& gen : network.generators) capacity += gen.pg_max;
    if (total_demand > capacity)
        throw ValidationError("demand " + std::to_string(total_demand) + " p.u. exceeds generation capacity " +
                              std::to_string(capacity) + " p.u.");
    GeneratorSetpoints sp;
    sp.p = merit_order_dispatch(network, scenario.cost_multipliers, total_demand * (1.0 + options.loss_factor));
    for (std::size_t g = 0; g < ng; ++g) {
        const auto& bus = network.buses[network.generators[g].bus];
        double lo = std::max(options.setpoint_vm_low, bus.vm_min);
        double hi = std::min(options.setpoint_vm_high, bus.vm_max);
        if (lo > hi) lo = hi = std::clamp(0.5 * (options.setpoint_vm_low + options.setpoint_vm_high), bus.vm_min, bus.vm_max);
        sp.vm.push_back(lo + scenario.voltage_fractions[g] * (hi - lo));
    }
    return sp;
}

}  // namespace pfdiff::pf
