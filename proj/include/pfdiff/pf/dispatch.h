#pragma once

#include <cstdint>
#include <vector>

#include "pfdiff/common/rng.h"
#include "pfdiff/grid/layout.h"
#include "pfdiff/grid/network_case.h"
#include "pfdiff/pf/newton_raphson.h"

namespace pfdiff::pf {

struct DispatchRanges {
    double load_low = 0.8;
    double load_high = 1.2;
    double cost_low = 0.5;
    double cost_high = 1.5;
};

/// One randomized operating condition. Load multipliers follow the layout's
/// demand-bus order and scale P and Q together (constant power factor).
struct DispatchScenario {
    std::vector<double> load_multipliers;
    std::vector<double> cost_multipliers;   ///< per generator
    std::vector<double> voltage_fractions;  ///< per generator, position inside the setpoint window
    std::uint64_t seed = 0;
};

struct DispatchOptions {
    double loss_factor = 0.02;  ///< active losses estimate as a fraction of demand
    double setpoint_vm_low = 0.95;
    double setpoint_vm_high = 1.05;
};

DispatchScenario sample_dispatch(const grid::NetworkCase& network, const grid::SampleLayout& layout, Rng& rng,
                                 const DispatchRanges& ranges = {}, std::uint64_t seed = 0);

/// Per-bus demands implied by a scenario.
void scenario_demands(const grid::NetworkCase& network, const grid::SampleLayout& layout,
                      const DispatchScenario& scenario, std::vector<double>& pd, std::vector<double>& qd);

/// Economic dispatch of `target` p.u. at equal incremental cost under
/// [C1] limits. Units with a flat marginal cost that tie at the clearing
/// price are loaded in index order. Targets outside [sum Pmin, sum Pmax]
/// are clipped to the nearest end.
std::vector<double> merit_order_dispatch(const grid::NetworkCase& network, const std::vector<double>& cost_multipliers,
                                         double target);

/// Active setpoints from merit order plus voltage setpoints from the
/// scenario. Throws ValidationError when demand exceeds total capacity.
GeneratorSetpoints dispatch_from_costs(const grid::NetworkCase& network, const DispatchScenario& scenario,
                                       double total_demand, const DispatchOptions& options = {});

}  // namespace pfdiff::pf
