#include "pfdiff/grid/layout.h"

#include "pfdiff/common/error.h"

namespace pfdiff::grid {

std::string to_string(Quantity q) {
    switch (q) {
        case Quantity::p_demand: return "P_D";
        case Quantity::q_demand: return "Q_D";
        case Quantity::v_magnitude: return "Vm";
        case Quantity::v_angle: return "Va";
        case Quantity::p_gen: return "P_G";
        case Quantity::q_gen: return "Q_G";
    }
    return "?";
}

SampleLayout::SampleLayout(std::vector<std::size_t> demand_buses, std::size_t bus_count,
                           std::vector<std::size_t> generator_buses)
    : demand_buses_(std::move(demand_buses)), bus_count_(bus_count), generator_buses_(std::move(generator_buses)) {
    for (auto b : demand_buses_)
        if (b >= bus_count_) throw DimensionError("demand bus outside the network");
    for (auto b : generator_buses_)
        if (b >= bus_count_) throw DimensionError("generator bus outside the network");
}

std::size_t SampleLayout::count(Quantity q) const {
    switch (q) {
        case Quantity::p_demand:
        case Quantity::q_demand: return demand_buses_.size();
        case Quantity::v_magnitude:
        case Quantity::v_angle: return bus_count_;
        case Quantity::p_gen:
        case Quantity::q_gen: return generator_buses_.size();
    }
    return 0;
}

std::size_t SampleLayout::offset(Quantity q) const {
    const std::size_t l = demand_buses_.size();
    const std::size_t n = bus_count_;
    const std::size_t g = generator_buses_.size();
    switch (q) {
        case Quantity::p_demand: return 0;
        case Quantity::q_demand: return l;
        case Quantity::v_magnitude: return 2 * l;
        case Quantity::v_angle: return 2 * l + n;
        case Quantity::p_gen: return 2 * l + 2 * n;
        case Quantity::q_gen: return 2 * l + 2 * n + g;
    }
    return 0;
}

std::pair<Quantity, std::size_t> SampleLayout::locate(std::size_t flat) const {
    for (auto q : kAllQuantities) {
        if (flat >= offset(q) && flat < offset(q) + count(q)) return {q, flat - offset(q)};
    }
    throw DimensionError("flat index " + std::to_string(flat) + " outside layout of dimension " +
                         std::to_string(dim()));
}

std::string SampleLayout::label(std::size_t flat) const {
    auto [q, k] = locate(flat);
    return to_string(q) + "[" + std::to_string(k) + "]";
}

nlohmann::json SampleLayout::to_json() const {
    return {{"dim", dim()},
            {"order", {"P_D", "Q_D", "Vm", "Va", "P_G", "Q_G"}},
            {"demand_buses", demand_buses_},
            {"bus_count", bus_count_},
            {"generator_buses", generator_buses_}};
}

SampleLayout SampleLayout::from_json(const nlohmann::json& j) {
    SampleLayout layout(j.at("demand_buses").get<std::vector<std::size_t>>(), j.at("bus_count").get<std::size_t>(),
                        j.at("generator_buses").get<std::vector<std::size_t>>());
    if (j.contains("dim") && j["dim"].get<std::size_t>() != layout.dim())
        throw DimensionError("layout dim field disagrees with its blocks");
    return layout;
}

SampleLayout make_layout(const NetworkCase& network) {
    std::vector<std::size_t> demand;
    for (std::size_t i = 0; i < network.buses.size(); ++i)
        if (network.buses[i].has_demand()) demand.push_back(i);
    std::vector<std::size_t> gens;
    for (const auto& g : network.generators) gens.push_back(g.bus);
    return SampleLayout(std::move(demand), network.bus_count(), std::move(gens));
}

}  // namespace pfdiff::grid
