#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "pfdiff/grid/network_case.h"

namespace pfdiff::grid {

/// The six blocks of a flattened power flow sample, in storage order.
enum class Quantity { p_demand, q_demand, v_magnitude, v_angle, p_gen, q_gen };

inline constexpr std::array<Quantity, 6> kAllQuantities = {
    Quantity::p_demand, Quantity::q_demand, Quantity::v_magnitude,
    Quantity::v_angle,  Quantity::p_gen,    Quantity::q_gen};

std::string to_string(Quantity q);

/// Maps (quantity, element) pairs onto flat indices of a sample vector.
/// Demand blocks cover buses with nonzero nominal demand; voltage blocks
/// cover every bus; generation blocks cover every generator.
class SampleLayout {
  public:
    SampleLayout() = default;
    SampleLayout(std::vector<std::size_t> demand_buses, std::size_t bus_count,
                 std::vector<std::size_t> generator_buses);

    std::size_t dim() const { return 2 * demand_buses_.size() + 2 * bus_count_ + 2 * generator_buses_.size(); }
    std::size_t count(Quantity q) const;
    std::size_t offset(Quantity q) const;
    std::size_t index(Quantity q, std::size_t k) const { return offset(q) + k; }

    std::size_t bus_count() const { return bus_count_; }
    std::size_t generator_count() const { return generator_buses_.size(); }
    const std::vector<std::size_t>& demand_buses() const { return demand_buses_; }
    const std::vector<std::size_t>& generator_buses() const { return generator_buses_; }

    /// Quantity and element for a flat index.
    std::pair<Quantity, std::size_t> locate(std::size_t flat) const;
    std::string label(std::size_t flat) const;

    /// Element slice of a flat vector.
    template <typename T>
    std::span<T> block(std::span<T> sample, Quantity q) const {
        return sample.subspan(offset(q), count(q));
    }

    nlohmann::json to_json() const;
    static SampleLayout from_json(const nlohmann::json& j);

    bool operator==(const SampleLayout&) const = default;

  private:
    std::vector<std::size_t> demand_buses_;
    std::size_t bus_count_ = 0;
    std::vector<std::size_t> generator_buses_;
};

SampleLayout make_layout(const NetworkCase& network);

}  // namespace pfdiff::grid
