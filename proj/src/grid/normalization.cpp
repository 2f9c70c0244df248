#include "pfdiff/grid/normalization.h"

#include <algorithm>

#include "pfdiff/common/error.h"

namespace pfdiff::grid {

NormalizationBounds::NormalizationBounds(std::vector<double> lo, std::vector<double> hi)
    : lo_(std::move(lo)), hi_(std::move(hi)) {
    if (lo_.size() != hi_.size()) throw DimensionError("bounds lo/hi length mismatch");
    for (std::size_t i = 0; i < lo_.size(); ++i)
        if (!(lo_[i] < hi_[i]))
            throw ValidationError("degenerate normalization box at dimension " + std::to_string(i));
}

std::vector<double> NormalizationBounds::normalize(std::span<const double> physical) const {
    if (physical.size() != dim()) throw DimensionError("sample dimension does not match bounds");
    std::vector<double> out(dim());
    for (std::size_t i = 0; i < dim(); ++i) out[i] = (physical[i] - lo_[i]) / (hi_[i] - lo_[i]);
    return out;
}

std::vector<double> NormalizationBounds::denormalize(std::span<const double> unit) const {
    std::vector<double> out(dim());
    denormalize_into(unit, out);
    return out;
}

void NormalizationBounds::denormalize_into(std::span<const double> unit, std::span<double> physical) const {
    if (unit.size() != dim() || physical.size() != dim())
        throw DimensionError("sample dimension does not match bounds");
    for (std::size_t i = 0; i < dim(); ++i) physical[i] = lo_[i] + unit[i] * (hi_[i] - lo_[i]);
}

Eigen::MatrixXd NormalizationBounds::normalize(const Eigen::MatrixXd& physical) const {
    if (static_cast<std::size_t>(physical.rows()) != dim()) throw DimensionError("sample dimension does not match bounds");
    Eigen::MatrixXd out(physical.rows(), physical.cols());
    for (Eigen::Index c = 0; c < physical.cols(); ++c)
        for (std::size_t i = 0; i < dim(); ++i) out(i, c) = (physical(i, c) - lo_[i]) / (hi_[i] - lo_[i]);
    return out;
}

Eigen::MatrixXd NormalizationBounds::denormalize(const Eigen::MatrixXd& unit) const {
    if (static_cast<std::size_t>(unit.rows()) != dim()) throw DimensionError("sample dimension does not match bounds");
    Eigen::MatrixXd out(unit.rows(), unit.cols());
    for (Eigen::Index c = 0; c < unit.cols(); ++c)
        for (std::size_t i = 0; i < dim(); ++i) out(i, c) = lo_[i] + unit(i, c) * (hi_[i] - lo_[i]);
    return out;
}

nlohmann::json NormalizationBounds::to_json() const { return {{"lo", lo_}, {"hi", hi_}}; }

NormalizationBounds NormalizationBounds::from_json(const nlohmann::json& j) {
    return NormalizationBounds(j.at("lo").get<std::vector<double>>(), j.at("hi").get<std::vector<double>>());
}

NormalizationBounds make_bounds(const NetworkCase& network, const SampleLayout& layout, const BoundsOptions& options) {
    if (!(options.demand_low < options.demand_high)) throw ValidationError("demand range is inverted");
    std::vector<double> lo(layout.dim()), hi(layout.dim());
    auto demand_box = [&](double nominal, std::size_t flat) {
        double a = nominal * options.demand_low;
        double b = nominal * options.demand_high;
        if (a > b) std::swap(a, b);
        if (a == b) {
            a -= options.min_half_width;
            b += options.min_half_width;
        }
        lo[flat] = a;
        hi[flat] = b;
    };
    const auto& demand = layout.demand_buses();
    for (std::size_t k = 0; k < demand.size(); ++k) {
        demand_box(network.buses[demand[k]].pd, layout.index(Quantity::p_demand, k));
        demand_box(network.buses[demand[k]].qd, layout.index(Quantity::q_demand, k));
    }
    for (std::size_t i = 0; i < network.bus_count(); ++i) {
        const auto& bus = network.buses[i];
        lo[layout.index(Quantity::v_magnitude, i)] = bus.vm_min;
        hi[layout.index(Quantity::v_magnitude, i)] = bus.vm_max;
        lo[layout.index(Quantity::v_angle, i)] = bus.va_min;
        hi[layout.index(Quantity::v_angle, i)] = bus.va_max;
    }
    for (std::size_t g = 0; g < network.generators.size(); ++g) {
        const auto& gen = network.generators[g];
        lo[layout.index(Quantity::p_gen, g)] = gen.pg_min;
        hi[layout.index(Quantity::p_gen, g)] = gen.pg_max;
        lo[layout.index(Quantity::q_gen, g)] = gen.qg_min;
        hi[layout.index(Quantity::q_gen, g)] = gen.qg_max;
    }
    return NormalizationBounds(std::move(lo), std::move(hi));
}

}  // namespace pfdiff::grid
