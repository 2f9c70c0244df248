#include "pfdiff/grid/network_case.h"

#include <set>

#include "pfdiff/common/error.h"

namespace pfdiff::grid {

std::string to_string(BusType type) {
    switch (type) {
        case BusType::slack: return "slack";
        case BusType::load: return "load";
        case BusType::generator: return "generator";
    }
    return "load";
}

BusType bus_type_from_string(const std::string& text) {
    if (text == "slack") return BusType::slack;
    if (text == "load") return BusType::load;
    if (text == "generator") return BusType::generator;
    throw ValidationError("unknown bus type '" + text + "'");
}

std::size_t NetworkCase::slack_bus() const {
    for (std::size_t i = 0; i < buses.size(); ++i)
        if (buses[i].type == BusType::slack) return i;
    throw ValidationError("case has no slack bus");
}

std::size_t NetworkCase::bus_position(int id) const {
    for (std::size_t i = 0; i < buses.size(); ++i)
        if (buses[i].id == id) return i;
    throw ValidationError("unknown bus id " + std::to_string(id));
}

std::vector<std::size_t> NetworkCase::generators_at(std::size_t bus) const {
    std::vector<std::size_t> out;
    for (std::size_t g = 0; g < generators.size(); ++g)
        if (generators[g].bus == bus) out.push_back(g);
    return out;
}

namespace {

void require_ordered(double lo, double hi, const std::string& what) {
    if (!(lo <= hi)) throw ValidationError(what + ": min " + std::to_string(lo) + " > max " + std::to_string(hi));
}

}  // namespace

void validate(const NetworkCase& network) {
    if (network.buses.empty()) throw ValidationError("case has no buses");
    if (!(network.base_mva > 0.0)) throw ValidationError("base MVA must be positive");

    std::size_t slack_count = 0;
    std::set<int> ids;
    for (const auto& bus : network.buses) {
        if (!ids.insert(bus.id).second) throw ValidationError("duplicate bus id " + std::to_string(bus.id));
        if (bus.type == BusType::slack) ++slack_count;
        const std::string tag = "bus " + std::to_string(bus.id);
        require_ordered(bus.vm_min, bus.vm_max, tag + " voltage magnitude");
        require_ordered(bus.va_min, bus.va_max, tag + " voltage angle");
    }
    if (slack_count != 1)
        throw ValidationError("case must have exactly one slack bus, found " + std::to_string(slack_count));

    const std::size_t n = network.buses.size();
    for (std::size_t g = 0; g < network.generators.size(); ++g) {
        const auto& gen = network.generators[g];
        const std::string tag = "generator " + std::to_string(g + 1);
        if (gen.bus >= n) throw ValidationError(tag + " references a missing bus");
        require_ordered(gen.pg_min, gen.pg_max, tag + " active power");
        require_ordered(gen.qg_min, gen.qg_max, tag + " reactive power");
    }
    if (network.generators_at(network.slack_bus()).empty())
        throw ValidationError("slack bus has no generator");

    for (std::size_t k = 0; k < network.branches.size(); ++k) {
        const auto& br = network.branches[k];
        const std::string tag = "branch " + std::to_string(k + 1);
        if (br.from >= n || br.to >= n) throw ValidationError(tag + " has a dangling endpoint");
        if (br.from == br.to) throw ValidationError(tag + " is a self loop");
        if (br.r == 0.0 && br.x == 0.0) throw ValidationError(tag + " has zero impedance");
        if (!(br.tap > 0.0)) throw ValidationError(tag + " has a non-positive tap ratio");
        if (br.s_max < 0.0) throw ValidationError(tag + " has a negative rating");
    }
}

bool operator==(const Bus& a, const Bus& b) {
    return a.id == b.id && a.type == b.type && a.pd == b.pd && a.qd == b.qd && a.gs == b.gs &&
           a.bs == b.bs && a.vm_min == b.vm_min && a.vm_max == b.vm_max && a.va_min == b.va_min &&
           a.va_max == b.va_max && a.vm_init == b.vm_init && a.va_init == b.va_init;
}

bool operator==(const Generator& a, const Generator& b) {
    return a.bus == b.bus && a.pg_min == b.pg_min && a.pg_max == b.pg_max && a.qg_min == b.qg_min &&
           a.qg_max == b.qg_max && a.vg == b.vg && a.pg_init == b.pg_init && a.c2 == b.c2 &&
           a.c1 == b.c1 && a.c0 == b.c0;
}

bool operator==(const Branch& a, const Branch& b) {
    return a.from == b.from && a.to == b.to && a.r == b.r && a.x == b.x && a.b == b.b &&
           a.tap == b.tap && a.shift == b.shift && a.s_max == b.s_max;
}

bool operator==(const NetworkCase& a, const NetworkCase& b) {
    return a.name == b.name && a.base_mva == b.base_mva && a.buses == b.buses &&
           a.generators == b.generators && a.branches == b.branches;
}

}  // namespace pfdiff::grid
