#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace pfdiff::grid {

enum class BusType { slack, load, generator };

std::string to_string(BusType type);
BusType bus_type_from_string(const std::string& text);

/// All electrical quantities are per-unit on the case base; angles in radians.
struct Bus {
    int id = 0;
    BusType type = BusType::load;
    double pd = 0.0;  ///< nominal active demand
    double qd = 0.0;  ///< nominal reactive demand
    double gs = 0.0;  ///< shunt conductance at V = 1
    double bs = 0.0;  ///< shunt susceptance at V = 1
    double vm_min = 0.9;
    double vm_max = 1.1;
    double va_min = 0.0;
    double va_max = 0.0;
    double vm_init = 1.0;
    double va_init = 0.0;

    bool has_demand() const { return pd != 0.0 || qd != 0.0; }
};

/// Quadratic cost c2*P^2 + c1*P + c0 with P in per-unit.
struct Generator {
    std::size_t bus = 0;  ///< position in NetworkCase::buses
    double pg_min = 0.0;
    double pg_max = 0.0;
    double qg_min = 0.0;
    double qg_max = 0.0;
    double vg = 1.0;
    double pg_init = 0.0;
    double c2 = 0.0;
    double c1 = 0.0;
    double c0 = 0.0;
};

struct Branch {
    std::size_t from = 0;  ///< position in NetworkCase::buses
    std::size_t to = 0;
    double r = 0.0;
    double x = 0.0;
    double b = 0.0;      ///< total line charging
    double tap = 1.0;    ///< off-nominal ratio, 1 for lines
    double shift = 0.0;  ///< phase shift (rad)
    double s_max = 0.0;  ///< apparent power rating; 0 means unlimited
};

struct NetworkCase {
    std::string name;
    double base_mva = 100.0;
    std::vector<Bus> buses;
    std::vector<Generator> generators;
    std::vector<Branch> branches;

    std::size_t bus_count() const { return buses.size(); }
    std::size_t slack_bus() const;
    /// Position of the bus with the given external id; throws if absent.
    std::size_t bus_position(int id) const;
    /// Generators attached to bus position `bus`, in case order.
    std::vector<std::size_t> generators_at(std::size_t bus) const;
};

/// Checks every structural invariant; throws ValidationError on the first violation.
void validate(const NetworkCase& network);

bool operator==(const Bus&, const Bus&);
bool operator==(const Generator&, const Generator&);
bool operator==(const Branch&, const Branch&);
bool operator==(const NetworkCase&, const NetworkCase&);

}  // namespace pfdiff::grid
