#include "pfdiff/pf/imbalance.h"

#include <cmath>

#include "pfdiff/common/error.h"

namespace pfdiff::pf {

using grid::Complex;
using grid::Quantity;

namespace {

struct Scratch {
    std::vector<Complex> injection, v, e, current, w, c;
    std::vector<double> phys, grad;
    void resize(std::size_t n, std::size_t d) {
        injection.assign(n, Complex());
        v.resize(n);
        e.resize(n);
        current.resize(n);
        w.resize(n);
        c.assign(n, Complex());
        phys.resize(d);
        grad.resize(d);
    }
};

Scratch& scratch() {
    thread_local Scratch s;
    return s;
}

/// Fills injection, V, e^{j theta}, I = Y V and returns per-bus mismatch via `out`.
void mismatch(const grid::SampleLayout& layout, const grid::AdmittanceMatrix& y, std::span<const double> x,
              Scratch& s, std::vector<Complex>& out) {
    const std::size_t n = layout.bus_count();
    const auto& demand = layout.demand_buses();
    const std::size_t pd = layout.offset(Quantity::p_demand);
    const std::size_t qd = layout.offset(Quantity::q_demand);
    for (std::size_t k = 0; k < demand.size(); ++k) s.injection[demand[k]] -= Complex(x[pd + k], x[qd + k]);
    const auto& gens = layout.generator_buses();
    const std::size_t pg = layout.offset(Quantity::p_gen);
    const std::size_t qg = layout.offset(Quantity::q_gen);
    for (std::size_t g = 0; g < gens.size(); ++g) s.injection[gens[g]] += Complex(x[pg + g], x[qg + g]);
    const std::size_t vm = layout.offset(Quantity::v_magnitude);
    const std::size_t va = layout.offset(Quantity::v_angle);
    for (std::size_t i = 0; i < n; ++i) {
        s.e[i] = Complex(std::cos(x[va + i]), std::sin(x[va + i]));
        s.v[i] = x[vm + i] * s.e[i];
    }
    y.multiply(s.v, s.current);
    out.resize(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = s.injection[i] - s.v[i] * std::conj(s.current[i]);
}

}  // namespace

ImbalanceEvaluator::ImbalanceEvaluator(grid::SampleLayout layout, grid::AdmittanceMatrix admittance)
    : layout_(std::move(layout)), y_(std::move(admittance)) {
    if (layout_.bus_count() != y_.size())
        throw DimensionError("layout has " + std::to_string(layout_.bus_count()) + " buses, admittance has " +
                             std::to_string(y_.size()));
}

ImbalanceResult ImbalanceEvaluator::evaluate(std::span<const double> physical) const {
    if (physical.size() != layout_.dim()) throw DimensionError("sample dimension does not match layout");
    Scratch& s = scratch();
    s.resize(layout_.bus_count(), layout_.dim());
    std::vector<Complex> m;
    mismatch(layout_, y_, physical, s, m);
    ImbalanceResult result;
    result.bus_mismatch.resize(m.size());
    double total = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) {
        result.bus_mismatch[i] = std::abs(m[i]);
        total += result.bus_mismatch[i];
    }
    result.mean = total / static_cast<double>(m.size());
    return result;
}

double ImbalanceEvaluator::residual(std::span<const double> physical) const {
    if (physical.size() != layout_.dim()) throw DimensionError("sample dimension does not match layout");
    Scratch& s = scratch();
    s.resize(layout_.bus_count(), layout_.dim());
    thread_local std::vector<Complex> m;
    mismatch(layout_, y_, physical, s, m);
    double total = 0.0;
    for (const auto& v : m) total += std::abs(v);
    return total / static_cast<double>(m.size());
}

double ImbalanceEvaluator::residual_with_gradient(std::span<const double> physical, std::span<double> gradient) const {
    if (physical.size() != layout_.dim() || gradient.size() != layout_.dim())
        throw DimensionError("sample dimension does not match layout");
    const std::size_t n = layout_.bus_count();
    Scratch& s = scratch();
    s.resize(n, layout_.dim());
    thread_local std::vector<Complex> m;
    mismatch(layout_, y_, physical, s, m);
    const double inv_n = 1.0 / static_cast<double>(n);

    double total = 0.0;
    std::vector<Complex>& u = s.w;  // reused: u first, then w = conj(u) V
    for (std::size_t i = 0; i < n; ++i) {
        const double mag = std::abs(m[i]);
        total += mag;
        u[i] = mag > 0.0 ? m[i] / mag : Complex();
    }

    const auto& demand = layout_.demand_buses();
    const std::size_t pd = layout_.offset(Quantity::p_demand);
    const std::size_t qd = layout_.offset(Quantity::q_demand);
    for (std::size_t k = 0; k < demand.size(); ++k) {
        gradient[pd + k] = -u[demand[k]].real() * inv_n;
        gradient[qd + k] = -u[demand[k]].imag() * inv_n;
    }
    const auto& gens = layout_.generator_buses();
    const std::size_t pg = layout_.offset(Quantity::p_gen);
    const std::size_t qg = layout_.offset(Quantity::q_gen);
    for (std::size_t g = 0; g < gens.size(); ++g) {
        gradient[pg + g] = u[gens[g]].real() * inv_n;
        gradient[qg + g] = u[gens[g]].imag() * inv_n;
    }

    // c = Y^H w with w_i = conj(u_i) V_i
    const std::size_t vm = layout_.offset(Quantity::v_magnitude);
    const std::size_t va = layout_.offset(Quantity::v_angle);
    thread_local std::vector<Complex> conj_u;
    conj_u.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        conj_u[i] = std::conj(u[i]);
        s.w[i] = conj_u[i] * s.v[i];
    }
    for (std::size_t i = 0; i < n; ++i) {
        const auto cols = y_.row_columns(i);
        const auto vals = y_.row_values(i);
        for (std::size_t k = 0; k < cols.size(); ++k) s.c[cols[k]] += std::conj(vals[k]) * s.w[i];
    }
    const Complex j(0.0, 1.0);
    for (std::size_t k = 0; k < n; ++k) {
        const Complex conj_i = std::conj(s.current[k]);
        gradient[va + k] = -(j * (s.w[k] * conj_i - std::conj(s.v[k]) * s.c[k])).real() * inv_n;
        gradient[vm + k] = -(conj_u[k] * s.e[k] * conj_i + std::conj(s.e[k]) * s.c[k]).real() * inv_n;
    }
    return total * inv_n;
}

ImbalanceResult residual_imbalance(std::span<const double> physical, const grid::SampleLayout& layout,
                                   const grid::AdmittanceMatrix& admittance) {
    return ImbalanceEvaluator(layout, admittance).evaluate(physical);
}

UnitImbalance::UnitImbalance(const ImbalanceEvaluator& evaluator, const grid::NormalizationBounds& bounds)
    : evaluator_(&evaluator), bounds_(&bounds) {
    if (evaluator.layout().dim() != bounds.dim()) throw DimensionError("bounds do not match layout");
}

double UnitImbalance::value(std::span<const double> unit) const {
    thread_local std::vector<double> phys;
    phys.resize(dim());
    bounds_->denormalize_into(unit, phys);
    return evaluator_->residual(phys);
}

double UnitImbalance::value_with_gradient(std::span<const double> unit, std::span<double> gradient) const {
    thread_local std::vector<double> phys;
    phys.resize(dim());
    bounds_->denormalize_into(unit, phys);
    const double r = evaluator_->residual_with_gradient(phys, gradient);
    for (std::size_t i = 0; i < dim(); ++i) gradient[i] *= bounds_->width(i);
    return r;
}

}  // namespace pfdiff::pf
