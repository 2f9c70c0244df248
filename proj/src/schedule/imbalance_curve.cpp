#include "pfdiff/schedule/imbalance_curve.h"

#include <cmath>

#include "pfdiff/common/error.h"
#include "pfdiff/common/parallel.h"
#include "pfdiff/common/rng.h"

namespace pfdiff::schedule {

std::vector<double> forward_imbalance_curve(const Eigen::MatrixXd& unit_data, const diffusion::NoiseSchedule& schedule,
                                            const pf::UnitImbalance& physics, std::size_t draws_per_t,
                                            std::uint64_t seed, std::size_t workers) {
    if (draws_per_t == 0) throw ValidationError("at least one draw per step is required");
    if (unit_data.cols() == 0) throw ValidationError("curve needs data");
    const Eigen::Index d = unit_data.rows();
    if (static_cast<Eigen::Index>(physics.dim()) != d) throw DimensionError("data dimension differs from bounds");
    const int T = schedule.steps();
    std::vector<double> curve(static_cast<std::size_t>(T) + 1, 0.0);
    parallel_for(curve.size(), workers, [&](std::size_t tt) {
        const int t = static_cast<int>(tt);
        Rng rng = Rng::stream(seed, "curve", tt);
        const double a = schedule.alpha_bar_at(t);
        Eigen::VectorXd x(d);
        double sum = 0.0;
        for (std::size_t k = 0; k < draws_per_t; ++k) {
            const auto col = static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(unit_data.cols())));
            x = std::sqrt(a) * unit_data.col(col);
            if (t > 0)
                for (Eigen::Index i = 0; i < d; ++i) x[i] += std::sqrt(1.0 - a) * rng.normal();
            sum += physics.value({x.data(), static_cast<std::size_t>(d)});
        }
        curve[tt] = sum / static_cast<double>(draws_per_t);
    });
    return curve;
}

double measure_noise_imbalance(const pf::UnitImbalance& physics, std::size_t draws, std::uint64_t seed) {
    if (draws == 0) throw ValidationError("at least one draw is required");
    Rng rng = Rng::stream(seed, "noise_imbalance");
    Eigen::VectorXd x(static_cast<Eigen::Index>(physics.dim()));
    double sum = 0.0;
    for (std::size_t k = 0; k < draws; ++k) {
        for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = rng.normal();
        sum += physics.value({x.data(), physics.dim()});
    }
    return sum / static_cast<double>(draws);
}

}  // namespace pfdiff::schedule
