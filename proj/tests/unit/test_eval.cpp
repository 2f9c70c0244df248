#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "pfdiff/common/error.h"
#include "pfdiff/eval/metrics.h"
#include "pfdiff/eval/report.h"
#include "pfdiff/grid/admittance.h"
#include "pfdiff/pf/dataset.h"
#include "test_support.h"

using namespace pfdiff;
using namespace pfdiff::eval;

namespace {

struct Fixture {
    grid::NetworkCase net = testing::case14();
    pf::Dataset data;
    grid::AdmittanceMatrix y;
    std::unique_ptr<pf::ImbalanceEvaluator> ev;

    Fixture() {
        pf::DatasetConfig cfg;
        cfg.n = 200;
        cfg.seed = 8;
        data = pf::generate_dataset(net, cfg);
        y = grid::build_admittance(net);
        ev = std::make_unique<pf::ImbalanceEvaluator>(data.layout, y);
    }
};

Fixture& fixture() {
    static Fixture f;
    return f;
}

}  // namespace

TEST_CASE("wasserstein distance") {
    CHECK(wasserstein1({0, 1}, {0, 2}) == doctest::Approx(0.5));
    CHECK(wasserstein1({0}, {0, 1}) == doctest::Approx(0.5));
    CHECK(wasserstein1({3, 1, 2}, {2, 3, 1}) == 0.0);
    std::vector<double> a{0.3, -1.2, 4.0, 2.2, 0.0};
    std::vector<double> b = a;
    for (double& v : b) v += 0.1;
    CHECK(wasserstein1(a, b) == doctest::Approx(0.1));
    CHECK(wasserstein1(b, a) == doctest::Approx(0.1));
    CHECK_THROWS_AS(wasserstein1({}, {1.0}), ValidationError);
}

TEST_CASE("kolmogorov smirnov statistic") {
    CHECK(ks_statistic({1, 2, 3}, {3, 2, 1}) == 0.0);
    CHECK(ks_statistic({1, 2, 3}, {2, 3, 4}) == doctest::Approx(1.0 / 3.0));
    CHECK(ks_statistic({0, 1}, {5, 6, 7}) == 1.0);
    CHECK(ks_statistic({0, 0, 1, 1}, {0, 1}) == 0.0);
}

TEST_CASE("imbalance summary") {
    auto& f = fixture();
    const Eigen::MatrixXd phys = f.data.physical();
    const auto s = mean_imbalance(phys, *f.ev);
    CHECK(s.per_sample.size() == 200);
    CHECK(s.mean < 1e-8);
    CHECK(s.median <= s.p95);

    Rng rng(3);
    Eigen::MatrixXd noisy(phys.rows(), 20);
    for (Eigen::Index j = 0; j < 20; ++j) {
        const auto x = testing::random_sample(f.net, rng);
        noisy.col(j) = Eigen::Map<const Eigen::VectorXd>(x.data(), phys.rows());
    }
    const auto a = mean_imbalance(noisy, *f.ev);
    Eigen::MatrixXd reversed = noisy.rowwise().reverse();
    const auto b = mean_imbalance(reversed, *f.ev, 3);
    CHECK(a.mean == doctest::Approx(b.mean).epsilon(1e-12));
    CHECK(a.median == doctest::Approx(b.median).epsilon(1e-12));
    double manual = 0.0;
    for (Eigen::Index j = 0; j < 20; ++j) manual += f.ev->residual({noisy.col(j).data(), static_cast<std::size_t>(phys.rows())});
    CHECK(a.mean == doctest::Approx(manual / 20));
}

TEST_CASE("constraint satisfaction rates") {
    auto& f = fixture();
    const auto real = constraint_satisfaction(f.data.physical(), f.data.layout, f.y, f.net);
    for (double r : real) CHECK(r == 1.0);

    Rng rng(4);
    Eigen::MatrixXd unit(f.data.unit.rows(), 100);
    for (Eigen::Index j = 0; j < unit.cols(); ++j)
        for (Eigen::Index i = 0; i < unit.rows(); ++i) unit(i, j) = std::clamp(0.5 + 0.5 * rng.normal(), 0.0, 1.0);
    const auto noise = constraint_satisfaction(f.data.bounds.denormalize(unit), f.data.layout, f.y, f.net, {}, 2);
    for (int c = 0; c < 4; ++c) CHECK(noise[static_cast<std::size_t>(c)] == 1.0);
    CHECK(noise[4] == 0.0);
}

TEST_CASE("distribution fidelity") {
    auto& f = fixture();
    const Eigen::MatrixXd phys = f.data.physical();
    const auto same = distribution_fidelity(phys, phys);
    CHECK(same.mean_w1 == 0.0);
    CHECK(same.max_ks == 0.0);
    CHECK(same.mean_support_extension == 0.0);
    CHECK(same.w1.size() == static_cast<std::size_t>(phys.rows()));

    Eigen::MatrixXd shifted = phys;
    const Eigen::Index k = static_cast<Eigen::Index>(f.data.layout.offset(grid::Quantity::v_magnitude));
    shifted.row(k).array() += 0.1;
    const auto moved = distribution_fidelity(shifted, phys);
    for (Eigen::Index i = 0; i < phys.rows(); ++i) {
        if (i == k) {
            CHECK(moved.w1[static_cast<std::size_t>(i)] == doctest::Approx(0.1));
            CHECK(moved.support_extension[static_cast<std::size_t>(i)] > 0.0);
        } else {
            CHECK(moved.w1[static_cast<std::size_t>(i)] == 0.0);
        }
    }
    CHECK(moved.max_w1 == doctest::Approx(0.1));

    const auto halves = distribution_fidelity(phys.leftCols(100), phys.rightCols(100));
    CHECK(halves.mean_w1 > 0.0);
    CHECK(halves.mean_ks < 0.3);
    CHECK_THROWS(distribution_fidelity(phys.topRows(5), phys));
}

TEST_CASE("linearity score") {
    const diffusion::ImbalanceBound bound{100, 2.0};
    const auto exact = bound.sequence();
    const auto s = linearity_score(exact, bound);
    CHECK(s.rmse == 0.0);
    CHECK(s.max_deviation == 0.0);

    const std::vector<double> zero(101, 0.0);
    double sq = 0.0;
    for (int t = 1; t <= 100; ++t) sq += double(t) * t;
    const auto z = linearity_score(zero, bound);
    CHECK(z.rmse == doctest::Approx(2.0 * std::sqrt(sq / 1e6)));
    CHECK(z.rmse == doctest::Approx(2.0 / std::sqrt(3.0)).epsilon(0.01));
    CHECK(z.max_deviation == doctest::Approx(2.0));
    CHECK_THROWS(linearity_score(std::vector<double>(50, 0.0), bound));
}

TEST_CASE("reverse trace check") {
    const diffusion::ImbalanceBound bound{10, 1.0};
    auto trace = bound.sequence();
    for (double& v : trace) v *= 0.5;
    CHECK(reverse_trace_check(trace, bound) == 1.0);
    for (int t = 6; t <= 10; ++t) trace[static_cast<std::size_t>(t)] = 2.0;
    CHECK(reverse_trace_check(trace, bound) == doctest::Approx(0.5));
    trace[0] = 100.0;  // t = 0 is not scored
    CHECK(reverse_trace_check(trace, bound) == doctest::Approx(0.5));
    CHECK_THROWS(reverse_trace_check({0.0, 0.0}, bound));
}

TEST_CASE("report document") {
    ReportInputs in;
    in.grid = "case14";
    in.model_tag = "ddpm";
    in.imbalance.mean = 0.01;
    in.imbalance.median = 0.009;
    in.imbalance.p95 = 0.03;
    in.imbalance.per_sample = {0.01};
    in.constraint_rates = {1, 1, 1, 1, 0, 0.98};
    in.linearity = LinearityScore{0.4, 0.7};
    in.trace_fraction = 0.9;
    in.seeds = {{"sampling", 4}};
    const auto r = make_report(in);
    CHECK(r["schema_version"] == kReportSchemaVersion);
    CHECK(r["grid"] == "case14");
    CHECK(r["model_tag"] == "ddpm");
    CHECK(r["mean_imbalance"]["mean"] == 0.01);
    CHECK(r["constraint_rates"]["C6_line_flow"] == 0.98);
    CHECK(r["constraint_rates"].size() == 6);
    CHECK(r["fidelity"].is_null());
    CHECK(r["linearity"]["rmse"] == 0.4);
    CHECK(r["trace_fraction"] == 0.9);
    CHECK(r["seeds"]["sampling"] == 4);
    const auto text = format_report(r);
    CHECK(text.find("case14") != std::string::npos);
    CHECK(text.find("trace fraction") != std::string::npos);
    CHECK(text.find("fidelity") == std::string::npos);
}

TEST_CASE("curve csv round trip") {
    const auto dir = std::filesystem::temp_directory_path() / "pfdiff_eval_test";
    std::filesystem::create_directories(dir);
    const diffusion::ImbalanceBound bound{4, 1.0};
    const std::vector<double> curve{0.0, 0.123456789012345, 0.5, 1e-17, 2.25};
    write_curve_csv(dir / "c.csv", curve, bound);
    CHECK(read_curve_csv(dir / "c.csv") == curve);
    std::ifstream in(dir / "c.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == "t,gamma,R");
    CHECK_THROWS_AS(read_curve_csv(dir / "missing.csv"), IoError);
    std::filesystem::remove_all(dir);
}
