#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "ltk/kernels.hpp"
#include "ltk/ridge.hpp"
#include "support.hpp"

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd psd_matrix(std::uint64_t seed, Eigen::Index n, Eigen::Index rank) {
  const MatrixXd a = testing_support::random_matrix(seed, n, rank);
  return a * a.transpose();
}

MatrixXd gaussian_gram(std::uint64_t seed, Eigen::Index n, Eigen::Index p, double ls) {
  return ltk::gram(ltk::KernelSpec<double>::gaussian(VectorXd::Constant(p, ls)), testing_support::random_matrix(seed, n, p));
}

}  // namespace

TEST_SUITE("ridge") {
  TEST_CASE("solve examples") {
    const VectorXd a = ltk::solve_ridge(MatrixXd::Identity(2, 2), 0.5, VectorXd::Ones(2));
    CHECK(a(0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(a(1) == doctest::Approx(0.5).epsilon(1e-15));
    const VectorXd b = ltk::solve_ridge(MatrixXd::Ones(1, 1), 1.0, VectorXd::Constant(1, 2.0));
    CHECK(b(0) == doctest::Approx(1.0).epsilon(1e-15));
  }

  TEST_CASE("solve matches an explicit inverse") {
    const MatrixXd K = psd_matrix(1, 10, 6);
    const MatrixXd t = testing_support::random_matrix(2, 10, 3);
    const double lambda = 0.01;
    const MatrixXd ref = oracle::explicit_inverse(K + 10 * lambda * MatrixXd::Identity(10, 10)) * t;
    CHECK((ltk::solve_ridge(K, lambda, t) - ref).cwiseAbs().maxCoeff() <= 1e-8);
  }

  TEST_CASE("solve residual and inversion") {
    const MatrixXd K = gaussian_gram(3, 50, 2, 0.5);
    const VectorXd v = testing_support::random_matrix(4, 50, 1);
    const double lambda = 1e-4;
    const MatrixXd A = K + 50 * lambda * MatrixXd::Identity(50, 50);
    const VectorXd back = ltk::solve_ridge(K, lambda, A * v);
    CHECK((back - v).cwiseAbs().maxCoeff() <= 1e-8);
    const VectorXd out = ltk::solve_ridge(K, lambda, v);
    CHECK((A * out - v).cwiseAbs().maxCoeff() <= 1e-8 * v.cwiseAbs().maxCoeff());
  }

  TEST_CASE("input validation") {
    CHECK_THROWS_AS(ltk::RidgeSolver<double>(MatrixXd::Identity(2, 2), 0.0), ltk::InputError);
    CHECK_THROWS_AS(ltk::RidgeSolver<double>(MatrixXd::Identity(2, 2), -1.0), ltk::InputError);
    CHECK_THROWS_AS(ltk::RidgeSolver<double>(MatrixXd::Identity(2, 3), 1.0), ltk::InputError);
    CHECK_THROWS_AS(ltk::RidgeSolver<double>(MatrixXd(0, 0), 1.0), ltk::InputError);
    const ltk::RidgeSolver<double> s(MatrixXd::Identity(2, 2), 1.0);
    CHECK_THROWS_AS(s.solve(VectorXd::Ones(3)), ltk::InputError);
  }

  TEST_CASE("jitter retry and failure") {
    MatrixXd K = MatrixXd::Zero(2, 2);
    K(0, 0) = 3;
    K(1, 1) = -1;  // K + n lambda I is singular at lambda = 0.5
    const ltk::RidgeSolver<double> s(K, 0.5);
    CHECK(s.jitter() == doctest::Approx(1e-10));
    MatrixXd bad = MatrixXd::Zero(2, 2);
    bad(0, 0) = 1;
    bad(1, 1) = -2;
    CHECK_THROWS_AS(ltk::RidgeSolver<double>(bad, 0.5), ltk::NumericalError);
  }

  TEST_CASE("loocv examples") {
    CHECK(ltk::loocv_score(MatrixXd::Identity(2, 2), VectorXd((VectorXd(2) << 1, -1).finished()), 0.5) ==
          doctest::Approx(1.0).epsilon(1e-14));
    CHECK(ltk::loocv_score(gaussian_gram(5, 8, 1, 1.0), VectorXd::Zero(8), 0.1) == 0.0);
  }

  TEST_CASE("loocv matches explicit refits") {
    for (std::uint64_t s = 0; s < 3; ++s) {
      const MatrixXd K = gaussian_gram(10 + s, 30, 2, 0.8);
      const VectorXd y = testing_support::random_matrix(20 + s, 30, 1);
      for (double lambda : {1e-4, 1e-2, 0.3})
        CHECK(std::abs(ltk::loocv_score(K, y, lambda) - oracle::loo_refit_score(K, y, lambda)) <= 1e-8);
    }
  }

  TEST_CASE("degenerate smoother") {
    const MatrixXd K = 1e20 * MatrixXd::Identity(3, 3);
    CHECK_THROWS_AS(ltk::loocv_score(K, VectorXd::Ones(3), 1e-6), ltk::NumericalError);
  }

  TEST_CASE("loocv is permutation invariant") {
    const MatrixXd K = gaussian_gram(7, 25, 2, 0.6);
    const VectorXd y = testing_support::random_matrix(8, 25, 1);
    std::vector<int> idx(25);
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), std::mt19937(3));
    Eigen::PermutationMatrix<Eigen::Dynamic> P(25);
    for (int i = 0; i < 25; ++i) P.indices()(i) = idx[static_cast<std::size_t>(i)];
    const MatrixXd Kp = P * K * P.transpose();
    const VectorXd yp = P * y;
    CHECK(ltk::loocv_score(Kp, yp, 0.01) == doctest::Approx(ltk::loocv_score(K, y, 0.01)).epsilon(1e-10));
  }

  TEST_CASE("loocv path agrees with the direct formula") {
    SUBCASE("tridiagonal route") {
      const MatrixXd K = gaussian_gram(30, 60, 3, 1.0);
      const MatrixXd Y = testing_support::random_matrix(31, 60, 3);
      const ltk::LoocvPath<double> path(K, Y);
      for (double lambda : {1e-6, 1e-3, 0.1, 1.0})
        CHECK(path.score(lambda) == doctest::Approx(ltk::loocv_score(K, Y, lambda)).epsilon(1e-9));
    }
    SUBCASE("low-rank route") {
      // A wide 1-D kernel reaches rounding-level rank well below m / 4.
      const MatrixXd K = gaussian_gram(32, 300, 1, 3.0);
      const VectorXd y = testing_support::random_matrix(33, 300, 1);
      const ltk::LoocvPath<double> path(K, y);
      for (double lambda : {1e-6, 1e-3, 0.1})
        CHECK(path.score(lambda) == doctest::Approx(ltk::loocv_score(K, y, lambda)).epsilon(1e-8));
    }
    SUBCASE("full-rank large block") {
      const MatrixXd K = gaussian_gram(34, 280, 3, 0.3);
      const VectorXd y = testing_support::random_matrix(35, 280, 1);
      const ltk::LoocvPath<double> path(K, y);
      for (double lambda : {1e-4, 0.05})
        CHECK(path.score(lambda) == doctest::Approx(ltk::loocv_score(K, y, lambda)).epsilon(1e-9));
    }
    SUBCASE("block-diagonal input with an external penalty size") {
      MatrixXd K = gaussian_gram(36, 40, 2, 1.0);
      std::vector<std::vector<Eigen::Index>> blocks(2);
      for (Eigen::Index i = 0; i < 40; ++i) blocks[i % 2].push_back(i);
      for (Eigen::Index i = 0; i < 40; ++i)
        for (Eigen::Index j = 0; j < 40; ++j)
          if (i % 2 != j % 2) K(i, j) = 0;
      const VectorXd y = testing_support::random_matrix(37, 40, 1);
      const ltk::LoocvPath<double> path(K, y, 0, blocks);
      CHECK(path.score(0.01) == doctest::Approx(ltk::loocv_score(K, y, 0.01)).epsilon(1e-9));
      // A diagonal block scored with the penalty of the surrounding system.
      MatrixXd Kb(20, 20);
      VectorXd yb(20);
      for (Eigen::Index i = 0; i < 20; ++i) {
        yb(i) = y(2 * i);
        for (Eigen::Index j = 0; j < 20; ++j) Kb(i, j) = K(2 * i, 2 * j);
      }
      const ltk::LoocvPath<double> sub(Kb, yb, 40.0);
      CHECK(sub.score(0.01) == doctest::Approx(ltk::loocv_score(Kb, yb, 0.02)).epsilon(1e-9));
    }
  }

  TEST_CASE("tuning grid") {
    CHECK_THROWS_AS(ltk::TuningGrid<double>({}), ltk::InputError);
    CHECK_THROWS_AS(ltk::TuningGrid<double>({1.0, 0.5}), ltk::InputError);
    CHECK_THROWS_AS(ltk::TuningGrid<double>({0.0, 0.5}), ltk::InputError);
    const auto g = ltk::TuningGrid<double>::log_spaced(1e-6, 1.0, 20);
    CHECK(g.values().size() == 20);
    CHECK(g.values().front() == doctest::Approx(1e-6));
    CHECK(g.values().back() == doctest::Approx(1.0));
    const MatrixXd K = 2.0 * MatrixXd::Identity(4, 4);
    CHECK(ltk::TuningGrid<double>::default_for(K).values().back() == doctest::Approx(2.0));
    const auto custom = ltk::TuningGrid<double>::default_for(K, ltk::PenaltyGrid{1e-2, 1e-1, 3});
    CHECK(custom.values().size() == 3);
    CHECK(custom.values().front() == doctest::Approx(2e-2));
  }

  TEST_CASE("tune_lambda examples") {
    const MatrixXd K = gaussian_gram(40, 20, 1, 1.0);
    const VectorXd y = testing_support::random_matrix(41, 20, 1);
    CHECK(ltk::tune_lambda(K, y, ltk::TuningGrid<double>({0.37})) == 0.37);
    // y = 0 scores zero everywhere: the tie goes to the largest value.
    CHECK(ltk::tune_lambda(K, VectorXd::Zero(20), ltk::TuningGrid<double>({0.1, 0.2, 0.3})) == 0.3);
  }

  TEST_CASE("tuned penalty is near the cross-validation optimum") {
    const Eigen::Index n = 120;
    MatrixXd x(n, 1);
    VectorXd y(n);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-2, 2);
    std::normal_distribution<double> noise(0, 0.3);
    for (Eigen::Index i = 0; i < n; ++i) {
      x(i, 0) = u(rng);
      y(i) = std::sin(2 * x(i, 0)) + noise(rng);
    }
    const MatrixXd K = ltk::gram(ltk::KernelSpec<double>::gaussian(ltk::median_heuristic<double>(x)), x);
    const auto grid = ltk::TuningGrid<double>::default_for(K);
    const double tuned = ltk::tune_lambda(K, y, grid);
    double best = INFINITY;
    for (double l : grid.values()) best = std::min(best, oracle::kfold_cv_mse(K, y, l, 5));
    CHECK(oracle::kfold_cv_mse(K, y, tuned, 5) <= 1.05 * best);
  }

  TEST_CASE("fitted values shrink as the penalty grows") {
    const MatrixXd K = gaussian_gram(50, 30, 2, 0.7);
    const VectorXd y = testing_support::random_matrix(51, 30, 1);
    const auto grid = ltk::TuningGrid<double>::log_spaced(1e-6, 10.0, 15);
    double prev = INFINITY;
    for (double lambda : grid.values()) {
      const double norm = (K * ltk::solve_ridge(K, lambda, y)).norm();
      CHECK(norm < prev);
      prev = norm;
    }
  }
}
