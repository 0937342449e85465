#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <set>
#include <string>

#include "doctest.h"
#include "ltk/data.hpp"
#include "ltk/error.hpp"
#include "support.hpp"

using ltk::TreatmentKind;

namespace {

std::string error_of(const std::string& csv) {
  try {
    ltk::parse_fused_csv(csv);
  } catch (const ltk::InputError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_SUITE("data") {
  TEST_CASE("two-row file") {
    const auto d = ltk::parse_fused_csv("g,x_1,d,m_1,y\n0,0.5,1,0.2,\n1,0.1,,0.3,2.5\n");
    CHECK(d.size() == 2);
    CHECK(d.n_exp() == 1);
    CHECK(d.n_obs() == 1);
    CHECK(d.x_dim() == 1);
    CHECK(d.m_dim() == 1);
    CHECK(d.treatment_kind() == TreatmentKind::Binary);
    CHECK(d.y()(1) == 2.5);
    CHECK(d.encoding_fixes() == 0);
  }

  TEST_CASE("empty groups are rejected") {
    CHECK(error_of("g,x_1,d,m_1,y\n0,0.5,1,0.2,\n0,0.1,0,0.3,\n") == "observational group empty");
    CHECK(error_of("g,x_1,d,m_1,y\n1,0.5,,0.2,1\n1,0.1,,0.3,2\n") == "experimental group empty");
  }

  TEST_CASE("structurally absent values are normalized") {
    const auto d = ltk::parse_fused_csv("g,x_1,d,m_1,y\n0,0.5,1,0.2,\n1,0.1,1,0.3,2.5\n");
    CHECK(d.d()(1) == 0.0);
    CHECK(d.encoding_fixes() == 1);
    const auto e = ltk::parse_fused_csv("g,x_1,d,m_1,y\n0,0.5,1,0.2,7\n1,0.1,1,0.3,2.5\n");
    CHECK(e.y()(0) == 0.0);
    CHECK(e.d()(1) == 0.0);
    CHECK(e.encoding_fixes() == 2);
  }

  TEST_CASE("malformed files") {
    CHECK(error_of("").find("empty") != std::string::npos);
    CHECK(error_of("g,x_1,d,m_1\n0,1,1,1\n").find("missing column y") != std::string::npos);
    CHECK(error_of("g,d,m_1,y\n0,1,1,\n").find("missing column x_1") != std::string::npos);
    CHECK(error_of("g,x_1,d,m_1,y\n0,abc,1,0.2,\n1,0.1,,0.3,2.5\n").find("non-numeric") != std::string::npos);
    CHECK(error_of("g,x_1,d,m_1,y\n0,0.5,1,0.2\n").find("cells") != std::string::npos);
    CHECK(error_of("g,x_1,d,m_1,y\n2,0.5,1,0.2,\n").find("g must be 0 or 1") != std::string::npos);
    CHECK(error_of("g,x_1,d,m_1,y\n0,0.5,,0.2,\n1,0.1,,0.3,2.5\n").find("d is required") != std::string::npos);
    CHECK(error_of("g,x_1,d,m_1,y\n0,0.5,1,0.2,\n1,0.1,,0.3,\n").find("y is required") != std::string::npos);
    CHECK_THROWS_AS(ltk::load_fused_csv("/nonexistent/file.csv"), ltk::InputError);
  }

  TEST_CASE("treatment kind detection and override") {
    const std::string text = "g,x_1,d,m_1,y\n0,0.5,0.5,0.2,\n1,0.1,,0.3,2.5\n";
    CHECK(ltk::parse_fused_csv(text).treatment_kind() == TreatmentKind::Continuous);
    CHECK_THROWS_AS(ltk::parse_fused_csv(text, {TreatmentKind::Binary}), ltk::InputError);
    const std::string binary = "g,x_1,d,m_1,y\n0,0.5,1,0.2,\n1,0.1,,0.3,2.5\n";
    CHECK(ltk::parse_fused_csv(binary, {TreatmentKind::Continuous}).treatment_kind() == TreatmentKind::Continuous);
  }

  TEST_CASE("CSV round trip is bit exact") {
    const auto d = testing_support::random_dataset(11, 40, 3, 2, TreatmentKind::Continuous);
    const auto back = ltk::parse_fused_csv(ltk::format_fused_csv(d));
    CHECK(back.g() == d.g());
    CHECK(back.x() == d.x());
    CHECK(back.d() == d.d());
    CHECK(back.m() == d.m());
    CHECK(back.y() == d.y());
    CHECK(back.treatment_kind() == d.treatment_kind());

    const auto path = (std::filesystem::temp_directory_path() / "ltk_roundtrip.csv").string();
    ltk::write_fused_csv(d, path);
    const auto file = ltk::load_fused_csv(path);
    CHECK(file.x() == d.x());
    CHECK(file.y() == d.y());
    std::remove(path.c_str());
  }

  TEST_CASE("format_double round trips") {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0}) CHECK(std::stod(ltk::format_double(v)) == v);
  }

  TEST_CASE("alternative population") {
    const Eigen::MatrixXd x = testing_support::random_matrix(2, 5, 2);
    const ltk::AltPopulation pop(x);
    const auto path = (std::filesystem::temp_directory_path() / "ltk_alt.csv").string();
    ltk::write_alt_population_csv(pop, path);
    CHECK(ltk::load_alt_population_csv(path).x == x);
    std::remove(path.c_str());
    CHECK_THROWS_AS(ltk::AltPopulation(Eigen::MatrixXd(0, 2)), ltk::InputError);
  }

  TEST_CASE("subset and masks") {
    const auto d = testing_support::random_dataset(3, 10, 1, 1, TreatmentKind::Binary);
    CHECK(d.experimental_mask().sum() == double(d.n_exp()));
    CHECK((d.experimental_mask() + d.observational_mask()).isOnes());
    const auto s = d.subset({1, 0});
    CHECK(s.g()(0) == 1);
    CHECK(s.g()(1) == 0);
    CHECK(s.x().row(1) == d.x().row(0));
    CHECK_THROWS_AS(d.subset({0}), ltk::InputError);
    CHECK_THROWS_AS(d.subset({0, 99}), ltk::InputError);
  }

  TEST_CASE("fold sizes") {
    auto sizes = [](const ltk::FoldPartition& p) {
      std::vector<std::size_t> s;
      for (int f = 0; f < p.folds; ++f) s.push_back(p.members(f).size());
      std::sort(s.begin(), s.end());
      return s;
    };
    CHECK(sizes(ltk::split_folds(4, 2, 1)) == std::vector<std::size_t>{2, 2});
    CHECK(sizes(ltk::split_folds(5, 2, 1)) == std::vector<std::size_t>{2, 3});
    const auto p = ltk::split_folds(103, 5, 9);
    const auto s = sizes(p);
    CHECK(s.back() - s.front() <= 1);
    std::set<Eigen::Index> all;
    for (int f = 0; f < 5; ++f) {
      for (auto i : p.members(f)) CHECK(all.insert(i).second);
      CHECK(p.members(f).size() + p.complement(f).size() == 103);
    }
    CHECK(all.size() == 103);
  }

  TEST_CASE("folds are deterministic given the seed") {
    CHECK(ltk::split_folds(50, 5, 42).assignment == ltk::split_folds(50, 5, 42).assignment);
    CHECK(ltk::split_folds(50, 5, 42).assignment != ltk::split_folds(50, 5, 43).assignment);
  }

  TEST_CASE("fold preconditions") {
    CHECK_THROWS_AS(ltk::split_folds(3, 2, 0), ltk::InputError);
    CHECK_THROWS_AS(ltk::split_folds(10, 1, 0), ltk::InputError);
  }

  TEST_CASE("fold complements contain both groups") {
    Eigen::VectorXi g = Eigen::VectorXi::Zero(20);
    g(3) = 1;
    g(17) = 1;
    const auto p = ltk::split_folds(g, 2, 5);
    for (int f = 0; f < 2; ++f) {
      int obs = 0, exp = 0;
      for (auto i : p.complement(f)) (g(i) == 1 ? obs : exp)++;
      CHECK(obs > 0);
      CHECK(exp > 0);
    }
    Eigen::VectorXi lone = Eigen::VectorXi::Zero(20);
    lone(0) = 1;
    CHECK_THROWS_AS(ltk::split_folds(lone, 2, 5), ltk::InputError);
  }
}
