#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

#include "brute_force.hpp"
#include "ltk/data.hpp"
#include "ltk/embeddings.hpp"

namespace testing_support {

/// Small fused sample with random group sizes (both groups non-empty).
inline ltk::FusedDataset random_dataset(std::uint64_t seed, Eigen::Index n, Eigen::Index p, Eigen::Index q,
                                        ltk::TreatmentKind kind) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  std::bernoulli_distribution coin(0.5);
  Eigen::VectorXi g(n);
  for (Eigen::Index i = 0; i < n; ++i) g(i) = coin(rng) ? 1 : 0;
  g(0) = 0;
  g(1) = 1;
  Eigen::MatrixXd x(n, p), m(n, q);
  Eigen::VectorXd d(n), y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) x(i, j) = z(rng);
    for (Eigen::Index j = 0; j < q; ++j) m(i, j) = z(rng);
    d(i) = g(i) == 1 ? 0.0 : (kind == ltk::TreatmentKind::Binary ? (coin(rng) ? 1.0 : 0.0) : z(rng));
    y(i) = g(i) == 1 ? z(rng) : 0.0;
  }
  return ltk::FusedDataset(g, x, d, m, y, kind);
}

inline Eigen::MatrixXd random_matrix(std::uint64_t seed, Eigen::Index rows, Eigen::Index cols) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  Eigen::MatrixXd a(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) a(i, j) = z(rng);
  return a;
}

inline oracle::Bandwidths bandwidths(const ltk::KernelSet& k) {
  oracle::Bandwidths bw;
  bw.x = k.x.lengthscales;
  bw.d = k.d.is_dirac() ? Eigen::VectorXd() : k.d.lengthscales;
  bw.m = k.m.lengthscales;
  if (k.y) bw.y = k.y->lengthscales(0);
  return bw;
}

}  // namespace testing_support
