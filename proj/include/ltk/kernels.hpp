#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ltk/error.hpp"

namespace ltk {

enum class KernelFamily { GaussianProduct, Dirac };

/// Kernel configuration for one variable block.
///
/// GaussianProduct evaluates prod_j exp(-(w_j - w'_j)^2 / (2 sigma_j^2)), one
/// lengthscale per input dimension. Dirac evaluates 1{w == w'} and is reserved
/// for discrete variables (the selection indicator, binary treatments).
template <typename Scalar = double>
struct KernelSpec {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  KernelFamily family = KernelFamily::Dirac;
  Vector lengthscales;

  static KernelSpec gaussian(const Vector& lengthscales) {
    if (lengthscales.size() == 0) throw InputError("gaussian kernel needs at least one lengthscale");
    for (Eigen::Index j = 0; j < lengthscales.size(); ++j) {
      if (!std::isfinite(lengthscales(j)) || !(lengthscales(j) > Scalar(0)))
        throw InputError("kernel lengthscale " + std::to_string(j) + " must be positive and finite");
    }
    return KernelSpec{KernelFamily::GaussianProduct, lengthscales};
  }

  static KernelSpec gaussian(Scalar lengthscale) { return gaussian(Vector::Constant(1, lengthscale)); }

  static KernelSpec dirac() { return KernelSpec{KernelFamily::Dirac, Vector()}; }

  bool is_dirac() const { return family == KernelFamily::Dirac; }
};

namespace detail {

template <typename Scalar, typename A, typename B>
Scalar scaled_sqdist(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& inv_ls, const Eigen::DenseBase<A>& w,
                     const Eigen::DenseBase<B>& v) {
  Scalar s(0);
  for (Eigen::Index j = 0; j < inv_ls.size(); ++j) {
    const Scalar t = (w.derived().coeff(j) - v.derived().coeff(j)) * inv_ls(j);
    s += t * t;
  }
  return s;
}

}  // namespace detail

/// Kernel value k(w, w'). Both points are vectors (or matrix rows).
template <typename Scalar, typename A, typename B>
Scalar eval_kernel(const KernelSpec<Scalar>& spec, const Eigen::DenseBase<A>& w, const Eigen::DenseBase<B>& v) {
  if (w.size() != v.size()) throw InputError("kernel arguments have different dimensions");
  if (spec.is_dirac()) {
    for (Eigen::Index j = 0; j < w.size(); ++j)
      if (w.derived().coeff(j) != v.derived().coeff(j)) return Scalar(0);
    return Scalar(1);
  }
  if (w.size() != spec.lengthscales.size()) throw InputError("point dimension does not match lengthscale count");
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> inv = spec.lengthscales.cwiseInverse();
  return std::exp(Scalar(-0.5) * detail::scaled_sqdist<Scalar>(inv, w, v));
}

/// Cross Gram matrix: entry (i, j) = k(rows_i, cols_j). Points are matrix rows.
template <typename Scalar, typename A, typename B>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> gram(const KernelSpec<Scalar>& spec,
                                                           const Eigen::MatrixBase<A>& rows,
                                                           const Eigen::MatrixBase<B>& cols) {
  if (rows.cols() != cols.cols()) throw InputError("gram: row and column points have different dimensions");
  if (!spec.is_dirac() && rows.cols() != spec.lengthscales.size())
    throw InputError("gram: point dimension does not match lengthscale count");
  const Eigen::Index n = rows.rows(), m = cols.rows();
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out(n, m);
  if (spec.is_dirac()) {
    for (Eigen::Index j = 0; j < m; ++j)
      for (Eigen::Index i = 0; i < n; ++i) out(i, j) = (rows.row(i) == cols.row(j)) ? Scalar(1) : Scalar(0);
    return out;
  }
  // Pre-scaled copies keep the inner loop to a subtraction per dimension.
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> inv = spec.lengthscales.cwiseInverse();
  const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> r = rows * inv.asDiagonal();
  const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> c = cols * inv.asDiagonal();
  const Eigen::Index p = r.cols();
  for (Eigen::Index j = 0; j < m; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      Scalar s(0);
      for (Eigen::Index k = 0; k < p; ++k) {
        const Scalar t = r(i, k) - c(j, k);
        s += t * t;
      }
      out(i, j) = std::exp(Scalar(-0.5) * s);
    }
  }
  return out;
}

/// Square Gram matrix over one point set; exactly symmetric with unit diagonal.
template <typename Scalar, typename A>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> gram(const KernelSpec<Scalar>& spec,
                                                           const Eigen::MatrixBase<A>& points) {
  if (!spec.is_dirac() && points.cols() != spec.lengthscales.size())
    throw InputError("gram: point dimension does not match lengthscale count");
  const Eigen::Index n = points.rows();
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out(n, n);
  if (spec.is_dirac()) {
    for (Eigen::Index j = 0; j < n; ++j) {
      out(j, j) = Scalar(1);
      for (Eigen::Index i = j + 1; i < n; ++i) out(i, j) = out(j, i) = (points.row(i) == points.row(j)) ? 1 : 0;
    }
    return out;
  }
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> inv = spec.lengthscales.cwiseInverse();
  const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> r = points * inv.asDiagonal();
  const Eigen::Index p = r.cols();
  for (Eigen::Index j = 0; j < n; ++j) {
    out(j, j) = Scalar(1);
    for (Eigen::Index i = j + 1; i < n; ++i) {
      Scalar s(0);
      for (Eigen::Index k = 0; k < p; ++k) {
        const Scalar t = r(i, k) - r(j, k);
        s += t * t;
      }
      out(i, j) = out(j, i) = std::exp(Scalar(-0.5) * s);
    }
  }
  return out;
}

/// Per-dimension median of pairwise absolute differences, with the lower-median
/// convention. More than 5000 points are uniformly subsampled to 5000 (fixed seed).
template <typename Scalar, typename A>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> median_heuristic(const Eigen::MatrixBase<A>& points) {
  constexpr Eigen::Index kMaxPoints = 5000;
  const Eigen::Index n_all = points.rows();
  if (n_all < 2) throw InputError("median heuristic needs at least two points");

  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n_all));
  std::iota(idx.begin(), idx.end(), Eigen::Index(0));
  if (n_all > kMaxPoints) {
    std::mt19937_64 rng(0x5eed);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(kMaxPoints);
  }
  const auto n = static_cast<std::size_t>(idx.size());

  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out(points.cols());
  std::vector<Scalar> dist;
  dist.reserve(n * (n - 1) / 2);
  for (Eigen::Index j = 0; j < points.cols(); ++j) {
    dist.clear();
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = a + 1; b < n; ++b) dist.push_back(std::abs(points(idx[a], j) - points(idx[b], j)));
    auto mid = dist.begin() + static_cast<std::ptrdiff_t>((dist.size() - 1) / 2);
    std::nth_element(dist.begin(), mid, dist.end());
    if (!(*mid > Scalar(0)))
      throw InputError("median heuristic: dimension " + std::to_string(j) +
                       " has zero median interpoint distance; set its lengthscale explicitly");
    out(j) = *mid;
  }
  return out;
}

}  // namespace ltk
