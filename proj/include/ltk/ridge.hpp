#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "ltk/error.hpp"

namespace ltk {

/// Factorized regularized system (K + n*lambda*I), n = K.rows().
///
/// The factorization is a Cholesky decomposition; if it fails, a jitter of
/// 1e-10 * trace(K) / n is added to the diagonal and the factorization retried
/// once before giving up.
template <typename Scalar = double>
class RidgeSolver {
public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  RidgeSolver() = default;

  template <typename Derived>
  RidgeSolver(const Eigen::MatrixBase<Derived>& K, Scalar lambda) : lambda_(lambda) {
    if (K.rows() != K.cols()) throw InputError("ridge system matrix must be square");
    if (K.rows() == 0) throw InputError("ridge system is empty");
    if (!std::isfinite(lambda) || !(lambda > Scalar(0))) throw InputError("ridge penalty must be positive and finite");
    const Eigen::Index n = K.rows();
    Matrix A = K;
    A.diagonal().array() += Scalar(n) * lambda;
    llt_.compute(A);
    if (llt_.info() != Eigen::Success) {
      jitter_ = Scalar(1e-10) * K.trace() / Scalar(n);
      A.diagonal().array() += jitter_;
      llt_.compute(A);
      if (llt_.info() != Eigen::Success)
        throw NumericalError("ridge system is not positive definite (n=" + std::to_string(n) + ")");
    }
  }

  /// (K + n*lambda*I)^{-1} * targets, column by column.
  template <typename Derived>
  Matrix solve(const Eigen::MatrixBase<Derived>& targets) const {
    if (targets.rows() != size()) throw InputError("ridge targets have the wrong number of rows");
    return llt_.solve(targets);
  }

  Eigen::Index size() const { return llt_.matrixLLT().rows(); }
  Scalar lambda() const { return lambda_; }
  Scalar jitter() const { return jitter_; }

private:
  Eigen::LLT<Matrix> llt_;
  Scalar lambda_ = 0;
  Scalar jitter_ = 0;
};

template <typename Derived, typename Targets>
auto solve_ridge(const Eigen::MatrixBase<Derived>& K, typename Derived::Scalar lambda,
                 const Eigen::MatrixBase<Targets>& targets) {
  return RidgeSolver<typename Derived::Scalar>(K, lambda).solve(targets);
}

/// Closed-form leave-one-out score (1/n) || diag(H)^{-1} H y ||^2 with
/// H = I - K (K + n*lambda*I)^{-1}. Multi-column targets sum over columns.
template <typename Derived, typename Targets>
typename Derived::Scalar loocv_score(const Eigen::MatrixBase<Derived>& K, const Eigen::MatrixBase<Targets>& y,
                                     typename Derived::Scalar lambda) {
  using Scalar = typename Derived::Scalar;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Eigen::Index n = K.rows();
  if (K.cols() != n || y.rows() != n) throw InputError("loocv: K must be n x n and y must have n rows");
  const RidgeSolver<Scalar> solver(K, lambda);
  const Matrix H = Matrix::Identity(n, n) - K * solver.solve(Matrix::Identity(n, n));
  const auto h = H.diagonal();
  constexpr Scalar kTiny = std::numeric_limits<Scalar>::epsilon();
  if ((h.array().abs() <= kTiny).any()) throw NumericalError("loocv: smoother has a zero diagonal entry");
  const Matrix residual = h.cwiseInverse().asDiagonal() * (H * y);
  return residual.squaredNorm() / Scalar(n);
}

/// Log-spaced penalty range relative to trace(K)/n.
struct PenaltyGrid {
  double lo = 1e-6;
  double hi = 1.0;
  int count = 20;
};

/// Candidate penalties: sorted ascending, strictly positive.
template <typename Scalar = double>
class TuningGrid {
public:
  explicit TuningGrid(std::vector<Scalar> values) : values_(std::move(values)) {
    if (values_.empty()) throw InputError("tuning grid is empty");
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (!std::isfinite(values_[i]) || !(values_[i] > 0)) throw InputError("tuning grid values must be positive");
      if (i > 0 && !(values_[i] > values_[i - 1])) throw InputError("tuning grid must be strictly ascending");
    }
  }

  /// `count` log-spaced values over [lo, hi] * scale.
  static TuningGrid log_spaced(Scalar lo, Scalar hi, int count, Scalar scale = Scalar(1)) {
    if (count < 1 || !(lo > 0) || !(hi >= lo)) throw InputError("invalid log-spaced grid");
    std::vector<Scalar> v(static_cast<std::size_t>(count));
    const Scalar a = std::log10(lo), b = std::log10(hi);
    for (int i = 0; i < count; ++i)
      v[static_cast<std::size_t>(i)] =
          scale * std::pow(Scalar(10), count == 1 ? a : a + (b - a) * Scalar(i) / Scalar(count - 1));
    return TuningGrid(std::move(v));
  }

  /// `range` scaled by trace(K)/n; by default 20 values in [1e-6, 1].
  template <typename Derived>
  static TuningGrid default_for(const Eigen::MatrixBase<Derived>& K, const PenaltyGrid& range = {}) {
    const Scalar scale = K.trace() / Scalar(K.rows());
    return log_spaced(Scalar(range.lo), Scalar(range.hi), range.count, scale > 0 ? scale : Scalar(1));
  }

  const std::vector<Scalar>& values() const { return values_; }

private:
  std::vector<Scalar> values_;
};

/// Leave-one-out scores for many penalties from one reduction per block.
///
/// Each block is reduced once to K = Q T Q^T (T tridiagonal, Q orthogonal).
/// For a penalty nl, (K + nl I)^{-1} = Q (T + nl I)^{-1} Q^T, and the LDL^T
/// factors of T + nl I give diag(H) and H y in O(m^2) per penalty.
///
/// Large blocks whose pivoted Cholesky factor reaches rounding level (largest
/// residual diagonal <= 4 eps max K_ii) within m/4 columns use K = U S U^T
/// from that factor instead; H is then I off span(U) and O(m r) per penalty.
///
/// `penalty_n` is the n in n*lambda (it may exceed the matrix size when the
/// matrix is a diagonal block of a larger system). Optional `blocks` partition
/// the row indices of a block-diagonal K; each block is reduced separately,
/// which is exact because H inherits the block structure.
template <typename Scalar = double>
class LoocvPath {
public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  template <typename Derived, typename Targets>
  LoocvPath(const Eigen::MatrixBase<Derived>& K, const Eigen::MatrixBase<Targets>& targets, Scalar penalty_n = 0,
            std::vector<std::vector<Eigen::Index>> blocks = {})
      : n_(K.rows()), penalty_n_(penalty_n > 0 ? penalty_n : Scalar(K.rows())) {
    if (K.cols() != n_ || targets.rows() != n_) throw InputError("loocv path: K must be n x n with n target rows");
    if (blocks.empty()) {
      blocks.emplace_back(static_cast<std::size_t>(n_));
      for (Eigen::Index i = 0; i < n_; ++i) blocks.front()[static_cast<std::size_t>(i)] = i;
    }
    for (const auto& b : blocks) {
      if (b.empty()) continue;
      const auto m = static_cast<Eigen::Index>(b.size());
      Matrix Yb(m, targets.cols());
      for (Eigen::Index i = 0; i < m; ++i) Yb.row(i) = targets.row(b[static_cast<std::size_t>(i)]);
      // H * 0 = 0: the block adds nothing to the score for any penalty.
      if (Yb.squaredNorm() == Scalar(0)) continue;
      Matrix Kb(m, m);
      for (Eigen::Index j = 0; j < m; ++j)
        for (Eigen::Index i = 0; i < m; ++i) Kb(i, j) = K(b[static_cast<std::size_t>(i)], b[static_cast<std::size_t>(j)]);
      Block blk;
      if (m >= kLowRankMin && low_rank(Kb, Yb, blk)) {
        blocks_.push_back(std::move(blk));
        continue;
      }
      if (m == 1) {
        blk.diag = Kb.diagonal();
        blk.sub = Vector();
        blk.q = Matrix::Identity(1, 1);
      } else {
        Eigen::Tridiagonalization<Matrix> tri(Kb);
        blk.diag = tri.diagonal();
        blk.sub = tri.subDiagonal();
        blk.q = tri.matrixQ();
      }
      blk.projected = blk.q.transpose() * Yb;
      blocks_.push_back(std::move(blk));
    }
  }

  Scalar score(Scalar lambda) const {
    if (!(lambda > 0)) throw InputError("loocv path: penalty must be positive");
    const Scalar nl = penalty_n_ * lambda;
    Scalar total(0);
    for (const auto& b : blocks_) {
      if (b.u.size() > 0) {
        const Vector shrink = (nl / (b.s2.array() + nl)).matrix();
        const Vector hdiag = b.off_span + b.u2 * shrink;
        if ((hdiag.array().abs() <= std::numeric_limits<Scalar>::epsilon()).any())
          throw NumericalError("loocv path: smoother has a zero diagonal entry");
        // H y = y - U diag(s2 / (s2 + nl)) U^T y.
        const Matrix hy = b.targets - b.u * ((Vector::Ones(shrink.size()) - shrink).asDiagonal() * b.projected);
        total += (hdiag.cwiseInverse().asDiagonal() * hy).squaredNorm();
        continue;
      }
      const Eigen::Index m = b.diag.size();
      // T + nl I = L D L^T with unit lower bidiagonal L (subdiagonal sub_i / d_i).
      Vector d(m);
      d(0) = b.diag(0) + nl;
      for (Eigen::Index i = 1; i < m; ++i) d(i) = b.diag(i) + nl - b.sub(i - 1) * b.sub(i - 1) / d(i - 1);
      if (!(d.array() > Scalar(0)).all()) throw NumericalError("loocv path: regularized system is not positive definite");

      // W = Q (T + nl I)^{-1}, built column by column; diag((K + nl I)^{-1}) = rowsum(Q .* W).
      Matrix w(m, m);
      w.col(0) = b.q.col(0) / d(0);
      for (Eigen::Index i = 1; i < m; ++i) w.col(i) = (b.q.col(i) - b.sub(i - 1) * w.col(i - 1)) / d(i);
      Vector inv_diag = b.q.col(m - 1).cwiseProduct(w.col(m - 1));
      for (Eigen::Index i = m - 2; i >= 0; --i) {
        w.col(i) -= (b.sub(i) / d(i)) * w.col(i + 1);
        inv_diag += b.q.col(i).cwiseProduct(w.col(i));
      }
      const Vector hdiag = nl * inv_diag;
      if ((hdiag.array().abs() <= std::numeric_limits<Scalar>::epsilon()).any())
        throw NumericalError("loocv path: smoother has a zero diagonal entry");
      // H y = nl (K + nl I)^{-1} y = nl W Q^T y.
      const Matrix hy = nl * (w * b.projected);
      total += (hdiag.cwiseInverse().asDiagonal() * hy).squaredNorm();
    }
    return total / Scalar(n_);
  }

  /// Grid value with the smallest score; ties go to the larger penalty.
  Scalar argmin(const TuningGrid<Scalar>& grid) const {
    Scalar best = std::numeric_limits<Scalar>::infinity();
    Scalar chosen = 0;
    bool any = false;
    for (Scalar lambda : grid.values()) {
      Scalar s;
      try {
        s = score(lambda);
      } catch (const NumericalError&) {
        continue;
      }
      if (!std::isfinite(s)) continue;
      if (s <= best) {
        best = s;
        chosen = lambda;
        any = true;
      }
    }
    if (!any) throw NumericalError("penalty tuning failed: every grid value is degenerate");
    return chosen;
  }

private:
  static constexpr Eigen::Index kLowRankMin = 256;

  struct Block {
    // Tridiagonal form.
    Vector diag;
    Vector sub;
    Matrix q;
    // Low-rank form: K = U diag(s2) U^T, u2 = U .* U, off_span = 1 - rowsum(u2).
    Matrix u;
    Vector s2;
    Matrix u2;
    Vector off_span;
    Matrix targets;
    // Q^T y or U^T y.
    Matrix projected;
  };

  static bool low_rank(const Matrix& K, const Matrix& Y, Block& blk) {
    const Eigen::Index m = K.rows();
    const Eigen::Index cap = m / 4;
    Vector resid = K.diagonal();
    const Scalar tol = Scalar(4) * std::numeric_limits<Scalar>::epsilon() * resid.maxCoeff();
    Matrix F = Matrix::Zero(m, cap);
    Eigen::Index r = 0;
    for (;; ++r) {
      Eigen::Index p;
      const Scalar top = resid.maxCoeff(&p);
      if (top <= tol) break;
      if (r == cap) return false;
      F.col(r) = (K.col(p) - F.leftCols(r) * F.row(p).head(r).transpose()) / std::sqrt(top);
      resid -= F.col(r).cwiseAbs2();
      resid(p) = 0;
    }
    if (r == 0) return false;
    // F = Q R, R R^T = W diag(s2) W^T, U = Q W.
    Eigen::HouseholderQR<Matrix> qr(F.leftCols(r));
    const Matrix R = qr.matrixQR().topRows(r).template triangularView<Eigen::Upper>();
    Eigen::SelfAdjointEigenSolver<Matrix> eig(R * R.transpose());
    if (eig.info() != Eigen::Success) return false;
    const Matrix q = qr.householderQ() * Matrix::Identity(m, r);
    blk.u = q * eig.eigenvectors();
    blk.s2 = eig.eigenvalues().cwiseMax(Scalar(0));
    blk.u2 = blk.u.cwiseAbs2();
    blk.off_span = (Vector::Ones(m) - blk.u2.rowwise().sum()).cwiseMax(Scalar(0));
    blk.targets = Y;
    blk.projected = blk.u.transpose() * Y;
    return true;
  }

  Eigen::Index n_;
  Scalar penalty_n_;
  std::vector<Block> blocks_;
};

/// Leave-one-out tuning of the ridge penalty over `grid`; ties go to the larger value.
template <typename Derived, typename Targets>
typename Derived::Scalar tune_lambda(const Eigen::MatrixBase<Derived>& K, const Eigen::MatrixBase<Targets>& y,
                                     const TuningGrid<typename Derived::Scalar>& grid) {
  return LoocvPath<typename Derived::Scalar>(K, y).argmin(grid);
}

}  // namespace ltk
