#pragma once

#include <optional>

#include <Eigen/Dense>

#include "ltk/data.hpp"
#include "ltk/kernels.hpp"
#include "ltk/ridge.hpp"

namespace ltk {

/// Kernels for X, D, M and Y. The selection indicator G always uses the Dirac kernel.
struct KernelSet {
  KernelSpec<double> x;
  KernelSpec<double> d;
  KernelSpec<double> m;
  std::optional<KernelSpec<double>> y;
};

/// Median-heuristic lengthscales: X and M over all rows, D over experimental
/// rows (Dirac for binary treatments), Y over observational rows.
KernelSet median_kernels(const FusedDataset& data, bool with_outcome_kernel = false);

/// Row vector of D' as a one-column matrix, the form gram() expects.
Eigen::MatrixXd as_points(const Eigen::VectorXd& v);

/// First-stage conditional mean embedding of M given (G = 0, X, D).
///
/// Holds the Gram matrices over the whole fused sample and one Cholesky
/// factorization of K_GG . K_XX . K_D'D' + n lambda1 I ('.' = elementwise).
/// For a query (x, d) the coefficients are
///   beta(x, d) = (K_GG . K_XX . K_D'D' + n lambda1 I)^{-1} (K_G0 . K_Xx . K_D'd)
/// so that mu_m(0, x, d) = sum_i beta_i phi(M_i), and
///   chi(x, d) = K_Xx . (K_MM beta(x, d)).
/// Observational rows carry the fill value d' = 0 inside K_D'D'; the mask
/// K_G0 keeps them out of every target.
class EmbeddingModel {
public:
  EmbeddingModel(const FusedDataset& data, const KernelSet& kernels, double lambda1);

  Eigen::VectorXd cme_coefficients(const Eigen::VectorXd& x, double d) const;
  /// One column per query row of `xs`.
  Eigen::MatrixXd cme_coefficients(const Eigen::MatrixXd& xs, double d) const;

  Eigen::VectorXd chi(const Eigen::VectorXd& x, double d) const;
  Eigen::MatrixXd chi(const Eigen::MatrixXd& xs, double d) const;

  /// K_{X, xs}: n x r cross kernel between sample covariates and queries.
  Eigen::MatrixXd cross_x(const Eigen::MatrixXd& xs) const;
  /// k_D(D'_i, d) for every row.
  Eigen::VectorXd cross_d(double d) const;

  /// (K_GG . K_XX . K_D'D' + n lambda1 I)^{-1} * rhs.
  Eigen::MatrixXd solve_first_stage(const Eigen::MatrixXd& rhs) const { return first_stage_.solve(rhs); }

  const FusedDataset& data() const { return data_; }
  const KernelSet& kernels() const { return kernels_; }
  double lambda1() const { return first_stage_.lambda(); }
  const Eigen::MatrixXd& k_gg() const { return k_gg_; }
  const Eigen::MatrixXd& k_xx() const { return k_xx_; }
  const Eigen::MatrixXd& k_dd() const { return k_dd_; }
  const Eigen::MatrixXd& k_mm() const { return k_mm_; }
  const Eigen::VectorXd& mask0() const { return mask0_; }
  const Eigen::VectorXd& mask1() const { return mask1_; }

private:
  FusedDataset data_;
  KernelSet kernels_;
  Eigen::MatrixXd k_gg_, k_xx_, k_dd_, k_mm_;
  Eigen::VectorXd mask0_, mask1_;
  RidgeSolver<double> first_stage_;
};

/// Outcome-stage system K_GG . K_XX . K_MM + n lambda I, shared by the
/// dose-response weights, gamma-hat, and the distribution embedding.
class OutcomeSystem {
public:
  OutcomeSystem(const EmbeddingModel& model, double lambda);

  /// (K_GG . K_XX . K_MM + n lambda I)^{-1} Y'.
  const Eigen::VectorXd& weights() const { return weights_; }
  Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const { return solver_.solve(rhs); }
  double lambda() const { return solver_.lambda(); }

private:
  RidgeSolver<double> solver_;
  Eigen::VectorXd weights_;
};

/// K_GG . K_XX . K_MM from a model's cached Gram matrices.
Eigen::MatrixXd outcome_kernel(const EmbeddingModel& model);

/// Row blocks of a matrix that is block diagonal under the Dirac G kernel.
std::vector<std::vector<Eigen::Index>> group_blocks(const Eigen::VectorXi& g);

/// Leave-one-out penalty for the outcome regression of Y' on (G, X, M).
double tune_outcome_lambda(const EmbeddingModel& model, const PenaltyGrid& range = {});

/// Leave-one-out penalty for the first stage, scored on the experimental
/// block with the surrogate kernel features k_M(M_i, .) as targets.
double tune_first_stage_lambda(const FusedDataset& data, const KernelSet& kernels, const PenaltyGrid& range = {});

/// Leave-one-out penalty for the distribution regression of phi(Y) on
/// (G, X, M), scored on the observational block with outcome kernel features.
double tune_distribution_lambda(const EmbeddingModel& model, const PenaltyGrid& range = {});

}  // namespace ltk
