#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ltk/data.hpp"
#include "ltk/embeddings.hpp"

namespace ltk {

/// Which covariate population the counterfactual mean averages over.
enum class Estimand {
  ATE,  // full fused sample
  DS,   // alternative population
  EXP,  // experimental rows
  OBS,  // observational rows
};

std::string to_string(Estimand e);
Estimand parse_estimand(const std::string& name);

struct DoseResponseCurve {
  std::vector<double> grid;
  std::vector<double> estimates;
  Estimand estimand = Estimand::ATE;
  double lambda = 0;
  double lambda1 = 0;
  Eigen::Index n = 0, n_exp = 0, n_obs = 0;
  std::vector<std::string> warnings;
};

/// Covariates the estimand averages over.
Eigen::MatrixXd averaging_covariates(const FusedDataset& data, Estimand estimand,
                                     const std::optional<AltPopulation>& alt = std::nullopt);

/// theta(d) = mean over query covariates x_j of w^T (K_G1 . chi(x_j, d)),
/// w = (K_GG . K_XX . K_MM + n lambda I)^{-1} Y'.
///
/// Everything that does not depend on d is folded into one vector e, so
///   theta(d) = (1/r) sum_i e_i k_D(D'_i, d),
///   e = 1{G=0} . rowsum(K_XQ . C),  C = A1^{-1} K_MM diag(1{G=1} . w) K_XQ,
/// which follows from the symmetry of K_MM and of the first-stage system A1.
/// Each grid point costs O(n) after construction.
class DoseResponseEstimator {
public:
  DoseResponseEstimator(const EmbeddingModel& model, const OutcomeSystem& outcome, const Eigen::MatrixXd& query_x);

  double operator()(double d) const;
  const Eigen::VectorXd& folded_weights() const { return folded_; }

private:
  KernelSpec<double> d_kernel_;
  Eigen::MatrixXd d_points_;
  Eigen::VectorXd folded_;
  double inv_count_;
};

DoseResponseCurve estimate_curve(const FusedDataset& data, Estimand estimand, const std::vector<double>& grid,
                                 const KernelSet& kernels, double lambda, double lambda1,
                                 const std::optional<AltPopulation>& alt = std::nullopt);

/// Median-heuristic kernels, then lambda1 and lambda tuned by leave-one-out on
/// their own regressions. Deterministic.
DoseResponseCurve estimate_curve_tuned(const FusedDataset& data, Estimand estimand, const std::vector<double>& grid,
                                       const std::optional<AltPopulation>& alt = std::nullopt,
                                       const PenaltyGrid& range = {});

/// `count` equispaced quantiles (0 to 1 inclusive) of D over experimental rows.
std::vector<double> default_treatment_grid(const FusedDataset& data, int count = 25);

/// `count` points from start to stop inclusive.
std::vector<double> linspace(double start, double stop, int count);

}  // namespace ltk
