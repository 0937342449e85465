#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ltk/data.hpp"
#include "ltk/embeddings.hpp"

namespace ltk {

/// Nuisance values at a set of rows, propensities already censored into
/// [epsilon, 1 - epsilon].
struct NuisanceValues {
  Eigen::VectorXd nu;         // nu(X): partial mean of gamma under P(m | G=0, X, d)
  Eigen::VectorXd delta;      // gamma(G=1, X, M)
  Eigen::VectorXd pi;         // P(D=d | G=0, X)
  Eigen::VectorXd rho;        // P(D=d | G=0, X, M)
  Eigen::VectorXd pi_prime;   // P(G=1 | X)
  Eigen::VectorXd rho_prime;  // P(G=1 | X, M)

  Eigen::Index size() const { return nu.size(); }
};

/// Nuisance functions for the long-term effect at treatment level d.
class NuisanceSet {
public:
  virtual ~NuisanceSet() = default;
  /// Values at the rows (x_j, m_j).
  virtual NuisanceValues evaluate(const Eigen::MatrixXd& x, const Eigen::MatrixXd& m) const = 0;
  virtual double treatment() const = 0;
  virtual double epsilon() const = 0;
};

/// Clamp into [epsilon, 1 - epsilon].
double censor(double p, double epsilon);

/// Uncensored outputs of the six kernel ridge subroutines, at query rows.
struct SubroutineValues {
  Eigen::VectorXd nu;          // (Y')^T A^{-1} (K_G1 . chi(x, d))
  Eigen::VectorXd gamma;       // (Y')^T A^{-1} (K_G1 . K_Xx . K_Mm)
  Eigen::VectorXd pi1;         // (D')^T (K_GG . K_XX + n l3 I)^{-1} (K_G0 . K_Xx)
  Eigen::VectorXd rho1;        // (D')^T (K_GG . K_XX . K_MM + n l4 I)^{-1} (K_G0 . K_Xx . K_Mm)
  Eigen::VectorXd pi_prime1;   // G^T (K_XX + n l5 I)^{-1} K_Xx
  Eigen::VectorXd rho_prime1;  // G^T (K_XX . K_MM + n l6 I)^{-1} (K_Xx . K_Mm)
};

/// Ridge penalties of the subroutines; unset entries are tuned by leave-one-out.
struct NuisancePenalties {
  std::optional<double> lambda;   // outcome regression
  std::optional<double> lambda1;  // conditional mean embedding
  std::optional<double> lambda3;  // P(D=1 | G=0, X)
  std::optional<double> lambda4;  // P(D=1 | G=0, X, M)
  std::optional<double> lambda5;  // P(G=1 | X)
  std::optional<double> lambda6;  // P(G=1 | X, M)
};

struct NuisanceConfig {
  std::optional<KernelSet> kernels;  // median heuristic on the training rows when unset
  NuisancePenalties penalties;
  PenaltyGrid grid;  // for penalties that are tuned
  double epsilon = 0.01;
};

class FittedNuisances final : public NuisanceSet {
public:
  FittedNuisances(const FusedDataset& train, double d, const NuisanceConfig& config);

  NuisanceValues evaluate(const Eigen::MatrixXd& x, const Eigen::MatrixXd& m) const override;
  SubroutineValues subroutines(const Eigen::MatrixXd& x, const Eigen::MatrixXd& m) const;
  double treatment() const override { return d_; }
  double epsilon() const override { return epsilon_; }

  /// Penalties actually used (tuned or given), all set.
  const NuisancePenalties& penalties() const { return penalties_; }
  const EmbeddingModel& embedding() const { return model_; }

private:
  EmbeddingModel model_;
  double d_;
  double epsilon_;
  NuisancePenalties penalties_;
  Eigen::VectorXd outcome_weights_;  // 1{G=1} . A^{-1} Y'
  Eigen::VectorXd pi_weights_;       // 1{G=0} . (K_GG . K_XX + n l3 I)^{-1} D'
  Eigen::VectorXd rho_weights_;      // 1{G=0} . (K_GG . K_XX . K_MM + n l4 I)^{-1} D'
  Eigen::VectorXd pi_prime_weights_;
  Eigen::VectorXd rho_prime_weights_;
};

/// Kernel ridge nuisances on `train` for binary treatment level d in {0, 1}.
FittedNuisances fit_nuisances(const FusedDataset& train, double d, const NuisanceConfig& config = {});

/// Nuisance values of one row.
struct NuisanceRow {
  double nu, delta, pi, rho, pi_prime, rho_prime;
};
NuisanceRow row_of(const NuisanceValues& v, Eigen::Index i);

/// Balancing weights of the multiply robust moment.
///   alpha = 1{G=1} / rho'(1|X,M) * rho(d|0,X,M) rho'(0|X,M) / (pi(d|0,X) pi'(0|X))
///   eta   = 1{G=0} 1{D=d} / (pi(d|0,X) pi'(0|X))
double alpha_weight(const FusedSample& row, const NuisanceRow& v);
double eta_weight(const FusedSample& row, const NuisanceRow& v, double d);

/// nu + alpha (Y' - delta) + eta (delta - nu).
double moment_value(const FusedSample& row, const NuisanceRow& v, double d);

/// Moment values for every row of `data`.
Eigen::VectorXd moment_values(const FusedDataset& data, const NuisanceValues& v, double d);

struct EffectEstimate {
  double theta = 0;
  double sigma = 0;
  double ci_lower = 0;
  double ci_upper = 0;
  double level = 0.95;
  Eigen::Index n = 0;
  int folds = 0;
  double d = 0;
  double epsilon = 0;
  Eigen::VectorXd psi;
  std::vector<NuisancePenalties> fold_penalties;
  std::vector<std::string> warnings;
};

/// Quantile function of the standard Gaussian.
double standard_normal_quantile(double p);

/// theta = mean(psi), sigma^2 = mean((psi - theta)^2), CI = theta +- c sigma / sqrt(n)
/// with c the 1 - (1 - level)/2 Gaussian quantile.
EffectEstimate summarize_moments(const Eigen::VectorXd& psi, double level);

struct DmlConfig {
  NuisanceConfig nuisance;
  std::uint64_t seed = 0;
};

/// Cross-fitted estimate of the long-term effect at d: nuisances are fitted on
/// each fold's complement and evaluated on the fold.
EffectEstimate dml_estimate(const FusedDataset& data, double d, int folds, double level, const DmlConfig& config = {});

/// Cross-fitting with a caller-supplied partition.
EffectEstimate dml_estimate(const FusedDataset& data, double d, const FoldPartition& partition, double level,
                            const NuisanceConfig& config);

}  // namespace ltk
