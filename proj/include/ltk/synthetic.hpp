#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include <Eigen/Dense>

#include "ltk/data.hpp"
#include "ltk/semiparametric.hpp"

namespace ltk {

/// How the surrogate mean depends on its linear index b0 + b_d d + B_x x.
enum class SurrogateLink { Linear, Sine };

/// Fused-sample generator with known causal truth.
///
///   X ~ N(x_mean, x_sd^2 I)
///   P(G=1 | X) = 0.05 + 0.9 logistic(s0 + s^T X)
///   D | X: continuous N(a0 + a^T X, d_sd^2), or binary with
///          P(D=1 | X) = 0.05 + 0.9 logistic(a0 + a^T X)
///   M = h(b0 + b_d D + B_x X) + N(0, m_sd^2 I), h = identity or sin
///   Y = c0 + c_m^T M + c_x^T X + N(0, y_sd^2)
///
/// D is drawn for every row but recorded only on experimental rows; Y only on
/// observational rows. M and Y mechanisms ignore G, so selection is on
/// observables, the Y | X, M law is shared by both groups, and D reaches Y
/// only through M.
struct SyntheticDgp {
  int p = 2;
  int q = 2;
  SurrogateLink link = SurrogateLink::Linear;
  TreatmentKind treatment = TreatmentKind::Continuous;

  Eigen::VectorXd x_mean;
  double x_sd = 1.0;

  double select_intercept = 0.0;
  Eigen::VectorXd select_weights;

  double treat_intercept = 0.0;
  Eigen::VectorXd treat_weights;
  double d_sd = 0.5;

  Eigen::VectorXd b0;
  Eigen::VectorXd b_d;
  Eigen::MatrixXd b_x;  // q x p
  double m_sd = 0.5;

  double c0 = 0.0;
  Eigen::VectorXd c_m;
  Eigen::VectorXd c_x;
  double y_sd = 0.5;

  /// Throws InputError when dimensions are inconsistent or a scale is negative.
  void validate() const;
};

/// p = q = 2, noise standard deviations 0.5, linear surrogate link.
SyntheticDgp default_dgp(TreatmentKind treatment = TreatmentKind::Continuous);
/// As default_dgp, with the sine surrogate link.
SyntheticDgp nonlinear_dgp(TreatmentKind treatment = TreatmentKind::Binary);

/// Draws n rows; re-draws (fresh sub-seed, up to 100 times) if a group is empty.
FusedDataset generate(const SyntheticDgp& dgp, Eigen::Index n, std::uint64_t seed);

/// Covariates from N(x_mean + shift, x_sd^2 I).
AltPopulation sample_shifted_population(const SyntheticDgp& dgp, Eigen::Index n, const Eigen::VectorXd& shift,
                                        std::uint64_t seed);

/// Counterfactual mean E[Y^(d)] when X ~ N(covariate_mean, x_sd^2 I).
double true_dose_response(const SyntheticDgp& dgp, double d);
double true_dose_response(const SyntheticDgp& dgp, double d, const Eigen::VectorXd& covariate_mean);

/// Draws of Y^(d): X from the population, D fixed at d.
Eigen::VectorXd sample_counterfactual(const SyntheticDgp& dgp, double d, Eigen::Index count, std::uint64_t seed);

/// Selection and treatment probabilities of the generator.
double selection_probability(const SyntheticDgp& dgp, const Eigen::VectorXd& x);
double treatment_probability(const SyntheticDgp& dgp, const Eigen::VectorXd& x);

/// True nuisances of the multiply robust moment for binary d.
class OracleNuisances final : public NuisanceSet {
public:
  OracleNuisances(SyntheticDgp dgp, double d, double epsilon);

  NuisanceValues evaluate(const Eigen::MatrixXd& x, const Eigen::MatrixXd& m) const override;
  double treatment() const override { return d_; }
  double epsilon() const override { return epsilon_; }

  double nu(const Eigen::VectorXd& x) const;
  double delta(const Eigen::VectorXd& x, const Eigen::VectorXd& m) const;
  /// P(D = d | G = 0, X = x, M = m), uncensored.
  double rho(const Eigen::VectorXd& x, const Eigen::VectorXd& m) const;

private:
  SyntheticDgp dgp_;
  double d_;
  double epsilon_;
};

OracleNuisances oracle_nuisances(const SyntheticDgp& dgp, double d, double epsilon = 0.01);

/// Surrogate mean h(b0 + b_d d + B_x x).
Eigen::VectorXd surrogate_mean(const SyntheticDgp& dgp, const Eigen::VectorXd& x, double d);

std::string dgp_to_json(const SyntheticDgp& dgp);
SyntheticDgp dgp_from_json(const std::string& text);

}  // namespace ltk
