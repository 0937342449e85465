#include "ltk/dose_response.hpp"

#include <algorithm>
#include <cmath>

#include "ltk/error.hpp"

namespace ltk {

std::string to_string(Estimand e) {
  switch (e) {
    case Estimand::ATE: return "ate";
    case Estimand::DS: return "ds";
    case Estimand::EXP: return "exp";
    case Estimand::OBS: return "obs";
  }
  return "?";
}

Estimand parse_estimand(const std::string& name) {
  std::string s = name;
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "ate") return Estimand::ATE;
  if (s == "ds") return Estimand::DS;
  if (s == "exp") return Estimand::EXP;
  if (s == "obs") return Estimand::OBS;
  throw InputError("unknown estimand '" + name + "' (expected ate, ds, exp or obs)");
}

Eigen::MatrixXd averaging_covariates(const FusedDataset& data, Estimand estimand,
                                     const std::optional<AltPopulation>& alt) {
  auto pick = [&](const std::vector<Eigen::Index>& rows) {
    if (rows.empty()) throw InputError("averaging set is empty");
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), data.x_dim());
    for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = data.x().row(rows[r]);
    return out;
  };
  switch (estimand) {
    case Estimand::ATE: return data.x();
    case Estimand::EXP: return pick(data.experimental_rows());
    case Estimand::OBS: return pick(data.observational_rows());
    case Estimand::DS:
      if (!alt) throw InputError("the ds estimand needs an alternative population");
      if (alt->x.cols() != data.x_dim()) throw InputError("alternative population has the wrong covariate dimension");
      return alt->x;
  }
  throw InputError("unknown estimand");
}

DoseResponseEstimator::DoseResponseEstimator(const EmbeddingModel& model, const OutcomeSystem& outcome,
                                             const Eigen::MatrixXd& query_x)
    : d_kernel_(model.kernels().d), d_points_(as_points(model.data().d())) {
  if (query_x.rows() == 0) throw InputError("averaging set is empty");
  const Eigen::MatrixXd kxq = model.cross_x(query_x);
  const Eigen::VectorXd v = model.mask1().cwiseProduct(outcome.weights());
  const Eigen::MatrixXd c = model.solve_first_stage(model.k_mm() * (v.asDiagonal() * kxq));
  folded_ = model.mask0().cwiseProduct(kxq.cwiseProduct(c).rowwise().sum());
  inv_count_ = 1.0 / double(query_x.rows());
}

double DoseResponseEstimator::operator()(double d) const {
  const Eigen::VectorXd kd = gram(d_kernel_, d_points_, Eigen::MatrixXd::Constant(1, 1, d)).col(0);
  return inv_count_ * folded_.dot(kd);
}

DoseResponseCurve estimate_curve(const FusedDataset& data, Estimand estimand, const std::vector<double>& grid,
                                 const KernelSet& kernels, double lambda, double lambda1,
                                 const std::optional<AltPopulation>& alt) {
  if (grid.empty()) throw InputError("treatment grid is empty");
  const Eigen::MatrixXd queries = averaging_covariates(data, estimand, alt);
  const EmbeddingModel model(data, kernels, lambda1);
  const OutcomeSystem outcome(model, lambda);
  const DoseResponseEstimator theta(model, outcome, queries);

  DoseResponseCurve curve;
  curve.grid = grid;
  curve.estimand = estimand;
  curve.lambda = lambda;
  curve.lambda1 = lambda1;
  curve.n = data.size();
  curve.n_exp = data.n_exp();
  curve.n_obs = data.n_obs();
  curve.estimates.reserve(grid.size());
  for (double d : grid) {
    const double est = theta(d);
    if (!std::isfinite(est)) throw NumericalError("dose response estimate is not finite");
    curve.estimates.push_back(est);
  }
  if (data.y().cwiseAbs().maxCoeff() > 1e6)
    curve.warnings.push_back("outcomes exceed 1e6 in magnitude; consider rescaling");
  return curve;
}

DoseResponseCurve estimate_curve_tuned(const FusedDataset& data, Estimand estimand, const std::vector<double>& grid,
                                       const std::optional<AltPopulation>& alt, const PenaltyGrid& range) {
  const KernelSet kernels = median_kernels(data);
  const double lambda1 = tune_first_stage_lambda(data, kernels, range);
  const EmbeddingModel model(data, kernels, lambda1);
  const double lambda = tune_outcome_lambda(model, range);
  return estimate_curve(data, estimand, grid, kernels, lambda, lambda1, alt);
}

std::vector<double> default_treatment_grid(const FusedDataset& data, int count) {
  if (count < 1) throw InputError("grid size must be positive");
  std::vector<double> d;
  for (Eigen::Index i : data.experimental_rows()) d.push_back(data.d()(i));
  std::sort(d.begin(), d.end());
  std::vector<double> grid;
  for (int k = 0; k < count; ++k) {
    const double q = count == 1 ? 0.5 : double(k) / double(count - 1);
    const double pos = q * double(d.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, d.size() - 1);
    grid.push_back(d[lo] + (pos - double(lo)) * (d[hi] - d[lo]));
  }
  return grid;
}

std::vector<double> linspace(double start, double stop, int count) {
  if (count < 1) throw InputError("grid size must be positive");
  std::vector<double> out;
  for (int k = 0; k < count; ++k)
    out.push_back(count == 1 ? start : start + (stop - start) * double(k) / double(count - 1));
  return out;
}

}  // namespace ltk
