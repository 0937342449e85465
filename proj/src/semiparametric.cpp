#include "ltk/semiparametric.hpp"

#include <algorithm>
#include <cmath>

#include "ltk/error.hpp"
#include "ltk/parallel.hpp"

namespace ltk {
namespace {

Eigen::MatrixXd submatrix(const Eigen::MatrixXd& a, const std::vector<Eigen::Index>& idx) {
  const auto k = static_cast<Eigen::Index>(idx.size());
  Eigen::MatrixXd out(k, k);
  for (Eigen::Index j = 0; j < k; ++j)
    for (Eigen::Index i = 0; i < k; ++i) out(i, j) = a(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  return out;
}

Eigen::VectorXd entries(const Eigen::VectorXd& v, const std::vector<Eigen::Index>& idx) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t r = 0; r < idx.size(); ++r) out(static_cast<Eigen::Index>(r)) = v(idx[r]);
  return out;
}

/// Leave-one-out penalty for K restricted to `rows` (a diagonal block of an
/// n x n system whose other rows have zero targets).
double tune_on_rows(const Eigen::MatrixXd& K, const std::vector<Eigen::Index>& rows, const Eigen::VectorXd& y,
                    const PenaltyGrid& range) {
  const Eigen::MatrixXd Kb = submatrix(K, rows);
  return LoocvPath<double>(Kb, Eigen::MatrixXd(entries(y, rows)), double(K.rows()))
      .argmin(TuningGrid<double>::default_for(K, range));
}

double tune_full(const Eigen::MatrixXd& K, const Eigen::VectorXd& y, const PenaltyGrid& range) {
  return LoocvPath<double>(K, Eigen::MatrixXd(y)).argmin(TuningGrid<double>::default_for(K, range));
}

KernelSet resolve_kernels(const FusedDataset& train, const NuisanceConfig& config) {
  if (train.treatment_kind() != TreatmentKind::Binary) throw InputError("semiparametric estimation needs a binary treatment");
  KernelSet k = config.kernels ? *config.kernels : median_kernels(train);
  if (!k.d.is_dirac()) throw InputError("semiparametric estimation needs the Dirac kernel on a binary treatment");
  return k;
}

EmbeddingModel first_stage_model(const FusedDataset& train, const NuisanceConfig& config) {
  const KernelSet k = resolve_kernels(train, config);
  const double lambda1 = config.penalties.lambda1 ? *config.penalties.lambda1 : tune_first_stage_lambda(train, k, config.grid);
  return EmbeddingModel(train, k, lambda1);
}

}  // namespace

double censor(double p, double epsilon) { return std::clamp(p, epsilon, 1.0 - epsilon); }

FittedNuisances::FittedNuisances(const FusedDataset& train, double d, const NuisanceConfig& config)
    : model_(first_stage_model(train, config)),
      d_(d),
      epsilon_(config.epsilon) {
  if (train.treatment_kind() != TreatmentKind::Binary) throw InputError("semiparametric estimation needs a binary treatment");
  if (d != 0.0 && d != 1.0) throw InputError("treatment level must be 0 or 1");
  if (!(epsilon_ > 0.0 && epsilon_ < 0.5)) throw InputError("censoring bound must lie in (0, 0.5)");

  const auto exp_rows = train.experimental_rows();
  const Eigen::MatrixXd& kxx = model_.k_xx();
  const Eigen::MatrixXd& kmm = model_.k_mm();
  const Eigen::MatrixXd kgx = model_.k_gg().cwiseProduct(kxx);
  const Eigen::MatrixXd kxm = kxx.cwiseProduct(kmm);
  const Eigen::MatrixXd kgxm = model_.k_gg().cwiseProduct(kxm);
  const Eigen::VectorXd g = train.g().cast<double>();
  const Eigen::VectorXd& dp = train.d();

  penalties_.lambda1 = model_.lambda1();
  penalties_.lambda = config.penalties.lambda ? *config.penalties.lambda : tune_outcome_lambda(model_, config.grid);
  penalties_.lambda3 = config.penalties.lambda3 ? *config.penalties.lambda3 : tune_on_rows(kgx, exp_rows, dp, config.grid);
  penalties_.lambda4 = config.penalties.lambda4 ? *config.penalties.lambda4 : tune_on_rows(kgxm, exp_rows, dp, config.grid);
  penalties_.lambda5 = config.penalties.lambda5 ? *config.penalties.lambda5 : tune_full(kxx, g, config.grid);
  penalties_.lambda6 = config.penalties.lambda6 ? *config.penalties.lambda6 : tune_full(kxm, g, config.grid);

  const OutcomeSystem outcome(model_, *penalties_.lambda);
  outcome_weights_ = model_.mask1().cwiseProduct(outcome.weights());
  pi_weights_ = model_.mask0().cwiseProduct(RidgeSolver<double>(kgx, *penalties_.lambda3).solve(dp));
  rho_weights_ = model_.mask0().cwiseProduct(RidgeSolver<double>(kgxm, *penalties_.lambda4).solve(dp));
  pi_prime_weights_ = RidgeSolver<double>(kxx, *penalties_.lambda5).solve(g);
  rho_prime_weights_ = RidgeSolver<double>(kxm, *penalties_.lambda6).solve(g);
}

SubroutineValues FittedNuisances::subroutines(const Eigen::MatrixXd& x, const Eigen::MatrixXd& m) const {
  if (x.rows() != m.rows()) throw InputError("query covariates and surrogates have different row counts");
  if (m.cols() != model_.data().m_dim()) throw InputError("query surrogates have the wrong dimension");
  const Eigen::MatrixXd kxq = model_.cross_x(x);
  const Eigen::MatrixXd kmq = gram(model_.kernels().m, model_.data().m(), m);
  const Eigen::MatrixXd kxmq = kxq.cwiseProduct(kmq);

  SubroutineValues out;
  // nu(x_j) = sum_i v_i K_Xx_ij (K_MM beta_j)_i with beta_j = A1^{-1} (K_G0 . K_D'd . K_Xx_j);
  // moving K_MM and A1^{-1} (both symmetric) onto v gives one multi-RHS solve.
  const Eigen::MatrixXd c = model_.solve_first_stage(model_.k_mm() * (outcome_weights_.asDiagonal() * kxq));
  const Eigen::VectorXd target_scale = model_.mask0().cwiseProduct(model_.cross_d(d_));
  out.nu = (target_scale.asDiagonal() * kxq).cwiseProduct(c).colwise().sum().transpose();
  out.gamma = kxmq.transpose() * outcome_weights_;
  out.pi1 = kxq.transpose() * pi_weights_;
  out.rho1 = kxmq.transpose() * rho_weights_;
  out.pi_prime1 = kxq.transpose() * pi_prime_weights_;
  out.rho_prime1 = kxmq.transpose() * rho_prime_weights_;
  return out;
}

NuisanceValues FittedNuisances::evaluate(const Eigen::MatrixXd& x, const Eigen::MatrixXd& m) const {
  const SubroutineValues s = subroutines(x, m);
  const Eigen::Index r = x.rows();
  NuisanceValues v;
  v.nu = s.nu;
  v.delta = s.gamma;
  v.pi.resize(r);
  v.rho.resize(r);
  v.pi_prime.resize(r);
  v.rho_prime.resize(r);
  for (Eigen::Index j = 0; j < r; ++j) {
    // Binary D: P(D=0 | .) = 1 - P(D=1 | .).
    const double pi = d_ == 1.0 ? s.pi1(j) : 1.0 - s.pi1(j);
    const double rho = d_ == 1.0 ? s.rho1(j) : 1.0 - s.rho1(j);
    v.pi(j) = censor(pi, epsilon_);
    v.rho(j) = censor(rho, epsilon_);
    v.pi_prime(j) = censor(s.pi_prime1(j), epsilon_);
    v.rho_prime(j) = censor(s.rho_prime1(j), epsilon_);
  }
  return v;
}

FittedNuisances fit_nuisances(const FusedDataset& train, double d, const NuisanceConfig& config) {
  return FittedNuisances(train, d, config);
}

NuisanceRow row_of(const NuisanceValues& v, Eigen::Index i) {
  return NuisanceRow{v.nu(i), v.delta(i), v.pi(i), v.rho(i), v.pi_prime(i), v.rho_prime(i)};
}

double alpha_weight(const FusedSample& row, const NuisanceRow& v) {
  if (row.g != 1) return 0.0;
  return (1.0 / v.rho_prime) * (v.rho * (1.0 - v.rho_prime)) / (v.pi * (1.0 - v.pi_prime));
}

double eta_weight(const FusedSample& row, const NuisanceRow& v, double d) {
  if (row.g != 0 || row.d_prime != d) return 0.0;
  return 1.0 / (v.pi * (1.0 - v.pi_prime));
}

double moment_value(const FusedSample& row, const NuisanceRow& v, double d) {
  const double alpha = alpha_weight(row, v);
  const double eta = eta_weight(row, v, d);
  const double residual = alpha == 0.0 ? 0.0 : alpha * (row.y_prime - v.delta);
  const double correction = eta == 0.0 ? 0.0 : eta * (v.delta - v.nu);
  return v.nu + residual + correction;
}

Eigen::VectorXd moment_values(const FusedDataset& data, const NuisanceValues& v, double d) {
  if (v.size() != data.size()) throw InputError("nuisance values do not match the dataset");
  Eigen::VectorXd psi(data.size());
  for (Eigen::Index i = 0; i < data.size(); ++i) psi(i) = moment_value(data.sample(i), row_of(v, i), d);
  return psi;
}

double standard_normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw InputError("quantile level must lie in (0, 1)");
  double lo = -40.0, hi = 40.0;
  for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    (0.5 * std::erfc(-mid / std::sqrt(2.0)) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

EffectEstimate summarize_moments(const Eigen::VectorXd& psi, double level) {
  if (psi.size() == 0) throw InputError("no moment values");
  if (!(level > 0.0 && level < 1.0)) throw InputError("confidence level must lie in (0, 1)");
  if (!psi.allFinite()) throw NumericalError("moment values are not finite");
  EffectEstimate e;
  const double n = double(psi.size());
  e.n = psi.size();
  e.level = level;
  e.psi = psi;
  e.theta = psi.sum() / n;
  e.sigma = std::sqrt((psi.array() - e.theta).square().sum() / n);
  const double half = standard_normal_quantile(1.0 - (1.0 - level) / 2.0) * e.sigma / std::sqrt(n);
  e.ci_lower = e.theta - half;
  e.ci_upper = e.theta + half;
  if (e.sigma == 0.0) e.warnings.push_back("estimated standard deviation is zero; the interval is degenerate");
  return e;
}

EffectEstimate dml_estimate(const FusedDataset& data, double d, const FoldPartition& partition, double level,
                            const NuisanceConfig& config) {
  if (data.treatment_kind() != TreatmentKind::Binary) throw InputError("the ate command needs a binary treatment");
  if (static_cast<Eigen::Index>(partition.assignment.size()) != data.size())
    throw InputError("fold partition does not match the dataset");
  const int folds = partition.folds;
  Eigen::VectorXd psi(data.size());
  std::vector<NuisancePenalties> used(static_cast<std::size_t>(folds));

  parallel_for(static_cast<std::size_t>(folds), [&](std::size_t f) {
    const int fold = static_cast<int>(f);
    const auto held = partition.members(fold);
    const FusedDataset train = data.subset(partition.complement(fold));
    const FittedNuisances nuisances(train, d, config);
    used[f] = nuisances.penalties();
    Eigen::MatrixXd x(static_cast<Eigen::Index>(held.size()), data.x_dim());
    Eigen::MatrixXd m(static_cast<Eigen::Index>(held.size()), data.m_dim());
    for (std::size_t r = 0; r < held.size(); ++r) {
      x.row(static_cast<Eigen::Index>(r)) = data.x().row(held[r]);
      m.row(static_cast<Eigen::Index>(r)) = data.m().row(held[r]);
    }
    const NuisanceValues v = nuisances.evaluate(x, m);
    for (std::size_t r = 0; r < held.size(); ++r)
      psi(held[r]) = moment_value(data.sample(held[r]), row_of(v, static_cast<Eigen::Index>(r)), d);
  });

  EffectEstimate e = summarize_moments(psi, level);
  e.folds = folds;
  e.d = d;
  e.epsilon = config.epsilon;
  e.fold_penalties = std::move(used);
  return e;
}

EffectEstimate dml_estimate(const FusedDataset& data, double d, int folds, double level, const DmlConfig& config) {
  return dml_estimate(data, d, split_folds(data.g(), folds, config.seed), level, config.nuisance);
}

}  // namespace ltk
