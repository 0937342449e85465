#include "ltk/embeddings.hpp"

#include <map>

#include "ltk/error.hpp"

namespace ltk {

Eigen::MatrixXd as_points(const Eigen::VectorXd& v) { return v; }

namespace {

Eigen::MatrixXd rows_of(const Eigen::MatrixXd& a, const std::vector<Eigen::Index>& idx) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), a.cols());
  for (std::size_t r = 0; r < idx.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = a.row(idx[r]);
  return out;
}

Eigen::MatrixXd submatrix(const Eigen::MatrixXd& a, const std::vector<Eigen::Index>& idx) {
  const auto k = static_cast<Eigen::Index>(idx.size());
  Eigen::MatrixXd out(k, k);
  for (Eigen::Index j = 0; j < k; ++j)
    for (Eigen::Index i = 0; i < k; ++i) out(i, j) = a(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  return out;
}

/// Index blocks of equal values (the block structure of a Dirac Gram matrix).
std::vector<std::vector<Eigen::Index>> value_blocks(const Eigen::VectorXd& v) {
  std::map<double, std::vector<Eigen::Index>> by_value;
  for (Eigen::Index i = 0; i < v.size(); ++i) by_value[v(i)].push_back(i);
  std::vector<std::vector<Eigen::Index>> out;
  for (auto& [value, idx] : by_value) out.push_back(std::move(idx));
  return out;
}

}  // namespace

KernelSet median_kernels(const FusedDataset& data, bool with_outcome_kernel) {
  KernelSet k;
  k.x = KernelSpec<double>::gaussian(median_heuristic<double>(data.x()));
  k.m = KernelSpec<double>::gaussian(median_heuristic<double>(data.m()));
  if (data.treatment_kind() == TreatmentKind::Binary) {
    k.d = KernelSpec<double>::dirac();
  } else {
    const auto exp_rows = data.experimental_rows();
    Eigen::MatrixXd d(static_cast<Eigen::Index>(exp_rows.size()), 1);
    for (std::size_t r = 0; r < exp_rows.size(); ++r) d(static_cast<Eigen::Index>(r), 0) = data.d()(exp_rows[r]);
    k.d = KernelSpec<double>::gaussian(median_heuristic<double>(d));
  }
  if (with_outcome_kernel) {
    const auto obs_rows = data.observational_rows();
    Eigen::MatrixXd y(static_cast<Eigen::Index>(obs_rows.size()), 1);
    for (std::size_t r = 0; r < obs_rows.size(); ++r) y(static_cast<Eigen::Index>(r), 0) = data.y()(obs_rows[r]);
    k.y = KernelSpec<double>::gaussian(median_heuristic<double>(y));
  }
  return k;
}

std::vector<std::vector<Eigen::Index>> group_blocks(const Eigen::VectorXi& g) {
  return value_blocks(g.cast<double>());
}

EmbeddingModel::EmbeddingModel(const FusedDataset& data, const KernelSet& kernels, double lambda1)
    : data_(data), kernels_(kernels) {
  const Eigen::MatrixXd g = data_.g().cast<double>();
  k_gg_ = gram(KernelSpec<double>::dirac(), g);
  k_xx_ = gram(kernels_.x, data_.x());
  k_dd_ = gram(kernels_.d, as_points(data_.d()));
  k_mm_ = gram(kernels_.m, data_.m());
  mask0_ = data_.experimental_mask();
  mask1_ = data_.observational_mask();
  first_stage_ = RidgeSolver<double>(k_gg_.cwiseProduct(k_xx_).cwiseProduct(k_dd_), lambda1);
}

Eigen::MatrixXd EmbeddingModel::cross_x(const Eigen::MatrixXd& xs) const {
  if (xs.cols() != data_.x_dim()) throw InputError("query covariates have the wrong dimension");
  return gram(kernels_.x, data_.x(), xs);
}

Eigen::VectorXd EmbeddingModel::cross_d(double d) const {
  return gram(kernels_.d, as_points(data_.d()), Eigen::MatrixXd::Constant(1, 1, d)).col(0);
}

Eigen::MatrixXd EmbeddingModel::cme_coefficients(const Eigen::MatrixXd& xs, double d) const {
  const Eigen::MatrixXd kxq = cross_x(xs);
  const Eigen::VectorXd target_scale = mask0_.cwiseProduct(cross_d(d));
  return first_stage_.solve(target_scale.asDiagonal() * kxq);
}

Eigen::VectorXd EmbeddingModel::cme_coefficients(const Eigen::VectorXd& x, double d) const {
  return cme_coefficients(Eigen::MatrixXd(x.transpose()), d).col(0);
}

Eigen::MatrixXd EmbeddingModel::chi(const Eigen::MatrixXd& xs, double d) const {
  const Eigen::MatrixXd kxq = cross_x(xs);
  const Eigen::VectorXd target_scale = mask0_.cwiseProduct(cross_d(d));
  const Eigen::MatrixXd beta = first_stage_.solve(target_scale.asDiagonal() * kxq);
  return kxq.cwiseProduct(k_mm_ * beta);
}

Eigen::VectorXd EmbeddingModel::chi(const Eigen::VectorXd& x, double d) const {
  return chi(Eigen::MatrixXd(x.transpose()), d).col(0);
}

Eigen::MatrixXd outcome_kernel(const EmbeddingModel& model) {
  return model.k_gg().cwiseProduct(model.k_xx()).cwiseProduct(model.k_mm());
}

OutcomeSystem::OutcomeSystem(const EmbeddingModel& model, double lambda)
    : solver_(outcome_kernel(model), lambda), weights_(solver_.solve(model.data().y())) {}

double tune_outcome_lambda(const EmbeddingModel& model, const PenaltyGrid& range) {
  const Eigen::MatrixXd K = outcome_kernel(model);
  const Eigen::Index n = K.rows();
  // Experimental rows have Y' = 0 and sit in their own block, so only the
  // observational block contributes to the score.
  const auto obs = model.data().observational_rows();
  const Eigen::MatrixXd Kb = submatrix(K, obs);
  const Eigen::MatrixXd yb = rows_of(model.data().y(), obs);
  return LoocvPath<double>(Kb, yb, double(n)).argmin(TuningGrid<double>::default_for(K, range));
}

double tune_first_stage_lambda(const FusedDataset& data, const KernelSet& kernels, const PenaltyGrid& range) {
  const Eigen::Index n = data.size();
  const auto exp = data.experimental_rows();
  const Eigen::MatrixXd x = rows_of(data.x(), exp);
  const Eigen::VectorXd d = rows_of(data.d(), exp);
  const Eigen::MatrixXd m = rows_of(data.m(), exp);
  const Eigen::MatrixXd K = gram(kernels.x, x).cwiseProduct(gram(kernels.d, as_points(d)));
  const Eigen::MatrixXd features = gram(kernels.m, m);
  std::vector<std::vector<Eigen::Index>> blocks;
  if (kernels.d.is_dirac()) blocks = value_blocks(d);
  return LoocvPath<double>(K, features, double(n), blocks).argmin(TuningGrid<double>::default_for(K, range));
}

double tune_distribution_lambda(const EmbeddingModel& model, const PenaltyGrid& range) {
  if (!model.kernels().y) throw InputError("distribution tuning needs an outcome kernel");
  const Eigen::MatrixXd K = outcome_kernel(model);
  const Eigen::Index n = K.rows();
  const auto obs = model.data().observational_rows();
  const Eigen::MatrixXd Kb = submatrix(K, obs);
  const Eigen::MatrixXd yb = rows_of(model.data().y(), obs);
  const Eigen::MatrixXd features = gram(*model.kernels().y, yb);
  return LoocvPath<double>(Kb, features, double(n)).argmin(TuningGrid<double>::default_for(K, range));
}

}  // namespace ltk
