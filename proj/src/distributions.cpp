#include "ltk/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ltk/error.hpp"

namespace ltk {

double DistributionEmbedding::operator()(double y) const {
  return evaluate(Eigen::VectorXd::Constant(1, y))(0);
}

Eigen::VectorXd DistributionEmbedding::evaluate(const Eigen::VectorXd& ys) const {
  return gram(outcome_kernel, as_points(ys), as_points(support)) * coefficients;
}

DistributionEmbedding embed_distribution(const FusedDataset& data, Estimand estimand, double d,
                                         const KernelSet& kernels, double lambda1, double lambda2,
                                         const std::optional<AltPopulation>& alt) {
  if (!kernels.y) throw InputError("distribution embedding needs an outcome kernel");
  const Eigen::MatrixXd queries = averaging_covariates(data, estimand, alt);
  const EmbeddingModel model(data, kernels, lambda1);
  const Eigen::VectorXd mean_chi = model.chi(queries, d).rowwise().mean();
  const OutcomeSystem system(model, lambda2);

  DistributionEmbedding e;
  e.coefficients = system.solve(model.mask1().cwiseProduct(mean_chi));
  if (!e.coefficients.allFinite()) throw NumericalError("distribution embedding coefficients are not finite");
  e.support = data.y();
  e.outcome_kernel = *kernels.y;
  e.estimand = estimand;
  e.d = d;
  e.lambda1 = lambda1;
  e.lambda2 = lambda2;
  return e;
}

DistributionEmbedding embed_distribution_tuned(const FusedDataset& data, Estimand estimand, double d,
                                               const std::optional<AltPopulation>& alt, const PenaltyGrid& range) {
  const KernelSet kernels = median_kernels(data, true);
  const double lambda1 = tune_first_stage_lambda(data, kernels, range);
  const EmbeddingModel model(data, kernels, lambda1);
  const double lambda2 = tune_distribution_lambda(model, range);
  return embed_distribution(data, estimand, d, kernels, lambda1, lambda2, alt);
}

HerdedSample herd(const DistributionEmbedding& embedding, int count, const Eigen::VectorXd& candidate_grid) {
  if (candidate_grid.size() == 0) throw InputError("herding candidate grid is empty");
  if (count < 1) throw InputError("herding sample count must be positive");

  // Visit candidates in ascending order so strict improvement keeps the smallest on ties.
  std::vector<Eigen::Index> order(static_cast<std::size_t>(candidate_grid.size()));
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = static_cast<Eigen::Index>(k);
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return candidate_grid(a) < candidate_grid(b); });

  const Eigen::VectorXd target = embedding.evaluate(candidate_grid);
  const Eigen::MatrixXd kcc = gram(embedding.outcome_kernel, as_points(candidate_grid));
  Eigen::VectorXd repulsion = Eigen::VectorXd::Zero(candidate_grid.size());

  HerdedSample out;
  out.candidate_grid = candidate_grid;
  out.values.reserve(static_cast<std::size_t>(count));
  for (int j = 1; j <= count; ++j) {
    const double scale = j == 1 ? 0.0 : 1.0 / double(j + 1);
    Eigen::Index best = order.front();
    double best_value = -std::numeric_limits<double>::infinity();
    for (Eigen::Index k : order) {
      const double value = target(k) - scale * repulsion(k);
      if (value > best_value) {
        best_value = value;
        best = k;
      }
    }
    out.values.push_back(candidate_grid(best));
    repulsion += kcc.col(best);
  }
  return out;
}

Eigen::VectorXd default_candidate_grid(const FusedDataset& data, int size) {
  if (size < 2) throw InputError("candidate grid needs at least two points");
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (Eigen::Index i : data.observational_rows()) {
    lo = std::min(lo, data.y()(i));
    hi = std::max(hi, data.y()(i));
  }
  double margin = 0.1 * (hi - lo);
  if (margin == 0.0) margin = 0.5;
  return Eigen::VectorXd::LinSpaced(size, lo - margin, hi + margin);
}

}  // namespace ltk
