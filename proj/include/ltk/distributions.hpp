#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "ltk/dose_response.hpp"
#include "ltk/embeddings.hpp"

namespace ltk {

/// Estimated embedding of a counterfactual outcome distribution,
///   y -> sum_i c_i k_Y(Y'_i, y),
/// with c = (K_GG . K_XX . K_MM + n lambda2 I)^{-1} mean_j {K_G1 . chi(x_j, d)}.
struct DistributionEmbedding {
  Eigen::VectorXd coefficients;
  Eigen::VectorXd support;  // Y' of the fused sample
  KernelSpec<double> outcome_kernel;
  Estimand estimand = Estimand::ATE;
  double d = 0;
  double lambda1 = 0;
  double lambda2 = 0;

  double operator()(double y) const;
  Eigen::VectorXd evaluate(const Eigen::VectorXd& ys) const;
};

DistributionEmbedding embed_distribution(const FusedDataset& data, Estimand estimand, double d,
                                         const KernelSet& kernels, double lambda1, double lambda2,
                                         const std::optional<AltPopulation>& alt = std::nullopt);

/// Median-heuristic kernels (outcome kernel on observational Y), lambda1 and
/// lambda2 tuned by leave-one-out on their own regressions.
DistributionEmbedding embed_distribution_tuned(const FusedDataset& data, Estimand estimand, double d,
                                               const std::optional<AltPopulation>& alt = std::nullopt,
                                               const PenaltyGrid& range = {});

struct HerdedSample {
  std::vector<double> values;
  Eigen::VectorXd candidate_grid;
};

/// Greedy herding over a finite candidate grid:
///   y_1 = argmax theta(y),
///   y_j = argmax [theta(y) - 1/(j+1) sum_{l<j} k_Y(y_l, y)],  j > 1.
/// Ties go to the smallest candidate.
HerdedSample herd(const DistributionEmbedding& embedding, int count, const Eigen::VectorXd& candidate_grid);

/// `size` equispaced points spanning the observational outcome range widened
/// by 10% of its width on each side.
Eigen::VectorXd default_candidate_grid(const FusedDataset& data, int size = 512);

}  // namespace ltk
