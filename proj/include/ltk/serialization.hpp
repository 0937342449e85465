#pragma once

#include <optional>
#include <string>

#include "ltk/distributions.hpp"
#include "ltk/dose_response.hpp"
#include "ltk/embeddings.hpp"
#include "ltk/semiparametric.hpp"

namespace ltk {

/// {"curve": [{"d", "estimate"}...], "metadata": {estimand, lambda, lambda1, n, nExp, nObs}, "warnings": [...]}
std::string curve_to_json(const DoseResponseCurve& curve);

/// {theta, sigma, ciLower, ciUpper, level, n, folds, d, epsilon, warnings}
std::string estimate_to_json(const EffectEstimate& estimate);

/// {coefficients, outcomeLengthscale, d, estimand, lambda1, lambda2}
std::string embedding_to_json(const DistributionEmbedding& embedding);

/// One `y_tilde` column.
std::string herded_to_csv(const HerdedSample& sample);

/// Kernels and penalties chosen by `tune`, reusable by the estimators.
struct TunedParameters {
  KernelSet kernels;
  double lambda = 0;
  double lambda1 = 0;
  std::optional<double> lambda2;
};

std::string parameters_to_json(const TunedParameters& params);
TunedParameters parameters_from_json(const std::string& text);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace ltk
