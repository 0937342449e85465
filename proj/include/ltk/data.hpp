#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace ltk {

enum class TreatmentKind { Continuous, Binary };

/// One row (G, X, (1-G)D, M, GY) of the fused sample.
struct FusedSample {
  int g = 0;
  Eigen::VectorXd x;
  double d_prime = 0;  // meaningful only when g == 0
  Eigen::VectorXd m;
  double y_prime = 0;  // meaningful only when g == 1
};

/// Experimental (g = 0: X, D, M observed) and observational (g = 1: X, M, Y
/// observed) samples stacked row-wise. Structurally missing entries hold 0.
///
/// Construction validates dimensions and group sizes, and normalizes the
/// encoding: d is zeroed on g = 1 rows and y on g = 0 rows. The number of
/// rows that needed this is reported by encoding_fixes().
class FusedDataset {
public:
  FusedDataset(Eigen::VectorXi g, Eigen::MatrixXd x, Eigen::VectorXd d, Eigen::MatrixXd m, Eigen::VectorXd y,
               TreatmentKind kind);

  Eigen::Index size() const { return g_.size(); }
  Eigen::Index x_dim() const { return x_.cols(); }
  Eigen::Index m_dim() const { return m_.cols(); }
  Eigen::Index n_exp() const { return n_exp_; }
  Eigen::Index n_obs() const { return size() - n_exp_; }
  TreatmentKind treatment_kind() const { return kind_; }
  std::size_t encoding_fixes() const { return fixes_; }

  const Eigen::VectorXi& g() const { return g_; }
  const Eigen::MatrixXd& x() const { return x_; }
  const Eigen::VectorXd& d() const { return d_; }
  const Eigen::MatrixXd& m() const { return m_; }
  const Eigen::VectorXd& y() const { return y_; }

  /// 0/1 masks 1{G=0} and 1{G=1} as real vectors.
  Eigen::VectorXd experimental_mask() const;
  Eigen::VectorXd observational_mask() const;
  std::vector<Eigen::Index> experimental_rows() const;
  std::vector<Eigen::Index> observational_rows() const;

  FusedSample sample(Eigen::Index i) const;

  /// Rows at `indices`, in order. Throws if either group ends up empty.
  FusedDataset subset(const std::vector<Eigen::Index>& indices) const;

  /// Same rows with outcomes replaced (entries on g = 0 rows are ignored).
  FusedDataset with_outcomes(const Eigen::VectorXd& y) const;

private:
  Eigen::VectorXi g_;
  Eigen::MatrixXd x_;
  Eigen::VectorXd d_;
  Eigen::MatrixXd m_;
  Eigen::VectorXd y_;
  TreatmentKind kind_;
  Eigen::Index n_exp_ = 0;
  std::size_t fixes_ = 0;
};

/// Covariate draws from a target population for distribution-shift estimands.
struct AltPopulation {
  Eigen::MatrixXd x;

  explicit AltPopulation(Eigen::MatrixXd covariates);
  Eigen::Index size() const { return x.rows(); }
};

struct CsvSchema {
  /// Unset: Binary when every experimental d is 0 or 1, else Continuous.
  std::optional<TreatmentKind> treatment;
};

/// Reads `g,x_1..x_p,d,m_1..m_q,y`. Empty d/y cells are allowed where the
/// value is structurally absent.
FusedDataset load_fused_csv(const std::string& path, const CsvSchema& schema = {});
FusedDataset parse_fused_csv(const std::string& text, const CsvSchema& schema = {});

/// Writes the same schema; absent d/y cells are left empty. Values use the
/// shortest round-trip representation, so reloading is bit-exact.
void write_fused_csv(const FusedDataset& data, const std::string& path);
std::string format_fused_csv(const FusedDataset& data);

/// Reads `x_1..x_p`.
AltPopulation load_alt_population_csv(const std::string& path);
void write_alt_population_csv(const AltPopulation& pop, const std::string& path);

/// Balanced random fold labels in [0, folds).
struct FoldPartition {
  std::vector<int> assignment;
  int folds = 0;

  std::vector<Eigen::Index> members(int fold) const;
  std::vector<Eigen::Index> complement(int fold) const;
};

/// Uniform random partition of n indices into `folds` groups whose sizes
/// differ by at most one. Deterministic given seed.
FoldPartition split_folds(Eigen::Index n, int folds, std::uint64_t seed);

/// As above, re-drawn (up to 100 attempts) until every fold complement holds
/// both experimental and observational rows.
FoldPartition split_folds(const Eigen::VectorXi& groups, int folds, std::uint64_t seed);

std::string format_double(double v);

}  // namespace ltk
