#include "ltk/synthetic.hpp"

#include <cmath>
#include <random>

#include <json.hpp>

#include "ltk/error.hpp"

namespace ltk {
namespace {

double logistic(double t) { return 1.0 / (1.0 + std::exp(-t)); }

/// Probabilities of the generator are squeezed into [0.05, 0.95].
double bounded_probability(double index) { return 0.05 + 0.9 * logistic(index); }

Eigen::VectorXd linear_index(const SyntheticDgp& dgp, const Eigen::VectorXd& x, double d) {
  return dgp.b0 + dgp.b_d * d + dgp.b_x * x;
}

Eigen::VectorXd link(const SyntheticDgp& dgp, const Eigen::VectorXd& index) {
  return dgp.link == SurrogateLink::Sine ? Eigen::VectorXd(index.array().sin()) : index;
}

}  // namespace

void SyntheticDgp::validate() const {
  if (p < 1 || q < 1) throw InputError("dgp dimensions must be positive");
  auto need = [](bool ok, const char* what) {
    if (!ok) throw InputError(std::string("dgp: ") + what);
  };
  need(x_mean.size() == p, "x_mean must have length p");
  need(select_weights.size() == p, "select_weights must have length p");
  need(treat_weights.size() == p, "treat_weights must have length p");
  need(b0.size() == q && b_d.size() == q, "b0 and b_d must have length q");
  need(b_x.rows() == q && b_x.cols() == p, "b_x must be q x p");
  need(c_m.size() == q, "c_m must have length q");
  need(c_x.size() == p, "c_x must have length p");
  need(x_sd >= 0 && d_sd >= 0 && m_sd >= 0 && y_sd >= 0, "noise scales must be non-negative");
}

SyntheticDgp default_dgp(TreatmentKind treatment) {
  SyntheticDgp g;
  g.treatment = treatment;
  g.x_mean = Eigen::Vector2d(0.0, 0.0);
  g.select_weights = Eigen::Vector2d(0.5, -0.5);
  g.treat_weights = Eigen::Vector2d(0.5, 0.0);
  g.b0 = Eigen::Vector2d(0.0, 0.0);
  g.b_d = Eigen::Vector2d(1.0, 0.5);
  g.b_x = (Eigen::Matrix2d() << 0.5, 0.0, 0.0, 0.5).finished();
  g.c_m = Eigen::Vector2d(1.0, 0.5);
  g.c_x = Eigen::Vector2d(0.5, -0.5);
  return g;
}

SyntheticDgp nonlinear_dgp(TreatmentKind treatment) {
  SyntheticDgp g = default_dgp(treatment);
  g.link = SurrogateLink::Sine;
  g.b0 = Eigen::Vector2d(0.3, -0.2);
  g.b_d = Eigen::Vector2d(1.2, 0.8);
  g.b_x = (Eigen::Matrix2d() << 0.8, 0.0, 0.3, 0.6).finished();
  return g;
}

Eigen::VectorXd surrogate_mean(const SyntheticDgp& dgp, const Eigen::VectorXd& x, double d) {
  return link(dgp, linear_index(dgp, x, d));
}

double selection_probability(const SyntheticDgp& dgp, const Eigen::VectorXd& x) {
  return bounded_probability(dgp.select_intercept + dgp.select_weights.dot(x));
}

double treatment_probability(const SyntheticDgp& dgp, const Eigen::VectorXd& x) {
  return bounded_probability(dgp.treat_intercept + dgp.treat_weights.dot(x));
}

FusedDataset generate(const SyntheticDgp& dgp, Eigen::Index n, std::uint64_t seed) {
  dgp.validate();
  if (n < 4) throw InputError("generate needs n >= 4");
  for (int attempt = 0; attempt < 100; ++attempt) {
    std::mt19937_64 rng(seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(attempt));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    Eigen::VectorXi g(n);
    Eigen::MatrixXd x(n, dgp.p), m(n, dgp.q);
    Eigen::VectorXd d(n), y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::VectorXd xi(dgp.p);
      for (int k = 0; k < dgp.p; ++k) xi(k) = dgp.x_mean(k) + dgp.x_sd * normal(rng);
      g(i) = unif(rng) < selection_probability(dgp, xi) ? 1 : 0;
      double di;
      if (dgp.treatment == TreatmentKind::Binary) {
        di = unif(rng) < treatment_probability(dgp, xi) ? 1.0 : 0.0;
      } else {
        di = dgp.treat_intercept + dgp.treat_weights.dot(xi) + dgp.d_sd * normal(rng);
      }
      Eigen::VectorXd mi = surrogate_mean(dgp, xi, di);
      for (int k = 0; k < dgp.q; ++k) mi(k) += dgp.m_sd * normal(rng);
      const double yi = dgp.c0 + dgp.c_m.dot(mi) + dgp.c_x.dot(xi) + dgp.y_sd * normal(rng);
      x.row(i) = xi.transpose();
      m.row(i) = mi.transpose();
      d(i) = g(i) == 0 ? di : 0.0;
      y(i) = g(i) == 1 ? yi : 0.0;
    }
    const Eigen::Index n_obs = g.sum();
    if (n_obs == 0 || n_obs == n) continue;
    return FusedDataset(std::move(g), std::move(x), std::move(d), std::move(m), std::move(y), dgp.treatment);
  }
  throw InputError("generate: a group stayed empty after 100 attempts");
}

AltPopulation sample_shifted_population(const SyntheticDgp& dgp, Eigen::Index n, const Eigen::VectorXd& shift,
                                        std::uint64_t seed) {
  dgp.validate();
  if (shift.size() != dgp.p) throw InputError("shift must have length p");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd x(n, dgp.p);
  for (Eigen::Index i = 0; i < n; ++i)
    for (int k = 0; k < dgp.p; ++k) x(i, k) = dgp.x_mean(k) + shift(k) + dgp.x_sd * normal(rng);
  return AltPopulation(std::move(x));
}

double true_dose_response(const SyntheticDgp& dgp, double d) { return true_dose_response(dgp, d, dgp.x_mean); }

double true_dose_response(const SyntheticDgp& dgp, double d, const Eigen::VectorXd& covariate_mean) {
  dgp.validate();
  const Eigen::VectorXd index = linear_index(dgp, covariate_mean, d);
  Eigen::VectorXd mean_m;
  if (dgp.link == SurrogateLink::Linear) {
    mean_m = index;
  } else {
    // E sin(a + b^T X) = sin(a + b^T mu) exp(-|b|^2 s^2 / 2) for X ~ N(mu, s^2 I).
    mean_m.resize(dgp.q);
    for (int k = 0; k < dgp.q; ++k)
      mean_m(k) = std::sin(index(k)) * std::exp(-0.5 * dgp.x_sd * dgp.x_sd * dgp.b_x.row(k).squaredNorm());
  }
  return dgp.c0 + dgp.c_m.dot(mean_m) + dgp.c_x.dot(covariate_mean);
}

Eigen::VectorXd sample_counterfactual(const SyntheticDgp& dgp, double d, Eigen::Index count, std::uint64_t seed) {
  dgp.validate();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd out(count);
  Eigen::VectorXd x(dgp.p);
  for (Eigen::Index i = 0; i < count; ++i) {
    for (int k = 0; k < dgp.p; ++k) x(k) = dgp.x_mean(k) + dgp.x_sd * normal(rng);
    Eigen::VectorXd m = surrogate_mean(dgp, x, d);
    for (int k = 0; k < dgp.q; ++k) m(k) += dgp.m_sd * normal(rng);
    out(i) = dgp.c0 + dgp.c_m.dot(m) + dgp.c_x.dot(x) + dgp.y_sd * normal(rng);
  }
  return out;
}

OracleNuisances::OracleNuisances(SyntheticDgp dgp, double d, double epsilon)
    : dgp_(std::move(dgp)), d_(d), epsilon_(epsilon) {
  dgp_.validate();
  if (dgp_.treatment != TreatmentKind::Binary) throw InputError("oracle nuisances need a binary treatment");
  if (d != 0.0 && d != 1.0) throw InputError("treatment level must be 0 or 1");
  if (!(epsilon > 0.0 && epsilon < 0.5)) throw InputError("censoring bound must lie in (0, 0.5)");
}

double OracleNuisances::nu(const Eigen::VectorXd& x) const {
  return dgp_.c0 + dgp_.c_m.dot(surrogate_mean(dgp_, x, d_)) + dgp_.c_x.dot(x);
}

double OracleNuisances::delta(const Eigen::VectorXd& x, const Eigen::VectorXd& m) const {
  return dgp_.c0 + dgp_.c_m.dot(m) + dgp_.c_x.dot(x);
}

double OracleNuisances::rho(const Eigen::VectorXd& x, const Eigen::VectorXd& m) const {
  // Bayes over D in {0, 1} with Gaussian M | X, D.
  const double p1 = treatment_probability(dgp_, x);
  const double var = dgp_.m_sd * dgp_.m_sd;
  const double l1 = -(m - surrogate_mean(dgp_, x, 1.0)).squaredNorm() / (2.0 * var);
  const double l0 = -(m - surrogate_mean(dgp_, x, 0.0)).squaredNorm() / (2.0 * var);
  const double p_treated = logistic(std::log(p1) - std::log1p(-p1) + l1 - l0);
  return d_ == 1.0 ? p_treated : 1.0 - p_treated;
}

NuisanceValues OracleNuisances::evaluate(const Eigen::MatrixXd& x, const Eigen::MatrixXd& m) const {
  const Eigen::Index r = x.rows();
  NuisanceValues v;
  v.nu.resize(r);
  v.delta.resize(r);
  v.pi.resize(r);
  v.rho.resize(r);
  v.pi_prime.resize(r);
  v.rho_prime.resize(r);
  for (Eigen::Index j = 0; j < r; ++j) {
    const Eigen::VectorXd xj = x.row(j).transpose();
    const Eigen::VectorXd mj = m.row(j).transpose();
    const double p1 = treatment_probability(dgp_, xj);
    // M is independent of G given X, so P(G=1 | X, M) = P(G=1 | X).
    const double s = selection_probability(dgp_, xj);
    v.nu(j) = nu(xj);
    v.delta(j) = delta(xj, mj);
    v.pi(j) = censor(d_ == 1.0 ? p1 : 1.0 - p1, epsilon_);
    v.rho(j) = censor(rho(xj, mj), epsilon_);
    v.pi_prime(j) = censor(s, epsilon_);
    v.rho_prime(j) = censor(s, epsilon_);
  }
  return v;
}

OracleNuisances oracle_nuisances(const SyntheticDgp& dgp, double d, double epsilon) {
  return OracleNuisances(dgp, d, epsilon);
}

// ---------------------------------------------------------------------------
// JSON

namespace {

nlohmann::json vec(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd vec_from(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

std::string dgp_to_json(const SyntheticDgp& dgp) {
  nlohmann::json j;
  j["p"] = dgp.p;
  j["q"] = dgp.q;
  j["link"] = dgp.link == SurrogateLink::Sine ? "sine" : "linear";
  j["treatment"] = dgp.treatment == TreatmentKind::Binary ? "binary" : "continuous";
  j["x_mean"] = vec(dgp.x_mean);
  j["x_sd"] = dgp.x_sd;
  j["select_intercept"] = dgp.select_intercept;
  j["select_weights"] = vec(dgp.select_weights);
  j["treat_intercept"] = dgp.treat_intercept;
  j["treat_weights"] = vec(dgp.treat_weights);
  j["d_sd"] = dgp.d_sd;
  j["b0"] = vec(dgp.b0);
  j["b_d"] = vec(dgp.b_d);
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < dgp.b_x.rows(); ++r) rows.push_back(vec(dgp.b_x.row(r).transpose()));
  j["b_x"] = rows;
  j["m_sd"] = dgp.m_sd;
  j["c0"] = dgp.c0;
  j["c_m"] = vec(dgp.c_m);
  j["c_x"] = vec(dgp.c_x);
  j["y_sd"] = dgp.y_sd;
  return j.dump(2);
}

SyntheticDgp dgp_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("dgp config: ") + e.what());
  }
  const std::string treatment = j.value("treatment", std::string("continuous"));
  if (treatment != "binary" && treatment != "continuous") throw InputError("dgp config: unknown treatment " + treatment);
  SyntheticDgp dgp = default_dgp(treatment == "binary" ? TreatmentKind::Binary : TreatmentKind::Continuous);
  try {
    if (j.contains("p")) dgp.p = j["p"].get<int>();
    if (j.contains("q")) dgp.q = j["q"].get<int>();
    if (j.contains("link")) {
      const auto l = j["link"].get<std::string>();
      if (l != "sine" && l != "linear") throw InputError("dgp config: unknown link " + l);
      dgp.link = l == "sine" ? SurrogateLink::Sine : SurrogateLink::Linear;
    }
    auto scalar = [&](const char* key, double& out) {
      if (j.contains(key)) out = j[key].get<double>();
    };
    auto vector = [&](const char* key, Eigen::VectorXd& out) {
      if (j.contains(key)) out = vec_from(j[key]);
    };
    vector("x_mean", dgp.x_mean);
    scalar("x_sd", dgp.x_sd);
    scalar("select_intercept", dgp.select_intercept);
    vector("select_weights", dgp.select_weights);
    scalar("treat_intercept", dgp.treat_intercept);
    vector("treat_weights", dgp.treat_weights);
    scalar("d_sd", dgp.d_sd);
    vector("b0", dgp.b0);
    vector("b_d", dgp.b_d);
    if (j.contains("b_x")) {
      const auto& rows = j["b_x"];
      Eigen::MatrixXd b(static_cast<Eigen::Index>(rows.size()), rows.empty() ? 0 : static_cast<Eigen::Index>(rows[0].size()));
      for (std::size_t r = 0; r < rows.size(); ++r) {
        const Eigen::VectorXd row = vec_from(rows[r]);
        if (row.size() != b.cols()) throw InputError("dgp config: ragged b_x");
        b.row(static_cast<Eigen::Index>(r)) = row.transpose();
      }
      dgp.b_x = b;
    }
    scalar("m_sd", dgp.m_sd);
    scalar("c0", dgp.c0);
    vector("c_m", dgp.c_m);
    vector("c_x", dgp.c_x);
    scalar("y_sd", dgp.y_sd);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("dgp config: ") + e.what());
  }
  dgp.validate();
  return dgp;
}

}  // namespace ltk
