// ltk: long-term effects from a fused experimental + observational sample.
//
//   ltk simulate  synthetic fused dataset (CSV)
//   ltk tune      kernels and ridge penalties (JSON)
//   ltk dose      dose-response curve (JSON)
//   ltk ate       cross-fitted effect with confidence interval (JSON)
//   ltk dist      counterfactual distribution embedding (JSON)
//   ltk herd      samples herded from that embedding (CSV)
//
// Exit status: 0 success, 1 invalid input or usage, 2 numerical failure.

#include <charconv>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ltk/data.hpp"
#include "ltk/distributions.hpp"
#include "ltk/dose_response.hpp"
#include "ltk/error.hpp"
#include "ltk/parallel.hpp"
#include "ltk/semiparametric.hpp"
#include "ltk/serialization.hpp"
#include "ltk/synthetic.hpp"

namespace {

using namespace ltk;

double parse_number(const std::string& s, const std::string& what) {
  double v = 0;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) throw InputError(what + ": '" + s + "' is not a number");
  return v;
}

struct GridArg {
  double start = 0, stop = 0;
  int count = 0;
};

/// start:stop:count
GridArg parse_grid(const std::string& text, const std::string& what) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
  if (parts.size() != 3) throw InputError(what + ": expected start:stop:count, got '" + text + "'");
  GridArg g{parse_number(parts[0], what), parse_number(parts[1], what), 0};
  const double c = parse_number(parts[2], what);
  if (c < 1 || c != static_cast<int>(c)) throw InputError(what + ": count must be a positive integer");
  g.count = static_cast<int>(c);
  return g;
}

std::vector<double> parse_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(text);
  for (std::string p; std::getline(ss, p, ',');) out.push_back(parse_number(p, what));
  return out;
}

PenaltyGrid penalty_grid(const std::string& text) {
  if (text.empty()) return {};
  const GridArg g = parse_grid(text, "--lambda-grid");
  if (!(g.start > 0) || !(g.stop >= g.start)) throw InputError("--lambda-grid: need 0 < start <= stop");
  return PenaltyGrid{g.start, g.stop, g.count};
}

std::optional<TreatmentKind> treatment_kind(const std::string& name) {
  if (name == "auto") return std::nullopt;
  if (name == "binary") return TreatmentKind::Binary;
  if (name == "continuous") return TreatmentKind::Continuous;
  throw InputError("unknown treatment kind '" + name + "'");
}

std::optional<AltPopulation> alt_population(Estimand estimand, const std::string& path) {
  if (estimand == Estimand::DS && path.empty()) throw InputError("estimand ds needs --alt");
  if (estimand != Estimand::DS && !path.empty()) throw InputError("--alt applies only to estimand ds");
  if (path.empty()) return std::nullopt;
  return load_alt_population_csv(path);
}

struct Common {
  std::string data;
  std::string treatment = "auto";
  std::string out;
  std::string lambda_grid;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--data", c.data, "Fused dataset CSV (g,x_1..,d,m_1..,y)")->required();
  cmd->add_option("--treatment", c.treatment, "Treatment kind: auto, binary or continuous")
      ->check(CLI::IsMember({"auto", "binary", "continuous"}));
  cmd->add_option("--out", c.out, "Output path")->required();
  cmd->add_option("--lambda-grid", c.lambda_grid, "Penalty grid lo:hi:count, relative to trace(K)/n");
}

FusedDataset load(const Common& c) { return load_fused_csv(c.data, CsvSchema{treatment_kind(c.treatment)}); }

std::string fmt(double v) { return format_double(v); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Long-term causal effects from fused experimental and observational samples"};
  app.require_subcommand(1);
  app.fallthrough();
  int threads = 0;
  app.add_option("--threads", threads, "Worker thread cap (default: LTK_THREADS or all cores)")
      ->check(CLI::PositiveNumber);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Draw a synthetic fused dataset");
  long long sim_n = 500;
  std::uint64_t sim_seed = 0;
  std::string sim_out, sim_config, sim_link = "linear", sim_treatment = "continuous", sim_alt_out, sim_shift, sim_dgp_out;
  long long sim_alt_n = 0;
  sim->add_option("--n", sim_n, "Rows")->check(CLI::Range(4LL, 100000000LL));
  sim->add_option("--seed", sim_seed, "Random seed");
  sim->add_option("--out", sim_out, "Dataset CSV")->required();
  sim->add_option("--link", sim_link, "Surrogate link: linear or sine")->check(CLI::IsMember({"linear", "sine"}));
  sim->add_option("--treatment", sim_treatment, "binary or continuous")->check(CLI::IsMember({"binary", "continuous"}));
  sim->add_option("--config", sim_config, "DGP JSON; overrides --link and --treatment");
  sim->add_option("--alt-out", sim_alt_out, "Also write a shifted covariate population here");
  sim->add_option("--alt-n", sim_alt_n, "Rows of the shifted population (default --n)");
  sim->add_option("--shift", sim_shift, "Covariate mean shift, comma separated (default 0)");
  sim->add_option("--dgp-out", sim_dgp_out, "Write the DGP configuration JSON here");

  // tune
  auto* tune = app.add_subcommand("tune", "Median-heuristic kernels and leave-one-out penalties");
  Common tune_c;
  bool tune_outcome = false;
  add_common(tune, tune_c);
  tune->add_flag("--outcome-kernel", tune_outcome, "Also choose the outcome kernel and the distribution penalty");

  // dose
  auto* dose = app.add_subcommand("dose", "Dose-response curve");
  Common dose_c;
  std::string dose_estimand = "ate", dose_grid, dose_alt, dose_params;
  std::optional<double> dose_lambda, dose_lambda1;
  add_common(dose, dose_c);
  dose->add_option("--estimand", dose_estimand, "ate, ds, exp or obs")->check(CLI::IsMember({"ate", "ds", "exp", "obs"}));
  dose->add_option("--grid", dose_grid, "Treatment grid start:stop:count (default: 25 quantiles of D)");
  dose->add_option("--alt", dose_alt, "Alternative covariate population CSV (estimand ds)");
  dose->add_option("--params", dose_params, "Kernels and penalties from `tune`");
  dose->add_option("--lambda", dose_lambda, "Outcome penalty");
  dose->add_option("--lambda1", dose_lambda1, "First-stage penalty");

  // ate
  auto* ate = app.add_subcommand("ate", "Cross-fitted long-term effect of a binary treatment");
  Common ate_c;
  double ate_d = 1, ate_level = 0.95, ate_eps = 0.01;
  int ate_folds = 5;
  std::uint64_t ate_seed = 0;
  add_common(ate, ate_c);
  ate->add_option("--d", ate_d, "Treatment level (0 or 1)");
  ate->add_option("--folds", ate_folds, "Cross-fitting folds")->check(CLI::Range(2, 1000000));
  ate->add_option("--level", ate_level, "Confidence level");
  ate->add_option("--epsilon", ate_eps, "Propensity censoring bound");
  ate->add_option("--seed", ate_seed, "Fold assignment seed");

  // dist, herd
  auto* dist = app.add_subcommand("dist", "Counterfactual distribution embedding");
  auto* herd_cmd = app.add_subcommand("herd", "Kernel herding from a counterfactual distribution embedding");
  Common dist_c, herd_c;
  std::string dist_estimand = "ate", dist_alt, dist_params, herd_estimand = "ate", herd_alt, herd_params, herd_candidates;
  double dist_d = 0, herd_d = 0;
  int herd_count = 500;
  for (auto [cmd, c, estimand, alt, params, d] :
       {std::tuple{dist, &dist_c, &dist_estimand, &dist_alt, &dist_params, &dist_d},
        std::tuple{herd_cmd, &herd_c, &herd_estimand, &herd_alt, &herd_params, &herd_d}}) {
    add_common(cmd, *c);
    cmd->add_option("--estimand", *estimand, "ate, ds, exp or obs")->check(CLI::IsMember({"ate", "ds", "exp", "obs"}));
    cmd->add_option("--d", *d, "Treatment level")->required();
    cmd->add_option("--alt", *alt, "Alternative covariate population CSV (estimand ds)");
    cmd->add_option("--params", *params, "Kernels and penalties from `tune --outcome-kernel`");
  }
  herd_cmd->add_option("--count", herd_count, "Number of herded samples")->check(CLI::PositiveNumber);
  herd_cmd->add_option("--candidates", herd_candidates,
                       "Candidate grid start:stop:count (default: 512 points over the observed outcome range)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (threads > 0) set_thread_limit(static_cast<std::size_t>(threads));

    if (sim->parsed()) {
      SyntheticDgp dgp = default_dgp(sim_treatment == "binary" ? TreatmentKind::Binary : TreatmentKind::Continuous);
      if (sim_link == "sine") {
        dgp = nonlinear_dgp(dgp.treatment);
      }
      if (!sim_config.empty()) dgp = dgp_from_json(read_text_file(sim_config));
      const FusedDataset data = generate(dgp, sim_n, sim_seed);
      write_fused_csv(data, sim_out);
      if (!sim_dgp_out.empty()) write_text_file(sim_dgp_out, dgp_to_json(dgp) + "\n");
      std::string extra;
      if (!sim_alt_out.empty()) {
        Eigen::VectorXd shift = Eigen::VectorXd::Zero(dgp.p);
        if (!sim_shift.empty()) {
          const auto v = parse_list(sim_shift, "--shift");
          if (static_cast<int>(v.size()) != dgp.p) throw InputError("--shift needs " + std::to_string(dgp.p) + " values");
          shift = Eigen::Map<const Eigen::VectorXd>(v.data(), dgp.p);
        }
        const AltPopulation alt = sample_shifted_population(dgp, sim_alt_n > 0 ? sim_alt_n : sim_n, shift, sim_seed + 1);
        write_alt_population_csv(alt, sim_alt_out);
        extra = " alt=" + std::to_string(alt.size());
      }
      std::cout << "simulate: n=" << data.size() << " nExp=" << data.n_exp() << " nObs=" << data.n_obs() << extra
                << " -> " << sim_out << "\n";
      return 0;
    }

    if (tune->parsed()) {
      const FusedDataset data = load(tune_c);
      const PenaltyGrid range = penalty_grid(tune_c.lambda_grid);
      TunedParameters p;
      p.kernels = median_kernels(data, tune_outcome);
      p.lambda1 = tune_first_stage_lambda(data, p.kernels, range);
      const EmbeddingModel model(data, p.kernels, p.lambda1);
      p.lambda = tune_outcome_lambda(model, range);
      if (tune_outcome) p.lambda2 = tune_distribution_lambda(model, range);
      write_text_file(tune_c.out, parameters_to_json(p));
      std::cout << "tune: lambda=" << fmt(p.lambda) << " lambda1=" << fmt(p.lambda1);
      if (p.lambda2) std::cout << " lambda2=" << fmt(*p.lambda2);
      std::cout << " -> " << tune_c.out << "\n";
      return 0;
    }

    if (dose->parsed()) {
      const FusedDataset data = load(dose_c);
      const Estimand estimand = parse_estimand(dose_estimand);
      const auto alt = alt_population(estimand, dose_alt);
      std::vector<double> grid;
      if (dose_grid.empty()) {
        grid = default_treatment_grid(data);
      } else {
        const GridArg g = parse_grid(dose_grid, "--grid");
        grid = linspace(g.start, g.stop, g.count);
      }
      const PenaltyGrid range = penalty_grid(dose_c.lambda_grid);
      KernelSet kernels;
      std::optional<double> lambda = dose_lambda, lambda1 = dose_lambda1;
      if (!dose_params.empty()) {
        const TunedParameters p = parameters_from_json(read_text_file(dose_params));
        kernels = p.kernels;
        if (!lambda) lambda = p.lambda;
        if (!lambda1) lambda1 = p.lambda1;
      } else {
        kernels = median_kernels(data);
      }
      if (!lambda1) lambda1 = tune_first_stage_lambda(data, kernels, range);
      if (!lambda) lambda = tune_outcome_lambda(EmbeddingModel(data, kernels, *lambda1), range);
      const DoseResponseCurve curve = estimate_curve(data, estimand, grid, kernels, *lambda, *lambda1, alt);
      write_text_file(dose_c.out, curve_to_json(curve));
      for (const auto& w : curve.warnings) std::cerr << "warning: " << w << "\n";
      std::cout << "dose: estimand=" << to_string(estimand) << " points=" << curve.grid.size()
                << " lambda=" << fmt(curve.lambda) << " lambda1=" << fmt(curve.lambda1) << " -> " << dose_c.out << "\n";
      return 0;
    }

    if (ate->parsed()) {
      const FusedDataset data = load(ate_c);
      if (data.treatment_kind() != TreatmentKind::Binary) throw InputError("ate needs a binary treatment");
      DmlConfig config;
      config.seed = ate_seed;
      config.nuisance.epsilon = ate_eps;
      config.nuisance.grid = penalty_grid(ate_c.lambda_grid);
      const EffectEstimate e = dml_estimate(data, ate_d, ate_folds, ate_level, config);
      write_text_file(ate_c.out, estimate_to_json(e));
      for (const auto& w : e.warnings) std::cerr << "warning: " << w << "\n";
      std::cout << "ate: d=" << fmt(e.d) << " theta=" << fmt(e.theta) << " ci=[" << fmt(e.ci_lower) << ", "
                << fmt(e.ci_upper) << "] level=" << fmt(e.level) << " folds=" << e.folds << " -> " << ate_c.out << "\n";
      return 0;
    }

    if (dist->parsed() || herd_cmd->parsed()) {
      const bool herding = herd_cmd->parsed();
      const Common& c = herding ? herd_c : dist_c;
      const FusedDataset data = load(c);
      const Estimand estimand = parse_estimand(herding ? herd_estimand : dist_estimand);
      const auto alt = alt_population(estimand, herding ? herd_alt : dist_alt);
      const double d = herding ? herd_d : dist_d;
      const std::string& params_path = herding ? herd_params : dist_params;
      DistributionEmbedding emb;
      if (params_path.empty()) {
        emb = embed_distribution_tuned(data, estimand, d, alt, penalty_grid(c.lambda_grid));
      } else {
        const TunedParameters p = parameters_from_json(read_text_file(params_path));
        if (!p.kernels.y || !p.lambda2) throw InputError("--params lacks the outcome kernel; run tune --outcome-kernel");
        emb = embed_distribution(data, estimand, d, p.kernels, p.lambda1, *p.lambda2, alt);
      }
      if (!herding) {
        write_text_file(c.out, embedding_to_json(emb));
        std::cout << "dist: estimand=" << to_string(estimand) << " d=" << fmt(d) << " lambda1=" << fmt(emb.lambda1)
                  << " lambda2=" << fmt(emb.lambda2) << " -> " << c.out << "\n";
        return 0;
      }
      Eigen::VectorXd candidates;
      if (herd_candidates.empty()) {
        candidates = default_candidate_grid(data);
      } else {
        const GridArg g = parse_grid(herd_candidates, "--candidates");
        const auto v = linspace(g.start, g.stop, g.count);
        candidates = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
      }
      const HerdedSample s = herd(emb, herd_count, candidates);
      write_text_file(c.out, herded_to_csv(s));
      double mean = 0;
      for (double v : s.values) mean += v;
      mean /= double(s.values.size());
      std::cout << "herd: estimand=" << to_string(estimand) << " d=" << fmt(d) << " count=" << s.values.size()
                << " mean=" << fmt(mean) << " -> " << c.out << "\n";
      return 0;
    }
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
