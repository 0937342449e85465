#include "ltk/serialization.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ltk/error.hpp"

namespace ltk {

using Json = nlohmann::ordered_json;

namespace {

Json warnings_of(const std::vector<std::string>& w) {
  Json out = Json::array();
  for (const auto& s : w) out.push_back(s);
  return out;
}

Json kernel_to_json(const KernelSpec<double>& k) {
  if (k.is_dirac()) return "dirac";
  return std::vector<double>(k.lengthscales.data(), k.lengthscales.data() + k.lengthscales.size());
}

KernelSpec<double> kernel_from_json(const Json& j, const char* name) {
  if (j.is_string()) {
    if (j.get<std::string>() != "dirac") throw InputError(std::string("kernel ") + name + ": unknown kernel");
    return KernelSpec<double>::dirac();
  }
  if (!j.is_array() || j.empty()) throw InputError(std::string("kernel ") + name + ": expected lengthscales");
  const auto v = j.get<std::vector<double>>();
  return KernelSpec<double>::gaussian(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
}

}  // namespace

std::string curve_to_json(const DoseResponseCurve& curve) {
  Json points = Json::array();
  for (std::size_t k = 0; k < curve.grid.size(); ++k) points.push_back({{"d", curve.grid[k]}, {"estimate", curve.estimates[k]}});
  Json j;
  j["curve"] = points;
  j["metadata"] = {{"estimand", to_string(curve.estimand)},
                   {"lambda", curve.lambda},
                   {"lambda1", curve.lambda1},
                   {"n", curve.n},
                   {"nExp", curve.n_exp},
                   {"nObs", curve.n_obs}};
  j["warnings"] = warnings_of(curve.warnings);
  return j.dump(2) + "\n";
}

std::string estimate_to_json(const EffectEstimate& e) {
  Json j;
  j["theta"] = e.theta;
  j["sigma"] = e.sigma;
  j["ciLower"] = e.ci_lower;
  j["ciUpper"] = e.ci_upper;
  j["level"] = e.level;
  j["n"] = e.n;
  j["folds"] = e.folds;
  j["d"] = e.d;
  j["epsilon"] = e.epsilon;
  j["warnings"] = warnings_of(e.warnings);
  return j.dump(2) + "\n";
}

std::string embedding_to_json(const DistributionEmbedding& e) {
  Json j;
  j["coefficients"] = std::vector<double>(e.coefficients.data(), e.coefficients.data() + e.coefficients.size());
  j["outcomeLengthscale"] = e.outcome_kernel.lengthscales(0);
  j["d"] = e.d;
  j["estimand"] = to_string(e.estimand);
  j["lambda1"] = e.lambda1;
  j["lambda2"] = e.lambda2;
  return j.dump(2) + "\n";
}

std::string herded_to_csv(const HerdedSample& sample) {
  std::string out = "y_tilde\n";
  for (double v : sample.values) out += format_double(v) + "\n";
  return out;
}

std::string parameters_to_json(const TunedParameters& p) {
  Json j;
  j["kernels"] = {{"x", kernel_to_json(p.kernels.x)}, {"d", kernel_to_json(p.kernels.d)}, {"m", kernel_to_json(p.kernels.m)}};
  if (p.kernels.y) j["kernels"]["y"] = kernel_to_json(*p.kernels.y);
  j["lambda"] = p.lambda;
  j["lambda1"] = p.lambda1;
  if (p.lambda2) j["lambda2"] = *p.lambda2;
  return j.dump(2) + "\n";
}

TunedParameters parameters_from_json(const std::string& text) {
  try {
    const Json j = Json::parse(text);
    const Json& k = j.at("kernels");
    std::optional<KernelSpec<double>> y;
    if (k.contains("y")) y = kernel_from_json(k.at("y"), "y");
    std::optional<double> lambda2;
    if (j.contains("lambda2")) lambda2 = j.at("lambda2").get<double>();
    const double lambda = j.at("lambda").get<double>();
    const double lambda1 = j.at("lambda1").get<double>();
    if (!(lambda > 0) || !(lambda1 > 0) || (lambda2 && !(*lambda2 > 0)))
      throw InputError("parameters: penalties must be positive");
    return TunedParameters{
        KernelSet{kernel_from_json(k.at("x"), "x"), kernel_from_json(k.at("d"), "d"), kernel_from_json(k.at("m"), "m"), y},
        lambda, lambda1, lambda2};
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("parameters: ") + e.what());
  }
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path);
  out << text;
  if (!out) throw InputError("failed writing " + path);
}

}  // namespace ltk
