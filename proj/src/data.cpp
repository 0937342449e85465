#include "ltk/data.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "ltk/error.hpp"

namespace ltk {

FusedDataset::FusedDataset(Eigen::VectorXi g, Eigen::MatrixXd x, Eigen::VectorXd d, Eigen::MatrixXd m,
                           Eigen::VectorXd y, TreatmentKind kind)
    : g_(std::move(g)), x_(std::move(x)), d_(std::move(d)), m_(std::move(m)), y_(std::move(y)), kind_(kind) {
  const Eigen::Index n = g_.size();
  if (x_.rows() != n || d_.size() != n || m_.rows() != n || y_.size() != n)
    throw InputError("fused dataset columns have different lengths");
  if (x_.cols() < 1) throw InputError("fused dataset needs at least one covariate");
  if (m_.cols() < 1) throw InputError("fused dataset needs at least one surrogate");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (g_(i) != 0 && g_(i) != 1) throw InputError("row " + std::to_string(i) + ": g must be 0 or 1");
    bool fixed = false;
    if (g_(i) == 1 && d_(i) != 0.0) {
      d_(i) = 0.0;
      fixed = true;
    }
    if (g_(i) == 0 && y_(i) != 0.0) {
      y_(i) = 0.0;
      fixed = true;
    }
    if (fixed) ++fixes_;
    if (g_(i) == 0) {
      ++n_exp_;
      if (kind_ == TreatmentKind::Binary && d_(i) != 0.0 && d_(i) != 1.0)
        throw InputError("row " + std::to_string(i) + ": binary treatment must be 0 or 1");
    }
  }
  if (!x_.allFinite() || !d_.allFinite() || !m_.allFinite() || !y_.allFinite())
    throw InputError("fused dataset contains non-finite values");
  if (n_exp_ == 0) throw InputError("experimental group empty");
  if (n_exp_ == n) throw InputError("observational group empty");
}

Eigen::VectorXd FusedDataset::experimental_mask() const { return (g_.array() == 0).cast<double>().matrix(); }

Eigen::VectorXd FusedDataset::observational_mask() const { return (g_.array() == 1).cast<double>().matrix(); }

std::vector<Eigen::Index> FusedDataset::experimental_rows() const {
  std::vector<Eigen::Index> out;
  for (Eigen::Index i = 0; i < size(); ++i)
    if (g_(i) == 0) out.push_back(i);
  return out;
}

std::vector<Eigen::Index> FusedDataset::observational_rows() const {
  std::vector<Eigen::Index> out;
  for (Eigen::Index i = 0; i < size(); ++i)
    if (g_(i) == 1) out.push_back(i);
  return out;
}

FusedSample FusedDataset::sample(Eigen::Index i) const {
  return FusedSample{g_(i), x_.row(i).transpose(), d_(i), m_.row(i).transpose(), y_(i)};
}

FusedDataset FusedDataset::subset(const std::vector<Eigen::Index>& indices) const {
  const auto k = static_cast<Eigen::Index>(indices.size());
  Eigen::VectorXi g(k);
  Eigen::MatrixXd x(k, x_dim()), m(k, m_dim());
  Eigen::VectorXd d(k), y(k);
  for (Eigen::Index r = 0; r < k; ++r) {
    const Eigen::Index i = indices[static_cast<std::size_t>(r)];
    if (i < 0 || i >= size()) throw InputError("subset index out of range");
    g(r) = g_(i);
    x.row(r) = x_.row(i);
    d(r) = d_(i);
    m.row(r) = m_.row(i);
    y(r) = y_(i);
  }
  return FusedDataset(std::move(g), std::move(x), std::move(d), std::move(m), std::move(y), kind_);
}

FusedDataset FusedDataset::with_outcomes(const Eigen::VectorXd& y) const {
  if (y.size() != size()) throw InputError("outcome vector has the wrong length");
  return FusedDataset(g_, x_, d_, m_, (g_.array() == 1).select(y, 0.0), kind_);
}

AltPopulation::AltPopulation(Eigen::MatrixXd covariates) : x(std::move(covariates)) {
  if (x.rows() == 0) throw InputError("alternative population is empty");
  if (!x.allFinite()) throw InputError("alternative population contains non-finite values");
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    cells.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::optional<double> parse_cell(const std::string& cell, std::size_t line_no, const std::string& column) {
  if (cell.empty()) return std::nullopt;
  double v = 0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last)
    throw InputError("line " + std::to_string(line_no) + ", column " + column + ": non-numeric cell '" + cell + "'");
  return v;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path);
  out << text;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  // Tolerate a UTF-8 byte order mark.
  if (!lines.empty() && lines.front().rfind("\xEF\xBB\xBF", 0) == 0) lines.front().erase(0, 3);
  return lines;
}

/// Indices of columns named prefix_1..prefix_k, in order; error if missing or out of order.
std::vector<std::size_t> numbered_columns(const std::vector<std::string>& header, const std::string& prefix) {
  std::vector<std::size_t> cols;
  for (int k = 1;; ++k) {
    const std::string name = prefix + "_" + std::to_string(k);
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) break;
    cols.push_back(static_cast<std::size_t>(it - header.begin()));
  }
  if (cols.empty()) throw InputError("missing column " + prefix + "_1");
  return cols;
}

std::size_t named_column(const std::vector<std::string>& header, const std::string& name) {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw InputError("missing column " + name);
  return static_cast<std::size_t>(it - header.begin());
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

FusedDataset parse_fused_csv(const std::string& text, const CsvSchema& schema) {
  auto lines = lines_of(text);
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty()) throw InputError("empty CSV");
  const auto header = split_line(lines.front());
  const std::size_t g_col = named_column(header, "g");
  const std::size_t d_col = named_column(header, "d");
  const std::size_t y_col = named_column(header, "y");
  const auto x_cols = numbered_columns(header, "x");
  const auto m_cols = numbered_columns(header, "m");
  if (header.size() != 3 + x_cols.size() + m_cols.size()) throw InputError("unexpected extra columns in header");

  const auto n = static_cast<Eigen::Index>(lines.size() - 1);
  Eigen::VectorXi g(n);
  Eigen::MatrixXd x(n, static_cast<Eigen::Index>(x_cols.size()));
  Eigen::MatrixXd m(n, static_cast<Eigen::Index>(m_cols.size()));
  Eigen::VectorXd d(n), y(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const std::size_t line_no = static_cast<std::size_t>(r) + 2;
    const auto cells = split_line(lines[static_cast<std::size_t>(r) + 1]);
    if (cells.size() != header.size())
      throw InputError("line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) + " cells");
    auto required = [&](std::size_t col) {
      auto v = parse_cell(cells[col], line_no, header[col]);
      if (!v) throw InputError("line " + std::to_string(line_no) + ": empty cell in column " + header[col]);
      return *v;
    };
    const double gv = required(g_col);
    if (gv != 0.0 && gv != 1.0) throw InputError("line " + std::to_string(line_no) + ": g must be 0 or 1");
    g(r) = static_cast<int>(gv);
    for (std::size_t k = 0; k < x_cols.size(); ++k) x(r, static_cast<Eigen::Index>(k)) = required(x_cols[k]);
    for (std::size_t k = 0; k < m_cols.size(); ++k) m(r, static_cast<Eigen::Index>(k)) = required(m_cols[k]);
    const auto dv = parse_cell(cells[d_col], line_no, "d");
    const auto yv = parse_cell(cells[y_col], line_no, "y");
    if (g(r) == 0 && !dv) throw InputError("line " + std::to_string(line_no) + ": d is required when g = 0");
    if (g(r) == 1 && !yv) throw InputError("line " + std::to_string(line_no) + ": y is required when g = 1");
    d(r) = dv.value_or(0.0);
    y(r) = yv.value_or(0.0);
  }

  TreatmentKind kind = TreatmentKind::Continuous;
  if (schema.treatment) {
    kind = *schema.treatment;
  } else {
    bool binary = true;
    for (Eigen::Index r = 0; r < n; ++r)
      if (g(r) == 0 && d(r) != 0.0 && d(r) != 1.0) binary = false;
    kind = binary ? TreatmentKind::Binary : TreatmentKind::Continuous;
  }
  return FusedDataset(std::move(g), std::move(x), std::move(d), std::move(m), std::move(y), kind);
}

FusedDataset load_fused_csv(const std::string& path, const CsvSchema& schema) {
  return parse_fused_csv(read_file(path), schema);
}

std::string format_fused_csv(const FusedDataset& data) {
  std::string out = "g";
  for (Eigen::Index k = 1; k <= data.x_dim(); ++k) out += ",x_" + std::to_string(k);
  out += ",d";
  for (Eigen::Index k = 1; k <= data.m_dim(); ++k) out += ",m_" + std::to_string(k);
  out += ",y\n";
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    const int g = data.g()(i);
    out += std::to_string(g);
    for (Eigen::Index k = 0; k < data.x_dim(); ++k) out += "," + format_double(data.x()(i, k));
    out += ",";
    if (g == 0) out += format_double(data.d()(i));
    for (Eigen::Index k = 0; k < data.m_dim(); ++k) out += "," + format_double(data.m()(i, k));
    out += ",";
    if (g == 1) out += format_double(data.y()(i));
    out += "\n";
  }
  return out;
}

void write_fused_csv(const FusedDataset& data, const std::string& path) { write_file(path, format_fused_csv(data)); }

AltPopulation load_alt_population_csv(const std::string& path) {
  auto lines = lines_of(read_file(path));
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty()) throw InputError("empty CSV: " + path);
  const auto header = split_line(lines.front());
  const auto x_cols = numbered_columns(header, "x");
  if (header.size() != x_cols.size()) throw InputError("alternative population header must be x_1,...,x_p");
  const auto n = static_cast<Eigen::Index>(lines.size() - 1);
  Eigen::MatrixXd x(n, static_cast<Eigen::Index>(x_cols.size()));
  for (Eigen::Index r = 0; r < n; ++r) {
    const std::size_t line_no = static_cast<std::size_t>(r) + 2;
    const auto cells = split_line(lines[static_cast<std::size_t>(r) + 1]);
    if (cells.size() != header.size()) throw InputError("line " + std::to_string(line_no) + ": wrong cell count");
    for (std::size_t k = 0; k < x_cols.size(); ++k) {
      const auto v = parse_cell(cells[x_cols[k]], line_no, header[x_cols[k]]);
      if (!v) throw InputError("line " + std::to_string(line_no) + ": empty covariate");
      x(r, static_cast<Eigen::Index>(k)) = *v;
    }
  }
  return AltPopulation(std::move(x));
}

void write_alt_population_csv(const AltPopulation& pop, const std::string& path) {
  std::string out;
  for (Eigen::Index k = 1; k <= pop.x.cols(); ++k) out += (k > 1 ? ",x_" : "x_") + std::to_string(k);
  out += "\n";
  for (Eigen::Index i = 0; i < pop.x.rows(); ++i) {
    for (Eigen::Index k = 0; k < pop.x.cols(); ++k) out += (k > 0 ? "," : "") + format_double(pop.x(i, k));
    out += "\n";
  }
  write_file(path, out);
}

// ---------------------------------------------------------------------------
// Folds

std::vector<Eigen::Index> FoldPartition::members(int fold) const {
  std::vector<Eigen::Index> out;
  for (std::size_t i = 0; i < assignment.size(); ++i)
    if (assignment[i] == fold) out.push_back(static_cast<Eigen::Index>(i));
  return out;
}

std::vector<Eigen::Index> FoldPartition::complement(int fold) const {
  std::vector<Eigen::Index> out;
  for (std::size_t i = 0; i < assignment.size(); ++i)
    if (assignment[i] != fold) out.push_back(static_cast<Eigen::Index>(i));
  return out;
}

namespace {

FoldPartition draw_folds(Eigen::Index n, int folds, std::mt19937_64& rng) {
  std::vector<std::size_t> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), std::size_t(0));
  std::shuffle(order.begin(), order.end(), rng);
  FoldPartition p;
  p.folds = folds;
  p.assignment.assign(static_cast<std::size_t>(n), 0);
  for (std::size_t k = 0; k < order.size(); ++k) p.assignment[order[k]] = static_cast<int>(k % static_cast<std::size_t>(folds));
  return p;
}

}  // namespace

FoldPartition split_folds(Eigen::Index n, int folds, std::uint64_t seed) {
  if (folds < 2) throw InputError("need at least two folds");
  if (n < 2 * static_cast<Eigen::Index>(folds)) throw InputError("need at least two rows per fold");
  std::mt19937_64 rng(seed);
  return draw_folds(n, folds, rng);
}

FoldPartition split_folds(const Eigen::VectorXi& groups, int folds, std::uint64_t seed) {
  const Eigen::Index n = groups.size();
  if (folds < 2) throw InputError("need at least two folds");
  if (n < 2 * static_cast<Eigen::Index>(folds)) throw InputError("need at least two rows per fold");
  std::mt19937_64 rng(seed);
  for (int attempt = 0; attempt < 100; ++attempt) {
    FoldPartition p = draw_folds(n, folds, rng);
    bool ok = true;
    for (int f = 0; f < folds && ok; ++f) {
      bool has0 = false, has1 = false;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (p.assignment[static_cast<std::size_t>(i)] == f) continue;
        (groups(i) == 0 ? has0 : has1) = true;
      }
      ok = has0 && has1;
    }
    if (ok) return p;
  }
  throw InputError("could not draw folds whose complements contain both groups");
}

}  // namespace ltk
