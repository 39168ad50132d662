#include "loopless/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numbers>
#include <sstream>
#include <string_view>

#include "loopless/errors.hpp"
#include "loopless/rng.hpp"

namespace loopless {

double SparseRow::dot(const Vector& x) const {
  double acc = 0.0;
  for (std::size_t k = 0; k < indices.size(); ++k) acc += values[k] * x[static_cast<Eigen::Index>(indices[k])];
  return acc;
}

double SparseRow::squared_norm() const {
  double acc = 0.0;
  for (double v : values) acc += v * v;
  return acc;
}

void SparseRow::axpy(double scale, Vector& out) const {
  for (std::size_t k = 0; k < indices.size(); ++k)
    out[static_cast<Eigen::Index>(indices[k])] += scale * values[k];
}

Dataset::Dataset(std::vector<SparseRow> rows, std::vector<double> labels, std::size_t dim)
    : rows_(std::move(rows)), labels_(std::move(labels)), dim_(dim) {
  if (rows_.empty()) throw DataError("dataset: no samples");
  if (rows_.size() != labels_.size()) throw DataError("dataset: row and label counts differ");
  if (dim_ == 0) throw DataError("dataset: dimension must be at least 1");
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    const auto& r = rows_[i];
    if (labels_[i] != 1.0 && labels_[i] != -1.0)
      throw DataError("dataset: label of row " + std::to_string(i) + " is not +-1");
    if (r.indices.size() != r.values.size())
      throw DataError("dataset: row " + std::to_string(i) + " has mismatched index/value lengths");
    for (std::size_t k = 0; k < r.indices.size(); ++k) {
      if (r.indices[k] >= dim_)
        throw DataError("dataset: row " + std::to_string(i) + " index exceeds dimension");
      if (k > 0 && r.indices[k] <= r.indices[k - 1])
        throw DataError("dataset: row " + std::to_string(i) + " indices not strictly increasing");
      if (r.values[k] == 0.0 || !std::isfinite(r.values[k]))
        throw DataError("dataset: row " + std::to_string(i) + " stores a zero or non-finite value");
    }
  }
}

double Dataset::max_row_squared_norm() const {
  double best = 0.0;
  for (const auto& r : rows_) best = std::max(best, r.squared_norm());
  return best;
}

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

bool parse_real(std::string_view token, double& out) {
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  if (token.empty()) return false;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), out);
  return ec == std::errc{} && ptr == token.data() + token.size() && std::isfinite(out);
}

bool parse_index(std::string_view token, std::size_t& out) {
  if (token.empty()) return false;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), out);
  return ec == std::errc{} && ptr == token.data() + token.size();
}

}  // namespace

Dataset parse_libsvm(std::istream& in, const ParseOptions& options) {
  std::vector<SparseRow> rows;
  std::vector<double> raw_labels;
  std::map<double, std::size_t> distinct;  // raw label -> first line seen
  std::size_t max_index = 0;               // 1-based; 0 means no features seen
  std::size_t line_no = 0;

  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = trim(view);
    if (view.empty()) continue;

    std::vector<std::string_view> tokens;
    while (!view.empty()) {
      const auto end = view.find_first_of(" \t");
      tokens.push_back(view.substr(0, end));
      if (end == std::string_view::npos) break;
      view = trim(view.substr(end));
    }

    double label = 0.0;
    if (!parse_real(tokens.front(), label))
      throw ParseError(line_no, "malformed label '" + std::string(tokens.front()) + "'");
    if (distinct.emplace(label, line_no).second && distinct.size() > 2)
      throw ParseError(line_no, "more than two distinct labels");

    SparseRow row;
    std::size_t previous = 0;
    for (std::size_t t = 1; t < tokens.size(); ++t) {
      const auto token = tokens[t];
      const auto colon = token.find(':');
      if (colon == std::string_view::npos)
        throw ParseError(line_no, "malformed token '" + std::string(token) + "', expected idx:val");
      std::size_t index = 0;
      if (!parse_index(token.substr(0, colon), index) || index == 0)
        throw ParseError(line_no, "malformed feature index in '" + std::string(token) + "'");
      double value = 0.0;
      if (!parse_real(token.substr(colon + 1), value))
        throw ParseError(line_no, "non-numeric value in '" + std::string(token) + "'");
      if (index <= previous)
        throw ParseError(line_no, "feature indices not strictly increasing at '" + std::string(token) + "'");
      previous = index;
      max_index = std::max(max_index, index);
      if (value == 0.0) continue;
      row.indices.push_back(index - 1);
      row.values.push_back(value);
    }
    rows.push_back(std::move(row));
    raw_labels.push_back(label);
  }

  if (rows.empty()) throw ParseError(line_no, "empty dataset");

  std::size_t dim = std::max<std::size_t>(max_index, 1);
  if (options.dim) {
    if (*options.dim < max_index)
      throw ParseError(0, "dimension override " + std::to_string(*options.dim) +
                              " is smaller than the largest index " + std::to_string(max_index));
    dim = *options.dim;
  }

  std::vector<double> labels(raw_labels.size());
  const double low = distinct.begin()->first;
  for (std::size_t i = 0; i < raw_labels.size(); ++i) {
    if (distinct.size() == 2)
      labels[i] = raw_labels[i] == low ? -1.0 : 1.0;
    else
      labels[i] = raw_labels[i] > 0.0 ? 1.0 : -1.0;
  }
  return Dataset(std::move(rows), std::move(labels), dim);
}

Dataset parse_libsvm(const std::string& text, const ParseOptions& options) {
  std::istringstream in(text);
  return parse_libsvm(in, options);
}

Dataset load_libsvm(const std::filesystem::path& path, const ParseOptions& options) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset file '" + path.string() + "'");
  return parse_libsvm(in, options);
}

namespace {

void append_real(std::string& out, double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, ptr);
}

}  // namespace

std::string write_libsvm(const Dataset& data) {
  std::string out;
  for (std::size_t i = 0; i < data.n(); ++i) {
    out += data.label(i) > 0 ? "+1" : "-1";
    const auto& r = data.row(i);
    for (std::size_t k = 0; k < r.nnz(); ++k) {
      out += ' ';
      out += std::to_string(r.indices[k] + 1);
      out += ':';
      append_real(out, r.values[k]);
    }
    out += '\n';
  }
  return out;
}

Dataset normalize_rows(const Dataset& data) {
  std::vector<SparseRow> rows = data.rows();
  for (auto& r : rows) {
    const double norm = std::sqrt(r.squared_norm());
    if (norm == 0.0) continue;
    for (auto& v : r.values) v /= norm;
  }
  return Dataset(std::move(rows), data.labels(), data.dim());
}

Dataset head(const Dataset& data, std::size_t count) {
  count = std::min(count, data.n());
  std::vector<SparseRow> rows(data.rows().begin(), data.rows().begin() + static_cast<std::ptrdiff_t>(count));
  std::vector<double> labels(data.labels().begin(), data.labels().begin() + static_cast<std::ptrdiff_t>(count));
  return Dataset(std::move(rows), std::move(labels), data.dim());
}

namespace {

// Box-Muller on the project generator, so draws are platform independent.
double standard_normal(Rng& rng) {
  double u1 = 0.0;
  while (u1 == 0.0) u1 = rng.uniform01();
  const double u2 = rng.uniform01();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace

SyntheticQuadratic synthesize_quadratic(std::size_t n, std::size_t d, double condition_number,
                                        std::uint64_t seed) {
  if (n == 0 || d == 0) throw DataError("synthesize_quadratic: n and d must be positive");
  if (!(condition_number >= 1.0) || !std::isfinite(condition_number))
    throw DataError("synthesize_quadratic: condition number must be >= 1");

  Rng rng(seed);
  std::vector<double> scale(d, 1.0);
  for (std::size_t j = 1; j < d; ++j)
    scale[j] = std::pow(condition_number, -static_cast<double>(j) / static_cast<double>(d - 1));

  std::vector<SparseRow> rows;
  std::vector<double> labels;
  rows.reserve(n);
  labels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> dense(d);
    double norm_sq = 0.0;
    while (norm_sq == 0.0) {
      for (std::size_t j = 0; j < d; ++j) dense[j] = scale[j] * standard_normal(rng);
      norm_sq = 0.0;
      for (double v : dense) norm_sq += v * v;
    }
    const double norm = std::sqrt(norm_sq);
    SparseRow row;
    for (std::size_t j = 0; j < d; ++j) {
      const double v = dense[j] / norm;
      if (v == 0.0) continue;
      row.indices.push_back(j);
      row.values.push_back(v);
    }
    rows.push_back(std::move(row));
    labels.push_back(rng.bernoulli(0.5) ? 1.0 : -1.0);
  }

  const double mu = 1.0 / condition_number;
  Eigen::MatrixXd hessian = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d)) * mu;
  Vector rhs = Vector::Zero(static_cast<Eigen::Index>(d));
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = rows[i];
    for (std::size_t a = 0; a < r.nnz(); ++a) {
      const auto ia = static_cast<Eigen::Index>(r.indices[a]);
      rhs[ia] += inv_n * labels[i] * r.values[a];
      for (std::size_t b = 0; b < r.nnz(); ++b)
        hessian(ia, static_cast<Eigen::Index>(r.indices[b])) += inv_n * r.values[a] * r.values[b];
    }
  }
  Vector minimizer = hessian.ldlt().solve(rhs);
  return SyntheticQuadratic{Dataset(std::move(rows), std::move(labels), d), mu, std::move(minimizer)};
}

}  // namespace loopless
