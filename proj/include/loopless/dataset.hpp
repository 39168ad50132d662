#ifndef LOOPLESS_DATASET_HPP
#define LOOPLESS_DATASET_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace loopless {

using Vector = Eigen::VectorXd;

/// One sparse sample a_i. Indices are 0-based and strictly increasing; no
/// stored value is zero.
struct SparseRow {
  std::vector<std::size_t> indices;
  std::vector<double> values;

  std::size_t nnz() const noexcept { return indices.size(); }
  double dot(const Vector& x) const;
  double squared_norm() const;
  /// out += scale * row
  void axpy(double scale, Vector& out) const;

  friend bool operator==(const SparseRow&, const SparseRow&) = default;
};

/// Immutable labelled design matrix: n rows a_i with labels b_i in {-1, +1}.
class Dataset {
 public:
  /// Validates every invariant and throws DataError on violation.
  Dataset(std::vector<SparseRow> rows, std::vector<double> labels, std::size_t dim);

  std::size_t n() const noexcept { return rows_.size(); }
  std::size_t dim() const noexcept { return dim_; }
  const SparseRow& row(std::size_t i) const { return rows_[i]; }
  double label(std::size_t i) const { return labels_[i]; }
  const std::vector<SparseRow>& rows() const noexcept { return rows_; }
  const std::vector<double>& labels() const noexcept { return labels_; }

  /// Largest ||a_i||^2 over all rows.
  double max_row_squared_norm() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  std::vector<SparseRow> rows_;
  std::vector<double> labels_;
  std::size_t dim_;
};

struct ParseOptions {
  /// Pad the inferred dimension up to this value. Smaller than the inferred
  /// dimension is an error.
  std::optional<std::size_t> dim;
};

/// Reads "label idx:val idx:val ..." lines with 1-based indices. Blank lines
/// and '#' comments are skipped; CRLF is accepted. Two distinct raw labels are
/// mapped smaller -> -1, larger -> +1. A file with a single raw label maps it
/// to +1 when positive and -1 otherwise. Explicit zero values are dropped.
Dataset parse_libsvm(std::istream& in, const ParseOptions& options = {});
Dataset parse_libsvm(const std::string& text, const ParseOptions& options = {});
Dataset load_libsvm(const std::filesystem::path& path, const ParseOptions& options = {});

/// Inverse of parse_libsvm for datasets whose dimension equals the largest
/// used index + 1. Values use shortest round-trip formatting.
std::string write_libsvm(const Dataset& data);

/// Copy of `data` with every nonzero row scaled to unit Euclidean norm.
Dataset normalize_rows(const Dataset& data);

/// First `count` rows of `data` (dimension preserved).
Dataset head(const Dataset& data, std::size_t count);

/// Synthetic ridge instance together with its regulariser and exact minimiser.
struct SyntheticQuadratic {
  Dataset data;
  double mu;
  Vector minimizer;
};

/// Generates n unit-norm dense rows whose feature scales decay geometrically
/// from 1 to 1/condition_number, with random +-1 labels, and pairs them with
/// mu = 1/condition_number. The ridge oracle then has L/mu = condition_number
/// + 1 and a Hessian whose smallest eigenvalue is within a few percent of mu.
/// The minimiser solves ((1/n) A^T A + mu I) x = (1/n) A^T b exactly.
SyntheticQuadratic synthesize_quadratic(std::size_t n, std::size_t d, double condition_number,
                                        std::uint64_t seed);

}  // namespace loopless

#endif
