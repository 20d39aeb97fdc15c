#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dfs {

/// Thrown when vector lengths, grid shapes or index ranges disagree.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Neumaier-compensated running sum. Supports removal by adding a negated value.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v))
      comp_ += (sum_ - t) + v;
    else
      comp_ += (v - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }
  void reset(double v = 0.0) {
    sum_ = v;
    comp_ = 0.0;
  }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

struct SparseEntry {
  std::uint32_t column;
  double value;

  friend bool operator==(const SparseEntry&, const SparseEntry&) = default;
};

/// One constraint row d^i. Columns strictly increasing, no stored zeros.
class SparseRow {
 public:
  SparseRow() = default;

  /// Entries must be sorted by strictly increasing column. Zero coefficients are dropped.
  explicit SparseRow(std::vector<SparseEntry> entries);

  /// Accepts entries in any order; duplicate columns are summed.
  static SparseRow from_unsorted(std::vector<SparseEntry> entries);

  std::span<const SparseEntry> entries() const { return entries_; }
  std::size_t nnz() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  double squared_norm() const;
  double dot(std::span<const double> x) const;

  friend bool operator==(const SparseRow&, const SparseRow&) = default;

 private:
  std::vector<SparseEntry> entries_;
};

/// Dense image with row-major indexing j = row * width + col.
class ImageVector {
 public:
  ImageVector() = default;
  ImageVector(std::size_t width, std::size_t height, double fill = 0.0);
  ImageVector(std::size_t width, std::size_t height, std::vector<double> values);

  /// A 1-row image of length n, for systems without a natural grid.
  static ImageVector flat(std::vector<double> values);

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  std::size_t size() const { return values_.size(); }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  double& operator[](std::size_t j) { return values_[j]; }
  double operator[](std::size_t j) const { return values_[j]; }

  bool all_finite() const;

  friend bool operator==(const ImageVector&, const ImageVector&) = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<double> values_;
};

enum class ZeroRowPolicy { reject, drop };

/// The linear system <d^i, x> = h_i, i = 0..I-1, with a column-major mirror.
///
/// Rows are immutable after construction. Each row remembers the index it had
/// in the candidate list passed to build_system, so orderings defined over the
/// candidate list can skip dropped rows.
class ConstraintSystem {
 public:
  struct ColumnEntry {
    std::uint32_t row;
    double value;
  };

  std::size_t dimension() const { return dimension_; }
  std::size_t row_count() const { return rows_.size(); }
  std::size_t nnz() const { return column_entries_.size(); }
  std::size_t dropped_rows() const { return dropped_; }
  std::size_t candidate_count() const { return candidate_count_; }

  const SparseRow& row(std::size_t i) const { return rows_[i]; }
  double rhs(std::size_t i) const { return rhs_[i]; }
  std::span<const double> rhs() const { return rhs_; }
  double row_squared_norm(std::size_t i) const { return row_norms_sq_[i]; }
  std::size_t source_index(std::size_t i) const { return source_index_[i]; }

  /// All (row, coefficient) pairs with a nonzero in column j, rows ascending.
  std::span<const ColumnEntry> column(std::size_t j) const {
    return {column_entries_.data() + column_start_[j],
            column_entries_.data() + column_start_[j + 1]};
  }

 private:
  friend ConstraintSystem build_system(std::vector<SparseRow>, std::vector<double>,
                                       std::size_t, ZeroRowPolicy);

  std::size_t dimension_ = 0;
  std::size_t dropped_ = 0;
  std::size_t candidate_count_ = 0;
  std::vector<SparseRow> rows_;
  std::vector<double> rhs_;
  std::vector<double> row_norms_sq_;
  std::vector<std::size_t> source_index_;
  std::vector<std::size_t> column_start_;
  std::vector<ColumnEntry> column_entries_;
};

ConstraintSystem build_system(std::vector<SparseRow> rows, std::vector<double> rhs,
                              std::size_t dimension,
                              ZeroRowPolicy policy = ZeroRowPolicy::drop);

/// Sum of squared residuals, accumulated with compensated summation.
double proximity(const ConstraintSystem& system, std::span<const double> x);
inline double proximity(const ConstraintSystem& system, const ImageVector& x) {
  return proximity(system, x.values());
}

std::vector<double> residuals(const ConstraintSystem& system, std::span<const double> x);
inline std::vector<double> residuals(const ConstraintSystem& system, const ImageVector& x) {
  return residuals(system, x.values());
}

/// Text format: header `J I candidates`, then one line per row
/// `source_index nnz (j:value)* h_i`.
/// Values are written with round-trip precision.
void write_system(std::ostream& out, const ConstraintSystem& system);
ConstraintSystem read_system(std::istream& in);

}  // namespace dfs
