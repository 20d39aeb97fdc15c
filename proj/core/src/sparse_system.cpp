#include "dfs/sparse_system.hpp"

#include <algorithm>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ostream.h>

namespace dfs {

SparseRow::SparseRow(std::vector<SparseEntry> entries) {
  entries_.reserve(entries.size());
  for (std::size_t k = 0; k < entries.size(); ++k) {
    if (k > 0 && entries[k].column <= entries[k - 1].column)
      throw std::invalid_argument("SparseRow: column indices must be strictly increasing");
    if (!std::isfinite(entries[k].value))
      throw std::invalid_argument("SparseRow: non-finite coefficient");
    if (entries[k].value != 0.0) entries_.push_back(entries[k]);
  }
}

SparseRow SparseRow::from_unsorted(std::vector<SparseEntry> entries) {
  std::sort(entries.begin(), entries.end(),
            [](const SparseEntry& a, const SparseEntry& b) { return a.column < b.column; });
  std::vector<SparseEntry> merged;
  merged.reserve(entries.size());
  for (const auto& e : entries) {
    if (!merged.empty() && merged.back().column == e.column)
      merged.back().value += e.value;
    else
      merged.push_back(e);
  }
  return SparseRow(std::move(merged));
}

double SparseRow::squared_norm() const {
  double s = 0.0;
  for (const auto& e : entries_) s += e.value * e.value;
  return s;
}

double SparseRow::dot(std::span<const double> x) const {
  double s = 0.0;
  for (const auto& e : entries_) s += e.value * x[e.column];
  return s;
}

ImageVector::ImageVector(std::size_t width, std::size_t height, double fill)
    : width_(width), height_(height), values_(width * height, fill) {
  if (width == 0 || height == 0) throw DimensionError("ImageVector: empty grid");
}

ImageVector::ImageVector(std::size_t width, std::size_t height, std::vector<double> values)
    : width_(width), height_(height), values_(std::move(values)) {
  if (width == 0 || height == 0) throw DimensionError("ImageVector: empty grid");
  if (values_.size() != width * height)
    throw DimensionError(fmt::format("ImageVector: {} values for a {}x{} grid",
                                     values_.size(), width, height));
}

ImageVector ImageVector::flat(std::vector<double> values) {
  const std::size_t n = values.size();
  return ImageVector(n, 1, std::move(values));
}

bool ImageVector::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

ConstraintSystem build_system(std::vector<SparseRow> rows, std::vector<double> rhs,
                              std::size_t dimension, ZeroRowPolicy policy) {
  if (dimension == 0) throw DimensionError("build_system: dimension must be positive");
  if (rows.size() != rhs.size())
    throw DimensionError(
        fmt::format("build_system: {} rows but {} right-hand sides", rows.size(), rhs.size()));
  if (dimension > std::numeric_limits<std::uint32_t>::max())
    throw DimensionError("build_system: dimension exceeds 32-bit column range");

  ConstraintSystem sys;
  sys.dimension_ = dimension;
  sys.candidate_count_ = rows.size();
  sys.rows_.reserve(rows.size());
  sys.rhs_.reserve(rows.size());

  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (const auto& e : rows[i].entries())
      if (e.column >= dimension)
        throw DimensionError(
            fmt::format("build_system: row {} references column {} >= J={}", i, e.column, dimension));
    const double norm_sq = rows[i].squared_norm();
    if (!(norm_sq > 0.0)) {
      if (policy == ZeroRowPolicy::reject)
        throw std::invalid_argument(fmt::format("build_system: row {} has zero norm", i));
      ++sys.dropped_;
      continue;
    }
    if (!std::isfinite(rhs[i]))
      throw std::invalid_argument(fmt::format("build_system: non-finite rhs in row {}", i));
    sys.rows_.push_back(std::move(rows[i]));
    sys.rhs_.push_back(rhs[i]);
    sys.row_norms_sq_.push_back(norm_sq);
    sys.source_index_.push_back(i);
  }
  if (sys.rows_.empty()) throw std::invalid_argument("build_system: no nonzero rows");

  // Column-major mirror via counting sort; rows come out ascending per column.
  sys.column_start_.assign(dimension + 1, 0);
  for (const auto& row : sys.rows_)
    for (const auto& e : row.entries()) ++sys.column_start_[e.column + 1];
  for (std::size_t j = 0; j < dimension; ++j) sys.column_start_[j + 1] += sys.column_start_[j];
  sys.column_entries_.resize(sys.column_start_.back());
  std::vector<std::size_t> cursor(sys.column_start_.begin(), sys.column_start_.end() - 1);
  for (std::size_t i = 0; i < sys.rows_.size(); ++i)
    for (const auto& e : sys.rows_[i].entries())
      sys.column_entries_[cursor[e.column]++] = {static_cast<std::uint32_t>(i), e.value};

  return sys;
}

namespace {

void check_length(const ConstraintSystem& system, std::span<const double> x, const char* what) {
  if (x.size() != system.dimension())
    throw DimensionError(
        fmt::format("{}: vector has length {}, system has J={}", what, x.size(), system.dimension()));
}

}  // namespace

double proximity(const ConstraintSystem& system, std::span<const double> x) {
  check_length(system, x, "proximity");
  CompensatedSum sum;
  for (std::size_t i = 0; i < system.row_count(); ++i) {
    const double r = system.row(i).dot(x) - system.rhs(i);
    sum.add(r * r);
  }
  return sum.value();
}

std::vector<double> residuals(const ConstraintSystem& system, std::span<const double> x) {
  check_length(system, x, "residuals");
  std::vector<double> r(system.row_count());
  for (std::size_t i = 0; i < system.row_count(); ++i) r[i] = system.row(i).dot(x) - system.rhs(i);
  return r;
}

void write_system(std::ostream& out, const ConstraintSystem& system) {
  fmt::print(out, "{} {} {}\n", system.dimension(), system.row_count(), system.candidate_count());
  fmt::memory_buffer line;
  for (std::size_t i = 0; i < system.row_count(); ++i) {
    line.clear();
    const auto& row = system.row(i);
    fmt::format_to(std::back_inserter(line), "{} {}", system.source_index(i), row.nnz());
    for (const auto& e : row.entries())
      fmt::format_to(std::back_inserter(line), " {}:{}", e.column, e.value);
    fmt::format_to(std::back_inserter(line), " {}\n", system.rhs(i));
    out.write(line.data(), static_cast<std::streamsize>(line.size()));
  }
}

ConstraintSystem read_system(std::istream& in) {
  std::size_t dimension = 0, count = 0, candidates = 0;
  if (!(in >> dimension >> count >> candidates))
    throw std::runtime_error("read_system: missing `J I candidates` header");
  if (count > candidates) throw std::runtime_error("read_system: more rows than candidates");

  std::vector<std::pair<std::size_t, SparseRow>> parsed;
  std::vector<double> parsed_rhs;
  parsed.reserve(count);
  parsed_rhs.reserve(count);
  std::vector<SparseEntry> entries;
  for (std::size_t r = 0; r < count; ++r) {
    std::size_t index = 0, nnz = 0;
    if (!(in >> index >> nnz))
      throw std::runtime_error(fmt::format("read_system: truncated at row {}", r));
    if ((!parsed.empty() && index <= parsed.back().first) || index >= candidates)
      throw std::runtime_error(fmt::format("read_system: row index {} out of order", index));
    entries.clear();
    for (std::size_t k = 0; k < nnz; ++k) {
      std::uint32_t column = 0;
      char colon = 0;
      double value = 0.0;
      if (!(in >> column >> colon >> value) || colon != ':')
        throw std::runtime_error(fmt::format("read_system: bad entry in row {}", index));
      entries.push_back({column, value});
    }
    double h = 0.0;
    if (!(in >> h)) throw std::runtime_error(fmt::format("read_system: missing rhs in row {}", index));
    parsed.emplace_back(index, SparseRow(entries));
    parsed_rhs.push_back(h);
  }

  // Re-expand to the candidate list so source indices and dropped rows survive.
  std::vector<SparseRow> rows(candidates);
  std::vector<double> rhs(candidates, 0.0);
  for (std::size_t r = 0; r < parsed.size(); ++r) {
    rows[parsed[r].first] = std::move(parsed[r].second);
    rhs[parsed[r].first] = parsed_rhs[r];
  }
  return build_system(std::move(rows), std::move(rhs), dimension, ZeroRowPolicy::drop);
}

}  // namespace dfs
