#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "al3/dense.hpp"
#include "al3/error.hpp"
#include "al3/random.hpp"
#include "al3/vec.hpp"

namespace al3 {

struct Triplet {
  std::size_t row;
  std::size_t col;
  double value;
};

enum class ZeroPolicy { prune, keep };

/// Compressed sparse row matrix. Immutable once built.
///
/// Invariants (checked by the validating constructor):
///  - row_offsets has nrows+1 nondecreasing entries, starts at 0, ends at nnz;
///  - column indices strictly increase within a row and are < ncols.
class SparseMatrix {
 public:
  SparseMatrix() : row_offsets_(1, 0) {}

  SparseMatrix(std::size_t nrows, std::size_t ncols, std::vector<std::size_t> row_offsets,
               std::vector<std::size_t> col_indices, std::vector<double> values)
      : nrows_(nrows),
        ncols_(ncols),
        row_offsets_(std::move(row_offsets)),
        col_indices_(std::move(col_indices)),
        values_(std::move(values)) {
    validate();
  }

  static SparseMatrix zero(std::size_t nrows, std::size_t ncols) {
    return SparseMatrix(nrows, ncols, std::vector<std::size_t>(nrows + 1, 0), {}, {});
  }

  static SparseMatrix identity(std::size_t n) {
    return diagonal(Vector(n, 1.0));
  }

  static SparseMatrix diagonal(std::span<const double> d) {
    std::vector<Triplet> t;
    t.reserve(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) t.push_back({i, i, d[i]});
    return from_triplets(d.size(), d.size(), t);
  }

  static SparseMatrix from_triplets(std::size_t nrows, std::size_t ncols,
                                    std::initializer_list<Triplet> triplets,
                                    ZeroPolicy policy = ZeroPolicy::prune) {
    return from_triplets(nrows, ncols, std::span<const Triplet>(triplets.begin(), triplets.size()), policy);
  }

  /// Duplicates are summed; exact zeros are dropped unless policy == keep.
  static SparseMatrix from_triplets(std::size_t nrows, std::size_t ncols,
                                    std::span<const Triplet> triplets,
                                    ZeroPolicy policy = ZeroPolicy::prune) {
    std::vector<std::size_t> counts(nrows + 1, 0);
    for (const auto& t : triplets) {
      if (t.row >= nrows || t.col >= ncols) {
        throw InvalidInput("from_triplets: index (" + std::to_string(t.row) + "," +
                           std::to_string(t.col) + ") outside " + std::to_string(nrows) + "x" +
                           std::to_string(ncols));
      }
      ++counts[t.row + 1];
    }
    std::partial_sum(counts.begin(), counts.end(), counts.begin());
    std::vector<std::size_t> cols(triplets.size());
    std::vector<double> vals(triplets.size());
    {
      std::vector<std::size_t> fill(counts.begin(), counts.end() - 1);
      for (const auto& t : triplets) {
        const std::size_t k = fill[t.row]++;
        cols[k] = t.col;
        vals[k] = t.value;
      }
    }
    std::vector<std::size_t> offsets(nrows + 1, 0);
    std::vector<std::size_t> out_cols;
    std::vector<double> out_vals;
    out_cols.reserve(triplets.size());
    out_vals.reserve(triplets.size());
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < nrows; ++i) {
      const std::size_t b = counts[i], e = counts[i + 1];
      order.resize(e - b);
      std::iota(order.begin(), order.end(), b);
      std::sort(order.begin(), order.end(),
                [&](std::size_t x, std::size_t y) { return cols[x] < cols[y]; });
      for (std::size_t k = 0; k < order.size();) {
        const std::size_t c = cols[order[k]];
        double s = 0.0;
        while (k < order.size() && cols[order[k]] == c) s += vals[order[k++]];
        if (s != 0.0 || policy == ZeroPolicy::keep) {
          out_cols.push_back(c);
          out_vals.push_back(s);
        }
      }
      offsets[i + 1] = out_cols.size();
    }
    return SparseMatrix(nrows, ncols, std::move(offsets), std::move(out_cols), std::move(out_vals));
  }

  static SparseMatrix from_dense(const DenseMatrix& d) {
    std::vector<Triplet> t;
    for (std::size_t i = 0; i < d.rows(); ++i)
      for (std::size_t j = 0; j < d.cols(); ++j)
        if (d(i, j) != 0.0) t.push_back({i, j, d(i, j)});
    return from_triplets(d.rows(), d.cols(), t);
  }

  [[nodiscard]] std::size_t rows() const noexcept { return nrows_; }
  [[nodiscard]] std::size_t cols() const noexcept { return ncols_; }
  [[nodiscard]] std::size_t nnz() const noexcept { return values_.size(); }

  [[nodiscard]] std::span<const std::size_t> row_offsets() const noexcept { return row_offsets_; }
  [[nodiscard]] std::span<const std::size_t> col_indices() const noexcept { return col_indices_; }
  [[nodiscard]] std::span<const double> values() const noexcept { return values_; }

  [[nodiscard]] std::span<const std::size_t> row_cols(std::size_t i) const noexcept {
    return {col_indices_.data() + row_offsets_[i], row_offsets_[i + 1] - row_offsets_[i]};
  }
  [[nodiscard]] std::span<const double> row_values(std::size_t i) const noexcept {
    return {values_.data() + row_offsets_[i], row_offsets_[i + 1] - row_offsets_[i]};
  }

  /// Entry (i, j); structural zeros read as 0.
  [[nodiscard]] double at(std::size_t i, std::size_t j) const {
    const auto c = row_cols(i);
    const auto it = std::lower_bound(c.begin(), c.end(), j);
    if (it == c.end() || *it != j) return 0.0;
    return values_[row_offsets_[i] + static_cast<std::size_t>(it - c.begin())];
  }

  /// y = A x
  void multiply(std::span<const double> x, std::span<double> y) const {
    detail::require_size(x.size(), ncols_, "spmv input");
    detail::require_size(y.size(), nrows_, "spmv output");
    for (std::size_t i = 0; i < nrows_; ++i) {
      double s = 0.0;
      for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k)
        s += values_[k] * x[col_indices_[k]];
      y[i] = s;
    }
  }

  /// y += a·A x
  void multiply_add(double a, std::span<const double> x, std::span<double> y) const {
    detail::require_size(x.size(), ncols_, "spmv input");
    detail::require_size(y.size(), nrows_, "spmv output");
    for (std::size_t i = 0; i < nrows_; ++i) {
      double s = 0.0;
      for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k)
        s += values_[k] * x[col_indices_[k]];
      y[i] += a * s;
    }
  }

  /// y += a·Aᵀ x, without forming the transpose.
  void multiply_transpose_add(double a, std::span<const double> x, std::span<double> y) const {
    detail::require_size(x.size(), nrows_, "spmv^T input");
    detail::require_size(y.size(), ncols_, "spmv^T output");
    for (std::size_t i = 0; i < nrows_; ++i) {
      const double xi = a * x[i];
      if (xi == 0.0) continue;
      for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k)
        y[col_indices_[k]] += values_[k] * xi;
    }
  }

  [[nodiscard]] Vector diagonal_values() const {
    Vector d(std::min(nrows_, ncols_), 0.0);
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = at(i, i);
    return d;
  }

  [[nodiscard]] bool is_diagonal() const noexcept {
    for (std::size_t i = 0; i < nrows_; ++i)
      for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k)
        if (col_indices_[k] != i) return false;
    return true;
  }

  [[nodiscard]] double max_abs() const noexcept {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
  }

  [[nodiscard]] double frobenius_norm() const { return norm2(values_); }

  [[nodiscard]] DenseMatrix to_dense() const {
    DenseMatrix d(nrows_, ncols_);
    for (std::size_t i = 0; i < nrows_; ++i)
      for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k)
        d(i, col_indices_[k]) = values_[k];
    return d;
  }

  [[nodiscard]] std::vector<Triplet> triplets() const {
    std::vector<Triplet> t;
    t.reserve(nnz());
    for (std::size_t i = 0; i < nrows_; ++i)
      for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k)
        t.push_back({i, col_indices_[k], values_[k]});
    return t;
  }

  friend bool operator==(const SparseMatrix&, const SparseMatrix&) = default;

 private:
  void validate() const {
    if (row_offsets_.size() != nrows_ + 1) throw InvalidInput("CSR: row_offsets length != nrows+1");
    if (row_offsets_.front() != 0) throw InvalidInput("CSR: row_offsets[0] != 0");
    if (row_offsets_.back() != values_.size()) throw InvalidInput("CSR: row_offsets[nrows] != nnz");
    if (col_indices_.size() != values_.size()) throw InvalidInput("CSR: col/value length mismatch");
    for (std::size_t i = 0; i < nrows_; ++i) {
      if (row_offsets_[i + 1] < row_offsets_[i]) throw InvalidInput("CSR: row_offsets decreasing");
      for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) {
        if (col_indices_[k] >= ncols_) throw InvalidInput("CSR: column index out of range");
        if (k > row_offsets_[i] && col_indices_[k] <= col_indices_[k - 1])
          throw InvalidInput("CSR: column indices not strictly increasing in row " +
                             std::to_string(i));
      }
    }
  }

  std::size_t nrows_ = 0;
  std::size_t ncols_ = 0;
  std::vector<std::size_t> row_offsets_;
  std::vector<std::size_t> col_indices_;
  std::vector<double> values_;
};

inline Vector spmv(const SparseMatrix& a, std::span<const double> x) {
  Vector y(a.rows());
  a.multiply(x, y);
  return y;
}

inline Vector spmv_transpose(const SparseMatrix& a, std::span<const double> x) {
  Vector y(a.cols(), 0.0);
  a.multiply_transpose_add(1.0, x, y);
  return y;
}

inline SparseMatrix transpose(const SparseMatrix& a) {
  std::vector<std::size_t> offsets(a.cols() + 1, 0);
  for (std::size_t c : a.col_indices()) ++offsets[c + 1];
  std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
  std::vector<std::size_t> cols(a.nnz());
  std::vector<double> vals(a.nnz());
  std::vector<std::size_t> fill(offsets.begin(), offsets.end() - 1);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto rc = a.row_cols(i);
    const auto rv = a.row_values(i);
    for (std::size_t k = 0; k < rc.size(); ++k) {
      const std::size_t pos = fill[rc[k]]++;
      cols[pos] = i;
      vals[pos] = rv[k];
    }
  }
  return SparseMatrix(a.cols(), a.rows(), std::move(offsets), std::move(cols), std::move(vals));
}

/// sa·A + sb·B for same-shape matrices.
inline SparseMatrix add(const SparseMatrix& a, const SparseMatrix& b, double sa = 1.0,
                        double sb = 1.0) {
  detail::require(a.rows() == b.rows() && a.cols() == b.cols(), "sparse add: shape mismatch");
  std::vector<Triplet> t;
  t.reserve(a.nnz() + b.nnz());
  for (auto x : a.triplets()) t.push_back({x.row, x.col, sa * x.value});
  for (auto x : b.triplets()) t.push_back({x.row, x.col, sb * x.value});
  return SparseMatrix::from_triplets(a.rows(), a.cols(), t);
}

inline SparseMatrix scaled(const SparseMatrix& a, double s) {
  std::vector<double> v(a.values().begin(), a.values().end());
  for (double& x : v) x *= s;
  return SparseMatrix(a.rows(), a.cols(), {a.row_offsets().begin(), a.row_offsets().end()},
                      {a.col_indices().begin(), a.col_indices().end()}, std::move(v));
}

/// Entrywise absolute value.
inline SparseMatrix abs_entries(const SparseMatrix& a) {
  std::vector<double> v(a.values().begin(), a.values().end());
  for (double& x : v) x = std::abs(x);
  return SparseMatrix(a.rows(), a.cols(), {a.row_offsets().begin(), a.row_offsets().end()},
                      {a.col_indices().begin(), a.col_indices().end()}, std::move(v));
}

/// max |a_ij − a_ji| / max |a_ij|; 0 for the zero matrix, +inf if not square.
inline double symmetry_residual(const SparseMatrix& a) {
  if (a.rows() != a.cols()) return std::numeric_limits<double>::infinity();
  const double scale = a.max_abs();
  if (scale == 0.0) return 0.0;
  double worst = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto rc = a.row_cols(i);
    const auto rv = a.row_values(i);
    for (std::size_t k = 0; k < rc.size(); ++k)
      worst = std::max(worst, std::abs(rv[k] - a.at(rc[k], i)));
  }
  return worst / scale;
}

/// Largest singular value by power iteration on AᵀA from a fixed
/// pseudo-random start. This is an estimate: it stops once two successive
/// Rayleigh quotients differ by less than `tol` relatively, and it is never
/// larger than the true norm (up to rounding), approaching it from below.
inline double two_norm_est(const SparseMatrix& a, double tol, std::size_t max_iterations = 10000) {
  detail::require(tol > 0.0, "two_norm_est: tol must be positive");
  if (a.nnz() == 0 || a.cols() == 0) return 0.0;
  CounterRng rng(0x5eed, a.cols());
  Vector x = rng.uniform_vector(a.cols(), 0.5, 1.5);
  scale(1.0 / norm2(x), x);
  Vector ax(a.rows());
  double sigma_prev = 0.0;
  for (std::size_t it = 0; it < max_iterations; ++it) {
    a.multiply(x, ax);
    const double sigma = norm2(ax);
    if (sigma == 0.0) {
      // start vector in the null space: restart from another direction
      x = rng.uniform_vector(a.cols());
      scale(1.0 / norm2(x), x);
      continue;
    }
    Vector y(a.cols(), 0.0);
    a.multiply_transpose_add(1.0, ax, y);
    const double ny = norm2(y);
    if (ny == 0.0) return sigma;
    scale(1.0 / ny, y);
    x = std::move(y);
    if (it > 0 && std::abs(sigma - sigma_prev) <= tol * sigma) return sigma;
    sigma_prev = sigma;
  }
  return sigma_prev;
}

}  // namespace al3
