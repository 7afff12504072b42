#pragma once

// Threshold incomplete Cholesky (column-oriented, left-looking) and the
// triangular solves that apply it.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "al3/error.hpp"
#include "al3/sparse.hpp"

namespace al3 {

enum class TriangularMode { lower, upper };

/// L with L Lᵀ ≈ A: lower triangular, diagonal stored last in every row,
/// every diagonal entry positive.
class LowerTriangularFactor {
 public:
  LowerTriangularFactor() = default;
  explicit LowerTriangularFactor(SparseMatrix l, double shift = 0.0)
      : l_(std::move(l)), shift_(shift) {
    detail::require(l_.rows() == l_.cols(), "LowerTriangularFactor: not square");
    for (std::size_t i = 0; i < l_.rows(); ++i) {
      const auto rc = l_.row_cols(i);
      if (rc.empty() || rc.back() != i)
        throw FactorizationError(i, "LowerTriangularFactor: missing diagonal or upper entry");
      if (!(l_.row_values(i).back() > 0.0))
        throw FactorizationError(i, "LowerTriangularFactor: nonpositive diagonal");
    }
  }

  [[nodiscard]] const SparseMatrix& matrix() const noexcept { return l_; }
  [[nodiscard]] std::size_t size() const noexcept { return l_.rows(); }
  [[nodiscard]] std::size_t nnz() const noexcept { return l_.nnz(); }
  /// σ of the diagonal shift A + σ·diag(A) that was needed, 0 when none.
  [[nodiscard]] double shift() const noexcept { return shift_; }

 private:
  SparseMatrix l_;
  double shift_ = 0.0;
};

/// mode = lower: solves L y = r. mode = upper: solves Lᵀ y = r.
inline void tri_solve_in_place(const LowerTriangularFactor& f, std::span<double> x,
                               TriangularMode mode) {
  const SparseMatrix& l = f.matrix();
  detail::require_size(x.size(), l.rows(), "tri_solve");
  const std::size_t n = l.rows();
  if (mode == TriangularMode::lower) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto rc = l.row_cols(i);
      const auto rv = l.row_values(i);
      double s = x[i];
      for (std::size_t k = 0; k + 1 < rc.size(); ++k) s -= rv[k] * x[rc[k]];
      const double d = rv.back();
      if (d == 0.0) throw FactorizationError(i, "tri_solve: zero diagonal");
      x[i] = s / d;
    }
  } else {
    for (std::size_t i = n; i-- > 0;) {
      const auto rc = l.row_cols(i);
      const auto rv = l.row_values(i);
      const double d = rv.back();
      if (d == 0.0) throw FactorizationError(i, "tri_solve: zero diagonal");
      const double xi = x[i] / d;
      x[i] = xi;
      for (std::size_t k = 0; k + 1 < rc.size(); ++k) x[rc[k]] -= rv[k] * xi;
    }
  }
}

inline Vector tri_solve(const LowerTriangularFactor& f, std::span<const double> r,
                        TriangularMode mode) {
  Vector x(r.begin(), r.end());
  tri_solve_in_place(f, x, mode);
  return x;
}

/// (L Lᵀ)⁻¹ r
inline void ic_apply_in_place(const LowerTriangularFactor& f, std::span<double> x) {
  tri_solve_in_place(f, x, TriangularMode::lower);
  tri_solve_in_place(f, x, TriangularMode::upper);
}

/// Threshold incomplete Cholesky.
///
/// Column j of L is computed left-looking from the already finished columns;
/// an off-diagonal candidate l_ij is kept iff |l_ij| > droptol·‖A(:, j)‖₂.
/// droptol = 0 keeps every nonzero, giving the complete factor.
/// Throws FactorizationError naming the row of a nonpositive pivot.
inline LowerTriangularFactor ic_threshold(const SparseMatrix& a, double droptol) {
  detail::require(a.rows() == a.cols(), "ic_threshold: matrix not square");
  detail::require(droptol >= 0.0, "ic_threshold: droptol must be nonnegative");
  if (symmetry_residual(a) > 1e-12) throw InvalidInput("ic_threshold: matrix not symmetric");
  const std::size_t n = a.rows();

  Vector col_norm(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) col_norm[i] = norm2(a.row_values(i));  // symmetric: row = column

  // column storage of L, rows ascending, diagonal first
  std::vector<std::vector<std::size_t>> lrow(n);
  std::vector<std::vector<double>> lval(n);
  // next[k]: position in column k of the first entry whose row is >= current column
  std::vector<std::size_t> next(n, 0);
  // row_list[i]: columns k < i whose next entry lies in row i
  std::vector<std::vector<std::size_t>> row_list(n);

  Vector work(n, 0.0);
  std::vector<char> occupied(n, 0);
  std::vector<std::size_t> pattern;

  for (std::size_t j = 0; j < n; ++j) {
    pattern.clear();
    const auto rc = a.row_cols(j);
    const auto rv = a.row_values(j);
    for (std::size_t k = 0; k < rc.size(); ++k) {
      const std::size_t i = rc[k];
      if (i < j) continue;
      work[i] = rv[k];
      if (!occupied[i]) {
        occupied[i] = 1;
        pattern.push_back(i);
      }
    }
    if (!occupied[j]) {
      occupied[j] = 1;
      work[j] = 0.0;
      pattern.push_back(j);
    }

    std::vector<std::size_t> contributing;
    contributing.swap(row_list[j]);
    for (std::size_t k : contributing) {
      const std::size_t pos = next[k];
      const double ljk = lval[k][pos];
      for (std::size_t q = pos; q < lrow[k].size(); ++q) {
        const std::size_t i = lrow[k][q];
        work[i] -= lval[k][q] * ljk;
        if (!occupied[i]) {
          occupied[i] = 1;
          pattern.push_back(i);
        }
      }
      next[k] = pos + 1;
      if (next[k] < lrow[k].size()) row_list[lrow[k][next[k]]].push_back(k);
    }

    const double pivot = work[j];
    if (!(pivot > 0.0) || !std::isfinite(pivot)) {
      for (std::size_t i : pattern) {
        occupied[i] = 0;
        work[i] = 0.0;
      }
      throw FactorizationError(j, "ic_threshold: nonpositive pivot");
    }
    const double ljj = std::sqrt(pivot);
    const double keep = droptol * col_norm[j];

    std::sort(pattern.begin(), pattern.end());
    auto& cr = lrow[j];
    auto& cv = lval[j];
    cr.push_back(j);
    cv.push_back(ljj);
    for (std::size_t i : pattern) {
      if (i != j) {
        const double lij = work[i] / ljj;
        if (lij != 0.0 && std::abs(lij) > keep) {
          cr.push_back(i);
          cv.push_back(lij);
        }
      }
      occupied[i] = 0;
      work[i] = 0.0;
    }
    next[j] = 1;
    if (cr.size() > 1) row_list[cr[1]].push_back(j);
  }

  // columns of L -> CSR of L (rows ascending, diagonal last)
  std::vector<std::size_t> offsets(n + 1, 0);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i : lrow[j]) ++offsets[i + 1];
  for (std::size_t i = 0; i < n; ++i) offsets[i + 1] += offsets[i];
  std::vector<std::size_t> cols(offsets[n]);
  std::vector<double> vals(offsets[n]);
  std::vector<std::size_t> fill(offsets.begin(), offsets.end() - 1);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t q = 0; q < lrow[j].size(); ++q) {
      const std::size_t pos = fill[lrow[j][q]]++;
      cols[pos] = j;
      vals[pos] = lval[j][q];
    }
  }
  return LowerTriangularFactor(SparseMatrix(n, n, std::move(offsets), std::move(cols), std::move(vals)));
}

/// ic_threshold with the breakdown remedy: on a nonpositive pivot the whole
/// factorization is retried on A + σ·diag(A), σ = 1e-3, 2e-3, 4e-3, ...
/// (at most 10 retries). Rethrows the last breakdown if all retries fail.
inline LowerTriangularFactor ic_with_shift_retry(const SparseMatrix& a, double droptol,
                                                 int max_retries = 10, double sigma0 = 1e-3) {
  try {
    return ic_threshold(a, droptol);
  } catch (const FactorizationError&) {
    if (max_retries <= 0) throw;
  }
  const SparseMatrix diag = SparseMatrix::diagonal(a.diagonal_values());
  double sigma = sigma0;
  for (int r = 1;; ++r, sigma *= 2.0) {
    try {
      auto f = ic_threshold(add(a, diag, 1.0, sigma), droptol);
      return LowerTriangularFactor(f.matrix(), sigma);
    } catch (const FactorizationError&) {
      if (r >= max_retries) throw;
    }
  }
}

/// Reverse Cuthill-McKee ordering of the symmetric pattern of A:
/// perm[new] = old. Not applied by any factorization unless the caller
/// permutes explicitly with permute_symmetric.
inline std::vector<std::size_t> reverse_cuthill_mckee(const SparseMatrix& a) {
  detail::require(a.rows() == a.cols(), "reverse_cuthill_mckee: matrix not square");
  const std::size_t n = a.rows();
  std::vector<std::size_t> degree(n);
  for (std::size_t i = 0; i < n; ++i) degree[i] = a.row_cols(i).size();
  std::vector<char> seen(n, 0);
  std::vector<std::size_t> order;
  order.reserve(n);
  std::vector<std::size_t> by_degree(n);
  std::iota(by_degree.begin(), by_degree.end(), 0);
  std::stable_sort(by_degree.begin(), by_degree.end(),
                   [&](std::size_t x, std::size_t y) { return degree[x] < degree[y]; });
  std::vector<std::size_t> nbrs;
  for (std::size_t start : by_degree) {
    if (seen[start]) continue;
    std::deque<std::size_t> queue{start};
    seen[start] = 1;
    while (!queue.empty()) {
      const std::size_t v = queue.front();
      queue.pop_front();
      order.push_back(v);
      nbrs.clear();
      for (std::size_t w : a.row_cols(v))
        if (!seen[w]) {
          seen[w] = 1;
          nbrs.push_back(w);
        }
      std::stable_sort(nbrs.begin(), nbrs.end(),
                       [&](std::size_t x, std::size_t y) { return degree[x] < degree[y]; });
      queue.insert(queue.end(), nbrs.begin(), nbrs.end());
    }
  }
  std::reverse(order.begin(), order.end());
  return order;
}

/// P A Pᵀ for perm[new] = old.
inline SparseMatrix permute_symmetric(const SparseMatrix& a, std::span<const std::size_t> perm) {
  detail::require_size(perm.size(), a.rows(), "permute_symmetric");
  std::vector<std::size_t> inv(perm.size());
  for (std::size_t k = 0; k < perm.size(); ++k) inv[perm[k]] = k;
  std::vector<Triplet> t;
  t.reserve(a.nnz());
  for (const auto& x : a.triplets()) t.push_back({inv[x.row], inv[x.col], x.value});
  return SparseMatrix::from_triplets(a.rows(), a.cols(), t, ZeroPolicy::keep);
}

}  // namespace al3
