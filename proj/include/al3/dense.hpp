#pragma once

// Dense row-major matrices and the direct kernels used as oracles:
// Cholesky, partial-pivoting LU, symmetric eigenvalues (Householder
// tridiagonalization + implicit QL) and general eigenvalues (Householder
// Hessenberg reduction + Francis double-shift QR).

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "al3/error.hpp"
#include "al3/vec.hpp"

namespace al3 {

class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t nrows, std::size_t ncols, double fill = 0.0)
      : nrows_(nrows), ncols_(ncols), values_(nrows * ncols, fill) {}
  DenseMatrix(std::size_t nrows, std::size_t ncols, std::vector<double> row_major)
      : nrows_(nrows), ncols_(ncols), values_(std::move(row_major)) {
    detail::require_size(values_.size(), nrows * ncols, "DenseMatrix values");
  }

  static DenseMatrix identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  [[nodiscard]] std::size_t rows() const noexcept { return nrows_; }
  [[nodiscard]] std::size_t cols() const noexcept { return ncols_; }
  [[nodiscard]] bool square() const noexcept { return nrows_ == ncols_; }

  double& operator()(std::size_t i, std::size_t j) noexcept { return values_[i * ncols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return values_[i * ncols_ + j]; }

  [[nodiscard]] std::span<double> row(std::size_t i) noexcept {
    return {values_.data() + i * ncols_, ncols_};
  }
  [[nodiscard]] std::span<const double> row(std::size_t i) const noexcept {
    return {values_.data() + i * ncols_, ncols_};
  }
  [[nodiscard]] std::span<const double> values() const noexcept { return values_; }

  [[nodiscard]] Vector column(std::size_t j) const {
    Vector c(nrows_);
    for (std::size_t i = 0; i < nrows_; ++i) c[i] = (*this)(i, j);
    return c;
  }
  void set_column(std::size_t j, std::span<const double> c) {
    detail::require_size(c.size(), nrows_, "set_column");
    for (std::size_t i = 0; i < nrows_; ++i) (*this)(i, j) = c[i];
  }

  [[nodiscard]] Vector multiply(std::span<const double> x) const {
    detail::require_size(x.size(), ncols_, "DenseMatrix::multiply");
    Vector y(nrows_, 0.0);
    for (std::size_t i = 0; i < nrows_; ++i) y[i] = dot(row(i), x);
    return y;
  }

  [[nodiscard]] DenseMatrix transposed() const {
    DenseMatrix t(ncols_, nrows_);
    for (std::size_t i = 0; i < nrows_; ++i)
      for (std::size_t j = 0; j < ncols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  [[nodiscard]] double frobenius_norm() const { return norm2(values_); }

  [[nodiscard]] double max_abs() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
  }

 private:
  std::size_t nrows_ = 0;
  std::size_t ncols_ = 0;
  std::vector<double> values_;
};

inline DenseMatrix multiply(const DenseMatrix& a, const DenseMatrix& b) {
  detail::require_size(b.rows(), a.cols(), "dense multiply");
  DenseMatrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto ci = c.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      auto bk = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) ci[j] += aik * bk[j];
    }
  }
  return c;
}

/// a + s·b
inline DenseMatrix add(const DenseMatrix& a, const DenseMatrix& b, double s = 1.0) {
  detail::require(a.rows() == b.rows() && a.cols() == b.cols(), "dense add: shape mismatch");
  DenseMatrix c = a;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) c(i, j) += s * b(i, j);
  return c;
}

/// Lower-triangular L with L Lᵀ = A. Throws FactorizationError when A is not
/// numerically positive definite.
inline DenseMatrix dense_cholesky(const DenseMatrix& a) {
  detail::require(a.square(), "dense_cholesky: matrix not square");
  const std::size_t n = a.rows();
  DenseMatrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > 0.0)) throw FactorizationError(j, "dense_cholesky: matrix not positive definite");
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / ljj;
    }
  }
  return l;
}

/// Solves L Lᵀ x = b given the factor from dense_cholesky.
inline Vector cholesky_solve(const DenseMatrix& l, std::span<const double> b) {
  const std::size_t n = l.rows();
  detail::require_size(b.size(), n, "cholesky_solve");
  Vector x(b.begin(), b.end());
  for (std::size_t i = 0; i < n; ++i) {
    double s = x[i];
    for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * x[k];
    x[i] = s / l(i, i);
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = x[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= l(k, i) * x[k];
    x[i] = s / l(i, i);
  }
  return x;
}

/// LU with partial pivoting, stored in place (unit lower L below the diagonal).
class DenseLu {
 public:
  explicit DenseLu(DenseMatrix a) : lu_(std::move(a)), perm_(lu_.rows()) {
    detail::require(lu_.square(), "DenseLu: matrix not square");
    const std::size_t n = lu_.rows();
    for (std::size_t i = 0; i < n; ++i) perm_[i] = i;
    const double tiny = std::numeric_limits<double>::min();
    for (std::size_t k = 0; k < n; ++k) {
      std::size_t piv = k;
      double best = std::abs(lu_(k, k));
      for (std::size_t i = k + 1; i < n; ++i) {
        if (std::abs(lu_(i, k)) > best) {
          best = std::abs(lu_(i, k));
          piv = i;
        }
      }
      if (!(best > tiny)) throw FactorizationError(k, "DenseLu: matrix is singular");
      if (piv != k) {
        std::swap_ranges(lu_.row(k).begin(), lu_.row(k).end(), lu_.row(piv).begin());
        std::swap(perm_[k], perm_[piv]);
      }
      const double pivot = lu_(k, k);
      auto rk = lu_.row(k);
      for (std::size_t i = k + 1; i < n; ++i) {
        auto ri = lu_.row(i);
        const double f = ri[k] / pivot;
        ri[k] = f;
        if (f == 0.0) continue;
        for (std::size_t j = k + 1; j < n; ++j) ri[j] -= f * rk[j];
      }
    }
  }

  [[nodiscard]] std::size_t size() const noexcept { return lu_.rows(); }

  [[nodiscard]] Vector solve(std::span<const double> b) const {
    const std::size_t n = lu_.rows();
    detail::require_size(b.size(), n, "DenseLu::solve");
    Vector x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = b[perm_[i]];
    for (std::size_t i = 0; i < n; ++i) {
      auto ri = lu_.row(i);
      double s = x[i];
      for (std::size_t k = 0; k < i; ++k) s -= ri[k] * x[k];
      x[i] = s;
    }
    for (std::size_t i = n; i-- > 0;) {
      auto ri = lu_.row(i);
      double s = x[i];
      for (std::size_t k = i + 1; k < n; ++k) s -= ri[k] * x[k];
      x[i] = s / ri[i];
    }
    return x;
  }

  /// A⁻¹ M, column by column.
  [[nodiscard]] DenseMatrix solve(const DenseMatrix& m) const {
    detail::require_size(m.rows(), size(), "DenseLu::solve(matrix)");
    DenseMatrix x(m.rows(), m.cols());
    for (std::size_t j = 0; j < m.cols(); ++j) x.set_column(j, solve(m.column(j)));
    return x;
  }

 private:
  DenseMatrix lu_;
  std::vector<std::size_t> perm_;
};

inline Vector dense_lu_solve(const DenseMatrix& a, std::span<const double> b) {
  return DenseLu(a).solve(b);
}

namespace detail {

inline double hypot_safe(double a, double b) { return std::hypot(a, b); }

/// Householder reduction of a symmetric matrix to tridiagonal form
/// (diagonal d, subdiagonal e with e[0] unused). Eigenvalues only.
inline void tridiagonalize(DenseMatrix& a, Vector& d, Vector& e) {
  const std::size_t n = a.rows();
  d.assign(n, 0.0);
  e.assign(n, 0.0);
  for (std::size_t i = n; i-- > 1;) {
    const std::size_t l = i - 1;
    double h = 0.0;
    if (l > 0) {
      double sc = 0.0;
      for (std::size_t k = 0; k <= l; ++k) sc += std::abs(a(i, k));
      if (sc == 0.0) {
        e[i] = a(i, l);
      } else {
        for (std::size_t k = 0; k <= l; ++k) {
          a(i, k) /= sc;
          h += a(i, k) * a(i, k);
        }
        double f = a(i, l);
        const double g = f >= 0.0 ? -std::sqrt(h) : std::sqrt(h);
        e[i] = sc * g;
        h -= f * g;
        a(i, l) = f - g;
        f = 0.0;
        for (std::size_t j = 0; j <= l; ++j) {
          double gg = 0.0;
          for (std::size_t k = 0; k <= j; ++k) gg += a(j, k) * a(i, k);
          for (std::size_t k = j + 1; k <= l; ++k) gg += a(k, j) * a(i, k);
          e[j] = gg / h;
          f += e[j] * a(i, j);
        }
        const double hh = f / (h + h);
        for (std::size_t j = 0; j <= l; ++j) {
          const double fj = a(i, j);
          const double gj = e[j] - hh * fj;
          e[j] = gj;
          for (std::size_t k = 0; k <= j; ++k) a(j, k) -= (fj * e[k] + gj * a(i, k));
        }
      }
    } else {
      e[i] = a(i, l);
    }
    d[i] = h;
  }
  for (std::size_t i = 0; i < n; ++i) d[i] = a(i, i);
}

/// Implicit QL with Wilkinson-type shifts on a symmetric tridiagonal matrix.
inline void tridiagonal_ql(Vector& d, Vector& e) {
  const std::size_t n = d.size();
  if (n == 0) return;
  for (std::size_t i = 1; i < n; ++i) e[i - 1] = e[i];
  e[n - 1] = 0.0;
  for (std::size_t l = 0; l < n; ++l) {
    int iter = 0;
    std::size_t m;
    do {
      for (m = l; m + 1 < n; ++m) {
        const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
        if (std::abs(e[m]) <= std::numeric_limits<double>::epsilon() * dd) break;
      }
      if (m != l) {
        if (++iter > 60) throw ConvergenceError("symmetric_eigenvalues: QL iteration did not converge");
        double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
        double r = hypot_safe(g, 1.0);
        g = d[m] - d[l] + e[l] / (g + (g >= 0.0 ? std::abs(r) : -std::abs(r)));
        double s = 1.0, c = 1.0, p = 0.0;
        std::size_t i = m;
        bool underflow = false;
        while (i-- > l) {
          double f = s * e[i];
          const double b = c * e[i];
          r = hypot_safe(f, g);
          e[i + 1] = r;
          if (r == 0.0) {
            d[i + 1] -= p;
            e[m] = 0.0;
            underflow = true;
            break;
          }
          s = f / r;
          c = g / r;
          g = d[i + 1] - p;
          r = (d[i] - g) * s + 2.0 * c * b;
          p = s * r;
          d[i + 1] = g + p;
          g = c * r - b;
        }
        if (underflow) continue;
        d[l] -= p;
        e[l] = g;
        e[m] = 0.0;
      }
    } while (m != l);
  }
}

}  // namespace detail

/// Eigenvalues of a symmetric matrix, ascending.
inline Vector symmetric_eigenvalues(DenseMatrix a) {
  detail::require(a.square(), "symmetric_eigenvalues: matrix not square");
  Vector d, e;
  detail::tridiagonalize(a, d, e);
  detail::tridiagonal_ql(d, e);
  std::sort(d.begin(), d.end());
  return d;
}

/// Householder reduction to upper Hessenberg form, in place.
inline void hessenberg_reduce(DenseMatrix& a) {
  const std::size_t n = a.rows();
  if (n < 3) return;
  Vector v(n);
  for (std::size_t k = 0; k + 2 < n; ++k) {
    double alpha = 0.0;
    for (std::size_t i = k + 1; i < n; ++i) alpha += a(i, k) * a(i, k);
    alpha = std::sqrt(alpha);
    if (alpha == 0.0) continue;
    if (a(k + 1, k) > 0.0) alpha = -alpha;
    for (std::size_t i = 0; i <= k; ++i) v[i] = 0.0;
    v[k + 1] = a(k + 1, k) - alpha;
    for (std::size_t i = k + 2; i < n; ++i) v[i] = a(i, k);
    double vnorm2 = 0.0;
    for (std::size_t i = k + 1; i < n; ++i) vnorm2 += v[i] * v[i];
    if (vnorm2 == 0.0) continue;
    const double beta = 2.0 / vnorm2;
    // A ← H A
    for (std::size_t j = k; j < n; ++j) {
      double s = 0.0;
      for (std::size_t i = k + 1; i < n; ++i) s += v[i] * a(i, j);
      s *= beta;
      for (std::size_t i = k + 1; i < n; ++i) a(i, j) -= s * v[i];
    }
    // A ← A H
    for (std::size_t i = 0; i < n; ++i) {
      auto ri = a.row(i);
      double s = 0.0;
      for (std::size_t j = k + 1; j < n; ++j) s += ri[j] * v[j];
      s *= beta;
      for (std::size_t j = k + 1; j < n; ++j) ri[j] -= s * v[j];
    }
    a(k + 1, k) = alpha;
    for (std::size_t i = k + 2; i < n; ++i) a(i, k) = 0.0;
  }
}

/// All eigenvalues of a general real matrix, sorted by (real, imag).
/// Budget: 100·n double-shift sweeps in total.
inline std::vector<std::complex<double>> eigenvalues_dense(DenseMatrix a) {
  detail::require(a.square(), "eigenvalues_dense: matrix not square");
  const std::size_t n = a.rows();
  std::vector<std::complex<double>> eig;
  eig.reserve(n);
  if (n == 0) return eig;
  hessenberg_reduce(a);

  double anorm = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = (i > 0 ? i - 1 : 0); j < n; ++j) anorm += std::abs(a(i, j));

  const std::size_t budget = 100 * n;
  std::size_t total_its = 0;
  const double eps = std::numeric_limits<double>::epsilon();
  long nn = static_cast<long>(n) - 1;
  double t = 0.0;
  auto A = [&](long i, long j) -> double& { return a(static_cast<std::size_t>(i), static_cast<std::size_t>(j)); };

  while (nn >= 0) {
    int its = 0;
    long l;
    do {
      for (l = nn; l >= 1; --l) {
        double s = std::abs(A(l - 1, l - 1)) + std::abs(A(l, l));
        if (s == 0.0) s = anorm;
        if (std::abs(A(l, l - 1)) <= eps * s) {
          A(l, l - 1) = 0.0;
          break;
        }
      }
      const double x = A(nn, nn);
      if (l == nn) {
        eig.emplace_back(x + t, 0.0);
        --nn;
      } else {
        const double y = A(nn - 1, nn - 1);
        const double w = A(nn, nn - 1) * A(nn - 1, nn);
        if (l == nn - 1) {
          const double p = 0.5 * (y - x);
          const double q = p * p + w;
          const double z = std::sqrt(std::abs(q));
          const double xs = x + t;
          if (q >= 0.0) {
            const double zz = p + (p >= 0.0 ? std::abs(z) : -std::abs(z));
            double e1 = xs + zz;
            double e2 = e1;
            if (zz != 0.0) e2 = xs - w / zz;
            eig.emplace_back(e1, 0.0);
            eig.emplace_back(e2, 0.0);
          } else {
            eig.emplace_back(xs + p, z);
            eig.emplace_back(xs + p, -z);
          }
          nn -= 2;
        } else {
          if (++total_its > budget) throw ConvergenceError("eigenvalues_dense: QR iteration budget exhausted");
          double xx = x, yy = y, ww = w;
          if (its == 10 || its == 20) {
            // exceptional shift
            t += xx;
            for (long i = 0; i <= nn; ++i) A(i, i) -= xx;
            const double s = std::abs(A(nn, nn - 1)) + std::abs(A(nn - 1, nn - 2));
            xx = yy = 0.75 * s;
            ww = -0.4375 * s * s;
          }
          if (its >= 60) throw ConvergenceError("eigenvalues_dense: QR iteration did not converge");
          ++its;
          long m;
          double p = 0.0, q = 0.0, r = 0.0, z;
          for (m = nn - 2; m >= l; --m) {
            z = A(m, m);
            const double rr = xx - z;
            const double ss = yy - z;
            p = (rr * ss - ww) / A(m + 1, m) + A(m, m + 1);
            q = A(m + 1, m + 1) - z - rr - ss;
            r = A(m + 2, m + 1);
            const double s = std::abs(p) + std::abs(q) + std::abs(r);
            p /= s;
            q /= s;
            r /= s;
            if (m == l) break;
            const double u = std::abs(A(m, m - 1)) * (std::abs(q) + std::abs(r));
            const double v = std::abs(p) * (std::abs(A(m - 1, m - 1)) + std::abs(z) + std::abs(A(m + 1, m + 1)));
            if (u <= eps * v) break;
          }
          for (long i = m + 2; i <= nn; ++i) {
            A(i, i - 2) = 0.0;
            if (i != m + 2) A(i, i - 3) = 0.0;
          }
          for (long k = m; k <= nn - 1; ++k) {
            if (k != m) {
              p = A(k, k - 1);
              q = A(k + 1, k - 1);
              r = 0.0;
              if (k != nn - 1) r = A(k + 2, k - 1);
              xx = std::abs(p) + std::abs(q) + std::abs(r);
              if (xx != 0.0) {
                p /= xx;
                q /= xx;
                r /= xx;
              }
            }
            const double s0 = std::sqrt(p * p + q * q + r * r);
            const double s = p >= 0.0 ? s0 : -s0;
            if (s != 0.0) {
              if (k == m) {
                if (l != m) A(k, k - 1) = -A(k, k - 1);
              } else {
                A(k, k - 1) = -s * xx;
              }
              p += s;
              xx = p / s;
              yy = q / s;
              z = r / s;
              q /= p;
              r /= p;
              for (long j = k; j <= nn; ++j) {
                p = A(k, j) + q * A(k + 1, j);
                if (k != nn - 1) {
                  p += r * A(k + 2, j);
                  A(k + 2, j) -= p * z;
                }
                A(k + 1, j) -= p * yy;
                A(k, j) -= p * xx;
              }
              const long mmin = nn < k + 3 ? nn : k + 3;
              for (long i = l; i <= mmin; ++i) {
                p = xx * A(i, k) + yy * A(i, k + 1);
                if (k != nn - 1) {
                  p += z * A(i, k + 2);
                  A(i, k + 2) -= p * r;
                }
                A(i, k + 1) -= p * q;
                A(i, k) -= p;
              }
            }
          }
        }
      }
    } while (l < nn - 1);
  }
  std::sort(eig.begin(), eig.end(), [](const auto& x, const auto& y) {
    return x.real() != y.real() ? x.real() < y.real() : x.imag() < y.imag();
  });
  return eig;
}

}  // namespace al3
