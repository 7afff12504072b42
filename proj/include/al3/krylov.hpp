#pragma once

// PCG, right-preconditioned GMRES and flexible GMRES. All start from the
// zero vector and run without restarts; GMRES variants use modified
// Gram-Schmidt (with a second pass when orthogonality is lost) and Givens
// rotations on the Hessenberg least-squares problem.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <vector>

#include "al3/dense.hpp"
#include "al3/error.hpp"
#include "al3/factor.hpp"
#include "al3/sparse.hpp"
#include "al3/vec.hpp"

namespace al3 {

/// A square linear map given by its action. Preconditioners are passed as
/// operators that apply the *inverse* of the preconditioning matrix.
class LinearOperator {
 public:
  using ApplyFn = std::function<void(std::span<const double>, std::span<double>)>;

  LinearOperator(std::size_t dim, ApplyFn fn) : dim_(dim), fn_(std::move(fn)) {}

  static LinearOperator identity(std::size_t n) {
    return {n, [](std::span<const double> x, std::span<double> y) {
              std::copy(x.begin(), x.end(), y.begin());
            }};
  }

  /// Holds a shared copy of `a`.
  static LinearOperator from_matrix(SparseMatrix a) {
    detail::require(a.rows() == a.cols(), "LinearOperator::from_matrix: matrix not square");
    auto m = std::make_shared<const SparseMatrix>(std::move(a));
    return {m->rows(), [m](std::span<const double> x, std::span<double> y) { m->multiply(x, y); }};
  }

  static LinearOperator from_dense(DenseMatrix a) {
    detail::require(a.square(), "LinearOperator::from_dense: matrix not square");
    auto m = std::make_shared<const DenseMatrix>(std::move(a));
    return {m->rows(), [m](std::span<const double> x, std::span<double> y) {
              const Vector r = m->multiply(x);
              std::copy(r.begin(), r.end(), y.begin());
            }};
  }

  /// x ↦ A⁻¹x through a dense LU factorization.
  static LinearOperator dense_inverse(const DenseMatrix& a) {
    auto lu = std::make_shared<const DenseLu>(a);
    return {lu->size(), [lu](std::span<const double> x, std::span<double> y) {
              const Vector r = lu->solve(x);
              std::copy(r.begin(), r.end(), y.begin());
            }};
  }

  /// x ↦ (L Lᵀ)⁻¹x
  static LinearOperator ic_inverse(LowerTriangularFactor f) {
    auto p = std::make_shared<const LowerTriangularFactor>(std::move(f));
    return {p->size(), [p](std::span<const double> x, std::span<double> y) {
              std::copy(x.begin(), x.end(), y.begin());
              ic_apply_in_place(*p, y);
            }};
  }

  [[nodiscard]] std::size_t size() const noexcept { return dim_; }

  void apply(std::span<const double> x, std::span<double> y) const {
    detail::require_size(x.size(), dim_, "LinearOperator input");
    detail::require_size(y.size(), dim_, "LinearOperator output");
    fn_(x, y);
  }

  Vector operator()(std::span<const double> x) const {
    Vector y(dim_, 0.0);
    apply(x, y);
    return y;
  }

 private:
  std::size_t dim_;
  ApplyFn fn_;
};

/// z = P_k⁻¹ v, where P_k may depend on the outer iteration k.
using FlexiblePreconditioner =
    std::function<void(std::span<const double> v, std::span<double> z, std::size_t iteration)>;

enum class StopReason { tolerance, max_iterations, breakdown };

inline const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::tolerance: return "tolerance";
    case StopReason::max_iterations: return "max_iterations";
    case StopReason::breakdown: return "breakdown";
  }
  return "?";
}

struct IterStats {
  std::size_t iterations = 0;
  std::vector<double> residual_history;  // ‖r_k‖₂, k = 0..iterations
  bool converged = false;
  StopReason stop_reason = StopReason::max_iterations;
  /// ‖b − A x‖₂ recomputed at exit (GMRES variants; NaN for PCG).
  double true_residual = std::numeric_limits<double>::quiet_NaN();

  [[nodiscard]] double final_residual() const { return residual_history.back(); }
};

struct SolverControl {
  double rel_tol = 1e-8;
  std::size_t max_iterations = 500;
};

struct KrylovResult {
  Vector x;
  IterStats stats;
};

/// Called with (iteration, residual) after every residual update, starting at 0.
using ResidualObserver = std::function<void(std::size_t, std::span<const double>)>;

inline KrylovResult pcg(const LinearOperator& a, const LinearOperator& m, std::span<const double> b,
                        SolverControl control, const ResidualObserver& observer = {}) {
  const std::size_t n = a.size();
  detail::require_size(b.size(), n, "pcg rhs");
  detail::require_size(m.size(), n, "pcg preconditioner");
  KrylovResult res{Vector(n, 0.0), {}};
  auto& st = res.stats;
  Vector r(b.begin(), b.end());
  const double bnorm = norm2(b);
  st.residual_history.push_back(bnorm);
  if (observer) observer(0, r);
  const double target = control.rel_tol * bnorm;
  if (bnorm == 0.0 || bnorm <= target) {
    st.converged = true;
    st.stop_reason = StopReason::tolerance;
    return res;
  }
  Vector z = m(r);
  Vector p = z;
  Vector ap(n);
  double rz = dot(r, z);
  for (std::size_t k = 1; k <= control.max_iterations; ++k) {
    a.apply(p, ap);
    const double pap = dot(p, ap);
    if (!(pap > 0.0)) {
      st.stop_reason = StopReason::breakdown;
      return res;
    }
    const double step = rz / pap;
    axpy(step, p, res.x);
    axpy(-step, ap, r);
    const double rn = norm2(r);
    st.iterations = k;
    st.residual_history.push_back(rn);
    if (observer) observer(k, r);
    if (rn <= target) {
      st.converged = true;
      st.stop_reason = StopReason::tolerance;
      return res;
    }
    m.apply(r, z);
    const double rz_new = dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  st.stop_reason = StopReason::max_iterations;
  return res;
}

namespace detail {

/// Shared Arnoldi/Givens engine. With `flexible`, the preconditioned vectors
/// z_k are stored and x = Z y; otherwise x = P⁻¹(V y) with a fixed P.
inline KrylovResult gmres_engine(const LinearOperator& a, const FlexiblePreconditioner& precond,
                                 std::span<const double> b, SolverControl control, bool flexible) {
  const std::size_t n = a.size();
  require_size(b.size(), n, "gmres rhs");
  KrylovResult res{Vector(n, 0.0), {}};
  auto& st = res.stats;
  const double beta = norm2(b);
  st.residual_history.push_back(beta);
  const double target = control.rel_tol * beta;
  if (beta == 0.0 || beta <= target) {
    st.converged = true;
    st.stop_reason = StopReason::tolerance;
    st.true_residual = beta;
    return res;
  }

  const std::size_t maxit = control.max_iterations;
  std::vector<Vector> v;
  std::vector<Vector> z;
  v.push_back(Vector(b.begin(), b.end()));
  scale(1.0 / beta, v[0]);
  std::vector<Vector> h;  // h[k] = column k, length k+2
  Vector cs, sn, g{beta};
  Vector w(n);
  std::size_t k = 0;
  bool done = false;
  while (!done && k < maxit) {
    Vector zk(n, 0.0);
    precond(v[k], zk, k);
    a.apply(zk, w);
    if (flexible) z.push_back(std::move(zk));

    Vector col(k + 2, 0.0);
    for (std::size_t i = 0; i <= k; ++i) {
      col[i] = dot(w, v[i]);
      axpy(-col[i], v[i], w);
    }
    double wn = norm2(w);
    // second pass only when the first one left a measurable component
    double loss = 0.0;
    Vector c2(k + 1);
    for (std::size_t i = 0; i <= k; ++i) {
      c2[i] = dot(w, v[i]);
      loss = std::max(loss, std::abs(c2[i]));
    }
    if (wn > 0.0 && loss > 1e-8 * wn) {
      for (std::size_t i = 0; i <= k; ++i) {
        axpy(-c2[i], v[i], w);
        col[i] += c2[i];
      }
      wn = norm2(w);
    }
    col[k + 1] = wn;

    for (std::size_t i = 0; i < k; ++i) {
      const double t = cs[i] * col[i] + sn[i] * col[i + 1];
      col[i + 1] = -sn[i] * col[i] + cs[i] * col[i + 1];
      col[i] = t;
    }
    const double denom = std::hypot(col[k], col[k + 1]);
    double c = 1.0, s = 0.0;
    if (denom != 0.0) {
      c = col[k] / denom;
      s = col[k + 1] / denom;
    }
    cs.push_back(c);
    sn.push_back(s);
    col[k] = denom;
    col[k + 1] = 0.0;
    g.push_back(-s * g[k]);
    g[k] = c * g[k];
    h.push_back(std::move(col));

    const double rn = std::abs(g[k + 1]);
    ++k;
    st.iterations = k;
    st.residual_history.push_back(rn);
    if (rn <= target) {
      st.converged = true;
      st.stop_reason = StopReason::tolerance;
      done = true;
    } else if (wn <= 1e-14 * beta || denom == 0.0) {
      st.stop_reason = StopReason::breakdown;
      done = true;
    } else {
      Vector vn = w;
      scale(1.0 / wn, vn);
      v.push_back(std::move(vn));
    }
  }
  if (!done) st.stop_reason = StopReason::max_iterations;

  // back substitution R y = g
  Vector y(k, 0.0);
  for (std::size_t i = k; i-- > 0;) {
    double s = g[i];
    for (std::size_t j = i + 1; j < k; ++j) s -= h[j][i] * y[j];
    y[i] = h[i][i] != 0.0 ? s / h[i][i] : 0.0;
  }
  if (flexible) {
    for (std::size_t i = 0; i < k; ++i) axpy(y[i], z[i], res.x);
  } else {
    Vector t(n, 0.0);
    for (std::size_t i = 0; i < k; ++i) axpy(y[i], v[i], t);
    precond(t, res.x, k);
  }
  Vector ax(n);
  a.apply(res.x, ax);
  st.true_residual = norm2(subtract(b, ax));
  return res;
}

}  // namespace detail

/// GMRES on A P⁻¹ y = b, x = P⁻¹ y. `precond` applies P⁻¹.
inline KrylovResult gmres_right(const LinearOperator& a, const LinearOperator& precond,
                                std::span<const double> b, SolverControl control) {
  detail::require_size(precond.size(), a.size(), "gmres preconditioner");
  return detail::gmres_engine(
      a, [&precond](std::span<const double> v, std::span<double> z, std::size_t) { precond.apply(v, z); },
      b, control, false);
}

/// Flexible GMRES: P_k may change from one iteration to the next.
inline KrylovResult fgmres(const LinearOperator& a, const FlexiblePreconditioner& precond,
                           std::span<const double> b, SolverControl control) {
  return detail::gmres_engine(a, precond, b, control, true);
}

inline KrylovResult fgmres(const LinearOperator& a, const LinearOperator& precond,
                           std::span<const double> b, SolverControl control) {
  detail::require_size(precond.size(), a.size(), "fgmres preconditioner");
  return fgmres(
      a, [&precond](std::span<const double> v, std::span<double> z, std::size_t) { precond.apply(v, z); },
      b, control);
}

}  // namespace al3
