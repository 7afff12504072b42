#pragma once

// Augmented Lagrangian preconditioning of the block 3x3 system.
//
// The augmented matrix replaces A22 by A22 + γ BᵀQ⁻¹B (applied as three
// products, never assembled) and b2 by b2 + γ BᵀQ⁻¹b3. The preconditioner
//
//         [ A11  A12            0            ]
//   P  =  [ 0    A22 + γBᵀQ⁻¹B  (1 - γ/α) Bᵀ ]
//         [ 0    B              -Q/α         ]
//
// factors as
//
//         [ I  0  0      ] [ A11  A12  0    ]
//   P  =  [ 0  I  γBᵀQ⁻¹ ] [ 0    A22  Bᵀ   ]
//         [ 0  0  I      ] [ 0    B    -Q/α ]
//
// so P w = r is solved by r2 ← r2 - γBᵀQ⁻¹r3, then the stabilized Stokes
// system [A22 Bᵀ; B -Q/α](w2; w3) = (r2; r3), then A11 w1 = r1 - A12 w2.

#include <chrono>
#include <cmath>
#include <memory>
#include <optional>
#include <span>
#include <string>

#include "al3/block_system.hpp"
#include "al3/dense.hpp"
#include "al3/error.hpp"
#include "al3/factor.hpp"
#include "al3/krylov.hpp"
#include "al3/sparse.hpp"
#include "al3/vec.hpp"

namespace al3 {

enum class QChoice { diag_mp, identity, custom };

struct PrecondParams {
  double gamma = 1.0;
  double alpha = 2.0;
  QChoice q_choice = QChoice::diag_mp;
  std::optional<SparseMatrix> custom_q;  // used when q_choice == custom
  double droptol_a22 = 1e-3;
  double droptol_s = 1e-2;
  double droptol_a11 = 1e-3;
  double inner_gmres_tol = 0.1;
  std::size_t inner_gmres_maxit = 200;
  double pcg_tol = 0.1;
  std::size_t pcg_maxit = 5;

  /// α = 2γ, everything else at its default.
  static PrecondParams with_gamma(double gamma) {
    PrecondParams p;
    p.gamma = gamma;
    p.alpha = 2.0 * gamma;
    return p;
  }

  void validate() const {
    if (!(gamma > 0.0)) throw InvalidInput("PrecondParams: gamma must be positive");
    if (!(alpha >= gamma)) throw InvalidInput("PrecondParams: alpha must satisfy alpha >= gamma");
    if (droptol_a22 < 0.0 || droptol_s < 0.0 || droptol_a11 < 0.0)
      throw InvalidInput("PrecondParams: drop tolerances must be nonnegative");
    if (!(inner_gmres_tol > 0.0) || !(pcg_tol > 0.0))
      throw InvalidInput("PrecondParams: inner tolerances must be positive");
    if (inner_gmres_maxit == 0 || pcg_maxit == 0)
      throw InvalidInput("PrecondParams: inner iteration caps must be positive");
    if (q_choice == QChoice::custom && !custom_q)
      throw InvalidInput("PrecondParams: custom Q requested but not supplied");
  }
};

/// The SPD weight Q. Diagonal Q is inverted entrywise; any other Q through
/// its complete sparse Cholesky factor.
class QMatrix {
 public:
  explicit QMatrix(SparseMatrix q) : q_(std::move(q)) {
    detail::require(q_.rows() == q_.cols(), "Q must be square");
    if (q_.is_diagonal()) {
      inv_diag_ = q_.diagonal_values();
      for (std::size_t i = 0; i < inv_diag_.size(); ++i) {
        if (!(inv_diag_[i] > 0.0)) throw FactorizationError(i, "Q: nonpositive diagonal entry");
        inv_diag_[i] = 1.0 / inv_diag_[i];
      }
    } else {
      chol_ = ic_threshold(q_, 0.0);
    }
  }

  [[nodiscard]] const SparseMatrix& matrix() const noexcept { return q_; }
  [[nodiscard]] bool diagonal() const noexcept { return !chol_.has_value(); }
  [[nodiscard]] std::size_t size() const noexcept { return q_.rows(); }

  void solve_in_place(std::span<double> x) const {
    detail::require_size(x.size(), size(), "Q solve");
    if (chol_) {
      ic_apply_in_place(*chol_, x);
    } else {
      for (std::size_t i = 0; i < x.size(); ++i) x[i] *= inv_diag_[i];
    }
  }

  [[nodiscard]] Vector solve(std::span<const double> x) const {
    Vector y(x.begin(), x.end());
    solve_in_place(y);
    return y;
  }

 private:
  SparseMatrix q_;
  Vector inv_diag_;
  std::optional<LowerTriangularFactor> chol_;
};

inline QMatrix make_q(const BlockSystem& sys, const PrecondParams& params) {
  switch (params.q_choice) {
    case QChoice::diag_mp: return QMatrix(SparseMatrix::diagonal(sys.mp().diagonal_values()));
    case QChoice::identity: return QMatrix(SparseMatrix::identity(sys.p()));
    case QChoice::custom:
      if (!params.custom_q) throw InvalidInput("custom Q requested but not supplied");
      if (params.custom_q->rows() != sys.p() || params.custom_q->cols() != sys.p())
        throw DimensionMismatch("custom Q must be p x p");
      return QMatrix(*params.custom_q);
  }
  throw InvalidInput("unknown Q choice");
}

/// (b1; b2 + γBᵀQ⁻¹b3; b3). γ = 0 is allowed and returns b unchanged.
inline Vector augment_rhs(const BlockSystem& sys, const QMatrix& q, double gamma,
                          std::span<const double> b1, std::span<const double> b2,
                          std::span<const double> b3) {
  detail::require_size(b1.size(), sys.n(), "b1");
  detail::require_size(b2.size(), sys.m(), "b2");
  detail::require_size(b3.size(), sys.p(), "b3");
  detail::require_size(q.size(), sys.p(), "Q");
  Vector out = stack(b1, b2, b3);
  if (gamma != 0.0) {
    const Vector qb3 = q.solve(b3);
    sys.b().multiply_transpose_add(gamma, qb3, std::span<double>(out).subspan(sys.n(), sys.m()));
  }
  return out;
}

inline Vector augment_rhs(const BlockSystem& sys, const PrecondParams& params, std::span<const double> b) {
  detail::require_size(b.size(), sys.size(), "rhs");
  const auto blk = split_blocks(sys, b);
  return augment_rhs(sys, make_q(sys, params), params.gamma, blk.u1, blk.u2, blk.u3);
}

/// Matrix-free action of the augmented matrix; γ = 0 gives the original one.
/// Holds references: `sys` and `q` must outlive the operator.
class AugmentedOperator {
 public:
  AugmentedOperator(const BlockSystem& sys, const QMatrix& q, double gamma)
      : sys_(&sys), q_(&q), gamma_(gamma) {
    detail::require_size(q.size(), sys.p(), "Q");
  }
  AugmentedOperator(const BlockSystem&, QMatrix&&, double) = delete;  // would dangle

  [[nodiscard]] std::size_t size() const noexcept { return sys_->size(); }
  [[nodiscard]] double gamma() const noexcept { return gamma_; }

  void apply(std::span<const double> u, std::span<double> out) const {
    const auto in = split_blocks(*sys_, u);
    const auto o = split_blocks(*sys_, out);
    const BlockSystem& s = *sys_;
    s.a11().multiply(in.u1, o.u1);
    s.a12().multiply_add(1.0, in.u2, o.u1);

    s.a22().multiply(in.u2, o.u2);
    s.a12().multiply_transpose_add(-1.0, in.u1, o.u2);
    s.b().multiply_transpose_add(1.0, in.u3, o.u2);
    s.b().multiply(in.u2, o.u3);  // B u2, reused below before being the third block
    if (gamma_ != 0.0) {
      Vector t(o.u3.begin(), o.u3.end());
      q_->solve_in_place(t);
      s.b().multiply_transpose_add(gamma_, t, o.u2);
    }
  }

  [[nodiscard]] Vector apply(std::span<const double> u) const {
    Vector out(size());
    apply(u, out);
    return out;
  }

  [[nodiscard]] LinearOperator as_operator() const {
    return {size(), [self = *this](std::span<const double> x, std::span<double> y) { self.apply(x, y); }};
  }

 private:
  const BlockSystem* sys_;
  const QMatrix* q_;
  double gamma_;
};

inline Vector apply_augmented(const AugmentedOperator& op, std::span<const double> u) {
  detail::require_size(u.size(), op.size(), "apply_augmented");
  return op.apply(u);
}

// ---------------------------------------------------------------------------
// Dense assemblies (desk scale only; oracles and the exact preconditioner).

namespace detail {

inline void place(DenseMatrix& dst, const SparseMatrix& src, std::size_t r0, std::size_t c0, double s = 1.0) {
  for (const auto& t : src.triplets()) dst(r0 + t.row, c0 + t.col) += s * t.value;
}

inline void place_transpose(DenseMatrix& dst, const SparseMatrix& src, std::size_t r0, std::size_t c0,
                            double s = 1.0) {
  for (const auto& t : src.triplets()) dst(r0 + t.col, c0 + t.row) += s * t.value;
}

/// Dense BᵀQ⁻¹B.
inline DenseMatrix dense_btqinvb(const BlockSystem& sys, const QMatrix& q) {
  const std::size_t m = sys.m(), p = sys.p();
  DenseMatrix qinvb(p, m);
  for (std::size_t j = 0; j < m; ++j) {
    Vector col(p, 0.0);
    for (std::size_t i = 0; i < p; ++i) col[i] = sys.b().at(i, j);
    q.solve_in_place(col);
    qinvb.set_column(j, col);
  }
  return multiply(sys.b().to_dense().transposed(), qinvb);
}

inline void place_dense(DenseMatrix& dst, const DenseMatrix& src, std::size_t r0, std::size_t c0, double s) {
  for (std::size_t i = 0; i < src.rows(); ++i)
    for (std::size_t j = 0; j < src.cols(); ++j) dst(r0 + i, c0 + j) += s * src(i, j);
}

}  // namespace detail

inline DenseMatrix dense_augmented(const BlockSystem& sys, const QMatrix& q, double gamma) {
  const std::size_t n = sys.n(), m = sys.m(), p = sys.p();
  DenseMatrix a(n + m + p, n + m + p);
  detail::place(a, sys.a11(), 0, 0);
  detail::place(a, sys.a12(), 0, n);
  detail::place_transpose(a, sys.a12(), n, 0, -1.0);
  detail::place(a, sys.a22(), n, n);
  detail::place_transpose(a, sys.b(), n, n + m);
  detail::place(a, sys.b(), n + m, n);
  if (gamma != 0.0) detail::place_dense(a, detail::dense_btqinvb(sys, q), n, n, gamma);
  return a;
}

/// P_{γ,α} assembled as printed (three block rows).
inline DenseMatrix dense_preconditioner(const BlockSystem& sys, const QMatrix& q, double gamma, double alpha) {
  const std::size_t n = sys.n(), m = sys.m(), p = sys.p();
  DenseMatrix a(n + m + p, n + m + p);
  detail::place(a, sys.a11(), 0, 0);
  detail::place(a, sys.a12(), 0, n);
  detail::place(a, sys.a22(), n, n);
  detail::place_dense(a, detail::dense_btqinvb(sys, q), n, n, gamma);
  detail::place_transpose(a, sys.b(), n, n + m, 1.0 - gamma / alpha);
  detail::place(a, sys.b(), n + m, n);
  detail::place(a, q.matrix(), n + m, n + m, -1.0 / alpha);
  return a;
}

// ---------------------------------------------------------------------------
// Exact application through the block factorization (dense direct solves).

class ExactPreconditioner {
 public:
  static constexpr std::size_t kDefaultCap = 2000;

  ExactPreconditioner(const BlockSystem& sys, const PrecondParams& params, std::size_t cap = kDefaultCap)
      : sys_(&sys), params_(params), q_(make_q(sys, params)) {
    params_.validate();
    if (sys.size() > cap)
      throw InvalidInput("exact preconditioner: system size " + std::to_string(sys.size()) +
                         " exceeds desk-scale cap " + std::to_string(cap));
    a11_chol_ = dense_cholesky(sys.a11().to_dense());
    const std::size_t m = sys.m(), p = sys.p();
    DenseMatrix k(m + p, m + p);
    detail::place(k, sys.a22(), 0, 0);
    detail::place_transpose(k, sys.b(), 0, m);
    detail::place(k, sys.b(), m, 0);
    detail::place(k, q_.matrix(), m, m, -1.0 / params_.alpha);
    stokes_lu_ = std::make_shared<const DenseLu>(std::move(k));
  }

  [[nodiscard]] const QMatrix& q() const noexcept { return q_; }
  [[nodiscard]] std::size_t size() const noexcept { return sys_->size(); }

  void apply(std::span<const double> r, std::span<double> w) const {
    const BlockSystem& s = *sys_;
    const auto rb = split_blocks(s, r);
    const auto wb = split_blocks(s, w);
    Vector rhs(s.m() + s.p());
    std::copy(rb.u2.begin(), rb.u2.end(), rhs.begin());
    std::copy(rb.u3.begin(), rb.u3.end(), rhs.begin() + static_cast<std::ptrdiff_t>(s.m()));
    const Vector qr3 = q_.solve(rb.u3);
    s.b().multiply_transpose_add(-params_.gamma, qr3, std::span<double>(rhs).subspan(0, s.m()));
    const Vector sol = stokes_lu_->solve(rhs);
    std::copy(sol.begin(), sol.begin() + static_cast<std::ptrdiff_t>(s.m()), wb.u2.begin());
    std::copy(sol.begin() + static_cast<std::ptrdiff_t>(s.m()), sol.end(), wb.u3.begin());
    Vector r1(rb.u1.begin(), rb.u1.end());
    s.a12().multiply_add(-1.0, wb.u2, r1);
    const Vector w1 = cholesky_solve(a11_chol_, r1);
    std::copy(w1.begin(), w1.end(), wb.u1.begin());
  }

  [[nodiscard]] Vector apply(std::span<const double> r) const {
    detail::require_size(r.size(), size(), "apply_precond_exact");
    Vector w(size());
    apply(r, w);
    return w;
  }

  [[nodiscard]] LinearOperator as_operator() const {
    return {size(), [self = *this](std::span<const double> x, std::span<double> y) { self.apply(x, y); }};
  }

 private:
  const BlockSystem* sys_;
  PrecondParams params_;
  QMatrix q_;
  DenseMatrix a11_chol_;
  std::shared_ptr<const DenseLu> stokes_lu_;
};

inline Vector apply_precond_exact(const BlockSystem& sys, const PrecondParams& params, std::span<const double> r) {
  return ExactPreconditioner(sys, params).apply(r);
}

// ---------------------------------------------------------------------------
// Inexact application.

/// A failure inside one of the inner solves; `stage` names which.
class InnerSolveError : public Error {
 public:
  InnerSolveError(std::string stage, const std::string& what)
      : Error(stage + ": " + what), stage_(std::move(stage)) {}
  [[nodiscard]] const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

/// Incomplete factors behind the inner preconditioners: Â22 ≈ A22,
/// Ŝ ≈ S = Q/α + Mp (assembled), and IC(A11) for the PCG solve.
struct InnerPrecondFactors {
  LowerTriangularFactor l_a22;
  LowerTriangularFactor l_s;
  LowerTriangularFactor l_a11;
};

inline InnerPrecondFactors build_inner_factors(const BlockSystem& sys, const PrecondParams& params,
                                               const QMatrix& q) {
  params.validate();
  auto factor = [](const SparseMatrix& a, double droptol, const char* name) {
    try {
      return ic_with_shift_retry(a, droptol);
    } catch (const FactorizationError& e) {
      throw InnerSolveError(std::string("IC(") + name + ")", e.what());
    }
  };
  const SparseMatrix s = add(q.matrix(), sys.mp(), 1.0 / params.alpha, 1.0);
  return {factor(sys.a22(), params.droptol_a22, "A22"), factor(s, params.droptol_s, "S"),
          factor(sys.a11(), params.droptol_a11, "A11")};
}

/// Solves [Â22 0; B -Ŝ](v2; v3) = (r2; r3):
/// v2 = Â22⁻¹ r2, v3 = Ŝ⁻¹(B v2 - r3).
inline void apply_inner_block_precond(const InnerPrecondFactors& f, const SparseMatrix& b,
                                      std::span<const double> r2, std::span<const double> r3,
                                      std::span<double> v2, std::span<double> v3) {
  detail::require_size(r2.size(), f.l_a22.size(), "inner r2");
  detail::require_size(r3.size(), f.l_s.size(), "inner r3");
  std::copy(r2.begin(), r2.end(), v2.begin());
  ic_apply_in_place(f.l_a22, v2);
  b.multiply(v2, v3);
  for (std::size_t i = 0; i < v3.size(); ++i) v3[i] -= r3[i];
  ic_apply_in_place(f.l_s, v3);
}

struct InnerStats {
  std::size_t applications = 0;
  std::size_t gmres_iterations = 0;  // summed over applications
  std::size_t pcg_iterations = 0;
  IterStats last_gmres;
  IterStats last_pcg;
};

class InexactPreconditioner {
 public:
  /// Builds Q and the incomplete factors once; `sys` must outlive this object.
  InexactPreconditioner(const BlockSystem& sys, PrecondParams params)
      : sys_(&sys), params_(std::move(params)), q_(std::make_shared<const QMatrix>(make_q(sys, params_))) {
    params_.validate();
    factors_ = std::make_shared<const InnerPrecondFactors>(build_inner_factors(sys, params_, *q_));
  }

  [[nodiscard]] const PrecondParams& params() const noexcept { return params_; }
  [[nodiscard]] const QMatrix& q() const noexcept { return *q_; }
  [[nodiscard]] const InnerPrecondFactors& factors() const noexcept { return *factors_; }
  [[nodiscard]] std::size_t size() const noexcept { return sys_->size(); }

  /// The 2x2 stabilized Stokes operator [A22 Bᵀ; B -Q/α].
  [[nodiscard]] LinearOperator stokes_operator() const {
    const BlockSystem* s = sys_;
    auto q = q_;
    const double inv_alpha = 1.0 / params_.alpha;
    return {s->m() + s->p(), [s, q, inv_alpha](std::span<const double> x, std::span<double> y) {
              const auto x2 = x.subspan(0, s->m()), x3 = x.subspan(s->m());
              const auto y2 = y.subspan(0, s->m()), y3 = y.subspan(s->m());
              s->a22().multiply(x2, y2);
              s->b().multiply_transpose_add(1.0, x3, y2);
              s->b().multiply(x2, y3);
              const SparseMatrix& qm = q->matrix();
              qm.multiply_add(-inv_alpha, x3, y3);
            }};
  }

  /// Inverse of the block triangular inner preconditioner as an operator.
  [[nodiscard]] LinearOperator inner_preconditioner() const {
    const BlockSystem* s = sys_;
    auto f = factors_;
    return {s->m() + s->p(), [s, f](std::span<const double> x, std::span<double> y) {
              apply_inner_block_precond(*f, s->b(), x.subspan(0, s->m()), x.subspan(s->m()),
                                        y.subspan(0, s->m()), y.subspan(s->m()));
            }};
  }

  void apply(std::span<const double> r, std::span<double> w, InnerStats& stats) const {
    const BlockSystem& s = *sys_;
    const auto rb = split_blocks(s, r);
    const auto wb = split_blocks(s, w);

    Vector rhs(s.m() + s.p());
    std::copy(rb.u2.begin(), rb.u2.end(), rhs.begin());
    std::copy(rb.u3.begin(), rb.u3.end(), rhs.begin() + static_cast<std::ptrdiff_t>(s.m()));
    const Vector qr3 = q_->solve(rb.u3);
    s.b().multiply_transpose_add(-params_.gamma, qr3, std::span<double>(rhs).subspan(0, s.m()));

    auto inner = gmres_right(stokes_operator(), inner_preconditioner(), rhs,
                             {params_.inner_gmres_tol, params_.inner_gmres_maxit});
    if (inner.stats.stop_reason == StopReason::breakdown && !inner.stats.converged &&
        !std::isfinite(inner.stats.final_residual()))
      throw InnerSolveError("inner GMRES (stabilized Stokes)", "breakdown with non-finite residual");
    std::copy(inner.x.begin(), inner.x.begin() + static_cast<std::ptrdiff_t>(s.m()), wb.u2.begin());
    std::copy(inner.x.begin() + static_cast<std::ptrdiff_t>(s.m()), inner.x.end(), wb.u3.begin());

    Vector r1(rb.u1.begin(), rb.u1.end());
    s.a12().multiply_add(-1.0, wb.u2, r1);
    const LinearOperator a11_op{s.n(), [&s](std::span<const double> x, std::span<double> y) { s.a11().multiply(x, y); }};
    auto f = factors_;
    const LinearOperator a11_prec{s.n(), [f](std::span<const double> x, std::span<double> y) {
                                    std::copy(x.begin(), x.end(), y.begin());
                                    ic_apply_in_place(f->l_a11, y);
                                  }};
    auto first = pcg(a11_op, a11_prec, r1, {params_.pcg_tol, params_.pcg_maxit});
    if (first.stats.stop_reason == StopReason::breakdown)
      throw InnerSolveError("inner PCG (A11)", "nonpositive curvature; A11 or its IC factor is not SPD");
    std::copy(first.x.begin(), first.x.end(), wb.u1.begin());

    ++stats.applications;
    stats.gmres_iterations += inner.stats.iterations;
    stats.pcg_iterations += first.stats.iterations;
    stats.last_gmres = std::move(inner.stats);
    stats.last_pcg = std::move(first.stats);
  }

  [[nodiscard]] Vector apply(std::span<const double> r, InnerStats& stats) const {
    detail::require_size(r.size(), size(), "apply_precond_inexact");
    Vector w(size());
    apply(r, w, stats);
    return w;
  }

 private:
  const BlockSystem* sys_;
  PrecondParams params_;
  std::shared_ptr<const QMatrix> q_;
  std::shared_ptr<const InnerPrecondFactors> factors_;
};

inline Vector apply_precond_inexact(const InexactPreconditioner& prec, std::span<const double> r,
                                    InnerStats& stats) {
  return prec.apply(r, stats);
}

// ---------------------------------------------------------------------------
// Outer solve.

enum class PreconditionerKind { inexact, exact };

struct SolveOptions {
  double tol = 1e-7;  // ‖Āu_k − b̄‖₂ ≤ tol·‖b̄‖₂
  std::size_t maxit = 500;
  PreconditionerKind kind = PreconditionerKind::inexact;
  std::optional<Vector> reference;  // u* for the relative error
};

struct SolveReport {
  std::size_t outer_iters = 0;
  double wall_seconds = 0.0;
  std::optional<double> err;  // ‖u − u*‖₂ / ‖u*‖₂
  std::size_t iter_in = 0;    // inner GMRES iterations, all applications
  std::size_t iter_pcg = 0;   // PCG iterations, all applications
  bool converged = false;
  StopReason stop_reason = StopReason::max_iterations;
  std::vector<double> residual_history;
  double true_relative_residual = 0.0;  // ‖Āu − b̄‖₂ / ‖b̄‖₂, recomputed
};

struct SolveOutcome {
  Vector u;
  SolveReport report;
};

/// FGMRES on the augmented system, right-preconditioned with P_{γ,α}.
/// `b` is the right-hand side of the original system; it is augmented here.
inline SolveOutcome solve(const BlockSystem& sys, const PrecondParams& params, std::span<const double> b,
                          const SolveOptions& options = {}) {
  params.validate();
  detail::require_size(b.size(), sys.size(), "solve rhs");
  if (options.reference) detail::require_size(options.reference->size(), sys.size(), "reference solution");
  const auto start = std::chrono::steady_clock::now();

  const QMatrix q = make_q(sys, params);
  const AugmentedOperator aug(sys, q, params.gamma);
  const auto blk = split_blocks(sys, b);
  const Vector bbar = augment_rhs(sys, q, params.gamma, blk.u1, blk.u2, blk.u3);

  SolveOutcome out;
  InnerStats inner;
  KrylovResult kr;
  if (options.kind == PreconditionerKind::exact) {
    const ExactPreconditioner prec(sys, params);
    kr = fgmres(aug.as_operator(), prec.as_operator(), bbar, {options.tol, options.maxit});
  } else {
    const InexactPreconditioner prec(sys, params);
    kr = fgmres(
        aug.as_operator(),
        [&](std::span<const double> v, std::span<double> z, std::size_t) { prec.apply(v, z, inner); },
        bbar, {options.tol, options.maxit});
  }
  const auto stop = std::chrono::steady_clock::now();

  auto& rep = out.report;
  rep.outer_iters = kr.stats.iterations;
  rep.wall_seconds = std::chrono::duration<double>(stop - start).count();
  rep.iter_in = inner.gmres_iterations;
  rep.iter_pcg = inner.pcg_iterations;
  rep.converged = kr.stats.converged;
  rep.stop_reason = kr.stats.stop_reason;
  rep.residual_history = kr.stats.residual_history;
  const double bn = norm2(bbar);
  rep.true_relative_residual = bn > 0.0 ? kr.stats.true_residual / bn : kr.stats.true_residual;
  if (options.reference) rep.err = relative_diff(kr.x, *options.reference);
  out.u = std::move(kr.x);
  return out;
}

}  // namespace al3
