#pragma once

// Dense verification of the preconditioned spectrum σ(P⁻¹Ā): assembly,
// eigenvalue bounds, the per-eigenvector quadratic λ² − bλ + c = 0, the
// eigenvalues attached to Ker(B), and clustering around 1.

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <span>
#include <vector>

#include "al3/block_al.hpp"
#include "al3/dense.hpp"
#include "al3/error.hpp"
#include "al3/factor.hpp"
#include "al3/probgen.hpp"
#include "al3/random.hpp"
#include "al3/sparse.hpp"

namespace al3 {

constexpr std::size_t kSpectralCap = 2000;

inline void require_desk_scale(const BlockSystem& sys, std::size_t cap, const char* who) {
  if (sys.size() > cap)
    throw InvalidInput(std::string(who) + ": system size " + std::to_string(sys.size()) +
                       " exceeds cap " + std::to_string(cap));
}

/// P⁻¹Ā, column j = apply_precond_exact(Ā e_j).
inline DenseMatrix dense_precond_matrix(const BlockSystem& sys, const PrecondParams& params,
                                        std::size_t cap = kSpectralCap) {
  require_desk_scale(sys, cap, "dense_precond_matrix");
  const ExactPreconditioner prec(sys, params, cap);
  const DenseMatrix abar = dense_augmented(sys, prec.q(), params.gamma);
  DenseMatrix out(sys.size(), sys.size());
  for (std::size_t j = 0; j < sys.size(); ++j) out.set_column(j, prec.apply(abar.column(j)));
  return out;
}

// ---------------------------------------------------------------------------

struct QuadSample {
  double p_val = 0.0, q_val = 0.0, t_val = 0.0;
  double b_coef = 0.0, c_coef = 0.0;
  double root1 = 0.0, root2 = 0.0;  // root1 ≤ root2
};

/// Coefficients b = 1 + (p+t)/(q+(1−γ/α)t), c = t/(q+(1−γ/α)t) and the
/// roots of λ² − bλ + c, the smaller one as 2c/(b + √(b²−4c)).
inline QuadSample quad_roots(double p_val, double q_val, double t_val, double gamma, double alpha) {
  if (!(q_val > 0.0) || t_val < 0.0 || p_val < 0.0 || !(gamma > 0.0) || !(alpha >= gamma))
    throw InvalidInput("quad_roots: need q > 0, p >= 0, t >= 0, alpha >= gamma > 0");
  const double denom = q_val + (1.0 - gamma / alpha) * t_val;
  if (!(denom > 0.0)) throw InvalidInput("quad_roots: q + (1 - gamma/alpha) t must be positive");
  QuadSample s{p_val, q_val, t_val};
  s.b_coef = 1.0 + (p_val + t_val) / denom;
  s.c_coef = t_val / denom;
  // b ≥ 1 + c, so b² − 4c ≥ (1 − c)² ≥ 0 up to rounding
  const double disc = std::max(0.0, s.b_coef * s.b_coef - 4.0 * s.c_coef);
  const double sq = std::sqrt(disc);
  s.root2 = 0.5 * (s.b_coef + sq);
  s.root1 = 2.0 * s.c_coef / (s.b_coef + sq);
  return s;
}

/// Quadratic forms p = yᵀA12ᵀA11⁻¹A12y, q = yᵀ(A22 + γBᵀQ⁻¹B)y,
/// t = α·yᵀBᵀQ⁻¹By, with A11 inverted through its complete sparse factor.
class QuadraticForms {
 public:
  QuadraticForms(const BlockSystem& sys, const PrecondParams& params)
      : sys_(&sys), params_(params), q_(make_q(sys, params)), a11_(ic_threshold(sys.a11(), 0.0)) {
    params_.validate();
  }

  [[nodiscard]] double schur(std::span<const double> y) const {
    Vector x = spmv(sys_->a12(), y);
    const Vector ax(x);
    ic_apply_in_place(a11_, x);
    return dot(ax, x);
  }
  [[nodiscard]] double a22(std::span<const double> y) const { return dot(y, spmv(sys_->a22(), y)); }
  [[nodiscard]] double btqb(std::span<const double> y) const {
    const Vector by = spmv(sys_->b(), y);
    return dot(by, q_.solve(by));
  }

  /// (p, q, t) for y, normalized to unit length first.
  [[nodiscard]] QuadSample sample(std::span<const double> y_in) const {
    Vector y(y_in.begin(), y_in.end());
    detail::require_size(y.size(), sys_->m(), "quadratic form vector");
    const double ny = norm2(y);
    detail::require(ny > 0.0, "quadratic form vector must be nonzero");
    scale(1.0 / ny, y);
    const double bq = btqb(y);
    return quad_roots(std::max(0.0, schur(y)), a22(y) + params_.gamma * bq, params_.alpha * bq,
                      params_.gamma, params_.alpha);
  }

  [[nodiscard]] const PrecondParams& params() const noexcept { return params_; }

 private:
  const BlockSystem* sys_;
  PrecondParams params_;
  QMatrix q_;
  LowerTriangularFactor a11_;
};

/// `count` samples from pseudo-random unit y outside Ker(B).
inline std::vector<QuadSample> quad_samples(const BlockSystem& sys, const PrecondParams& params,
                                            std::size_t count, std::uint64_t seed) {
  const QuadraticForms forms(sys, params);
  CounterRng rng(seed, 77);
  std::vector<QuadSample> out;
  out.reserve(count);
  while (out.size() < count) {
    const Vector y = rng.uniform_vector(sys.m());
    if (norm2(spmv(sys.b(), y)) <= 1e-10 * norm2(y)) continue;
    out.push_back(forms.sample(y));
  }
  return out;
}

/// 1 + yᵀA12ᵀA11⁻¹A12y / yᵀA22y for y ∈ Ker(B); independent of γ and α.
inline double kerb_eigs(const BlockSystem& sys, const PrecondParams& params, std::span<const double> y) {
  detail::require_size(y.size(), sys.m(), "kerb_eigs vector");
  const double ny = norm2(y);
  detail::require(ny > 0.0, "kerb_eigs: y must be nonzero");
  if (sys.p() > 0 && norm2(spmv(sys.b(), y)) > 1e-10 * ny)
    throw InvalidInput("kerb_eigs: y is not in Ker(B)");
  const QuadraticForms forms(sys, params);
  return 1.0 + forms.schur(y) / forms.a22(y);
}

// ---------------------------------------------------------------------------

struct BoundReport {
  double xi = 0.0;  // smallest nonzero singular value of B
  double lam_min_q = 0.0, lam_max_q = 0.0;
  double lam_min_a22 = 0.0, lam_max_a22 = 0.0;
  double lam_max_schur = 0.0;  // λ_max(A12ᵀA11⁻¹A12)
  double norm_b = 0.0;         // ‖B‖₂
  double lower = 0.0;
  double upper = 0.0;
  /// Ker(B) = {0}; only then does the lower bound hold for every eigenvalue.
  bool kernel_trivial = false;
};

inline BoundReport theorem_bounds(const BlockSystem& sys, const PrecondParams& params,
                                  std::size_t cap = kSpectralCap) {
  params.validate();
  require_desk_scale(sys, cap, "theorem_bounds");
  BoundReport r;
  const QMatrix q = make_q(sys, params);
  if (q.diagonal()) {
    const Vector d = q.matrix().diagonal_values();
    r.lam_min_q = d.empty() ? 0.0 : *std::min_element(d.begin(), d.end());
    r.lam_max_q = d.empty() ? 0.0 : *std::max_element(d.begin(), d.end());
  } else {
    const Vector ev = symmetric_eigenvalues(q.matrix().to_dense());
    r.lam_min_q = ev.front();
    r.lam_max_q = ev.back();
  }
  const Vector ea = symmetric_eigenvalues(sys.a22().to_dense());
  r.lam_min_a22 = ea.front();
  r.lam_max_a22 = ea.back();
  const Vector es = symmetric_eigenvalues(schur_term_dense(sys.a11(), sys.a12()));
  r.lam_max_schur = std::max(0.0, es.empty() ? 0.0 : es.back());
  if (sys.p() > 0) {
    const DenseMatrix bd = sys.b().to_dense();
    const Vector eb = symmetric_eigenvalues(multiply(bd, bd.transposed()));
    r.norm_b = std::sqrt(std::max(0.0, eb.back()));
    // full row rank: every eigenvalue of BBᵀ is a nonzero squared singular value
    r.xi = std::sqrt(std::max(0.0, eb.front()));
  }
  r.kernel_trivial = sys.p() == sys.m() && r.xi > 0.0;
  const double alpha = params.alpha;
  r.lower = r.xi * r.xi * alpha * r.lam_min_q /
            (r.lam_max_q * ((r.lam_max_a22 + r.lam_max_schur) * r.lam_min_q + 2.0 * alpha * r.norm_b * r.norm_b));
  r.upper = 2.0 + r.lam_max_schur / r.lam_min_a22;
  return r;
}

// ---------------------------------------------------------------------------

struct SpectrumReport {
  std::vector<std::complex<double>> eigenvalues;  // sorted by real part
  double max_imag = 0.0;
  double max_abs = 0.0;

  /// Fraction of eigenvalues with |λ − 1| ≤ δ.
  [[nodiscard]] double cluster_fraction(double delta) const {
    if (eigenvalues.empty()) return 0.0;
    std::size_t k = 0;
    for (const auto& e : eigenvalues)
      if (std::abs(e - 1.0) <= delta) ++k;
    return static_cast<double>(k) / static_cast<double>(eigenvalues.size());
  }
};

inline SpectrumReport make_spectrum_report(std::vector<std::complex<double>> eig) {
  SpectrumReport r;
  r.eigenvalues = std::move(eig);
  for (const auto& e : r.eigenvalues) {
    r.max_imag = std::max(r.max_imag, std::abs(e.imag()));
    r.max_abs = std::max(r.max_abs, std::abs(e));
  }
  return r;
}

/// σ(P⁻¹Ā) for the given parameters.
inline SpectrumReport preconditioned_spectrum(const BlockSystem& sys, const PrecondParams& params,
                                              std::size_t cap = kSpectralCap) {
  return make_spectrum_report(eigenvalues_dense(dense_precond_matrix(sys, params, cap)));
}

/// σ(Ā), unpreconditioned.
inline SpectrumReport augmented_spectrum(const BlockSystem& sys, const PrecondParams& params,
                                         std::size_t cap = kSpectralCap) {
  require_desk_scale(sys, cap, "augmented_spectrum");
  const QMatrix q = make_q(sys, params);
  return make_spectrum_report(eigenvalues_dense(dense_augmented(sys, q, params.gamma)));
}

struct ClusterRow {
  double delta;
  double fraction;
};

inline std::vector<ClusterRow> cluster_stats(const SpectrumReport& report, std::span<const double> deltas) {
  std::vector<ClusterRow> out;
  out.reserve(deltas.size());
  for (double d : deltas) out.push_back({d, report.cluster_fraction(d)});
  return out;
}

// ---------------------------------------------------------------------------
// Eigenvector-based branch assignment.

enum class Branch { one, kernel, quadratic, unmatched };

struct BranchMatch {
  double lambda = 0.0;
  Branch branch = Branch::unmatched;
  double predicted = 0.0;  // value the matching formula gives for the eigenvector
  double rel_mismatch = 0.0;
  double eigvec_residual = 0.0;  // ‖Mv − λv‖ / ‖v‖
};

/// Real eigenvector of M for a (simple, real) eigenvalue by inverse iteration.
inline Vector eigenvector_inverse_iteration(const DenseMatrix& m, double lambda, std::uint64_t seed = 1) {
  const std::size_t n = m.rows();
  DenseMatrix shifted = m;
  const double shift = lambda + 1e-10 * std::max(1.0, std::abs(lambda));
  for (std::size_t i = 0; i < n; ++i) shifted(i, i) -= shift;
  std::optional<DenseLu> lu;
  try {
    lu.emplace(shifted);
  } catch (const FactorizationError&) {
    for (std::size_t i = 0; i < n; ++i) shifted(i, i) -= 1e-8 * std::max(1.0, std::abs(lambda));
    lu.emplace(shifted);
  }
  CounterRng rng(seed, n);
  Vector v = rng.uniform_vector(n);
  for (int it = 0; it < 3; ++it) {
    v = lu->solve(v);
    const double nv = norm2(v);
    if (!(nv > 0.0) || !std::isfinite(nv)) break;
    scale(1.0 / nv, v);
  }
  return v;
}

/// Assigns every real eigenvalue of M = P⁻¹Ā to the λ = 1 family, the
/// Ker(B) formula or the quadratic, from its computed eigenvector.
/// Mismatches are reported, not thrown. Costs one dense LU per eigenvalue.
inline std::vector<BranchMatch> match_branches(const BlockSystem& sys, const PrecondParams& params,
                                               const DenseMatrix& m, const SpectrumReport& spec,
                                               double tol = 1e-6) {
  const QuadraticForms forms(sys, params);
  std::vector<BranchMatch> out;
  out.reserve(spec.eigenvalues.size());
  for (const auto& e : spec.eigenvalues) {
    BranchMatch bm;
    bm.lambda = e.real();
    if (std::abs(e - 1.0) <= tol) {
      bm.branch = Branch::one;
      bm.predicted = 1.0;
      bm.rel_mismatch = std::abs(e - 1.0);
      out.push_back(bm);
      continue;
    }
    const Vector v = eigenvector_inverse_iteration(m, e.real());
    const Vector mv = m.multiply(v);
    Vector res = mv;
    axpy(-e.real(), v, res);
    bm.eigvec_residual = norm2(res) / norm2(v);
    const Vector y(v.begin() + static_cast<std::ptrdiff_t>(sys.n()),
                   v.begin() + static_cast<std::ptrdiff_t>(sys.n() + sys.m()));
    const double ny = norm2(y);
    if (!(ny > 0.0)) {
      out.push_back(bm);
      continue;
    }
    if (sys.p() == 0 || norm2(spmv(sys.b(), y)) <= 1e-8 * ny) {
      bm.predicted = 1.0 + forms.schur(y) / forms.a22(y);
      bm.rel_mismatch = std::abs(bm.predicted - bm.lambda) / std::abs(bm.lambda);
      bm.branch = bm.rel_mismatch <= tol ? Branch::kernel : Branch::unmatched;
    } else {
      const QuadSample s = forms.sample(y);
      const double d1 = std::abs(s.root1 - bm.lambda), d2 = std::abs(s.root2 - bm.lambda);
      bm.predicted = d1 <= d2 ? s.root1 : s.root2;
      bm.rel_mismatch = std::min(d1, d2) / std::abs(bm.lambda);
      bm.branch = bm.rel_mismatch <= tol ? Branch::quadratic : Branch::unmatched;
    }
    out.push_back(bm);
  }
  return out;
}

}  // namespace al3
