#pragma once

// Synthetic Stokes-Darcy-like block systems on the unit cube.
//
// With N = coarse·2^(level-1) cells per side and h = 1/N:
//  - u1 lives on an (N+1)³ node grid: A11 = h·L + h³·I, L the 7-point
//    Dirichlet Laplacian stencil (6, -1);
//  - u2 is a staggered (MAC) velocity. Walls have zero normal flow except
//    the bottom face z = 0, whose vertical velocities are unknowns (the
//    interface). A22 is the coefficient-weighted vector Laplacian
//    (harmonic-mean edge weights, Dirichlet walls) plus a k-weighted mass
//    term h³·k;
//  - u3 is the cell pressure, scaled so that B = h·div. Because the
//    interface is open, B has full row rank with no row removed. Mp is a
//    tridiagonal mass matrix weighted by the mean inverse face coefficient
//    of each cell, which keeps Mp close to B diag(A22)⁻¹ Bᵀ across jumps;
//  - A12 couples the top node layer of the first grid to the interface
//    velocities with random weights.
// k is piecewise constant on the eight octants, log-uniform in
// [jump_lo, jump_hi], and depends on the seed only, so every level sees
// the same coefficient field.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "al3/block_al.hpp"
#include "al3/block_system.hpp"
#include "al3/dense.hpp"
#include "al3/error.hpp"
#include "al3/random.hpp"
#include "al3/sparse.hpp"

namespace al3 {

struct GenSpec {
  std::size_t level = 1;
  std::uint64_t seed = 0;
  double jump_lo = 1e-4;
  double jump_hi = 1e4;
  double coupling_scale = 2.0;
  std::size_t coarse = 6;  // cells per side at level 1

  void validate() const {
    if (level < 1) throw InvalidInput("GenSpec: level must be >= 1");
    if (level > 12) throw InvalidInput("GenSpec: level too large");
    if (!(jump_lo > 0.0) || !(jump_hi >= jump_lo)) throw InvalidInput("GenSpec: need 0 < jump_lo <= jump_hi");
    if (!(coupling_scale >= 0.0)) throw InvalidInput("GenSpec: coupling_scale must be nonnegative");
    if (coarse < 2) throw InvalidInput("GenSpec: coarse must be >= 2");
  }

  [[nodiscard]] std::size_t cells_per_side() const { return coarse << (level - 1); }

  /// n + m + p for this spec without building anything.
  [[nodiscard]] std::size_t total_size() const {
    const std::size_t c = cells_per_side();
    return (c + 1) * (c + 1) * (c + 1) + 3 * (c - 1) * c * c + c * c + c * c * c;
  }
};

struct GenInfo {
  std::size_t cells_per_side = 0;
  double coupling_scale = 0.0;  // after automatic halving
  std::size_t halvings = 0;
  double dominance_ratio = 0.0;   // sufficient-condition ratio, < 1 certifies dominance
  std::optional<double> dominance_margin;  // dense λ_min(A22 − A12ᵀA11⁻¹A12), desk scale
  std::array<double, 8> octant_coefficients{};
};

struct GeneratedProblem {
  BlockSystem system;
  GenInfo info;
};

struct StructureReport {
  double sym_a11 = 0.0, sym_a22 = 0.0, sym_mp = 0.0;
  bool spd_a11 = false, spd_a22 = false, spd_mp = false;
  std::size_t b_rank = 0;
  bool b_full_row_rank = false;
  bool rank_probabilistic = false;
  std::optional<double> dominance_margin;  // λ_min(A22 − A12ᵀA11⁻¹A12), desk scale only

  [[nodiscard]] bool symmetric() const {
    return sym_a11 <= BlockSystem::kSymmetryTolerance && sym_a22 <= BlockSystem::kSymmetryTolerance &&
           sym_mp <= BlockSystem::kSymmetryTolerance;
  }
  [[nodiscard]] bool dominance_pass() const { return dominance_margin && *dominance_margin > 0.0; }
  /// Everything checked passed; dominance counts only when it was evaluated.
  [[nodiscard]] bool all_pass() const {
    return symmetric() && spd_a11 && spd_a22 && spd_mp && b_full_row_rank &&
           (!dominance_margin || *dominance_margin > 0.0);
  }
};

namespace detail {

/// Strictly diagonally dominant with positive diagonal (sufficient for SPD
/// when symmetric).
inline bool strictly_diagonally_dominant(const SparseMatrix& a) {
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double diag = 0.0, off = 0.0;
    const auto rc = a.row_cols(i);
    const auto rv = a.row_values(i);
    for (std::size_t k = 0; k < rc.size(); ++k) (rc[k] == i ? diag : off) += std::abs(rv[k]);
    if (!(a.at(i, i) > 0.0) || !(diag > off)) return false;
  }
  return true;
}

inline bool is_spd(const SparseMatrix& a, bool desk_scale) {
  if (a.rows() == 0) return true;
  if (symmetry_residual(a) > BlockSystem::kSymmetryTolerance) return false;
  if (strictly_diagonally_dominant(a)) return true;
  try {
    if (desk_scale) {
      (void)dense_cholesky(a.to_dense());
    } else {
      (void)ic_threshold(a, 0.0);
    }
    return true;
  } catch (const FactorizationError&) {
    return false;
  }
}

}  // namespace detail

/// Dense A12ᵀA11⁻¹A12 (desk scale).
inline DenseMatrix schur_term_dense(const SparseMatrix& a11, const SparseMatrix& a12) {
  const DenseMatrix l = dense_cholesky(a11.to_dense());
  const std::size_t n = a11.rows(), m = a12.cols();
  DenseMatrix x(n, m);  // L⁻¹ A12
  const SparseMatrix a12t = transpose(a12);
  for (std::size_t j = 0; j < m; ++j) {
    if (a12t.row_cols(j).empty()) continue;
    Vector c(n, 0.0);
    const auto rc = a12t.row_cols(j);
    const auto rv = a12t.row_values(j);
    for (std::size_t k = 0; k < rc.size(); ++k) c[rc[k]] = rv[k];
    for (std::size_t i = 0; i < n; ++i) {
      double s = c[i];
      for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * c[k];
      c[i] = s / l(i, i);
    }
    x.set_column(j, c);
  }
  return multiply(x.transposed(), x);
}

namespace detail {

/// λ_min(A22 − A12ᵀA11⁻¹A12), dense.
inline double dominance_margin_dense(const SparseMatrix& a11, const SparseMatrix& a12, const SparseMatrix& a22) {
  if (a22.rows() == 0) return std::numeric_limits<double>::infinity();
  return symmetric_eigenvalues(add(a22.to_dense(), schur_term_dense(a11, a12), -1.0)).front();
}

struct Grid3 {
  std::size_t nx, ny, nz;
  [[nodiscard]] std::size_t size() const { return nx * ny * nz; }
  [[nodiscard]] std::size_t index(std::size_t i, std::size_t j, std::size_t l) const {
    return i + nx * (j + ny * l);
  }
};

inline double harmonic(double a, double b) { return 2.0 * a * b / (a + b); }

}  // namespace detail

inline GeneratedProblem generate_with_info(const GenSpec& spec, std::size_t desk_cap = 2000) {
  spec.validate();
  const std::size_t nc = spec.cells_per_side();
  const double h = 1.0 / static_cast<double>(nc);
  const double h3 = h * h * h;
  GenInfo info;
  info.cells_per_side = nc;

  CounterRng perm_rng(spec.seed, 1);
  for (auto& k : info.octant_coefficients) k = perm_rng.log_uniform(spec.jump_lo, spec.jump_hi);
  const auto cell_k = [&](std::size_t i, std::size_t j, std::size_t l) {
    const auto half = [&](std::size_t c) { return 2 * c + 1 >= nc ? 1u : 0u; };  // center ≥ 1/2
    return info.octant_coefficients[half(i) + 2 * half(j) + 4 * half(l)];
  };

  // --- A11: (N+1)³ node grid, h·L + h³·I
  const std::size_t nd = nc + 1;
  const detail::Grid3 dg{nd, nd, nd};
  std::vector<Triplet> t11;
  t11.reserve(7 * dg.size());
  for (std::size_t l = 0; l < nd; ++l)
    for (std::size_t j = 0; j < nd; ++j)
      for (std::size_t i = 0; i < nd; ++i) {
        const std::size_t r = dg.index(i, j, l);
        t11.push_back({r, r, 6.0 * h + h3});
        if (i > 0) t11.push_back({r, dg.index(i - 1, j, l), -h});
        if (i + 1 < nd) t11.push_back({r, dg.index(i + 1, j, l), -h});
        if (j > 0) t11.push_back({r, dg.index(i, j - 1, l), -h});
        if (j + 1 < nd) t11.push_back({r, dg.index(i, j + 1, l), -h});
        if (l > 0) t11.push_back({r, dg.index(i, j, l - 1), -h});
        if (l + 1 < nd) t11.push_back({r, dg.index(i, j, l + 1), -h});
      }
  SparseMatrix a11 = SparseMatrix::from_triplets(dg.size(), dg.size(), t11);
  const double s1 = std::sin(std::numbers::pi / (2.0 * static_cast<double>(nd + 1)));
  const double lambda_min_a11 = h * 12.0 * s1 * s1 + h3;

  // --- velocity grids; w includes the interface faces at z = 0 (l = 0),
  // so the divergence has full row rank without dropping a cell
  const std::array<detail::Grid3, 3> vg{{{nc - 1, nc, nc}, {nc, nc - 1, nc}, {nc, nc, nc}}};
  const std::array<std::size_t, 3> voff{0, vg[0].size(), vg[0].size() + vg[1].size()};
  const std::size_t m = vg[0].size() + vg[1].size() + vg[2].size();
  // face coefficient: harmonic mean of the two cells sharing the face
  const auto face_k = [&](int comp, std::size_t i, std::size_t j, std::size_t l) {
    switch (comp) {
      case 0: return detail::harmonic(cell_k(i, j, l), cell_k(i + 1, j, l));
      case 1: return detail::harmonic(cell_k(i, j, l), cell_k(i, j + 1, l));
      default: return l == 0 ? cell_k(i, j, 0) : detail::harmonic(cell_k(i, j, l - 1), cell_k(i, j, l));
    }
  };
  Vector kvel(m);
  for (int c = 0; c < 3; ++c) {
    const auto& g = vg[static_cast<std::size_t>(c)];
    for (std::size_t l = 0; l < g.nz; ++l)
      for (std::size_t j = 0; j < g.ny; ++j)
        for (std::size_t i = 0; i < g.nx; ++i)
          kvel[voff[static_cast<std::size_t>(c)] + g.index(i, j, l)] = face_k(c, i, j, l);
  }
  std::vector<Triplet> t22;
  t22.reserve(7 * m);
  Vector excess(m, 0.0);  // diagonal minus off-diagonal row sum
  for (int c = 0; c < 3; ++c) {
    const auto& g = vg[static_cast<std::size_t>(c)];
    const std::size_t off = voff[static_cast<std::size_t>(c)];
    for (std::size_t l = 0; l < g.nz; ++l)
      for (std::size_t j = 0; j < g.ny; ++j)
        for (std::size_t i = 0; i < g.nx; ++i) {
          const std::size_t r = off + g.index(i, j, l);
          const double kr = kvel[r];
          double diag = h3 * kr;
          double ex = diag;
          const auto link = [&](bool inside, std::size_t ni, std::size_t nj, std::size_t nl) {
            if (inside) {
              const std::size_t q = off + g.index(ni, nj, nl);
              const double w = h * detail::harmonic(kr, kvel[q]);
              diag += w;
              t22.push_back({r, q, -w});
            } else {
              diag += h * kr;
              ex += h * kr;
            }
          };
          link(i > 0, i - 1, j, l);
          link(i + 1 < g.nx, i + 1, j, l);
          link(j > 0, i, j - 1, l);
          link(j + 1 < g.ny, i, j + 1, l);
          link(l > 0, i, j, l - 1);
          link(l + 1 < g.nz, i, j, l + 1);
          t22.push_back({r, r, diag});
          excess[r] = ex;
        }
  }
  SparseMatrix a22 = SparseMatrix::from_triplets(m, m, t22);

  // --- B = h·div (pressure unknowns carry a factor 1/h so that B and A22
  // are of the same order in h)
  const detail::Grid3 cg{nc, nc, nc};
  const std::size_t p = cg.size();
  std::vector<Triplet> tb;
  tb.reserve(6 * p);
  const double h2 = h * h;
  const double bh = h;
  for (std::size_t l = 0; l < nc; ++l)
    for (std::size_t j = 0; j < nc; ++j)
      for (std::size_t i = 0; i < nc; ++i) {
        const std::size_t r = cg.index(i, j, l);
        if (i + 1 < nc) tb.push_back({r, voff[0] + vg[0].index(i, j, l), bh});
        if (i > 0) tb.push_back({r, voff[0] + vg[0].index(i - 1, j, l), -bh});
        if (j + 1 < nc) tb.push_back({r, voff[1] + vg[1].index(i, j, l), bh});
        if (j > 0) tb.push_back({r, voff[1] + vg[1].index(i, j - 1, l), -bh});
        if (l + 1 < nc) tb.push_back({r, voff[2] + vg[2].index(i, j, l + 1), bh});
        tb.push_back({r, voff[2] + vg[2].index(i, j, l), -bh});
      }
  SparseMatrix b = SparseMatrix::from_triplets(p, m, tb);

  // --- Mp: mass weighted by the mean inverse face coefficient of each cell,
  // which tracks diag(B diag(A22)⁻¹ Bᵀ) across jumps; couplings along x-lines
  Vector pw(p, 0.0);
  for (std::size_t l = 0; l < nc; ++l)
    for (std::size_t j = 0; j < nc; ++j)
      for (std::size_t i = 0; i < nc; ++i) {
        const double kc = cell_k(i, j, l);
        double s = 0.0;
        s += 1.0 / (i > 0 ? kvel[voff[0] + vg[0].index(i - 1, j, l)] : kc);
        s += 1.0 / (i + 1 < nc ? kvel[voff[0] + vg[0].index(i, j, l)] : kc);
        s += 1.0 / (j > 0 ? kvel[voff[1] + vg[1].index(i, j - 1, l)] : kc);
        s += 1.0 / (j + 1 < nc ? kvel[voff[1] + vg[1].index(i, j, l)] : kc);
        s += 1.0 / kvel[voff[2] + vg[2].index(i, j, l)];
        s += 1.0 / (l + 1 < nc ? kvel[voff[2] + vg[2].index(i, j, l + 1)] : kc);
        pw[cg.index(i, j, l)] = s / 6.0;
      }
  std::vector<Triplet> tm;
  tm.reserve(3 * p);
  const double mscale = h;
  for (std::size_t l = 0; l < nc; ++l)
    for (std::size_t j = 0; j < nc; ++j)
      for (std::size_t i = 0; i < nc; ++i) {
        const std::size_t r = cg.index(i, j, l);
        tm.push_back({r, r, mscale * (2.0 / 3.0) * pw[r]});
        for (std::size_t ni : {i - 1, i + 1}) {
          if (ni >= nc) continue;  // wraps for i = 0
          const std::size_t q = cg.index(ni, j, l);
          tm.push_back({r, q, mscale * (1.0 / 6.0) * std::min(pw[r], pw[q])});
        }
      }
  SparseMatrix mp = SparseMatrix::from_triplets(p, p, tm);

  // --- A12 template (unit coupling scale)
  CounterRng coup_rng(spec.seed, 2 + 1000 * spec.level);
  std::vector<Triplet> t12;
  const auto& wg = vg[2];
  for (std::size_t j = 0; j < nc; ++j)
    for (std::size_t i = 0; i < nc; ++i) {
      const std::size_t col = voff[2] + wg.index(i, j, 0);
      const double base = h2 * std::sqrt(kvel[col]);
      t12.push_back({dg.index(i, j, nd - 1), col, base * coup_rng.uniform(0.5, 1.5)});
      const double extra = coup_rng.uniform();
      const double wgt = coup_rng.uniform(-0.5, 0.5);
      if (extra < 0.5) t12.push_back({dg.index(i + 1, j, nd - 1), col, base * wgt});
    }
  const SparseMatrix a12_unit = SparseMatrix::from_triplets(dg.size(), m, t12);

  // sufficient condition: A12ᵀA11⁻¹A12 ≤ diag(|A12|ᵀ|A12|1)/λ_min(A11) < diag(excess) ≤ A22
  double ratio_unit = 0.0;
  {
    const SparseMatrix abs12 = abs_entries(a12_unit);
    const Vector rows = spmv(abs12, Vector(m, 1.0));
    const Vector d = spmv_transpose(abs12, rows);
    for (std::size_t j = 0; j < m; ++j) ratio_unit = std::max(ratio_unit, d[j] / (lambda_min_a11 * excess[j]));
  }

  const bool desk = spec.total_size() <= desk_cap;
  double c = spec.coupling_scale;
  SparseMatrix a12;
  for (std::size_t halvings = 0;; ++halvings) {
    a12 = scaled(a12_unit, c);
    if (c == 0.0) a12 = SparseMatrix::zero(dg.size(), m);
    info.dominance_ratio = ratio_unit * c * c;
    bool ok = info.dominance_ratio < 1.0;
    if (ok && desk) {
      info.dominance_margin = detail::dominance_margin_dense(a11, a12, a22);
      ok = *info.dominance_margin > 0.0;
    }
    if (ok || halvings == 30) {
      info.halvings = halvings;
      break;
    }
    c *= 0.5;
  }
  info.coupling_scale = c;

  return {BlockSystem(std::move(a11), std::move(a12), std::move(a22), std::move(b), std::move(mp)), info};
}

inline BlockSystem generate(const GenSpec& spec) { return generate_with_info(spec).system; }

/// Checks the structural assumptions on the blocks. With desk_scale the
/// rank of B and the dominance margin are computed densely; otherwise the
/// rank check only probes random vectors against Bᵀ (probabilistic).
inline StructureReport verify_structure(const BlockSystem& sys, bool desk_scale) {
  StructureReport rep;
  rep.sym_a11 = symmetry_residual(sys.a11());
  rep.sym_a22 = symmetry_residual(sys.a22());
  rep.sym_mp = symmetry_residual(sys.mp());
  rep.spd_a11 = detail::is_spd(sys.a11(), desk_scale);
  rep.spd_a22 = detail::is_spd(sys.a22(), desk_scale);
  rep.spd_mp = detail::is_spd(sys.mp(), desk_scale);

  const std::size_t p = sys.p();
  if (desk_scale) {
    const DenseMatrix bd = sys.b().to_dense();
    const Vector ev = symmetric_eigenvalues(multiply(bd, bd.transposed()));
    const double top = ev.empty() ? 0.0 : ev.back();
    for (double e : ev)
      if (e > 1e-12 * top && e > 0.0) ++rep.b_rank;
    rep.b_full_row_rank = rep.b_rank == p;
    if (rep.spd_a11) rep.dominance_margin = detail::dominance_margin_dense(sys.a11(), sys.a12(), sys.a22());
  } else {
    rep.rank_probabilistic = true;
    CounterRng rng(0xb0a7, p);
    bool ok = true;
    for (int trial = 0; trial < 4 && p > 0; ++trial) {
      const Vector z = rng.uniform_vector(p);
      ok = ok && norm2(spmv_transpose(sys.b(), z)) > 0.0;
    }
    for (std::size_t i = 0; i < p && ok; ++i) ok = !sys.b().row_cols(i).empty();
    rep.b_full_row_rank = ok;
    rep.b_rank = ok ? p : 0;
  }
  return rep;
}

}  // namespace al3
