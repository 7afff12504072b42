#include <gtest/gtest.h>

#include "al3/block_al.hpp"
#include "al3/probgen.hpp"
#include "test_util.hpp"

using namespace al3;

namespace {

BlockSystem tiny_identity_system() {
  // n = m = p = 1: A11 = 2, A12 = 0, A22 = 3, B = 1, Mp = 1.
  return BlockSystem(SparseMatrix::diagonal(Vector{2}), SparseMatrix::zero(1, 1), SparseMatrix::diagonal(Vector{3}),
                     SparseMatrix::identity(1), SparseMatrix::identity(1));
}

Vector original_apply(const BlockSystem& sys, std::span<const double> u) {
  const QMatrix q(SparseMatrix::identity(sys.p()));
  return AugmentedOperator(sys, q, 0.0).apply(u);
}

double residual_norm(const DenseMatrix& a, std::span<const double> x, std::span<const double> b) {
  return norm2(subtract(a.multiply(x), b));
}

}  // namespace

TEST(AugmentRhs, ScalarExample) {
  const auto sys = tiny_identity_system();
  const QMatrix q(SparseMatrix::identity(1));
  const Vector b = augment_rhs(sys, q, 10.0, Vector{1}, Vector{2}, Vector{3});
  EXPECT_EQ(b, (Vector{1, 32, 3}));
}

TEST(AugmentRhs, GammaZeroIsIdentity) {
  const auto sys = fixtures::random_block_system(6, 5, 3, 1);
  const Vector b = CounterRng(1, 1).uniform_vector(sys.size());
  const auto blk = split_blocks(sys, std::span<const double>(b));
  EXPECT_EQ(augment_rhs(sys, make_q(sys, PrecondParams{}), 0.0, blk.u1, blk.u2, blk.u3), b);
}

TEST(AugmentRhs, SizeMismatchThrows) {
  const auto sys = tiny_identity_system();
  const QMatrix q(SparseMatrix::identity(1));
  EXPECT_THROW(augment_rhs(sys, q, 1.0, Vector{1}, Vector{2, 3}, Vector{3}), DimensionMismatch);
}

TEST(AugmentedOperator, MatchesDenseAssembly) {
  const auto sys = fixtures::random_block_system(30, 20, 10, 2);
  for (double gamma : {0.0, 1.0, 100.0}) {
    const auto params = PrecondParams::with_gamma(gamma > 0 ? gamma : 1.0);
    const QMatrix q = make_q(sys, params);
    const AugmentedOperator op(sys, q, gamma);
    const DenseMatrix dense = dense_augmented(sys, q, gamma);
    for (std::uint64_t s = 0; s < 3; ++s) {
      const Vector u = CounterRng(s, 3).uniform_vector(sys.size());
      const Vector d = dense.multiply(u);
      EXPECT_LE(norm2(subtract(op.apply(u), d)), 1e-12 * std::max(1.0, norm2(d))) << gamma;
    }
  }
}

TEST(AugmentedOperator, ZeroInputGivesZero) {
  const auto sys = fixtures::random_block_system(5, 4, 2, 3);
  const QMatrix q = make_q(sys, PrecondParams{});
  const AugmentedOperator op(sys, q, 7.0);
  EXPECT_EQ(op.apply(Vector(sys.size(), 0.0)), Vector(sys.size(), 0.0));
}

TEST(Equivalence, AugmentedAndOriginalShareSolution) {
  const auto sys = fixtures::random_block_system(20, 15, 8, 4);
  const Vector ustar = CounterRng(5, 5).uniform_vector(sys.size());
  const Vector b = original_apply(sys, ustar);
  for (double gamma : {1.0, 10.0, 100.0}) {
    const auto params = PrecondParams::with_gamma(gamma);
    const QMatrix q = make_q(sys, params);
    const Vector x0 = dense_lu_solve(dense_augmented(sys, q, 0.0), b);
    const Vector x1 = dense_lu_solve(dense_augmented(sys, q, gamma), augment_rhs(sys, params, b));
    EXPECT_LE(relative_diff(x0, x1), 1e-10) << gamma;
    EXPECT_LE(relative_diff(x1, ustar), 1e-8) << gamma;
  }
}

TEST(ExactPreconditioner, SolvesDensePreconditioner) {
  const auto sys = fixtures::random_block_system(25, 18, 9, 6);
  for (double ratio : {1.0, 2.0, 100.0}) {
    PrecondParams params = PrecondParams::with_gamma(10.0);
    params.alpha = 10.0 * ratio;
    const ExactPreconditioner prec(sys, params);
    const DenseMatrix pd = dense_preconditioner(sys, prec.q(), params.gamma, params.alpha);
    const Vector r = CounterRng(7, 7).uniform_vector(sys.size());
    const Vector w = prec.apply(r);
    EXPECT_LE(residual_norm(pd, w, r), 1e-10 * norm2(r)) << ratio;
    EXPECT_LE(relative_diff(w, dense_lu_solve(pd, r)), 1e-10) << ratio;
  }
}

TEST(ExactPreconditioner, ScalarCaseWithGammaEqualAlpha) {
  // γ = α = 1, Q = I: P = [2 0 0; 0 4 0; 0 1 -1].
  const auto sys = tiny_identity_system();
  PrecondParams params;
  params.gamma = params.alpha = 1.0;
  params.q_choice = QChoice::identity;
  const Vector w = ExactPreconditioner(sys, params).apply(Vector{2, 4, 0});
  EXPECT_NEAR(w[0], 1.0, 1e-14);
  EXPECT_NEAR(w[1], 1.0, 1e-14);
  EXPECT_NEAR(w[2], 1.0, 1e-14);
}

TEST(ExactPreconditioner, ThirdBlockEntersSecondSlot) {
  // Square B so a literal reading of the second slot as r2 is dimensionally possible.
  const auto sys = fixtures::random_block_system(8, 6, 6, 8);
  const auto params = PrecondParams::with_gamma(10.0);
  const ExactPreconditioner prec(sys, params);
  const DenseMatrix pd = dense_preconditioner(sys, prec.q(), params.gamma, params.alpha);
  const Vector r = CounterRng(9, 9).uniform_vector(sys.size());
  EXPECT_LE(residual_norm(pd, prec.apply(r), r), 1e-10 * norm2(r));

  // Wrong variant: inner right-hand side (r2 - γBᵀQ⁻¹r2; r3).
  const auto rb = split_blocks(sys, std::span<const double>(r));
  Vector rhs(sys.m() + sys.p());
  std::copy(rb.u2.begin(), rb.u2.end(), rhs.begin());
  std::copy(rb.u3.begin(), rb.u3.end(), rhs.begin() + 6);
  const Vector qr2 = prec.q().solve(rb.u2);
  sys.b().multiply_transpose_add(-params.gamma, qr2, std::span<double>(rhs).subspan(0, 6));
  DenseMatrix k(12, 12);
  const DenseMatrix a22 = sys.a22().to_dense(), bd = sys.b().to_dense(), qd = prec.q().matrix().to_dense();
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 6; ++j) {
      k(i, j) = a22(i, j);
      k(i, 6 + j) = bd(j, i);
      k(6 + i, j) = bd(i, j);
      k(6 + i, 6 + j) = -qd(i, j) / params.alpha;
    }
  const Vector s23 = dense_lu_solve(k, rhs);
  Vector r1(rb.u1.begin(), rb.u1.end());
  sys.a12().multiply_add(-1.0, std::span<const double>(s23).subspan(0, 6), r1);
  const Vector w1 = cholesky_solve(dense_cholesky(sys.a11().to_dense()), r1);
  const Vector wrong = stack(w1, std::span<const double>(s23).subspan(0, 6), std::span<const double>(s23).subspan(6));
  EXPECT_GT(residual_norm(pd, wrong, r), 1e-3 * norm2(r));
}

TEST(ExactPreconditioner, RightPreconditionedGmresOneIteration) {
  // Without a third block and with A12 = 0, P coincides with Ā.
  const BlockSystem sys(fixtures::random_spd_sparse(15, 3, 10), SparseMatrix::zero(15, 12),
                        fixtures::random_spd_sparse(12, 3, 11), SparseMatrix::zero(0, 12), SparseMatrix::zero(0, 0));
  const auto params = PrecondParams::with_gamma(5.0);
  const ExactPreconditioner prec(sys, params);
  const AugmentedOperator op(sys, prec.q(), params.gamma);
  const auto r = fgmres(op.as_operator(), prec.as_operator(), CounterRng(1, 11).uniform_vector(sys.size()),
                        {1e-10, 20});
  EXPECT_EQ(r.stats.iterations, 1u);
}

TEST(ExactPreconditioner, CapEnforced) {
  const auto sys = fixtures::random_block_system(15, 12, 6, 10);
  EXPECT_THROW(ExactPreconditioner(sys, PrecondParams{}, 10), InvalidInput);
}

TEST(InnerBlockPreconditioner, IdentityFactorsWithZeroB) {
  const std::size_t m = 3, p = 2;
  InnerPrecondFactors f{LowerTriangularFactor(SparseMatrix::identity(m)),
                        LowerTriangularFactor(SparseMatrix::identity(p)),
                        LowerTriangularFactor(SparseMatrix::identity(1))};
  const Vector r2{1, 2, 3}, r3{4, 5};
  Vector v2(m), v3(p);
  apply_inner_block_precond(f, SparseMatrix::zero(p, m), r2, r3, v2, v3);
  EXPECT_EQ(v2, r2);
  EXPECT_EQ(v3, (Vector{-4, -5}));
}

TEST(InnerBlockPreconditioner, ZeroR2) {
  const auto sys = fixtures::random_block_system(6, 8, 4, 12);
  const InexactPreconditioner prec(sys, PrecondParams{});
  const Vector r3 = CounterRng(1, 12).uniform_vector(4);
  Vector v2(8), v3(4);
  apply_inner_block_precond(prec.factors(), sys.b(), Vector(8, 0.0), r3, v2, v3);
  EXPECT_EQ(v2, Vector(8, 0.0));
  Vector expect(r3);
  scale(-1.0, expect);
  ic_apply_in_place(prec.factors().l_s, expect);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(v3[i], expect[i], 1e-14);
}

TEST(InnerBlockPreconditioner, ExactlyPreconditionsItsOwnMatrix) {
  const auto sys = fixtures::random_block_system(6, 8, 4, 12);
  const InexactPreconditioner prec(sys, PrecondParams{});
  const auto& f = prec.factors();
  // [Â22 0; B -Ŝ] as an operator, with Â22 = LLᵀ and Ŝ = LsLsᵀ.
  const auto lower = [](const LowerTriangularFactor& l, std::span<const double> x) {
    return spmv(l.matrix(), spmv_transpose(l.matrix(), x));
  };
  const LinearOperator own{12, [&](std::span<const double> x, std::span<double> y) {
                             const Vector a = lower(f.l_a22, x.subspan(0, 8));
                             Vector b = spmv(sys.b(), x.subspan(0, 8));
                             axpy(-1.0, lower(f.l_s, x.subspan(8)), b);
                             std::copy(a.begin(), a.end(), y.begin());
                             std::copy(b.begin(), b.end(), y.begin() + 8);
                           }};
  const auto r = gmres_right(own, prec.inner_preconditioner(), CounterRng(2, 2).uniform_vector(12), {1e-10, 10});
  EXPECT_EQ(r.stats.iterations, 1u);
}

TEST(InnerBlockPreconditioner, SolvesLowerBlockTriangle) {
  const auto sys = fixtures::random_block_system(6, 8, 4, 12);
  PrecondParams params;
  params.droptol_a22 = params.droptol_s = 0.0;
  const InexactPreconditioner prec(sys, params);
  const Vector r = CounterRng(2, 12).uniform_vector(12);
  const Vector v = prec.inner_preconditioner()(r);
  // Check [A22 0; B -S] v = r with S = Q/α + Mp.
  const DenseMatrix a22 = sys.a22().to_dense();
  const SparseMatrix s = add(prec.q().matrix(), sys.mp(), 1.0 / params.alpha, 1.0);
  const std::span<const double> v2(v.data(), 8), v3(v.data() + 8, 4);
  const Vector top = a22.multiply(v2);
  Vector bottom = spmv(sys.b(), v2);
  axpy(-1.0, spmv(s, v3), bottom);
  for (std::size_t i = 0; i < 8; ++i) EXPECT_NEAR(top[i], r[i], 1e-12);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(bottom[i], r[8 + i], 1e-12);
}

TEST(InexactPreconditioner, ApproachesExactAtTightInnerTolerance) {
  const auto sys = fixtures::random_block_system(30, 20, 10, 13);
  PrecondParams params = PrecondParams::with_gamma(10.0);
  params.inner_gmres_tol = 1e-12;
  params.pcg_tol = 1e-12;
  params.pcg_maxit = 200;
  const InexactPreconditioner inexact(sys, params);
  const ExactPreconditioner exact(sys, params);
  const Vector r = CounterRng(3, 13).uniform_vector(sys.size());
  InnerStats st;
  const Vector wi = inexact.apply(r, st);
  const Vector we = exact.apply(r);
  EXPECT_LE(norm2(subtract(wi, we)), 1e-8 * norm2(we));
  EXPECT_EQ(st.applications, 1u);
  EXPECT_GT(st.gmres_iterations, 0u);
}

TEST(InexactPreconditioner, DecouplesWithoutA12) {
  const auto sys = fixtures::random_block_system(10, 8, 4, 14, 0.0);
  PrecondParams params = PrecondParams::with_gamma(3.0);
  params.inner_gmres_tol = params.pcg_tol = 1e-13;
  params.pcg_maxit = 100;
  const InexactPreconditioner prec(sys, params);
  Vector r = CounterRng(4, 14).uniform_vector(sys.size());
  InnerStats st;
  const Vector w = prec.apply(r, st);
  const Vector w1 = cholesky_solve(dense_cholesky(sys.a11().to_dense()), std::span<const double>(r).subspan(0, 10));
  for (std::size_t i = 0; i < 10; ++i) EXPECT_NEAR(w[i], w1[i], 1e-10);
}

TEST(Solve, ZeroRhsNeedsNoIterations) {
  const auto sys = fixtures::random_block_system(10, 8, 4, 15);
  const auto out = solve(sys, PrecondParams::with_gamma(10.0), Vector(sys.size(), 0.0));
  EXPECT_EQ(out.report.outer_iters, 0u);
  EXPECT_TRUE(out.report.converged);
  EXPECT_EQ(out.u, Vector(sys.size(), 0.0));
}

TEST(Solve, ExactAndInexactRecoverManufacturedSolution) {
  const auto sys = fixtures::random_block_system(40, 30, 12, 16);
  const Vector ustar = CounterRng(5, 16).uniform_vector(sys.size());
  const Vector b = original_apply(sys, ustar);
  for (auto kind : {PreconditionerKind::exact, PreconditionerKind::inexact}) {
    SolveOptions opt;
    opt.kind = kind;
    opt.reference = ustar;
    const auto out = solve(sys, PrecondParams::with_gamma(10.0), b, opt);
    EXPECT_TRUE(out.report.converged);
    EXPECT_LE(*out.report.err, 1e-6);
    EXPECT_LE(out.report.true_relative_residual, 1.1e-7);
  }
}

TEST(Solve, InvalidAlphaRejected) {
  const auto sys = fixtures::random_block_system(5, 4, 2, 17);
  PrecondParams p = PrecondParams::with_gamma(10.0);
  p.alpha = 5.0;
  EXPECT_THROW(solve(sys, p, Vector(sys.size(), 1.0)), InvalidInput);
}

TEST(Solve, IterationsNonincreasingInGamma) {
  GenSpec spec;
  spec.seed = 3;
  const auto sys = generate(spec);
  const Vector ustar = CounterRng(3, 1).uniform_vector(sys.size());
  const Vector b = original_apply(sys, ustar);
  std::size_t prev = 1000;
  for (double gamma : {1.0, 10.0, 100.0, 1000.0}) {
    const auto out = solve(sys, PrecondParams::with_gamma(gamma), b);
    ASSERT_TRUE(out.report.converged) << gamma;
    EXPECT_LE(out.report.outer_iters, prev + 1) << gamma;
    prev = out.report.outer_iters;
  }
}

TEST(Solve, LooseToleranceTakesAtMostOneIteration) {
  const auto sys = fixtures::random_block_system(20, 15, 6, 18);
  SolveOptions opt;
  opt.tol = 1.0;
  const auto out = solve(sys, PrecondParams::with_gamma(10.0), CounterRng(1, 18).uniform_vector(sys.size()), opt);
  EXPECT_LE(out.report.outer_iters, 1u);
}
