#include <gtest/gtest.h>

#include "al3/block_al.hpp"
#include "al3/probgen.hpp"
#include "test_util.hpp"

using namespace al3;

namespace {

GenSpec small(std::uint64_t seed = 0) {
  GenSpec s;
  s.coarse = 3;
  s.seed = seed;
  return s;
}

}  // namespace

TEST(Generate, Deterministic) {
  const auto a = generate(small(5));
  const auto b = generate(small(5));
  EXPECT_TRUE(a == b);
  const auto c = generate(small(6));
  EXPECT_FALSE(a == c);
}

TEST(Generate, SizeMatchesPrediction) {
  for (std::size_t coarse : {3u, 4u, 6u}) {
    GenSpec s;
    s.coarse = coarse;
    const auto sys = generate(s);
    EXPECT_EQ(sys.size(), s.total_size());
  }
}

TEST(Generate, LevelGrowthWithinFourToEight) {
  GenSpec s;
  s.level = 1;
  double prev = static_cast<double>(s.total_size());
  EXPECT_GT(prev, 500.0);
  EXPECT_LT(prev, 2000.0);
  for (std::size_t level = 2; level <= 4; ++level) {
    s.level = level;
    const double cur = static_cast<double>(s.total_size());
    EXPECT_GE(cur / prev, 4.0) << level;
    EXPECT_LE(cur / prev, 8.0) << level;
    prev = cur;
  }
  EXPECT_GT(prev, 2.5e5);
  EXPECT_LT(prev, 1e6);
}

TEST(Generate, LevelOnePassesStructureChecks) {
  const auto gp = generate_with_info(GenSpec{});
  const auto rep = verify_structure(gp.system, true);
  EXPECT_TRUE(rep.symmetric());
  EXPECT_TRUE(rep.spd_a11);
  EXPECT_TRUE(rep.spd_a22);
  EXPECT_TRUE(rep.spd_mp);
  EXPECT_TRUE(rep.b_full_row_rank);
  ASSERT_TRUE(rep.dominance_margin.has_value());
  EXPECT_GT(*rep.dominance_margin, 0.0);
  EXPECT_LE(gp.info.halvings, 30u);
}

TEST(Generate, CoarseSeedsPassDominance) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto rep = verify_structure(generate(small(seed)), true);
    EXPECT_TRUE(rep.all_pass()) << seed;
    EXPECT_TRUE(rep.dominance_pass()) << seed;
  }
}

TEST(Generate, ZeroCouplingGivesUnitEigenvalues) {
  GenSpec s = small(2);
  s.coupling_scale = 0.0;
  const auto sys = generate(s);
  EXPECT_EQ(sys.a12().nnz(), 0u);
  const auto params = PrecondParams::with_gamma(10.0);
  const ExactPreconditioner prec(sys, params);
  const DenseMatrix abar = dense_augmented(sys, prec.q(), params.gamma);
  const std::size_t dim = sys.size();
  std::size_t ones = 0;
  DenseMatrix pm(dim, dim);
  for (std::size_t j = 0; j < dim; ++j) pm.set_column(j, prec.apply(abar.column(j)));
  for (const auto& z : eigenvalues_dense(pm))
    if (std::abs(z - 1.0) < 1e-8) ++ones;
  EXPECT_GE(ones, sys.n());
}

TEST(Generate, InvalidSpecRejected) {
  GenSpec s;
  s.level = 0;
  EXPECT_THROW(generate(s), InvalidInput);
  s = GenSpec{};
  s.jump_lo = 10.0;
  s.jump_hi = 1.0;
  EXPECT_THROW(generate(s), InvalidInput);
}

TEST(VerifyStructure, IdentityBlocksPass) {
  const BlockSystem sys(SparseMatrix::identity(3), SparseMatrix::zero(3, 4), SparseMatrix::identity(4),
                        SparseMatrix::from_dense(DenseMatrix(2, 4, {1, 0, 0, 0, 0, 1, 0, 0})),
                        SparseMatrix::identity(2));
  const auto rep = verify_structure(sys, true);
  EXPECT_TRUE(rep.all_pass());
  EXPECT_EQ(rep.b_rank, 2u);
  EXPECT_NEAR(*rep.dominance_margin, 1.0, 1e-12);
}

TEST(VerifyStructure, RankDeficientBAndIndefiniteA22Fail) {
  const BlockSystem sys(SparseMatrix::identity(2), SparseMatrix::zero(2, 3),
                        SparseMatrix::from_dense(DenseMatrix(3, 3, {1, 2, 0, 2, 1, 0, 0, 0, 1})),
                        SparseMatrix::from_dense(DenseMatrix(2, 3, {1, 1, 0, 2, 2, 0})),
                        SparseMatrix::identity(2));
  const auto rep = verify_structure(sys, true);
  EXPECT_FALSE(rep.spd_a22);
  EXPECT_FALSE(rep.b_full_row_rank);
  EXPECT_EQ(rep.b_rank, 1u);
  EXPECT_FALSE(rep.all_pass());
}

TEST(VerifyStructure, StrongCouplingFailsDominance) {
  // A22 - A12ᵀA11⁻¹A12 = 1 - 4 < 0.
  const BlockSystem sys(SparseMatrix::identity(1), SparseMatrix::diagonal(Vector{2}), SparseMatrix::identity(1),
                        SparseMatrix::identity(1), SparseMatrix::identity(1));
  const auto rep = verify_structure(sys, true);
  EXPECT_FALSE(rep.dominance_pass());
  EXPECT_NEAR(*rep.dominance_margin, -3.0, 1e-12);
}

TEST(VerifyStructure, ProbabilisticModeAtScale) {
  const auto rep = verify_structure(generate(small(1)), false);
  EXPECT_TRUE(rep.rank_probabilistic);
  EXPECT_TRUE(rep.b_full_row_rank);
  EXPECT_FALSE(rep.dominance_margin.has_value());
}

TEST(Generate, SaveLoadRoundTrip) {
  const auto sys = generate(small(4));
  const auto dir = std::filesystem::temp_directory_path() / "al3_probgen_roundtrip";
  std::filesystem::remove_all(dir);
  save_block_system(dir, sys);
  EXPECT_TRUE(load_block_system(dir) == sys);
  std::filesystem::remove_all(dir);
}
