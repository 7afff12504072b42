#include <gtest/gtest.h>

#include <sstream>

#include "al3/matrix_market.hpp"
#include "al3/sparse.hpp"
#include "test_util.hpp"

using namespace al3;

TEST(Spmv, IdentityReturnsInput) {
  const Vector x{1, 2, 3};
  EXPECT_EQ(spmv(SparseMatrix::identity(3), x), x);
}

TEST(Spmv, HandExample) {
  const auto a = SparseMatrix::from_triplets(2, 2, {{0, 0, 2}, {1, 0, 1}, {1, 1, 3}});
  EXPECT_EQ(spmv(a, Vector{1, 1}), (Vector{2, 4}));
}

TEST(Spmv, ZeroVector) {
  const auto a = fixtures::random_sparse(6, 4, 9, 3);
  EXPECT_EQ(spmv(a, Vector(4, 0.0)), Vector(6, 0.0));
}

TEST(Spmv, DimensionMismatchThrows) {
  EXPECT_THROW(spmv(SparseMatrix::identity(3), Vector{1, 2}), DimensionMismatch);
}

TEST(Spmv, ColumnsMatchStructure) {
  const auto a = fixtures::random_sparse(7, 5, 12, 8);
  for (std::size_t j = 0; j < 5; ++j) {
    const Vector c = spmv(a, unit_vector(5, j));
    for (std::size_t i = 0; i < 7; ++i) EXPECT_EQ(c[i], a.at(i, j));
  }
}

TEST(SparseMatrix, ValidatesCsr) {
  EXPECT_THROW(SparseMatrix(2, 2, {0, 2, 1}, {0, 1}, {1.0, 1.0}), InvalidInput);
  EXPECT_THROW(SparseMatrix(2, 2, {0, 2, 2}, {1, 0}, {1.0, 1.0}), InvalidInput);
  EXPECT_THROW(SparseMatrix(1, 2, {0, 1}, {2}, {1.0}), InvalidInput);
}

TEST(SparseMatrix, TripletsSumDuplicatesAndPruneZeros) {
  const auto a = SparseMatrix::from_triplets(2, 2, {{0, 0, 1}, {0, 0, 2}, {1, 1, 1}, {1, 1, -1}});
  EXPECT_EQ(a.nnz(), 1u);
  EXPECT_EQ(a.at(0, 0), 3.0);
  const auto k = SparseMatrix::from_triplets(2, 2, {{1, 1, 0.0}}, ZeroPolicy::keep);
  EXPECT_EQ(k.nnz(), 1u);
}

TEST(Transpose, Identity) {
  EXPECT_EQ(transpose(SparseMatrix::identity(4)), SparseMatrix::identity(4));
}

TEST(Transpose, SingleEntry) {
  const auto a = SparseMatrix::from_triplets(2, 2, {{0, 1, 1}});
  const auto t = transpose(a);
  EXPECT_EQ(t.nnz(), 1u);
  EXPECT_EQ(t.at(1, 0), 1.0);
  EXPECT_EQ(t.at(0, 1), 0.0);
}

TEST(Transpose, ColumnExtraction) {
  const auto a = fixtures::random_sparse(5, 3, 7, 21);
  const auto t = transpose(a);
  for (std::size_t i = 0; i < 5; ++i) {
    const Vector r = spmv(t, unit_vector(5, i));
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(r[j], a.at(i, j));
  }
}

TEST(Transpose, AdjointConsistency) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto a = fixtures::random_sparse(40, 25, 120, seed);
    CounterRng rng(seed, 1);
    const Vector x = rng.uniform_vector(25), y = rng.uniform_vector(40);
    const double lhs = dot(y, spmv(a, x));
    const double rhs = dot(spmv_transpose(a, y), x);
    EXPECT_NEAR(lhs, rhs, 1e-13 * std::max(1.0, std::abs(lhs)));
    EXPECT_EQ(spmv(transpose(a), y), spmv_transpose(a, y));
  }
}

TEST(MatrixMarket, RoundTripScalar) {
  const auto a = SparseMatrix::from_triplets(1, 1, {{0, 0, 5.0}});
  std::stringstream ss;
  mm_write(a, ss);
  EXPECT_EQ(mm_read(ss), a);
}

TEST(MatrixMarket, SymmetricExpansion) {
  std::stringstream ss("%%MatrixMarket matrix coordinate real symmetric\n% comment\n2 2 3\n1 1 2\n2 1 1\n2 2 2\n");
  const auto a = mm_read(ss);
  EXPECT_EQ(a.nnz(), 4u);
  EXPECT_EQ(a.to_dense().values()[1], 1.0);
  EXPECT_EQ(a.at(0, 1), 1.0);
  EXPECT_EQ(a.at(1, 0), 1.0);
}

TEST(MatrixMarket, RoundTripBitIdentical) {
  CounterRng rng(4, 4);
  std::vector<Triplet> t;
  for (int k = 0; k < 600; ++k) t.push_back({rng.below(100), rng.below(100), rng.uniform(-1e3, 1e3) / 3.0});
  const auto a = SparseMatrix::from_triplets(100, 100, t);
  std::stringstream ss;
  mm_write(a, ss);
  const auto b = mm_read(ss);
  ASSERT_EQ(a.nnz(), b.nnz());
  for (std::size_t k = 0; k < a.nnz(); ++k) EXPECT_EQ(a.values()[k], b.values()[k]);
  EXPECT_EQ(a, b);
}

TEST(MatrixMarket, DuplicatesAreSummed) {
  std::stringstream ss("%%MatrixMarket matrix coordinate real general\n2 2 3\n1 1 1.5\n1 1 2.5\n2 2 1\n");
  EXPECT_EQ(mm_read(ss).at(0, 0), 4.0);
}

static std::size_t parse_error_line(const std::string& text) {
  std::stringstream ss(text);
  try {
    mm_read(ss);
  } catch (const ParseError& e) {
    return e.line();
  }
  return 0;
}

TEST(MatrixMarket, ErrorsCarryLineNumbers) {
  EXPECT_EQ(parse_error_line("%%MatrixMarket matrix array real general\n1 1\n1\n"), 1u);
  EXPECT_EQ(parse_error_line("%%MatrixMarket matrix coordinate complex general\n1 1 1\n1 1 1 0\n"), 1u);
  EXPECT_EQ(parse_error_line("%%MatrixMarket matrix coordinate integer general\n1 1 1\n1 1 1\n"), 1u);
  EXPECT_EQ(parse_error_line("not a banner\n"), 1u);
  EXPECT_EQ(parse_error_line("%%MatrixMarket matrix coordinate real general\n% c\n2 2 2\n1 1 1\n3 1 1\n"), 5u);
  EXPECT_EQ(parse_error_line("%%MatrixMarket matrix coordinate real general\n2 2 1\n1 x 1\n"), 3u);
  EXPECT_EQ(parse_error_line("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1\n"), 3u);
}

TEST(TwoNormEst, Identity) {
  const double tol = 1e-8;
  EXPECT_NEAR(two_norm_est(SparseMatrix::identity(10), tol), 1.0, tol);
}

TEST(TwoNormEst, Diagonal) {
  const double tol = 1e-8;
  EXPECT_NEAR(two_norm_est(SparseMatrix::diagonal(Vector{1, 2, 5}), tol), 5.0, 5.0 * tol);
}

TEST(TwoNormEst, ZeroMatrix) { EXPECT_EQ(two_norm_est(SparseMatrix::zero(3, 4), 1e-6), 0.0); }

TEST(TwoNormEst, MatchesDenseSingularValue) {
  const double tol = 1e-6;
  const auto a = SparseMatrix::from_dense(fixtures::random_dense(20, 30, 5));
  const DenseMatrix d = a.to_dense();
  const double sigma = std::sqrt(symmetric_eigenvalues(multiply(d, d.transposed())).back());
  EXPECT_LE(std::abs(two_norm_est(a, tol) - sigma) / sigma, 10 * tol);
}

TEST(SymmetryResidual, DetectsAsymmetry) {
  EXPECT_EQ(symmetry_residual(SparseMatrix::identity(3)), 0.0);
  const auto a = SparseMatrix::from_triplets(2, 2, {{0, 0, 2}, {0, 1, 1}});
  EXPECT_DOUBLE_EQ(symmetry_residual(a), 0.5);
}
