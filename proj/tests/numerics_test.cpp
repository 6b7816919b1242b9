#include <gtest/gtest.h>

#include <cmath>

#include "aris/numerics.hpp"

namespace aris {
namespace {

ComplexMatrix random_matrix(RngStream& rng, std::size_t r, std::size_t c) { return sample_complex_gaussian(rng, r, c); }

// Naive sum-of-products, kept separate from cmat_mul's loop order.
ComplexMatrix oracle_product(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      cd s{};
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      out(i, j) = s;
    }
  return out;
}

double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

TEST(CmatMul, IdentityLeavesMatrixUnchanged) {
  RngStream rng(1);
  const auto a = random_matrix(rng, 2, 3);
  EXPECT_EQ(cmat_mul(ComplexMatrix::identity(2), a).data(), a.data());
}

TEST(CmatMul, ImaginaryUnitSquared) {
  ComplexMatrix i1(1, 1, cd{0.0, 1.0});
  const auto p = cmat_mul(i1, i1);
  EXPECT_EQ(p(0, 0), cd(-1.0, 0.0));
}

TEST(CmatMul, MatchesTripleLoopOracle) {
  RngStream rng(7);
  const auto a = random_matrix(rng, 3, 4);
  const auto b = random_matrix(rng, 4, 2);
  EXPECT_LT(max_abs_diff(cmat_mul(a, b), oracle_product(a, b)), 1e-14);
}

TEST(CmatMul, DimensionMismatchThrows) {
  EXPECT_THROW(cmat_mul(ComplexMatrix(2, 3), ComplexMatrix(2, 3)), DimensionError);
}

TEST(CmatMul, Associativity) {
  RngStream rng(11);
  for (int t = 0; t < 50; ++t) {
    const auto a = random_matrix(rng, 3, 5);
    const auto b = random_matrix(rng, 5, 4);
    const auto c = random_matrix(rng, 4, 2);
    const auto lhs = cmat_mul(cmat_mul(a, b), c);
    const auto rhs = cmat_mul(a, cmat_mul(b, c));
    EXPECT_LT(max_abs_diff(lhs, rhs), 1e-12 * lhs.norm());
  }
}

TEST(HermitianSolve, IdentitySystem) {
  RngStream rng(3);
  const auto b = random_matrix(rng, 3, 2);
  EXPECT_LT(max_abs_diff(hermitian_solve(ComplexMatrix::identity(3), b), b), 1e-11);
}

TEST(HermitianSolve, ScalarMatrix) {
  ComplexMatrix a(2, 2);
  a(0, 0) = 2.0;
  a(1, 1) = 2.0;
  const auto x = hermitian_solve(a, ComplexMatrix::identity(2));
  EXPECT_NEAR(x(0, 0).real(), 0.5, 1e-12);
  EXPECT_NEAR(x(1, 1).real(), 0.5, 1e-12);
  EXPECT_EQ(x(0, 1), cd{});
}

TEST(HermitianSolve, RandomWellConditionedResidual) {
  RngStream rng(5);
  for (int t = 0; t < 20; ++t) {
    const auto g = random_matrix(rng, 4, 8);
    const auto a = cmat_mul(g, g.adjoint());
    const auto b = random_matrix(rng, 4, 3);
    const auto x = hermitian_solve(a, b);
    auto r = cmat_mul(a, x);
    for (std::size_t i = 0; i < r.size(); ++i) r.data()[i] -= b.data()[i];
    EXPECT_LT(r.norm(), 1e-10 * b.norm());
  }
}

TEST(HermitianSolve, RecoversSolution) {
  RngStream rng(9);
  for (int t = 0; t < 20; ++t) {
    const auto g = random_matrix(rng, 5, 12);
    const auto a = cmat_mul(g, g.adjoint());
    const auto x = random_matrix(rng, 5, 1);
    const auto got = hermitian_solve(a, cmat_mul(a, x));
    EXPECT_LT(max_abs_diff(got, x), 1e-9 * x.norm());
  }
}

TEST(HermitianSolve, ErrorPaths) {
  EXPECT_THROW(hermitian_solve(ComplexMatrix(2, 3), ComplexMatrix(2, 1)), DimensionError);
  EXPECT_THROW(hermitian_solve(ComplexMatrix::identity(2), ComplexMatrix(3, 1)), DimensionError);
  ComplexMatrix indefinite(2, 2);
  indefinite(0, 0) = 1.0;
  indefinite(1, 1) = -1.0;
  EXPECT_THROW(hermitian_solve(indefinite, ComplexMatrix::identity(2)), SingularMatrixError);
}

TEST(HermitianSolve, DiagonalLoadingHandlesZeroRow) {
  // Gram matrix of a V with one all-zero row: singular without loading.
  ComplexMatrix a(2, 2);
  a(0, 0) = 1.0;
  const auto x = hermitian_solve(a, ComplexMatrix::identity(2));
  EXPECT_TRUE(x.all_finite());
  EXPECT_NEAR(x(0, 0).real(), 1.0, 1e-9);
  EXPECT_GT(x(1, 1).real(), 1e11);
}

TEST(SampleComplexGaussian, MomentsMatchUnitVariance) {
  RngStream rng(2024);
  const auto m = sample_complex_gaussian(rng, 1000, 1000);
  cd mean{};
  double power = 0.0;
  for (const auto& v : m.data()) {
    mean += v;
    power += std::norm(v);
  }
  mean /= static_cast<double>(m.size());
  power /= static_cast<double>(m.size());
  EXPECT_LT(std::abs(mean), 0.01);
  EXPECT_GE(power, 0.99);
  EXPECT_LE(power, 1.01);
}

TEST(SampleComplexGaussian, SameSeedSameDraw) {
  RngStream a(42), b(42);
  EXPECT_EQ(sample_complex_gaussian(a, 3, 4).data(), sample_complex_gaussian(b, 3, 4).data());
  EXPECT_THROW(sample_complex_gaussian(a, 0, 4), DimensionError);
}

TEST(RngStream, DerivedStreamsDifferAndAreStable) {
  RngStream root(5);
  auto s1 = root.derive(1), s1b = root.derive(1), s2 = root.derive(2);
  const auto x = s1();
  EXPECT_EQ(x, s1b());
  EXPECT_NE(x, s2());
  RngStream u(8);
  for (int i = 0; i < 1000; ++i) {
    const double v = u.uniform();
    ASSERT_GE(v, 0.0);
    ASSERT_LT(v, 1.0);
  }
}

}  // namespace
}  // namespace aris
