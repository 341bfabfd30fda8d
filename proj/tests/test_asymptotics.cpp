#include "support/oracles.hpp"

#include <gtest/gtest.h>

using namespace cldiv;

namespace {

Matrix e5() {
  Matrix g = Matrix::Zero(5, 1);
  g(4, 0) = 1.0;
  return g;
}

}  // namespace

TEST(Godambe, EqualMatricesGiveSensitivity) {
  std::mt19937_64 rng(1);
  Matrix h = oracle::random_spd(rng, 4);
  EXPECT_LT((godambe(h, h) - h).norm(), 1e-10 * h.norm());
}

TEST(Godambe, ScalarAlgebra) {
  Matrix h = 2.0 * Matrix::Identity(2, 2), j = Matrix::Identity(2, 2);
  EXPECT_LT((godambe(h, j) - 4.0 * Matrix::Identity(2, 2)).norm(), 1e-14);
}

TEST(Godambe, RejectsIndefiniteVariability) {
  Matrix h = Matrix::Identity(2, 2), j = Matrix::Identity(2, 2);
  j(1, 1) = -1.0;
  EXPECT_THROW(godambe(h, j), Error);
}

TEST(ConstrainedBlocks, IdentityCase) {
  Matrix h = Matrix::Identity(5, 5);
  auto b = constrained_blocks(h, e5());
  EXPECT_LT((b.Q + e5()).norm(), 1e-14);
  Matrix p = Matrix::Identity(5, 5);
  p(4, 4) = 0.0;
  EXPECT_LT((b.P - p).norm(), 1e-14);
  EXPECT_NEAR(b.R(0, 0), -1.0, 1e-14);
}

TEST(ConstrainedBlocks, BlockInverseIdentity) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 5; ++trial) {
    int p = 5, r = 2;
    Matrix h = oracle::random_spd(rng, p), g = oracle::random_matrix(rng, p, r);
    auto b = constrained_blocks(h, g);
    Matrix big(p + r, p + r), inv(p + r, p + r);
    big << h, -g, -g.transpose(), Matrix::Zero(r, r);
    inv << b.P, b.Q, b.Q.transpose(), b.R;
    EXPECT_LT((big * inv - Matrix::Identity(p + r, p + r)).norm(), 1e-9);
    EXPECT_LT((g.transpose() * b.P).norm(), 1e-10);
  }
}

TEST(ConstrainedBlocks, Normal4QIsMinusConstraint) {
  // H is block diagonal with rho separated, so H^-1 G (G' H^-1 G)^-1 = G
  for (double rho : {-0.15, 0.0, 0.2, 0.3}) {
    Matrix h = normal4::h_matrix(rho);
    auto b = constrained_blocks(h, e5());
    Matrix hi = h.inverse();
    Matrix direct = -hi * e5() * (e5().transpose() * hi * e5()).inverse();
    EXPECT_LT((b.Q - direct).norm(), 1e-12) << rho;
    EXPECT_LT((b.Q + e5()).norm(), 1e-12) << rho;
  }
}

TEST(ConstrainedBlocks, RankDeficientConstraint) {
  Matrix g = Matrix::Zero(5, 2);
  g(4, 0) = 1.0;
  EXPECT_THROW(constrained_blocks(Matrix::Identity(5, 5), g), Error);
}

TEST(Spectrum, SimpleNullScaledIdentity) {
  auto sp = simple_null_spectrum(2.0 * Matrix::Identity(3, 3), Matrix::Identity(3, 3));
  ASSERT_EQ(sp.k, 3);
  for (Index i = 0; i < 3; ++i) EXPECT_NEAR(sp.eigenvalues[i], 2.0, 1e-12);
}

TEST(Spectrum, SimpleNullMatchesNonsymmetricProduct) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    Matrix a = oracle::random_spd(rng, 4), gs = oracle::random_spd(rng, 4);
    auto sp = simple_null_spectrum(a, gs);
    Vector ref = oracle::general_eigenvalues(a * gs.inverse());
    for (Index i = 0; i < 4; ++i) EXPECT_NEAR(sp.eigenvalues[i], ref[i], 1e-9 * std::max(1.0, ref[0]));
  }
}

TEST(Spectrum, Normal4SimpleNullIsUnitWhenVariabilityEqualsSensitivity) {
  Matrix h = normal4::h_matrix(0.2);
  auto sp = simple_null_spectrum(h, godambe(h, h));
  ASSERT_EQ(sp.k, 5);
  for (Index i = 0; i < 5; ++i) EXPECT_NEAR(sp.eigenvalues[i], 1.0, 1e-10);
}

TEST(Spectrum, Normal4CompositeNullSingleUnitEigenvalue) {
  for (int i = 0; i < 50; ++i) {
    double rho = -0.95 + 1.9 * i / 49.0;
    Matrix h = normal4::h_matrix(rho);
    auto b = constrained_blocks(h, e5());
    auto sp = composite_null_spectrum(h, e5(), b.Q, godambe(h, h));
    ASSERT_EQ(sp.k, 1) << rho;
    EXPECT_NEAR(sp.eigenvalues[0], 1.0, 1e-10) << rho;
    auto cl = clrt_spectrum(h, e5(), b.Q, godambe(h, h));
    ASSERT_EQ(cl.k, 1);
    EXPECT_NEAR(cl.eigenvalues[0], 1.0, 1e-10);
  }
}

TEST(Spectrum, Normal4ExactVariabilityInflatesEigenvalue) {
  for (double rho : {-0.15, 0.1, 0.2, 0.3}) {
    Matrix h = normal4::h_matrix(rho), j = normal4::j_matrix(rho);
    auto b = constrained_blocks(h, e5());
    auto sp = composite_null_spectrum(h, e5(), b.Q, godambe(h, j));
    ASSERT_EQ(sp.k, 1);
    // only the rho row of H^-1 J H^-1 matters: H55 * (H^-1 J H^-1)_55
    Matrix hi = h.inverse();
    EXPECT_NEAR(sp.eigenvalues[0], h(4, 4) * (hi * j * hi)(4, 4), 1e-10) << rho;
  }
}

TEST(Spectrum, CompositeEqualsClrtWhenVariabilityEqualsSensitivity) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 5; ++trial) {
    Matrix h = oracle::random_spd(rng, 5), g = oracle::random_matrix(rng, 5, 2);
    auto b = constrained_blocks(h, g);
    auto a = composite_null_spectrum(h, g, b.Q, godambe(h, h));
    auto c = clrt_spectrum(h, g, b.Q, godambe(h, h));
    ASSERT_EQ(a.k, c.k);
    EXPECT_LE(a.k, 2);
    for (Index i = 0; i < a.eigenvalues.size(); ++i) EXPECT_NEAR(a.eigenvalues[i], c.eigenvalues[i], 1e-9);
  }
}

TEST(Spectrum, CompositeMatchesNonsymmetricProduct) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    Matrix h = oracle::random_spd(rng, 4), j = oracle::random_spd(rng, 4), g = oracle::random_matrix(rng, 4, 2);
    auto b = constrained_blocks(h, g);
    Matrix gs = h * j.inverse() * h;
    auto sp = composite_null_spectrum(h, g, b.Q, gs);
    Matrix m = b.Q * g.transpose();
    Vector ref = oracle::general_eigenvalues(h * m * gs.inverse() * m.transpose());
    EXPECT_EQ(sp.k, 2);
    for (Index i = 0; i < 4; ++i) EXPECT_NEAR(sp.eigenvalues[i], std::max(ref[i], 0.0), 1e-8 * std::max(1.0, ref[0]));
  }
}

TEST(Spectrum, ClrtRankBound) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 5; ++trial) {
    Matrix h = oracle::random_spd(rng, 3), j = oracle::random_spd(rng, 3), g = oracle::random_matrix(rng, 3, 1);
    auto b = constrained_blocks(h, g);
    EXPECT_LE(clrt_spectrum(h, g, b.Q, godambe(h, j)).k, 1);
  }
}

TEST(RestrictedCovariance, TraceIdentity) {
  // P H P = P for the constrained block, so P J P has the sandwich form.
  std::mt19937_64 rng(7);
  Matrix h = oracle::random_spd(rng, 5), g = oracle::random_matrix(rng, 5, 2);
  auto b = constrained_blocks(h, g);
  EXPECT_LT((b.P * h * b.P - b.P).norm(), 1e-9);
  EXPECT_LT((restricted_estimator_cov(b.P, h) - b.P).norm(), 1e-9);
}

TEST(Power, HalfAtBoundary) {
  double c = 3.841459, n = 150.0, d = c / (2 * n);
  EXPECT_NEAR(power_approx_simple(d, 0.7, n, c), 0.5, 1e-14);
  EXPECT_NEAR(power_approx_composite(d, 0.49, n, c), 0.5, 1e-14);
  EXPECT_NEAR(power_approx_simple(2 * d, 0.7, n, c, 2.0), 0.5, 1e-14);
}

TEST(Power, ConsistentForLargeN) {
  EXPECT_NEAR(power_approx_simple(0.01, 0.5, 1e8, 3.841459), 1.0, 1e-12);
}

TEST(Power, MatchesNormalTail) {
  double d = 0.03, s = 0.4, n = 120, c = 3.841459;
  double z = std::sqrt(n) / s * (c / (2 * n) - d);
  EXPECT_NEAR(power_approx_simple(d, s, n, c), 0.5 * std::erfc(z / std::sqrt(2.0)), 1e-14);
}

TEST(Power, Errors) {
  EXPECT_THROW(power_approx_simple(0.01, 0.0, 100, 3.84), Error);
  EXPECT_THROW(power_approx_composite(0.01, -1.0, 100, 3.84), Error);
  EXPECT_THROW(sample_size(0.0, 1.0, 3.84, 0.8), Error);
  EXPECT_THROW(sample_size(0.01, 1.0, 3.84, 1.0), Error);
}

TEST(SampleSize, WorkedExample) {
  double a = 0.841621 * 0.841621, b = 3.841459 * 0.01;
  double nstar = (a + b + std::sqrt(a * (a + 2 * b))) / (2 * 1e-4);
  EXPECT_NEAR(nstar, 7462.5, 0.5);
  EXPECT_EQ(sample_size(0.01, 1.0, 3.841459, 0.8), 7463);
}

TEST(SampleSize, HalfPower) {
  // with A = 0 the root is B / (2 D^2) = c / (2 D)
  double d = 0.013, c = 3.841459;
  EXPECT_EQ(sample_size(d, 1.0, c, 0.5), static_cast<long long>(std::floor(c / (2 * d))) + 1);
}

TEST(SampleSize, ReachesTargetPower) {
  for (double pi : {0.2, 0.4, 0.6, 0.8, 0.95})
    for (double d : {0.005, 0.02, 0.08}) {
      double sigma2 = 0.7, c = 3.841459;
      long long n = sample_size(d, sigma2, c, pi);
      EXPECT_GE(power_approx_composite(d, sigma2, static_cast<double>(n), c), pi - 1e-9) << pi << " " << d;
      EXPECT_LT(power_approx_composite(d, sigma2, static_cast<double>(n - 1), c), pi + 1e-9) << pi << " " << d;
    }
}
