#include <gtest/gtest.h>

#include <cmath>

#include "test_support.hpp"

namespace stocheq {
namespace {

using testing::fixture;
using testing::mat;
using testing::Rng;
using testing::span;
using testing::unit;
using testing::vec;

StochasticLinearSystem scalar(double a, double g) {
  return make_system(mat({{a}}), mat({{0}}), mat({{1}}), mat({{g}}), vec({0}),
                     mat({{0}}));
}

TEST(System, ValidateRejectsBadShapes) {
  StochasticLinearSystem s = scalar(0.5, 1.0);
  EXPECT_NO_THROW(s.validate());
  s.B = Matrix::Zero(2, 1);
  EXPECT_THROW(s.validate(), DimensionError);
}

TEST(System, ValidateRejectsIndefiniteOutputNoise) {
  EXPECT_THROW(make_system(mat({{0.5}}), mat({{0}}), mat({{1}}), mat({{1}}),
                           vec({0}), mat({{-1}})),
               PreconditionError);
  EXPECT_THROW(
      make_system(mat({{0.5}}), mat({{0}}), mat({{1}}), mat({{1}}),
                  vec({std::nan("")}), mat({{0}})),
      std::invalid_argument);
}

TEST(System, MakeSystemSymmetrizesOutputNoise) {
  const auto s = make_system(Matrix::Identity(2, 2), Matrix::Zero(2, 1),
                             Matrix::Identity(2, 2), Matrix::Identity(2, 2),
                             Vector::Zero(2), mat({{2, 1}, {1 + 1e-14, 2}}));
  EXPECT_EQ(s.Psi(0, 1), s.Psi(1, 0));
}

TEST(Reach, FirstExampleAndSmallCases) {
  EXPECT_TRUE(reach_matrix(mat({{1, 0}, {0, 2}}), mat({{1}, {0}}), 2)
                  .isApprox(mat({{1, 1}, {0, 0}})));
  Rng rng(1);
  const Matrix a = rng.gaussian(3, 3);
  const Matrix m = rng.gaussian(3, 2);
  EXPECT_EQ(reach_matrix(a, m, 1), m);
  // A e2 = e1.
  EXPECT_EQ(reach_matrix(mat({{0, 1}, {0, 0}}), unit(2, 1), 2),
            mat({{0, 1}, {1, 0}}));
  EXPECT_THROW(static_cast<void>(reach_matrix(a, m, 0)), DimensionError);
}

TEST(Obs, FirstExampleAndTransposeIdentity) {
  const Matrix a = mat({{1, 0}, {0, 2}});
  const Matrix c = mat({{1, 0}});
  EXPECT_EQ(obs_matrix(a, c, 1), c);
  EXPECT_EQ(obs_matrix(a, c, 2), mat({{1, 0}, {1, 0}}));
  Rng rng(2);
  for (int i = 0; i < 10; ++i) {
    const Matrix ar = rng.gaussian(4, 4);
    const Matrix cr = rng.gaussian(2, 4);
    EXPECT_LT((obs_matrix(ar, cr, 5) -
               reach_matrix(ar.transpose(), cr.transpose(), 5).transpose())
                  .norm(),
              1e-12 * (1.0 + obs_matrix(ar, cr, 5).norm()));
  }
}

TEST(Obs, OutputReachIdentityByDirectExpansion) {
  // Block (h, k) of Obs_t(A, C) Reach_t(A, G) is C A^{h+k} G.
  Rng rng(3);
  const auto s = rng.system(3, 1, 2, 2, 0.9);
  const Index t = 4;
  const Matrix prod = obs_matrix(s.A, s.C, t) * reach_matrix(s.A, s.G, t);
  for (Index h = 0; h < t; ++h) {
    for (Index k = 0; k < t; ++k) {
      Matrix ap = Matrix::Identity(3, 3);
      for (Index j = 0; j < h + k; ++j) ap = ap * s.A;
      const Matrix direct = s.C * ap * s.G;
      EXPECT_LT((prod.block(h * 2, k * 2, 2, 2) - direct).norm(),
                1e-12 * (1.0 + direct.norm()));
    }
  }
}

TEST(Reach, ImageStabilizesAtStateDimension) {
  Rng rng(4);
  for (int i = 0; i < 10; ++i) {
    const Index n = rng.integer(1, 6);
    const Index r = rng.integer(0, n);
    // A with an invariant subspace of dimension r holding G.
    Matrix a = rng.gaussian(n, n);
    a.bottomLeftCorner(n - r, r).setZero();
    Matrix g = Matrix::Zero(n, 1);
    if (r > 0) g.topRows(r) = rng.gaussian(r, 1);
    EXPECT_TRUE(subspaces_equal(image(reach_matrix(a, g, n)),
                                image(reach_matrix(a, g, 2 * n))));
    EXPECT_LE(rank(reach_matrix(a, g, 2 * n)), r);
  }
}

TEST(Moments, InitialTimeIsDeterministic) {
  Rng rng(5);
  const auto s = rng.system(3, 1, 2, 2, 0.8);
  const Vector x0 = rng.gaussian(3, 1).col(0);
  const auto mom = conditional_moments(s, x0, InputSequence::zeros(1, 3));
  EXPECT_EQ(mom.state_mean(0), x0);
  EXPECT_EQ(mom.state_cov(0, 0).norm(), 0.0);
  EXPECT_TRUE(mom.output_cov(0, 0).isApprox(s.Psi));
}

TEST(Moments, ScalarRandomWalkVarianceGrowsLinearly) {
  const auto s2 = testing::load_system_fixture("example1_sys2.json");
  const auto mom = conditional_moments(s2, vec({0}), InputSequence::zeros(1, 6));
  for (Index t = 0; t <= 6; ++t) {
    EXPECT_NEAR(mom.state_cov(t, t)(0, 0), static_cast<double>(t), 1e-12);
    // cov(x(t), x(tau)) = min(t, tau) for a random walk.
    for (Index tau = 0; tau <= 6; ++tau) {
      EXPECT_NEAR(mom.state_cov(t, tau)(0, 0),
                  static_cast<double>(std::min(t, tau)), 1e-12);
    }
  }
}

TEST(Moments, ThirdExampleOutputVariancesAgree) {
  const auto s1 = testing::load_system_fixture("example3_sys1.json");
  const auto s2 = testing::load_system_fixture("example3_sys2.json");
  const auto m1 = conditional_moments(s1, vec({0, 0}), InputSequence::zeros(1, 5));
  const auto m2 = conditional_moments(s2, vec({0}), InputSequence::zeros(1, 5));
  for (Index t = 0; t <= 5; ++t) {
    EXPECT_NEAR(m1.output_cov(t, t)(0, 0), static_cast<double>(t), 1e-12);
    EXPECT_NEAR(m2.output_cov(t, t)(0, 0), static_cast<double>(t), 1e-12);
    EXPECT_NEAR(m1.output_mean(t)(0), m2.output_mean(t)(0), 1e-12);
  }
}

TEST(Moments, CovarianceMatchesDirectSumAndRecursion) {
  Rng rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    const auto s = rng.system(rng.integer(1, 5), 2, rng.integer(1, 3), 2,
                              rng.uniform(0.3, 1.3));
    const Index horizon = 8;
    const auto mom = conditional_moments(s, Vector::Zero(s.n()),
                                         InputSequence::zeros(2, horizon));
    Matrix p = Matrix::Zero(s.n(), s.n());
    for (Index t = 0; t <= horizon; ++t) {
      const Matrix sum = testing::state_cov_by_sum(s, t);
      const double scale = 1.0 + sum.norm();
      EXPECT_LT((mom.state_cov(t, t) - sum).norm(), 1e-10 * scale);
      EXPECT_LT((mom.state_cov(t, t) - p).norm(), 1e-10 * scale);
      p = s.A * p * s.A.transpose() + s.G * s.G.transpose();
    }
  }
}

TEST(Moments, CrossCovarianceAndOutputNoiseConvention) {
  Rng rng(7);
  const auto s = rng.system(3, 1, 2, 2, 0.9);
  const auto white = conditional_moments(s, Vector::Zero(3),
                                         InputSequence::zeros(1, 4));
  const auto literal =
      conditional_moments(s, Vector::Zero(3), InputSequence::zeros(1, 4),
                          OutputNoiseConvention::kLiteralEveryLag);
  // cov(x(t), x(tau)) = A^{t-tau} cov(x(tau), x(tau)) for tau <= t.
  const Matrix cross = white.state_cov(3, 1);
  EXPECT_LT((cross - s.A * s.A * white.state_cov(1, 1)).norm(), 1e-12);
  EXPECT_LT((white.state_cov(1, 3) - cross.transpose()).norm(), 1e-14);
  // Psi enters only at equal times under the white convention.
  EXPECT_LT((white.output_cov(3, 1) - s.C * cross * s.C.transpose()).norm(),
            1e-12);
  EXPECT_LT((literal.output_cov(3, 1) - white.output_cov(3, 1) - s.Psi).norm(),
            1e-12);
  EXPECT_LT((literal.output_cov(2, 2) - white.output_cov(2, 2)).norm(), 1e-12);
}

TEST(Moments, MeanFollowsDeterministicRecursion) {
  Rng rng(8);
  const auto s = rng.system(3, 2, 2, 1, 1.1);
  InputSequence u;
  for (int t = 0; t < 5; ++t) u.values.push_back(rng.gaussian(2, 1).col(0));
  const Vector x0 = rng.gaussian(3, 1).col(0);
  const auto mom = conditional_moments(s, x0, u);
  Vector x = x0;
  for (Index t = 0; t <= 5; ++t) {
    EXPECT_LT((mom.state_mean(t) - x).norm(), 1e-12 * (1.0 + x.norm()));
    EXPECT_LT((conditional_state_mean(s, x0, u, t) - x).norm(),
              1e-12 * (1.0 + x.norm()));
    EXPECT_LT((mom.output_mean(t) - s.C * x).norm(), 1e-12 * (1.0 + x.norm()));
    if (t < 5) x = s.A * x + s.B * u.values[t] + s.G * s.mu;
  }
  EXPECT_THROW(static_cast<void>(mom.state_mean(6)), std::out_of_range);
}

TEST(Support, FirstExampleStaysOnFirstAxis) {
  const auto s1 = testing::load_system_fixture("example1_sys1.json");
  const auto u = InputSequence::zeros(1, 3);
  const AffineSupport at0 = state_support(s1, vec({0, 0}), u, 0);
  EXPECT_EQ(at0.offset, vec({0, 0}));
  EXPECT_TRUE(at0.directions.is_zero());
  const AffineSupport at1 = state_support(s1, vec({0, 0}), u, 1);
  EXPECT_LT(at1.offset.norm(), 1e-15);
  EXPECT_TRUE(subspaces_equal(at1.directions, span(unit(2, 0))));
}

TEST(Support, FullRankNoiseFillsTheSpace) {
  Rng rng(9);
  const auto s = make_system(rng.gaussian(3, 3), Matrix::Zero(3, 1),
                             rng.gaussian(1, 3), rng.well_conditioned(3),
                             Vector::Zero(3), mat({{0}}));
  for (Index t = 1; t <= 3; ++t) {
    EXPECT_TRUE(state_support(s, Vector::Zero(3), InputSequence::zeros(1, 3), t)
                    .directions.is_full());
  }
}

TEST(Stationary, ClosedFormCases) {
  EXPECT_NEAR(stationary_state_covariance(scalar(0.5, 1.0))(0, 0), 4.0 / 3.0,
              1e-12);
  Rng rng(10);
  const Matrix g = rng.gaussian(3, 2);
  const auto zero_a = make_system(Matrix::Zero(3, 3), Matrix::Zero(3, 1),
                                  Matrix::Identity(1, 3), g, Vector::Zero(2),
                                  mat({{0}}));
  EXPECT_LT((stationary_state_covariance(zero_a) - g * g.transpose()).norm(),
            1e-14);
  auto no_noise = rng.system(3, 1, 2, 1, 0.9);
  no_noise.G.setZero();
  EXPECT_EQ(stationary_state_covariance(no_noise).norm(), 0.0);
  EXPECT_THROW(stationary_state_covariance(scalar(1.0, 1.0)),
               PreconditionError);
}

TEST(Stationary, AgreesWithKroneckerOracleAndResidualBound) {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const auto s = rng.system(rng.integer(1, 5), 1, rng.integer(1, 3), 1,
                              rng.uniform(0.1, 0.95));
    const Matrix px = stationary_state_covariance(s);
    const Matrix q = s.G * s.G.transpose();
    EXPECT_LE((px - s.A * px * s.A.transpose() - q).norm(),
              1e-8 * (1.0 + q.norm()));
    const Matrix oracle = testing::stationary_by_kronecker(s);
    EXPECT_LT((px - oracle).norm(), 1e-8 * (1.0 + oracle.norm()));
  }
}

}  // namespace
}  // namespace stocheq
