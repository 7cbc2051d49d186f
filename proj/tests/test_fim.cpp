#include "oracles.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace radarplace;

namespace {

double table_gamma() {
  const RadarParams rp;
  return gamma_const(rp, noise_power(rp, 4));
}

Vec3 random_direction(std::mt19937_64& rng) {
  Vec3 v = rp_test::random_matrix(3, 1, rng);
  return v.normalized();
}

Mat3 random_rotation(std::mt19937_64& rng) {
  Eigen::HouseholderQR<Mat3> qr(Mat3(rp_test::random_matrix(3, 3, rng)));
  Mat3 Q = qr.householderQ();
  if (Q.determinant() < 0) Q.col(0) *= -1.0;
  return Q;
}

}  // namespace

TEST(SfimSingle, AxisAlignedExample) {
  const Mat3 J = sfim_single(Vec3(100, 0, 0), Vec3(0, 0, 0), 1.0);
  EXPECT_NEAR(J(0, 0), 8.0004e-4, 1e-15);
  EXPECT_EQ((J - J(0, 0) * Vec3::UnitX() * Vec3::UnitX().transpose()).norm(), 0.0);
}

TEST(SfimSingle, RankOneAndTrace) {
  std::mt19937_64 rng(1);
  const double g = table_gamma();
  for (int i = 0; i < 50; ++i) {
    const Vec3 r(rp_test::uniform(rng, -400, 400), rp_test::uniform(rng, -400, 400), 0);
    const Vec3 t = r + rp_test::uniform(rng, 20, 900) * random_direction(rng);
    const Mat3 J = sfim_single(t, r, g);
    const Vec3 delta = t - r;
    const Vec3 perp = delta.unitOrthogonal();
    EXPECT_LT((J * perp).norm(), 1e-12 * J.norm());
    const double d = delta.norm();
    EXPECT_NEAR(J.trace() / (d * d * (4.0 / (g * std::pow(d, 6)) + 8.0 / std::pow(d, 4))), 1.0, 1e-12);
  }
}

TEST(SfimSingle, MatchesFiniteDifferenceKayOracle) {
  std::mt19937_64 rng(2);
  const double g = table_gamma();
  for (int i = 0; i < 20; ++i) {
    const double d = rp_test::uniform(rng, 50, 2000);
    const Vec3 r(rp_test::uniform(rng, -400, 400), rp_test::uniform(rng, -400, 400), 0);
    const Vec3 t = r + d * random_direction(rng);
    const Mat oracle = rp_oracle::kay_range_fim(t, {r}, g, 1e-4 * d);
    EXPECT_LT(rp_test::rel_frobenius(Mat(sfim_single(t, r, g)), oracle), 1e-5) << "geometry " << i;
  }
}

TEST(SfimSingle, CcrMatchesConstantVarianceOracle) {
  const double var = 0.1778;
  const MeasurementModel ccr{MeasurementKind::CCR, 1.0, var};
  const Vec3 r(10, -20, 0);
  const Vec3 t(200, 150, 60);
  auto mean = [&](const Vec& x) { return Vec::Constant(1, 2.0 * (x - r).norm()); };
  auto variance = [&](const Vec&) { return Vec::Constant(1, var); };
  const Mat oracle = rp_oracle::kay_fim(mean, variance, Vec(t), 1e-3);
  EXPECT_LT(rp_test::rel_frobenius(Mat(sfim_single(t, r, ccr)), oracle), 1e-6);
}

TEST(SfimSingle, ScaleLaw) {
  const Vec3 delta(30, -40, 55);
  const double g = 3e-9;
  for (double s : {0.5, 2.0, 7.5}) {
    const double sd = s * delta.norm();
    const Mat3 expected = delta * delta.transpose() * s * s * (4.0 / (g * std::pow(sd, 6)) + 8.0 / std::pow(sd, 4));
    EXPECT_LT(rp_test::rel_frobenius(Mat(sfim_single(s * delta, Vec3::Zero(), g)), Mat(expected)), 1e-10);
  }
}

TEST(SfimSingle, RotationEquivariance) {
  std::mt19937_64 rng(3);
  const double g = table_gamma();
  for (int i = 0; i < 50; ++i) {
    const Mat3 R = random_rotation(rng);
    const Vec3 r(rp_test::uniform(rng, -300, 300), rp_test::uniform(rng, -300, 300), 0);
    const Vec3 t(rp_test::uniform(rng, -300, 300), rp_test::uniform(rng, -300, 300), 60);
    const Mat3 J = sfim_single(t, r, g);
    const Mat3 Jr = sfim_single(R * t, R * r, g);
    EXPECT_LT((Jr - R * J * R.transpose()).norm(), 1e-9 * J.norm());
  }
}

TEST(SfimSingle, CoincidenceIsADomainError) {
  EXPECT_THROW(sfim_single(Vec3(1, 2, 3), Vec3(1, 2, 3), 1.0), DomainError);
}

TEST(SfimMulti, SingleRadarSingleTarget) {
  RadarStack radars = RadarStack::Zero(1, 6);
  radars.row(0).head<3>() << 10, 20, 0;
  TargetStack x(6);
  x << 100, -50, 55, 1, 2, 3;
  EXPECT_EQ(sfim_multi(x, radars, 2e-9), Mat(sfim_single(Vec3(100, -50, 55), Vec3(10, 20, 0), 2e-9)));
}

TEST(SfimMulti, BlockDiagonalAndAdditive) {
  RadarStack radars = RadarStack::Zero(3, 6);
  radars.row(0).head<3>() << 100, 0, 0;
  radars.row(1).head<3>() << -100, 0, 0;
  radars.row(2).head<3>() << 0, 100, 0;
  TargetStack x(12);
  x << 0, 0, 55, 0, 0, 0, 40, -30, 70, 0, 0, 0;
  const Mat J = sfim_multi(x, radars, 1.0);
  EXPECT_EQ(J.block(0, 3, 3, 3).norm(), 0.0);
  EXPECT_EQ(J.block(3, 0, 3, 3).norm(), 0.0);
  const Vec3 t(0, 0, 55);
  const Mat3 sum = sfim_single(t, Vec3(100, 0, 0), 1.0) + sfim_single(t, Vec3(-100, 0, 0), 1.0) +
                   sfim_single(t, Vec3(0, 100, 0), 1.0);
  EXPECT_LT((J.block<3, 3>(0, 0) - sum).norm(), 1e-15 * sum.norm());
  EXPECT_GT(Eigen::SelfAdjointEigenSolver<Mat3>(sum).eigenvalues().minCoeff(), 0.0);
}

TEST(SfimMulti, MultiRadarMatchesKayOracle) {
  std::mt19937_64 rng(5);
  const double g = table_gamma();
  std::vector<Vec3> radars;
  RadarStack stack = RadarStack::Zero(4, 6);
  for (int n = 0; n < 4; ++n) {
    radars.emplace_back(rp_test::uniform(rng, -400, 400), rp_test::uniform(rng, -400, 400), 0);
    stack.row(n).head<3>() = radars.back().transpose();
  }
  TargetStack x = TargetStack::Zero(6);
  x.head<3>() << 20, 30, 60;
  const Mat oracle = rp_oracle::kay_range_fim(Vec3(20, 30, 60), radars, g, 0.01);
  EXPECT_LT(rp_test::rel_frobenius(sfim_multi(x, stack, g), oracle), 1e-5);
}

TEST(EmbedVelocity, Examples) {
  EXPECT_EQ(embed_velocity(Mat::Zero(6, 6)), Mat::Zero(12, 12));
  const Mat J = embed_velocity(Mat::Identity(3, 3));
  Mat expected = Mat::Zero(6, 6);
  expected.topLeftCorner(3, 3).setIdentity();
  EXPECT_EQ(J, expected);
  std::mt19937_64 rng(6);
  const Mat P = rp_test::random_spd(6, rng);
  EXPECT_EQ(embed_velocity(P).trace(), P.trace());
}

TEST(Pfim, ScalarAnalogue) {
  TransitionModel tm;
  tm.A = Mat::Identity(1, 1);
  tm.W = Mat::Identity(1, 1);
  tm.num_targets = 0;
  const Mat J = pfim_step_simplified(Mat::Identity(1, 1), tm, Mat::Zero(1, 1));
  EXPECT_NEAR(J(0, 0), 0.5, 1e-5);  // W carries the relative regularization jitter
  EXPECT_NEAR(pfim_step_raw(Mat::Identity(1, 1), tm, Mat::Zero(1, 1))(0, 0), J(0, 0), 1e-12);
}

TEST(Pfim, VanishingNoiseAccumulatesInformation) {
  TransitionModel tm = build_transition(0.1, 1e-9, 1);
  tm.A = Mat::Identity(6, 6);
  std::mt19937_64 rng(7);
  const Mat J = rp_test::random_spd(6, rng);
  const Mat JD = embed_velocity(Mat(rp_test::random_spd(3, rng)));
  EXPECT_LT(rp_test::rel_frobenius(pfim_step_simplified(J, tm, JD), J + JD), 1e-8);
}

TEST(Pfim, RawAndSimplifiedFormsAgree) {
  const TransitionModel tm = build_transition(0.1, std::sqrt(10.0), 1);
  std::mt19937_64 rng(8);
  for (int i = 0; i < 50; ++i) {
    const Mat J = rp_test::random_spd(6, rng);
    const Mat B = rp_test::random_matrix(3, 3, rng);
    const Mat JD = embed_velocity(Mat(B * B.transpose()));
    const Mat a = pfim_step_simplified(J, tm, JD);
    const Mat b = pfim_step_raw(J, tm, JD);
    EXPECT_LT(rp_test::rel_frobenius(b, a), 1e-8) << "draw " << i;
    EXPECT_LT((a - a.transpose()).norm(), 1e-10 * a.norm());
    EXPECT_GT(Eigen::SelfAdjointEigenSolver<Mat>(a).eigenvalues().minCoeff(), -1e-8 * a.trace());
  }
}

TEST(Pfim, LargePriorInformationFormsAgree) {
  const TransitionModel tm = build_transition(0.1, std::sqrt(10.0), 1);
  std::mt19937_64 rng(9);
  const Mat J = 1e6 * rp_test::random_spd(6, rng);
  EXPECT_LT(rp_test::rel_frobenius(pfim_step_raw(J, tm, Mat::Zero(6, 6)), pfim_step_simplified(J, tm, Mat::Zero(6, 6))),
            1e-8);
}

TEST(Pfim, TermsStructure) {
  const TransitionModel tm = build_transition(0.1, std::sqrt(10.0), 2);
  const PfimTerms t = pfim_terms(tm, Mat::Zero(12, 12));
  EXPECT_EQ(t.D21, Mat(t.D12.transpose()));
}

TEST(Pfim, SingularInputIsReported) {
  const TransitionModel tm = build_transition(0.1, std::sqrt(10.0), 1);
  try {
    pfim_step_simplified(Mat::Zero(6, 6), tm, Mat::Zero(6, 6));
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_EQ(std::string(e.what()), "PFIM singular; check initialization");
  }
}

TEST(Logdet, Examples) {
  EXPECT_EQ(logdet_objective(Mat::Identity(3, 3), 0.0), 0.0);
  Mat D = Mat::Zero(3, 3);
  D.diagonal() << 2, 3, 4;
  EXPECT_NEAR(logdet_objective(D, 0.0), std::log(24.0), 1e-14);
  EXPECT_EQ(logdet_objective(-Mat::Identity(2, 2), 0.0), kLogdetFailure);
}

TEST(Logdet, BlockDiagonalIsSumOfBlocks) {
  std::mt19937_64 rng(10);
  std::vector<Mat3> blocks;
  Mat dense = Mat::Zero(9, 9);
  double sum = 0.0;
  for (int m = 0; m < 3; ++m) {
    blocks.push_back(Mat3(rp_test::random_spd(3, rng)));
    dense.block<3, 3>(3 * m, 3 * m) = blocks.back();
    sum += logdet_objective(Mat(blocks.back()), 0.0);
  }
  EXPECT_NEAR(logdet_objective(dense, 0.0), sum, 1e-10);
  EXPECT_NEAR(logdet_block_diagonal(blocks, 1e-3), logdet_objective(dense, 1e-3), 1e-10);
}

TEST(Logdet, SingleRadarStaysFinite) {
  RadarStack radars = RadarStack::Zero(1, 6);
  TargetStack x = TargetStack::Zero(6);
  x.head<3>() << 100, 0, 55;
  const Mat J = sfim_multi(x, radars, table_gamma());
  const double v = logdet_objective(J, default_logdet_jitter(J));
  EXPECT_TRUE(std::isfinite(v));
  EXPECT_GT(v, kLogdetFailure);
}
