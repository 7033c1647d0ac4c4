#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <random>

#include "decest/errors.hpp"
#include "decest/estimator.hpp"
#include "decest/models.hpp"
#include "decest/preintegration.hpp"
#include "test_util.hpp"

using namespace decest;
using decest::testing::randn;
using decest::testing::random_element;
using decest::testing::random_spd;
using decest::testing::rel_err;
using Mat6 = Eigen::Matrix<double, 6, 6>;

namespace {

ImuInput random_imu(std::mt19937_64& rng, double dt = 0.005) {
  return {randn(3, rng, 0.8), randn(3, rng, 3.0) + Vec3(0, 0, 9.8), dt};
}

Mat5 sequential_du(const std::vector<ImuInput>& us, const Eigen::VectorXd& d) {
  // d stacks a 6-vector added to each input
  Mat5 out = Mat5::Identity();
  for (std::size_t k = 0; k < us.size(); ++k) {
    ImuInput u = us[k];
    u.gyro += d.segment<3>(6 * k);
    u.accel += d.segment<3>(6 * k + 3);
    out = out * imu_increment_matrix(u);
  }
  return out;
}

Element as_se23(const Mat5& m) { return make_unchecked(GroupDescriptor::SE23(), m); }

double min_eig(const Eigen::MatrixXd& m) {
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m).eigenvalues().minCoeff();
}

}  // namespace

// ---------------------------------------------------------------------------
// Linear

TEST(LinearRmi, IdentityPlusZeroInput) {
  Eigen::Matrix2d f;
  f << 1, 0.1, 0, 1;
  const Eigen::MatrixXd l = Eigen::Vector2d(0.005, 0.1);
  const LinearRmi r =
      increment_linear(LinearRmi::Identity(2, 3), f, l, Eigen::VectorXd::Zero(1),
                       Eigen::MatrixXd::Zero(1, 1));
  EXPECT_EQ(r.F, Eigen::MatrixXd(f));
  EXPECT_EQ(r.dx, Eigen::VectorXd::Zero(2));
  EXPECT_EQ(r.Q, Eigen::MatrixXd::Zero(2, 2));
  EXPECT_EQ(r.span, (Span{3, 4}));
}

TEST(LinearRmi, ScalarIntegratorSumsInputs) {
  LinearRmi r = LinearRmi::Identity(1, 0);
  const Eigen::MatrixXd one = Eigen::MatrixXd::Ones(1, 1);
  const Eigen::MatrixXd q = Eigen::MatrixXd::Constant(1, 1, 0.3);
  for (int k = 0; k < 10; ++k) {
    r = increment_linear(r, one, one * 0.1, Eigen::VectorXd::Ones(1), q);
  }
  EXPECT_NEAR(r.dx(0), 1.0, 1e-14);
  EXPECT_NEAR(r.Q(0, 0), 10 * 0.01 * 0.3, 1e-15);

  LinearRmi s = LinearRmi::Identity(1, 0);
  for (int k = 0; k < 7; ++k) {
    s = increment_linear(s, one, one, Eigen::VectorXd::Zero(1), q);
  }
  EXPECT_NEAR(s.Q(0, 0), 7 * 0.3, 1e-14);
}

TEST(LinearRmi, RejectsBadShapes) {
  EXPECT_THROW(increment_linear(LinearRmi::Identity(2, 0),
                                Eigen::MatrixXd::Identity(3, 3),
                                Eigen::MatrixXd::Zero(3, 1),
                                Eigen::VectorXd::Zero(1),
                                Eigen::MatrixXd::Zero(1, 1)),
               std::invalid_argument);
}

// ---------------------------------------------------------------------------
// Wheel

TEST(WheelRmi, ZeroInputGrowsCovarianceOnly) {
  const Mat3 qk = Eigen::Vector3d(0.01, 0.04, 0.001).asDiagonal();
  const WheelRmi r = increment_wheel(WheelRmi::Identity(0), Vec3::Zero(), qk, 0.01);
  EXPECT_EQ(r.dT, Mat3::Identity());
  EXPECT_LT((r.Q - 1e-4 * qk).norm(), 1e-18);
}

TEST(WheelRmi, StraightLine) {
  WheelRmi r = WheelRmi::Identity(0);
  for (int k = 0; k < 250; ++k) {
    r = increment_wheel(r, Vec3(0, 1.5, 0), Mat3::Zero(), 0.01);
  }
  EXPECT_NEAR(r.dT(0, 2), 250 * 1.5 * 0.01, 1e-12);
  EXPECT_NEAR(r.dT(1, 2), 0.0, 1e-15);
  EXPECT_EQ(r.span.steps(), 250);
}

TEST(WheelRmi, FullCircleClosesRotation) {
  WheelRmi r = WheelRmi::Identity(0);
  const int n = 400;
  const double dt = 0.01;
  const double w = 2 * std::numbers::pi / (n * dt);
  for (int k = 0; k < n; ++k) r = increment_wheel(r, Vec3(w, 0, 0), Mat3::Zero(), dt);
  EXPECT_LT((r.dT.topLeftCorner<2, 2>() - Eigen::Matrix2d::Identity()).norm(), 1e-12);

  // Oracle: sequential Exp with a turning, driving robot returns to start.
  WheelRmi c = WheelRmi::Identity(0);
  Mat3 seq = Mat3::Identity();
  for (int k = 0; k < n; ++k) {
    c = increment_wheel(c, Vec3(w, 2.0, 0), Mat3::Zero(), dt);
    seq = seq * se2::exp(dt * Vec3(w, 2.0, 0));
  }
  EXPECT_LT((c.dT - seq).norm(), 1e-14);
  EXPECT_LT(c.dT.col(2).head(2).norm(), 1e-10);
}

TEST(WheelRmi, CovarianceMatchesFiniteDifferencePropagation) {
  std::mt19937_64 rng(11);
  const int n = 50;
  const double dt = 0.02;
  const Mat3 qk = Eigen::Vector3d(0.02, 0.05, 0.01).asDiagonal();
  std::vector<Vec3> us;
  WheelRmi r = WheelRmi::Identity(0);
  for (int k = 0; k < n; ++k) {
    us.push_back(randn(3, rng));
    r = increment_wheel(r, us.back(), qk, dt);
  }
  const auto fn = [&](const Eigen::VectorXd& d) {
    Mat3 t = Mat3::Identity();
    for (int k = 0; k < n; ++k) t = t * wheel_step(us[k] + d.segment<3>(3 * k), dt);
    return make_unchecked(GroupDescriptor::SE2(), t);
  };
  const Eigen::MatrixXd w =
      numerical_jacobian_from_vec(fn, Eigen::VectorXd::Zero(3 * n), Side::kRight);
  Eigen::MatrixXd qs = Eigen::MatrixXd::Zero(3 * n, 3 * n);
  for (int k = 0; k < n; ++k) qs.block<3, 3>(3 * k, 3 * k) = qk;
  EXPECT_LT(rel_err(r.Q, w * qs * w.transpose()), 1e-6);
}

// ---------------------------------------------------------------------------
// IMU

TEST(ImuRmi, ZeroInputsNoGravity) {
  ImuRmi r = ImuRmi::Identity(0, Vec3::Zero());
  for (int k = 0; k < 20; ++k) r = increment_imu(r, {Vec3::Zero(), Vec3::Zero(), 0.01}, Mat6::Zero());
  EXPECT_LT((r.dU.topLeftCorner<3, 3>() - Mat3::Identity()).norm(), 1e-15);
  EXPECT_EQ(r.dU.col(3).head(3), Vec3::Zero());
  EXPECT_EQ(r.dU.col(4).head(3), Vec3::Zero());
  EXPECT_NEAR(r.dU(3, 4), 0.2, 1e-15);
  EXPECT_NEAR(r.dt_total, 0.2, 1e-15);
}

TEST(ImuRmi, ConstantAccelerationIntegrates) {
  ImuRmi r = ImuRmi::Identity(0, Vec3::Zero());
  const int n = 300;
  const double dt = 0.005;
  for (int k = 0; k < n; ++k) {
    r = increment_imu(r, {Vec3::Zero(), Vec3(1, 0, 0), dt}, Mat6::Zero());
  }
  EXPECT_NEAR(r.dU(0, 3), n * dt, 1e-9);
  // Position: tau-offset structure gives the usual 1/2 a t^2.
  EXPECT_NEAR(r.dU(0, 4), 0.5 * (n * dt) * (n * dt), 1e-9);
}

TEST(ImuRmi, MeanEqualsSequentialProduct) {
  std::mt19937_64 rng(12);
  std::vector<ImuInput> us;
  ImuRmi r = ImuRmi::Identity(0);
  Mat5 g = Mat5::Identity();
  for (int k = 0; k < 200; ++k) {
    us.push_back(random_imu(rng));
    r = increment_imu(r, us.back(), Mat6::Zero());
    g = imu_gravity_matrix(us.back().dt, r.gravity) * g;
  }
  EXPECT_LT((r.dU - sequential_du(us, Eigen::VectorXd::Zero(6 * 200))).norm(), 1e-12);
  EXPECT_LT((r.dG - g).norm(), 1e-12);
}

TEST(ImuRmi, InputJacobianMatchesFiniteDifferences) {
  std::mt19937_64 rng(13);
  for (int k = 0; k < 100; ++k) {
    const ImuInput u = random_imu(rng, 0.05 + 0.2 * (k % 5));
    const auto fn = [&](const Eigen::VectorXd& d) {
      return as_se23(imu_increment_matrix({u.gyro + d.head<3>(), u.accel + d.tail<3>(), u.dt}));
    };
    const Eigen::MatrixXd fd =
        numerical_jacobian_from_vec(fn, Eigen::VectorXd::Zero(6), Side::kRight);
    EXPECT_LT(rel_err(imu_input_jacobian(u), fd), 1e-7) << k;
  }
}

TEST(ImuRmi, CovarianceAndBiasJacobianMatchFiniteDifferences) {
  std::mt19937_64 rng(14);
  const int n = 200;
  Mat6 qk = Mat6::Zero();
  qk.diagonal() << 1e-4, 1e-4, 1e-4, 4e-3, 4e-3, 4e-3;
  std::vector<ImuInput> us;
  ImuRmi r = ImuRmi::Identity(0);
  for (int k = 0; k < n; ++k) {
    us.push_back(random_imu(rng));
    r = increment_imu(r, us.back(), qk);
  }
  const Eigen::MatrixXd w = numerical_jacobian_from_vec(
      [&](const Eigen::VectorXd& d) { return as_se23(sequential_du(us, d)); },
      Eigen::VectorXd::Zero(6 * n), Side::kRight);
  Eigen::MatrixXd qs = Eigen::MatrixXd::Zero(6 * n, 6 * n);
  for (int k = 0; k < n; ++k) qs.block<6, 6>(6 * k, 6 * k) = qk;
  const Eigen::MatrixXd q_fd = w * qs * w.transpose();
  EXPECT_LT(rel_err(r.Q.topLeftCorner<9, 9>(), q_fd), 1e-4);
  EXPECT_EQ(r.Q.bottomRows<6>(), (Eigen::Matrix<double, 6, 15>::Zero()));

  // Bias: every input sees -b.
  const Eigen::MatrixXd b_fd = numerical_jacobian_from_vec(
      [&](const Eigen::VectorXd& b) {
        Eigen::VectorXd d(6 * n);
        for (int k = 0; k < n; ++k) d.segment<6>(6 * k) = -b;
        return as_se23(sequential_du(us, d));
      },
      Eigen::VectorXd::Zero(6), Side::kRight);
  EXPECT_LT(rel_err(r.B, b_fd), 1e-5);
}

TEST(ImuRmi, CovarianceIsPsdAndTraceGrows) {
  std::mt19937_64 rng(15);
  Mat6 qk = 1e-3 * Mat6::Identity();
  ImuRmi r = ImuRmi::Identity(0);
  WheelRmi wr = WheelRmi::Identity(0);
  double prev = 0.0, prev_w = 0.0;
  for (int k = 0; k < 300; ++k) {
    r = increment_imu(r, random_imu(rng), qk);
    wr = increment_wheel(wr, randn(3, rng), 1e-3 * Mat3::Identity(), 0.01);
    EXPECT_GE(r.Q.trace(), prev);
    EXPECT_GE(wr.Q.trace(), prev_w);
    prev = r.Q.trace();
    prev_w = wr.Q.trace();
  }
  EXPECT_GT(min_eig(r.Q), -1e-12);
  EXPECT_GT(min_eig(wr.Q), -1e-15);
}

// ---------------------------------------------------------------------------
// Bias correction

TEST(CorrectBias, ZeroBiasIsNoOp) {
  std::mt19937_64 rng(16);
  ImuRmi r = ImuRmi::Identity(0);
  for (int k = 0; k < 30; ++k) r = increment_imu(r, random_imu(rng), Mat6::Identity() * 1e-4);
  const ImuRmi c = correct_bias(r, Vec6::Zero());
  EXPECT_EQ(c.dU, r.dU);
  EXPECT_EQ(c.Q, r.Q);
}

TEST(CorrectBias, ErrorIsSecondOrder) {
  std::mt19937_64 rng(17);
  std::vector<ImuInput> us;
  ImuRmi r = ImuRmi::Identity(0);
  for (int k = 0; k < 200; ++k) {
    us.push_back(random_imu(rng));
    r = increment_imu(r, us.back(), Mat6::Zero());
  }
  const Vec6 b0 = (Vec6() << 0.02, -0.01, 0.015, 0.1, -0.2, 0.05).finished();
  const auto discrepancy = [&](const Vec6& b) {
    ImuRmi rebuilt = ImuRmi::Identity(0);
    for (const auto& u : us) {
      rebuilt = increment_imu(rebuilt, {u.gyro - b.head<3>(), u.accel - b.tail<3>(), u.dt},
                              Mat6::Zero());
    }
    return ominus(as_se23(correct_bias(r, b).dU), as_se23(rebuilt.dU), Side::kRight).norm();
  };
  const double e1 = discrepancy(b0);
  const double e2 = discrepancy(0.5 * b0);
  const double e3 = discrepancy(0.25 * b0);
  EXPECT_NEAR(e1 / e2, 4.0, 0.4);
  EXPECT_NEAR(e2 / e3, 4.0, 0.4);
}

TEST(CorrectBias, GyroBiasOnStationaryIncrement) {
  // Stationary with gravity reaction only: a gyro bias rotates the
  // increment and, through the rotation, the accumulated velocity/position.
  ImuRmi r = ImuRmi::Identity(0);
  const int n = 100;
  for (int k = 0; k < n; ++k) {
    r = increment_imu(r, {Vec3::Zero(), Vec3::Zero(), 0.01}, Mat6::Zero());
  }
  Vec6 b = Vec6::Zero();
  b(2) = 1e-3;
  const ImuRmi c = correct_bias(r, b);
  ImuRmi rebuilt = ImuRmi::Identity(0);
  for (int k = 0; k < n; ++k) {
    rebuilt = increment_imu(rebuilt, {-b.head<3>(), Vec3::Zero(), 0.01}, Mat6::Zero());
  }
  EXPECT_LT((c.dU - rebuilt.dU).norm(), 1e-9);
  // Zero specific force: only the rotation block moves.
  EXPECT_LT(c.dU.topRightCorner(3, 2).norm(), 1e-15);
  EXPECT_GT((c.dU.topLeftCorner<3, 3>() - Mat3::Identity()).norm(), 1e-4);
  // Bias Jacobian: gyro columns touch only attitude when the input is zero.
  EXPECT_LT(r.B.block(3, 0, 6, 3).norm(), 1e-15);
  EXPECT_GT(r.B.topLeftCorner(3, 3).norm(), 0.5);
}

// ---------------------------------------------------------------------------
// Identity and composition

TEST(IdentityRmi, AppliesAsNoOp) {
  std::mt19937_64 rng(18);
  const auto d = GroupDescriptor::Composite(
      {GroupDescriptor::SE23(), GroupDescriptor::VectorSpace(6), GroupDescriptor::SE2(),
       GroupDescriptor::VectorSpace(2)});
  const Belief b(random_element(d, rng), random_spd(20, rng), Side::kRight);
  const Belief b1 = apply_rmi(b, 0, ImuRmi::Identity(5), ImuPlacement::kRelativePose, 5);
  const Belief b2 = apply_rmi(b1, 2, WheelRmi::Identity(5), 5);
  const Belief b3 = apply_rmi(b2, 3, LinearRmi::Identity(2, 5), 5);
  for (int i = 0; i < 4; ++i) {
    EXPECT_LT((b3.mean().member(i).matrix() - b.mean().member(i).matrix()).norm(), 1e-15);
  }
  EXPECT_LT((b3.cov() - b.cov()).norm(), 1e-14);
  const Rmi ids[] = {identity_rmi(RmiKind::kLinear, 2, 4), identity_rmi(RmiKind::kWheel, 2),
                     identity_rmi(RmiKind::kImu, 2)};
  for (const auto& r : ids) EXPECT_EQ(span_of(r), (Span{2, 2}));
  EXPECT_EQ(kind_of(ids[2]), RmiKind::kImu);
}

TEST(IdentityRmi, IncrementFromIdentityIsSingleStep) {
  const ImuInput u{Vec3(0.1, -0.2, 0.3), Vec3(0.5, 0.1, 9.7), 0.005};
  const ImuRmi r = increment_imu(ImuRmi::Identity(0), u, Mat6::Identity() * 1e-4);
  EXPECT_EQ(r.dU, imu_increment_matrix(u));
  EXPECT_LT((r.B + imu_input_jacobian(u)).norm(), 1e-18);
}

TEST(IdentityRmi, PrefixThenSuffixEqualsWhole) {
  std::mt19937_64 rng(19);
  std::vector<ImuInput> us;
  std::vector<Vec3> ws;
  for (int k = 0; k < 60; ++k) {
    us.push_back(random_imu(rng));
    ws.push_back(randn(3, rng));
  }
  const Mat6 qk = 1e-4 * Mat6::Identity();
  for (int split : {0, 1, 17, 59, 60}) {
    ImuRmi a = ImuRmi::Identity(0), whole = ImuRmi::Identity(0);
    WheelRmi wa = WheelRmi::Identity(0), wwhole = WheelRmi::Identity(0);
    for (int k = 0; k < 60; ++k) {
      whole = increment_imu(whole, us[k], qk);
      wwhole = increment_wheel(wwhole, ws[k], Mat3::Identity() * 1e-3, 0.01);
      if (k < split) {
        a = increment_imu(a, us[k], qk);
        wa = increment_wheel(wa, ws[k], Mat3::Identity() * 1e-3, 0.01);
      }
    }
    for (int k = split; k < 60; ++k) {
      a = increment_imu(a, us[k], qk);
      wa = increment_wheel(wa, ws[k], Mat3::Identity() * 1e-3, 0.01);
    }
    EXPECT_EQ(a.dU, whole.dU);
    EXPECT_EQ(a.Q, whole.Q);
    EXPECT_EQ(wa.dT, wwhole.dT);
  }
}

// ---------------------------------------------------------------------------
// Application

TEST(ApplyRmi, SpanMismatchThrows) {
  const Belief b(Element::FromVector(Eigen::Vector2d::Zero()), Eigen::Matrix2d::Identity(),
                 Side::kRight);
  EXPECT_THROW(apply_rmi(b, 0, LinearRmi::Identity(2, 3), 4), SpanMismatch);
  EXPECT_THROW(apply_rmi(b, 0, LinearRmi::Identity(3, 4), 4), DescriptorMismatch);
}

TEST(ApplyRmi, SingleStepEqualsPredict) {
  std::mt19937_64 rng(20);
  const double dt = 0.01;
  const Mat3 qw = Eigen::Vector3d(1e-4, 4e-4, 1e-6).asDiagonal();
  const Belief bw(random_element(GroupDescriptor::SE2(), rng), 1e-2 * random_spd(3, rng),
                  Side::kRight);
  const Vec3 u(0.3, 1.2, 0.0);
  const Belief pw = predict(bw, models::wheel(dt, qw), u);
  const Belief aw = apply_rmi(bw, 0, increment_wheel(WheelRmi::Identity(0), u, qw, dt), 0);
  EXPECT_LT((pw.mean().matrix() - aw.mean().matrix()).norm(), 1e-15);
  EXPECT_LT(rel_err(pw.cov(), aw.cov()), 1e-14);

  const Vec3 g(0, 0, -9.80665);
  const Mat6 qi = 1e-4 * Mat6::Identity();
  const ImuInput ui = random_imu(rng);
  Eigen::VectorXd uv(6);
  uv << ui.gyro, ui.accel;
  const Belief bi(random_element(GroupDescriptor::SE23(), rng), 1e-2 * random_spd(9, rng),
                  Side::kRight);
  const Belief pi = predict(bi, models::imu(ui.dt, g, qi), uv);
  const Belief ai = apply_rmi(bi, 0, increment_imu(ImuRmi::Identity(0, g), ui, qi),
                              ImuPlacement::kWorldPose, 0);
  EXPECT_LT((pi.mean().matrix() - ai.mean().matrix()).norm(), 1e-13);
  EXPECT_LT(rel_err(pi.cov(), ai.cov()), 1e-12);
}

TEST(ApplyRmi, ManyStepsEqualChainedPredict) {
  std::mt19937_64 rng(21);
  const int n = 150;
  const double dt = 0.005;
  const Vec3 g(0, 0, -9.80665);
  const Mat6 qi = 1e-6 * Mat6::Identity();
  const auto pm = models::imu(dt, g, qi);
  Belief seq(random_element(GroupDescriptor::SE23(), rng), 1e-3 * random_spd(9, rng),
             Side::kRight);
  const Belief start = seq;
  ImuRmi r = ImuRmi::Identity(10, g);
  for (int k = 0; k < n; ++k) {
    const ImuInput u = random_imu(rng, dt);
    Eigen::VectorXd uv(6);
    uv << u.gyro, u.accel;
    seq = predict(seq, pm, uv);
    r = increment_imu(r, u, qi);
  }
  const Belief one = apply_rmi(start, 0, r, ImuPlacement::kWorldPose, 10);
  EXPECT_LT(rel_err(one.mean().matrix(), seq.mean().matrix()), 1e-12);
  EXPECT_LT(rel_err(one.cov(), seq.cov()), 1e-6);
}

TEST(ApplyRmi, LeftSideMatchesRightSideUpToTransport) {
  std::mt19937_64 rng(22);
  const Element x = random_element(GroupDescriptor::SE2(), rng);
  const Eigen::MatrixXd p = 1e-3 * random_spd(3, rng);
  WheelRmi r = WheelRmi::Identity(0);
  for (int k = 0; k < 20; ++k) r = increment_wheel(r, randn(3, rng), 1e-3 * Mat3::Identity(), 0.01);
  const Belief right = apply_rmi(Belief(x, p, Side::kRight), 0, r, 0);
  // Same distribution expressed with left perturbations: P_l = Ad P_r Ad^T.
  const Mat3 ad0 = se2::adjoint(x.se2());
  const Belief left = apply_rmi(Belief(x, ad0 * p * ad0.transpose(), Side::kLeft), 0, r, 0);
  const Mat3 ad1 = se2::adjoint(right.mean().se2());
  EXPECT_LT(rel_err(left.cov(), ad1 * right.cov() * ad1.transpose()), 1e-12);
}

TEST(ApplyRmi, RelativePoseAfterIntermediateRestoresSequential) {
  // T_ij <- U_i^-1 T_ij U_j step by step versus own partial updates
  // followed by one neighbor increment.
  std::mt19937_64 rng(23);
  const int n = 90;
  Mat5 t = random_element(GroupDescriptor::SE23(), rng).se23();
  Mat5 inter = t;
  ImuRmi rj = ImuRmi::Identity(0);
  for (int k = 0; k < n; ++k) {
    const ImuInput ui = random_imu(rng), uj = random_imu(rng);
    t = se23::inverse(imu_increment_matrix(ui)) * t * imu_increment_matrix(uj);
    inter = se23::inverse(imu_increment_matrix(ui)) * inter;
    rj = increment_imu(rj, uj, Mat6::Zero());
  }
  EXPECT_NEAR(se23::time_offset(inter), -n * 0.005, 1e-12);
  const Belief b(as_se23(inter), Eigen::MatrixXd::Identity(9, 9) * 1e-4, Side::kRight);
  const Belief out = apply_rmi(b, 0, rj, ImuPlacement::kRelativePose, 0);
  EXPECT_LT(rel_err(out.mean().matrix(), t), 1e-12);
  EXPECT_NEAR(se23::time_offset(out.mean().se23()), 0.0, 1e-12);
}

TEST(ApplyRmi, BiasCorrectedApplicationJacobian) {
  std::mt19937_64 rng(24);
  ImuRmi r = ImuRmi::Identity(0);
  for (int k = 0; k < 80; ++k) r = increment_imu(r, random_imu(rng), 1e-4 * Mat6::Identity());
  const auto d = GroupDescriptor::Composite(
      {GroupDescriptor::SE23(), GroupDescriptor::VectorSpace(6)});
  const Element x = Element::FromMembers(
      {random_element(GroupDescriptor::SE23(), rng),
       Element::FromVector(randn(6, rng, 0.05))});
  const Belief b(x, Eigen::MatrixXd::Zero(15, 15), Side::kRight);
  const Belief out = apply_rmi_with_bias(b, 0, 1, r, 0);
  // Mean equals correct_bias then plain relative application.
  const Mat5 expect = x.member(0).se23() * correct_bias(r, x.member(1).vector()).dU;
  EXPECT_LT(rel_err(out.mean().member(0).matrix(), expect), 1e-13);
  // Zero prior covariance leaves exactly the increment noise on the pose.
  EXPECT_LT(rel_err(out.cov().topLeftCorner<9, 9>(), r.Q.topLeftCorner<9, 9>()), 1e-14);

  // Covariance map: compare F against finite differences of the mean map.
  const auto fn = [&](const Element& e) {
    return apply_rmi_with_bias(Belief(e, Eigen::MatrixXd::Zero(15, 15), Side::kRight), 0, 1,
                               r, 0)
        .mean();
  };
  const Eigen::MatrixXd f_fd = numerical_jacobian(fn, x, Side::kRight);
  const Eigen::MatrixXd p = random_spd(15, rng) * 1e-3;
  const Belief with_p = apply_rmi_with_bias(Belief(x, p, Side::kRight), 0, 1, r, 0);
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(15, 15);
  q.topLeftCorner<9, 9>() = r.Q.topLeftCorner<9, 9>();
  EXPECT_LT(rel_err(with_p.cov(), f_fd * p * f_fd.transpose() + q), 1e-7);
}

// ---------------------------------------------------------------------------
// Wire format

TEST(Serialization, RoundTripsEveryKind) {
  std::mt19937_64 rng(25);
  ImuRmi ri = ImuRmi::Identity(7);
  WheelRmi rw = WheelRmi::Identity(7);
  LinearRmi rl = LinearRmi::Identity(3, 7);
  for (int k = 0; k < 40; ++k) {
    ri = increment_imu(ri, random_imu(rng), 1e-4 * Mat6::Identity());
    rw = increment_wheel(rw, randn(3, rng), 1e-3 * Mat3::Identity(), 0.01);
    rl = increment_linear(rl, Eigen::MatrixXd::Identity(3, 3) + 0.01 * random_spd(3, rng),
                          random_spd(3, rng), randn(3, rng), random_spd(3, rng));
  }
  const auto bi = std::get<ImuRmi>(deserialize(serialize(ri)));
  EXPECT_EQ(bi.dU, ri.dU);
  EXPECT_EQ(bi.dG, ri.dG);
  EXPECT_EQ(bi.Q, ri.Q);
  EXPECT_EQ(bi.B, ri.B);
  EXPECT_EQ(bi.span, ri.span);
  EXPECT_EQ(bi.dt_total, ri.dt_total);
  EXPECT_EQ(bi.gravity, ri.gravity);
  const auto bw = std::get<WheelRmi>(deserialize(serialize(rw)));
  EXPECT_EQ(bw.dT, rw.dT);
  EXPECT_EQ(bw.Q, rw.Q);
  const auto bl = std::get<LinearRmi>(deserialize(serialize(rl)));
  EXPECT_EQ(bl.F, rl.F);
  EXPECT_EQ(bl.dx, rl.dx);
  EXPECT_EQ(bl.Q, rl.Q);
  EXPECT_EQ(bl.span, rl.span);
}

TEST(Serialization, RejectsMalformedMessages) {
  auto bytes = serialize(WheelRmi::Identity(0));
  bytes.pop_back();
  EXPECT_THROW(deserialize(bytes), std::invalid_argument);
  bytes = serialize(WheelRmi::Identity(0));
  bytes[0] = 42;
  EXPECT_THROW(deserialize(bytes), std::invalid_argument);
}

TEST(Serialization, SizeIsConstantInIntervalLength) {
  std::mt19937_64 rng(26);
  ImuRmi r = ImuRmi::Identity(0);
  const std::size_t n0 = serialize(r).size();
  EXPECT_EQ(n0, serialized_size(RmiKind::kImu));
  for (int k = 1; k <= 1000; ++k) {
    r = increment_imu(r, random_imu(rng), 1e-4 * Mat6::Identity());
    if (k % 100 == 0) EXPECT_EQ(serialize(r).size(), n0);
  }
  EXPECT_EQ(raw_input_bytes(RmiKind::kImu, 1000) - raw_input_bytes(RmiKind::kImu, 0),
            1000u * 7 * 8);
}
