#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "decest/errors.hpp"
#include "decest/manifold.hpp"
#include "test_util.hpp"

using namespace decest;
using decest::testing::randn;
using decest::testing::random_element;
using decest::testing::rel_err;

namespace {

// Independent oracles -------------------------------------------------------

// Truncated power series of the matrix exponential.
Eigen::MatrixXd expm_series(const Eigen::MatrixXd& a) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Identity(a.rows(), a.cols());
  Eigen::MatrixXd term = out;
  for (int k = 1; k < 60; ++k) {
    term = term * a / static_cast<double>(k);
    out += term;
  }
  return out;
}

// sum_k A^k / (k + shift)!
Eigen::Matrix3d power_series(const Eigen::Matrix3d& a, int shift) {
  Eigen::Matrix3d out = Eigen::Matrix3d::Zero();
  Eigen::Matrix3d pow = Eigen::Matrix3d::Identity();
  double fact = 1.0;
  for (int i = 2; i <= shift; ++i) fact *= i;
  for (int k = 0; k < 40; ++k) {
    out += pow / fact;
    pow = pow * a;
    fact *= (k + 1 + shift);
  }
  return out;
}

Eigen::Matrix3d rodrigues(const Eigen::Vector3d& axis, double angle) {
  const Eigen::Vector3d k = axis.normalized();
  Eigen::Matrix3d kx;
  kx << 0, -k.z(), k.y(), k.z(), 0, -k.x(), -k.y(), k.x(), 0;
  return std::cos(angle) * Eigen::Matrix3d::Identity() +
         (1.0 - std::cos(angle)) * k * k.transpose() + std::sin(angle) * kx;
}

std::vector<GroupDescriptor> leaf_groups() {
  return {GroupDescriptor::VectorSpace(4), GroupDescriptor::SO3(),
          GroupDescriptor::SE2(), GroupDescriptor::SE23()};
}

std::vector<GroupDescriptor> all_groups() {
  auto g = leaf_groups();
  g.push_back(GroupDescriptor::Composite(
      {GroupDescriptor::SE2(), GroupDescriptor::VectorSpace(2),
       GroupDescriptor::SO3()}));
  g.push_back(GroupDescriptor::Composite(
      {GroupDescriptor::SE23(),
       GroupDescriptor::Composite({GroupDescriptor::SO3(),
                                   GroupDescriptor::VectorSpace(3)})}));
  return g;
}

double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

// Descriptors ---------------------------------------------------------------

TEST(Descriptor, DofOfLeavesAndComposites) {
  EXPECT_EQ(GroupDescriptor::SO3().dof(), 3);
  EXPECT_EQ(GroupDescriptor::SE2().dof(), 3);
  EXPECT_EQ(GroupDescriptor::SE23().dof(), 9);
  EXPECT_EQ(GroupDescriptor::VectorSpace(7).dof(), 7);
  const auto c = GroupDescriptor::Composite(
      {GroupDescriptor::SE23(), GroupDescriptor::VectorSpace(6),
       GroupDescriptor::SE2()});
  EXPECT_EQ(c.dof(), 18);
  EXPECT_EQ(c.member_offset(0), 0);
  EXPECT_EQ(c.member_offset(1), 9);
  EXPECT_EQ(c.member_offset(2), 15);
  EXPECT_EQ(c.to_string(), "(SE23,R6,SE2)");
}

TEST(Descriptor, EqualityIsStructural) {
  const auto a = GroupDescriptor::Composite({GroupDescriptor::SO3()});
  const auto b = GroupDescriptor::Composite({GroupDescriptor::SO3()});
  EXPECT_EQ(a, b);
  EXPECT_NE(a, GroupDescriptor::SO3());
  EXPECT_NE(GroupDescriptor::VectorSpace(2), GroupDescriptor::VectorSpace(3));
}

// compose / inverse / identity ---------------------------------------------

TEST(Compose, IdentityIsNeutral) {
  std::mt19937_64 rng(1);
  for (const auto& d : all_groups()) {
    const Element x = random_element(d, rng);
    EXPECT_LT(max_abs(log_map(compose(x, identity(d))) - log_map(x)), 1e-12)
        << d.to_string();
    EXPECT_LT(max_abs(log_map(compose(identity(d), x)) - log_map(x)), 1e-12);
  }
}

TEST(Compose, QuarterTurnsMakeHalfTurn) {
  const Eigen::Matrix3d rz = rodrigues(Eigen::Vector3d::UnitZ(), M_PI / 2);
  const Element x = Element::FromSO3(rz);
  const Element y = compose(x, x);
  EXPECT_LT(max_abs(y.so3() - rodrigues(Eigen::Vector3d::UnitZ(), M_PI)), 1e-12);
}

TEST(Compose, CompositeIsMemberwise) {
  std::mt19937_64 rng(2);
  const auto d = GroupDescriptor::Composite(
      {GroupDescriptor::SE2(), GroupDescriptor::SO3()});
  const Element a = random_element(d, rng);
  const Element b = random_element(d, rng);
  const Element c = compose(a, b);
  EXPECT_LT(max_abs(c.member(0).se2() - a.member(0).se2() * b.member(0).se2()),
            1e-12);
  EXPECT_LT(max_abs(c.member(1).so3() - a.member(1).so3() * b.member(1).so3()),
            1e-12);
}

TEST(Compose, RejectsMismatchedDescriptors) {
  EXPECT_THROW(compose(identity(GroupDescriptor::SO3()),
                       identity(GroupDescriptor::SE2())),
               DescriptorMismatch);
  EXPECT_THROW(ominus(identity(GroupDescriptor::VectorSpace(2)),
                      identity(GroupDescriptor::VectorSpace(3)), Side::kRight),
               DescriptorMismatch);
}

TEST(Inverse, ComposesToIdentity) {
  std::mt19937_64 rng(3);
  for (const auto& d : all_groups()) {
    for (int k = 0; k < 50; ++k) {
      const Element x = random_element(d, rng, 1.0);
      EXPECT_LT(log_map(compose(x, inverse(x))).norm(), 1e-9) << d.to_string();
    }
    EXPECT_LT(log_map(inverse(identity(d))).norm(), 1e-15);
  }
}

TEST(Inverse, Se2MatchesMatrixInverse) {
  std::mt19937_64 rng(4);
  const Element x = random_element(GroupDescriptor::SE2(), rng, 2.0);
  const Eigen::Matrix3d t = x.se2();
  const Eigen::Matrix3d ti = inverse(x).se2();
  EXPECT_LT(max_abs(ti - t.inverse()), 1e-12);
  EXPECT_LT(max_abs(ti.topLeftCorner<2, 2>() - t.topLeftCorner<2, 2>().transpose()),
            1e-15);
  EXPECT_LT(max_abs(ti.topRightCorner<2, 1>() +
                    t.topLeftCorner<2, 2>().transpose() * t.topRightCorner<2, 1>()),
            1e-12);
}

TEST(Inverse, Se23WithTimeOffsetMatchesMatrixInverse) {
  std::mt19937_64 rng(5);
  Eigen::Matrix<double, 5, 5> t = random_element(GroupDescriptor::SE23(), rng).se23();
  t(3, 4) = 0.37;
  const Element x = Element::FromSE23(t);
  EXPECT_LT(max_abs(inverse(x).se23() - t.inverse()), 1e-12);
}

TEST(Inverse, VectorSpaceNegates) {
  const Element x = Element::FromVector(Eigen::Vector3d(1, -2, 3));
  EXPECT_EQ(inverse(x).vector(), Eigen::VectorXd(Eigen::Vector3d(-1, 2, -3)));
}

TEST(Element, RejectsNonRotations) {
  Eigen::Matrix3d c = Eigen::Matrix3d::Identity();
  c(0, 0) = 1.01;
  EXPECT_THROW(Element::FromSO3(c), DomainError);
  EXPECT_THROW(Element::FromSO3(-Eigen::Matrix3d::Identity()), DomainError);
  Eigen::Matrix3d t = Eigen::Matrix3d::Identity();
  t(2, 0) = 1.0;
  EXPECT_THROW(Element::FromSE2(t), DomainError);
}

// exp / log ------------------------------------------------------------------

TEST(ExpLog, ZeroMapsToIdentity) {
  for (const auto& d : all_groups()) {
    const Element e = exp_map(d, Eigen::VectorXd::Zero(d.dof()));
    EXPECT_LT(log_map(e).norm(), 1e-15) << d.to_string();
  }
}

TEST(ExpLog, QuarterTurnAboutZ) {
  const Element c = exp_map(GroupDescriptor::SO3(), Eigen::Vector3d(0, 0, M_PI / 2));
  EXPECT_LT((c.so3() * Eigen::Vector3d::UnitX() - Eigen::Vector3d::UnitY()).norm(),
            1e-15);
}

TEST(ExpLog, Se2PureTranslation) {
  const double v = 1.7, dt = 0.3;
  const Element t = exp_map(GroupDescriptor::SE2(), Eigen::Vector3d(0, v, 0) * dt);
  EXPECT_LT(max_abs(t.se2().topLeftCorner<2, 2>() - Eigen::Matrix2d::Identity()),
            1e-15);
  EXPECT_NEAR(t.se2()(0, 2), v * dt, 1e-15);
  EXPECT_NEAR(t.se2()(1, 2), 0.0, 1e-15);
}

TEST(ExpLog, MatchesMatrixExponentialOfWedge) {
  std::mt19937_64 rng(6);
  for (const auto& d : leaf_groups()) {
    if (d.kind() == GroupDescriptor::Kind::kVectorSpace) continue;
    for (double scale : {1e-8, 1e-3, 9e-3, 0.011, 0.5, 1.5}) {
      for (int k = 0; k < 20; ++k) {
        Eigen::VectorXd xi = randn(d.dof(), rng);
        xi *= scale / xi.head(d.kind() == GroupDescriptor::Kind::kSE2 ? 1 : 3).norm();
        const Eigen::MatrixXd oracle = expm_series(wedge(d, xi));
        EXPECT_LT(max_abs(exp_map(d, xi).matrix() - oracle), 1e-12)
            << d.to_string() << " scale " << scale;
      }
    }
  }
}

TEST(ExpLog, RoundTripProperty) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> ang(0.0, M_PI - 0.01);
  for (const auto& d : all_groups()) {
    for (int k = 0; k < 1000; ++k) {
      Eigen::VectorXd xi = randn(d.dof(), rng, 2.0);
      // Rescale every rotation block to a random angle below pi - 0.01.
      std::function<void(const GroupDescriptor&, int)> clamp =
          [&](const GroupDescriptor& g, int off) {
            using K = GroupDescriptor::Kind;
            if (g.kind() == K::kComposite) {
              for (int m = 0; m < g.num_members(); ++m) {
                clamp(g.member(m), off + g.member_offset(m));
              }
            } else if (g.kind() == K::kSO3 || g.kind() == K::kSE23) {
              xi.segment(off, 3) = xi.segment(off, 3).normalized() * ang(rng);
            } else if (g.kind() == K::kSE2) {
              xi(off) = (xi(off) > 0 ? 1 : -1) * ang(rng);
            }
          };
      clamp(d, 0);
      EXPECT_LT((log_map(exp_map(d, xi)) - xi).norm(), 1e-8) << d.to_string();
    }
  }
}

TEST(ExpLog, SmallAngleRoundTrip) {
  std::mt19937_64 rng(8);
  for (const auto& d : leaf_groups()) {
    for (double s : {0.0, 1e-12, 1e-7, 1e-4, 9.99e-3, 1.001e-2}) {
      Eigen::VectorXd xi = randn(d.dof(), rng);
      xi.head(d.kind() == GroupDescriptor::Kind::kSE2 ? 1 : 3) *= s;
      EXPECT_LT((log_map(exp_map(d, xi)) - xi).norm(), 1e-13) << d.to_string();
    }
  }
}

TEST(ExpLog, LogNearPiIsADomainError) {
  const Element c =
      Element::FromSO3(rodrigues(Eigen::Vector3d(1, 2, 3), M_PI - 1e-8));
  EXPECT_THROW(log_map(c), DomainError);
  const Element t = exp_map(GroupDescriptor::SE2(), Eigen::Vector3d(M_PI, 0, 0));
  EXPECT_THROW(log_map(t), DomainError);
  // Just inside the margin is fine.
  const Element ok =
      Element::FromSO3(rodrigues(Eigen::Vector3d(1, 2, 3), M_PI - 1e-3));
  EXPECT_NEAR(log_map(ok).norm(), M_PI - 1e-3, 1e-9);
}

TEST(ExpLog, TimeOffsetLogIsADomainError) {
  Eigen::Matrix<double, 5, 5> t = Eigen::Matrix<double, 5, 5>::Identity();
  t(3, 4) = 0.01;
  EXPECT_THROW(log_map(Element::FromSE23(t)), DomainError);
}

// adjoint ---------------------------------------------------------------------

TEST(Adjoint, IdentityGivesUnitMatrix) {
  for (const auto& d : all_groups()) {
    EXPECT_LT(max_abs(adjoint(identity(d)) -
                      Eigen::MatrixXd::Identity(d.dof(), d.dof())),
              1e-15);
  }
}

TEST(Adjoint, So3IsTheRotation) {
  std::mt19937_64 rng(9);
  const Element c = random_element(GroupDescriptor::SO3(), rng);
  EXPECT_LT(max_abs(adjoint(c) - c.so3()), 1e-15);
  const Eigen::Vector3d xi = randn(3, rng);
  const Eigen::Matrix3d m = c.so3() * so3::hat(xi) * c.so3().transpose();
  EXPECT_LT((so3::vee(m) - c.so3() * xi).norm(), 1e-12);
}

TEST(Adjoint, MatchesConjugationDefinition) {
  std::mt19937_64 rng(10);
  for (const auto& d : leaf_groups()) {
    for (int k = 0; k < 100; ++k) {
      Eigen::MatrixXd m = random_element(d, rng, 1.5).matrix();
      if (d.kind() == GroupDescriptor::Kind::kSE23 && k % 2) m(3, 4) = randn(1, rng)(0);
      const Element x = make_unchecked(d, m);
      const Eigen::VectorXd xi = randn(d.dof(), rng);
      const Eigen::MatrixXd conj =
          d.kind() == GroupDescriptor::Kind::kVectorSpace
              ? Eigen::MatrixXd(xi)
              : Eigen::MatrixXd(m * wedge(d, xi) * m.inverse());
      EXPECT_LT((adjoint(x) * xi - vee(d, conj)).norm(), 1e-10) << d.to_string();
    }
  }
}

TEST(Adjoint, IsAHomomorphism) {
  std::mt19937_64 rng(11);
  for (const auto& d : all_groups()) {
    for (int k = 0; k < 100; ++k) {
      const Element a = random_element(d, rng, 1.2);
      const Element b = random_element(d, rng, 1.2);
      EXPECT_LT(max_abs(adjoint(compose(a, b)) - adjoint(a) * adjoint(b)), 1e-9);
    }
  }
}

// Associativity ---------------------------------------------------------------

TEST(Compose, AssociativityProperty) {
  std::mt19937_64 rng(12);
  for (const auto& d : all_groups()) {
    for (int k = 0; k < 1000; ++k) {
      const Element a = random_element(d, rng, 1.5);
      const Element b = random_element(d, rng, 1.5);
      const Element c = random_element(d, rng, 1.5);
      const Element l = compose(compose(a, b), c);
      const Element r = compose(a, compose(b, c));
      if (d.is_composite()) {
        EXPECT_LT(ominus(l, r, Side::kRight).norm(), 1e-10);
      } else {
        EXPECT_LT(max_abs(l.matrix() - r.matrix()), 1e-10) << d.to_string();
      }
    }
  }
}

TEST(Compose, LongChainsStayOrthonormal) {
  std::mt19937_64 rng(13);
  Element x = identity(GroupDescriptor::SE23());
  for (int k = 0; k < 100000; ++k) {
    x = compose(x, random_element(GroupDescriptor::SE23(), rng, 0.1));
  }
  EXPECT_LT(orthonormality_error(x), 1e-9);
}

// Jacobians -------------------------------------------------------------------

TEST(GroupJacobian, ZeroGivesUnitMatrix) {
  for (const auto& d : all_groups()) {
    for (Side s : {Side::kLeft, Side::kRight}) {
      EXPECT_LT(max_abs(group_jacobian(d, Eigen::VectorXd::Zero(d.dof()), s) -
                        Eigen::MatrixXd::Identity(d.dof(), d.dof())),
                1e-15);
    }
  }
}

TEST(GroupJacobian, VectorSpaceIsAlwaysUnit) {
  std::mt19937_64 rng(14);
  const auto d = GroupDescriptor::VectorSpace(5);
  EXPECT_EQ(group_jacobian(d, randn(5, rng), Side::kRight),
            Eigen::MatrixXd::Identity(5, 5));
}

TEST(GroupJacobian, So3SeriesOracle) {
  // J_l = sum phi^k/(k+1)!, J_r(phi) = J_l(-phi), N = 2 sum phi^k/(k+2)!
  std::mt19937_64 rng(15);
  for (double s : {1e-9, 1e-5, 5e-3, 0.0099, 0.0101, 0.3, 2.0}) {
    const Eigen::Vector3d phi = randn(3, rng).normalized() * s;
    EXPECT_LT(max_abs(so3::left_jacobian(phi) - power_series(so3::hat(phi), 1)), 1e-14);
    EXPECT_LT(max_abs(so3::right_jacobian(phi) - power_series(so3::hat(-phi), 1)),
              1e-14);
    EXPECT_LT(max_abs(so3::n_matrix(phi) - 2.0 * power_series(so3::hat(phi), 2)),
              1e-14);
    EXPECT_LT(max_abs(so3::left_jacobian_inverse(phi) * so3::left_jacobian(phi) -
                      Eigen::Matrix3d::Identity()),
              1e-13);
  }
}

TEST(GroupJacobian, NMatrixAgreesWithAxisAngleForm) {
  std::mt19937_64 rng(16);
  for (int k = 0; k < 20; ++k) {
    const Eigen::Vector3d phi = randn(3, rng);
    const double t = phi.norm();
    const Eigen::Vector3d z = phi / t;
    const Eigen::Matrix3d zx = so3::hat(z);
    const Eigen::Matrix3d oracle = z * z.transpose() +
                                   2.0 * (1.0 / t - std::sin(t) / (t * t)) * zx +
                                   2.0 * (std::cos(t) - 1.0) / (t * t) * zx * zx;
    EXPECT_LT(max_abs(so3::n_matrix(phi) - oracle), 1e-12);
  }
}

TEST(GroupJacobian, RightJacobianAboutZ) {
  const double t = 0.7;
  const Eigen::Matrix3d j = so3::right_jacobian(Eigen::Vector3d(0, 0, t));
  Eigen::Matrix3d oracle = Eigen::Matrix3d::Zero();
  oracle(0, 0) = oracle(1, 1) = std::sin(t) / t;
  oracle(0, 1) = (1 - std::cos(t)) / t;
  oracle(1, 0) = -(1 - std::cos(t)) / t;
  oracle(2, 2) = 1.0;
  EXPECT_LT(max_abs(j - oracle), 1e-14);
}

TEST(GroupJacobian, MatchesFiniteDifferenceOfExp) {
  std::mt19937_64 rng(17);
  for (const auto& d : all_groups()) {
    for (Side s : {Side::kLeft, Side::kRight}) {
      for (int k = 0; k < 100; ++k) {
        const double scale = (k % 4 == 0) ? 1e-3 : 1.0;
        const Eigen::VectorXd xi = randn(d.dof(), rng, scale);
        const Eigen::MatrixXd num = numerical_jacobian_from_vec(
            [&](const Eigen::VectorXd& v) { return exp_map(d, v); }, xi, s);
        EXPECT_LT(rel_err(group_jacobian(d, xi, s), num), 1e-5)
            << d.to_string() << " " << to_string(s);
        EXPECT_LT(max_abs(group_jacobian_inverse(d, xi, s) * group_jacobian(d, xi, s) -
                          Eigen::MatrixXd::Identity(d.dof(), d.dof())),
                  1e-10);
      }
    }
  }
}

TEST(GroupJacobian, SeriesBranchIsContinuousAtThreshold) {
  const Eigen::Vector3d axis = Eigen::Vector3d(0.3, -0.5, 0.8).normalized();
  const Eigen::Vector3d rho(0.4, 1.0, -2.0);
  const Eigen::Vector3d below = axis * std::nextafter(kSmallAngle, 0.0);
  const Eigen::Vector3d above = axis * std::nextafter(kSmallAngle, 10.0);
  const Eigen::Vector3d below2 = axis * std::nextafter(2 * kSmallAngle, 0.0);
  const Eigen::Vector3d above2 = axis * std::nextafter(2 * kSmallAngle, 10.0);
  EXPECT_LT(max_abs(so3::left_jacobian(below) - so3::left_jacobian(above)), 1e-13);
  EXPECT_LT(max_abs(so3::left_jacobian_inverse(below) -
                    so3::left_jacobian_inverse(above)), 1e-13);
  EXPECT_LT(max_abs(se23::q_matrix(below, rho) - se23::q_matrix(above, rho)), 1e-12);
  EXPECT_LT(max_abs(so3::n_matrix_times_derivative(below2, rho) -
                    so3::n_matrix_times_derivative(above2, rho)), 1e-12);
  EXPECT_LT(max_abs(so3::left_jacobian_times_derivative(below2, rho) -
                    so3::left_jacobian_times_derivative(above2, rho)), 1e-12);
}

TEST(GroupJacobian, ProductDerivativesMatchFiniteDifferences) {
  std::mt19937_64 rng(18);
  for (double s : {1e-4, 5e-3, 0.5, 2.0}) {
    for (int k = 0; k < 25; ++k) {
      const Eigen::Vector3d phi = randn(3, rng).normalized() * s;
      const Eigen::Vector3d a = randn(3, rng);
      Eigen::Matrix3d nj, nn;
      for (int c = 0; c < 3; ++c) {
        const double h = 1e-6;
        Eigen::Vector3d e = Eigen::Vector3d::Zero();
        e(c) = h;
        nj.col(c) = (so3::left_jacobian(phi + e) * a - so3::left_jacobian(phi - e) * a) /
                    (2 * h);
        nn.col(c) = (so3::n_matrix(phi + e) * a - so3::n_matrix(phi - e) * a) / (2 * h);
      }
      EXPECT_LT(rel_err(so3::left_jacobian_times_derivative(phi, a), nj), 1e-7);
      EXPECT_LT(rel_err(so3::n_matrix_times_derivative(phi, a), nn), 1e-7);
    }
  }
}

// oplus / ominus ----------------------------------------------------------------

TEST(OplusOminus, Neutral) {
  std::mt19937_64 rng(19);
  for (const auto& d : all_groups()) {
    const Element x = random_element(d, rng);
    for (Side s : {Side::kLeft, Side::kRight}) {
      EXPECT_LT(ominus(oplus(x, Eigen::VectorXd::Zero(d.dof()), s), x, s).norm(),
                1e-14);
      EXPECT_LT(ominus(x, x, s).norm(), 1e-14);
    }
  }
}

TEST(OplusOminus, VectorSpaceIsPlainArithmetic) {
  const Element x = Element::FromVector(Eigen::Vector2d(1, 2));
  const Eigen::Vector2d d(0.5, -3);
  EXPECT_EQ(oplus(x, d, Side::kLeft).vector(), Eigen::VectorXd(Eigen::Vector2d(1.5, -1)));
  EXPECT_EQ(ominus(oplus(x, d, Side::kRight), x, Side::kRight), Eigen::VectorXd(d));
}

TEST(OplusOminus, SidesFollowTheirDefinitions) {
  std::mt19937_64 rng(20);
  const auto d = GroupDescriptor::SE2();
  const Element a = random_element(d, rng);
  const Element b = random_element(d, rng);
  const Eigen::VectorXd dx = randn(3, rng, 0.3);
  EXPECT_LT(max_abs(oplus(a, dx, Side::kRight).se2() - a.se2() * se2::exp(dx)), 1e-14);
  EXPECT_LT(max_abs(oplus(a, dx, Side::kLeft).se2() - se2::exp(dx) * a.se2()), 1e-14);
  EXPECT_LT((ominus(a, b, Side::kRight) - se2::log(se2::inverse(b.se2()) * a.se2())).norm(),
            1e-14);
  EXPECT_LT((ominus(a, b, Side::kLeft) - se2::log(a.se2() * se2::inverse(b.se2()))).norm(),
            1e-14);
}

TEST(OplusOminus, InversePairProperty) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> mag(0.0, 0.5);
  for (const auto& d : all_groups()) {
    for (Side s : {Side::kLeft, Side::kRight}) {
      for (int k = 0; k < 200; ++k) {
        const Element x = random_element(d, rng, 1.5);
        const Eigen::VectorXd dx = randn(d.dof(), rng).normalized() * mag(rng);
        EXPECT_LT((ominus(oplus(x, dx, s), x, s) - dx).norm(), 1e-9);
      }
    }
  }
}

// numerical_jacobian ------------------------------------------------------------

TEST(NumericalJacobian, IdentityMapGivesUnitMatrix) {
  std::mt19937_64 rng(22);
  for (const auto& d : all_groups()) {
    const Element x = random_element(d, rng);
    const Eigen::MatrixXd j =
        numerical_jacobian([](const Element& e) { return e; }, x, Side::kRight);
    EXPECT_LT(max_abs(j - Eigen::MatrixXd::Identity(d.dof(), d.dof())), 1e-8);
  }
}

TEST(NumericalJacobian, LeftCompositionUnderRightPerturbation) {
  std::mt19937_64 rng(23);
  const auto d = GroupDescriptor::SE2();
  const Element y = random_element(d, rng, 2.0);
  const Element x = random_element(d, rng, 2.0);
  const Eigen::MatrixXd j = numerical_jacobian(
      [&](const Element& e) { return compose(y, e); }, x, Side::kRight);
  EXPECT_LT(max_abs(j - Eigen::MatrixXd::Identity(3, 3)), 1e-8);
}

TEST(NumericalJacobian, InverseMapIsMinusAdjoint) {
  std::mt19937_64 rng(24);
  for (const auto& d : leaf_groups()) {
    const Element x = random_element(d, rng);
    const Eigen::MatrixXd j = numerical_jacobian(
        [](const Element& e) { return inverse(e); }, x, Side::kRight);
    EXPECT_LT(rel_err(j, -adjoint(x)), 1e-7) << d.to_string();
  }
}
