#pragma once

// Closed-form primitives for the matrix Lie groups used by the estimator.
//
// Tangent orderings:
//   SO(3)    (phi)                 3
//   SE(2)    (theta, x, y)         3
//   SE_2(3)  (phi, nu, rho)        9   attitude, velocity, position
//
// SE_2(3) elements are stored as 5x5 matrices
//
//   [ C  v  r   ]
//   [ 0  1  tau ]
//   [ 0  0  1   ]
//
// where tau is a time offset. Physical extended poses have tau = 0; IMU
// increments and partially-propagated relative poses carry tau != 0. The
// group law is plain matrix multiplication either way, and Exp(xi) always
// has tau = 0.

#include <Eigen/Core>

namespace decest {

using Mat3 = Eigen::Matrix3d;
using Vec3 = Eigen::Vector3d;
using Mat5 = Eigen::Matrix<double, 5, 5>;
using Mat9 = Eigen::Matrix<double, 9, 9>;
using Vec9 = Eigen::Matrix<double, 9, 1>;

/// Below this rotation angle the coefficient functions are summed as power
/// series instead of evaluated in closed form.
inline constexpr double kSmallAngle = 1.0;
/// Log refuses rotations within this distance of pi.
inline constexpr double kLogPiMargin = 1e-6;

namespace so3 {

Mat3 hat(const Vec3& v);
Vec3 vee(const Mat3& m);

Mat3 exp(const Vec3& phi);
/// Throws DomainError when the rotation angle is within kLogPiMargin of pi.
Vec3 log(const Mat3& c);

Mat3 left_jacobian(const Vec3& phi);
Mat3 left_jacobian_inverse(const Vec3& phi);
Mat3 right_jacobian(const Vec3& phi);
Mat3 right_jacobian_inverse(const Vec3& phi);

/// N(phi) = 2 * sum_k phi^k / (k+2)!, the double-integral companion of J_l.
Mat3 n_matrix(const Vec3& phi);

/// d(J_l(phi) a)/d(phi).
Mat3 left_jacobian_times_derivative(const Vec3& phi, const Vec3& a);
/// d(N(phi) a)/d(phi).
Mat3 n_matrix_times_derivative(const Vec3& phi, const Vec3& a);

/// Closest rotation in the Frobenius sense (polar decomposition via SVD).
Mat3 project(const Mat3& c);

}  // namespace so3

namespace se2 {

Mat3 exp(const Vec3& xi);
Vec3 log(const Mat3& t);
Mat3 inverse(const Mat3& t);
Mat3 adjoint(const Mat3& t);
Mat3 right_jacobian(const Vec3& xi);
Mat3 left_jacobian(const Vec3& xi);

}  // namespace se2

namespace se23 {

Mat5 exp(const Vec9& xi);
/// Throws DomainError if tau != 0 or the rotation is too close to pi.
Vec9 log(const Mat5& t);
Mat5 inverse(const Mat5& t);
/// Ad(X) xi = (X xi^ X^-1)^v, valid for any tau.
Mat9 adjoint(const Mat5& t);
Mat9 left_jacobian(const Vec9& xi);
Mat9 right_jacobian(const Vec9& xi);

/// The translational coupling block of the SE(3)-style left Jacobian.
Mat3 q_matrix(const Vec3& phi, const Vec3& rho);

inline double time_offset(const Mat5& t) { return t(3, 4); }

}  // namespace se23

}  // namespace decest
