#pragma once

// Relative motion increments (RMIs). Each kind accumulates raw inputs into a
// constant-size summary with first-order noise covariance, which a receiver
// applies in one shot to a (possibly intermediate) state.
//
// IMU noise and bias ordering is (gyro, accel). The IMU covariance Q_pq is
// stored 15x15 over (attitude, velocity, position, gyro bias, accel bias);
// the bias blocks stay zero because the bias random walk belongs to the
// filter's process model, not to the increment.

#include <Eigen/Core>
#include <cstdint>
#include <variant>
#include <vector>

#include "decest/belief.hpp"
#include "decest/lie.hpp"

namespace decest {

using Mat15 = Eigen::Matrix<double, 15, 15>;
using Mat96 = Eigen::Matrix<double, 9, 6>;
using Vec6 = Eigen::Matrix<double, 6, 1>;

enum class RmiKind : std::uint32_t { kLinear = 1, kWheel = 2, kImu = 3 };

// Step indices covered by an increment: inputs p .. q-1.
struct Span {
  std::int64_t p = 0;
  std::int64_t q = 0;
  std::int64_t steps() const { return q - p; }
  friend bool operator==(const Span&, const Span&) = default;
};

struct LinearRmi {
  Eigen::MatrixXd F;   // F_{q-1} ... F_p
  Eigen::VectorXd dx;
  Eigen::MatrixXd Q;
  Span span;

  static LinearRmi Identity(int n, std::int64_t at_step);
};

struct WheelRmi {
  Mat3 dT = Mat3::Identity();  // SE(2)
  Mat3 Q = Mat3::Zero();
  Span span;

  static WheelRmi Identity(std::int64_t at_step);
};

struct ImuInput {
  Vec3 gyro = Vec3::Zero();
  Vec3 accel = Vec3::Zero();
  double dt = 0.0;
};

struct ImuRmi {
  Mat5 dU = Mat5::Identity();
  Mat5 dG = Mat5::Identity();
  Mat15 Q = Mat15::Zero();
  Mat96 B = Mat96::Zero();
  Vec3 gravity = Vec3(0, 0, -9.80665);
  Span span;
  double dt_total = 0.0;

  static ImuRmi Identity(std::int64_t at_step,
                         const Vec3& gravity = Vec3(0, 0, -9.80665));
};

using Rmi = std::variant<LinearRmi, WheelRmi, ImuRmi>;

RmiKind kind_of(const Rmi& r);
Span span_of(const Rmi& r);

// `linear_dim` is only used for the linear kind.
Rmi identity_rmi(RmiKind kind, std::int64_t at_step, int linear_dim = 1);

// ---------------------------------------------------------------------------
// Single-step building blocks, shared with the process models.

// Exp(dt [omega, v, 0]) for SE(2) tangent order (theta, x, y).
Mat3 wheel_step(const Vec3& u, double dt);

// The right-hand factor U of T_k = G T_{k-1} U and the left-hand gravity
// factor G. U carries a time offset of dt, G one of -dt.
Mat5 imu_increment_matrix(const ImuInput& u);
Mat5 imu_gravity_matrix(double dt, const Vec3& gravity);
// Right-perturbation derivative of U with respect to (gyro, accel).
Mat96 imu_input_jacobian(const ImuInput& u);

// ---------------------------------------------------------------------------
// Increment

LinearRmi increment_linear(const LinearRmi& rmi, const Eigen::MatrixXd& F_k,
                           const Eigen::MatrixXd& L_k, const Eigen::VectorXd& u_k,
                           const Eigen::MatrixXd& Q_k);

// u_k = (omega, v, lateral) with Q_k its 3x3 noise covariance.
WheelRmi increment_wheel(const WheelRmi& rmi, const Vec3& u_k,
                         const Mat3& Q_k, double dt);

// Q_k is the 6x6 covariance of the (gyro, accel) input noise.
ImuRmi increment_imu(const ImuRmi& rmi, const ImuInput& u,
                     const Eigen::Matrix<double, 6, 6>& Q_k);

// ---------------------------------------------------------------------------
// Application
//
// `member` selects the substate of a composite belief (ignored otherwise).
// `expected_start` must equal the increment's first step; SpanMismatch
// otherwise. Covariance maps as P <- F P F^T + Q with F the derivative with
// respect to the selected member, identity elsewhere.

Belief apply_rmi(const Belief& b, int member, const LinearRmi& rmi,
                 std::int64_t expected_start);
// T <- T dT.
Belief apply_rmi(const Belief& b, int member, const WheelRmi& rmi,
                 std::int64_t expected_start);

enum class ImuPlacement {
  kWorldPose,     // T <- dG T dU
  kRelativePose,  // T <- T dU, a neighbor increment on a relative pose
};
Belief apply_rmi(const Belief& b, int member, const ImuRmi& rmi,
                 ImuPlacement placement, std::int64_t expected_start);

// Relative-pose application that first corrects the increment with the bias
// estimate held in member `bias_member` (a 6-vector), and carries the
// derivative with respect to that bias into the covariance.
Belief apply_rmi_with_bias(const Belief& b, int pose_member, int bias_member,
                           const ImuRmi& rmi, std::int64_t expected_start);

// dU (+) B b on the right. Covariance and B are left as they are.
ImuRmi correct_bias(const ImuRmi& rmi, const Vec6& bias);

// ---------------------------------------------------------------------------
// Wire format: u32 kind, u32 dim, i64 p, i64 q, then float64 payload, all
// little-endian. Payload: linear F, dx, lower(Q); wheel top 2x3 of dT,
// lower(Q); IMU top 3x5 and tau of dU and dG, dt_total, gravity, lower(Q),
// B. Size depends only on kind (and dim for linear).

std::vector<std::uint8_t> serialize(const Rmi& r);
Rmi deserialize(const std::vector<std::uint8_t>& bytes);
std::size_t serialized_size(RmiKind kind, int linear_dim = 1);

// Bytes needed to ship the raw inputs of `steps` steps with the same header
// (linear: m input values; wheel: omega, v, dt; IMU: gyro, accel, dt).
std::size_t raw_input_bytes(RmiKind kind, std::int64_t steps, int input_dim = 1);

}  // namespace decest
