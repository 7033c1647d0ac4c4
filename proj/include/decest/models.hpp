#pragma once

// Process, measurement and pseudomeasurement models with analytic
// Jacobians. All Jacobians assume right perturbations, which is what the
// ground-robot and quadcopter scenarios use.

#include <Eigen/Core>
#include <vector>

#include "decest/estimator.hpp"
#include "decest/preintegration.hpp"

namespace decest::models {

using Mat6 = Eigen::Matrix<double, 6, 6>;

// ---------------------------------------------------------------------------
// Single-robot process models

// x_k = F x + L (u + w)
ProcessModel linear(const Eigen::MatrixXd& F, const Eigen::MatrixXd& L,
                    const Eigen::MatrixXd& Q, double dt);

// T_k = T Exp(dt (u + w)), u = (omega, v, lateral).
ProcessModel wheel(double dt, const Mat3& Q);

// T_k = G T U(u + w), u = (gyro, accel).
ProcessModel imu(double dt, const Vec3& gravity, const Mat6& Q);

// ---------------------------------------------------------------------------
// Residual helpers

// Log of a product of SE_2(3) factors, each used as X or X^-1, and the
// right-perturbation Jacobian with respect to every underlying X.
struct ProductLog {
  Vec9 value;
  std::vector<Mat9> jacobians;
};
ProductLog se23_product_log(const std::vector<Mat5>& x,
                            const std::vector<bool>& inverted);

// Same for SE(2).
struct ProductLog2 {
  Vec3 value;
  std::vector<Mat3> jacobians;
};
ProductLog2 se2_product_log(const std::vector<Mat3>& x,
                            const std::vector<bool>& inverted);

}  // namespace decest::models
