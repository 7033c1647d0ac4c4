#pragma once

// On-manifold EKF steps, iterated pseudomeasurement fusion and a small
// Gauss-Newton MAP solver. All Jacobians are taken with respect to
// perturbations on the belief's side.

#include <Eigen/Core>
#include <functional>
#include <optional>
#include <vector>

#include "decest/belief.hpp"

namespace decest {

struct ProcessModel {
  // x_k = f(x_{k-1}, u, w)
  std::function<Element(const Element&, const Eigen::VectorXd&,
                        const Eigen::VectorXd&)>
      evaluate;
  // Optional analytic Jacobians (state, noise); finite differences otherwise.
  std::function<Eigen::MatrixXd(const Element&, const Eigen::VectorXd&)>
      jacobian_state;
  std::function<Eigen::MatrixXd(const Element&, const Eigen::VectorXd&)>
      jacobian_noise;
  Eigen::MatrixXd noise_cov;
  double dt = 0.0;
};

struct MeasurementModel {
  std::function<Eigen::VectorXd(const Element&)> evaluate;
  std::function<Eigen::MatrixXd(const Element&)> jacobian;  // optional
  Eigen::MatrixXd noise_cov;
};

struct PseudoModel {
  std::function<Eigen::VectorXd(const Element&, const Element&)> evaluate;
  std::function<Eigen::MatrixXd(const Element&, const Element&)> jacobian_i;
  std::function<Eigen::MatrixXd(const Element&, const Element&)> jacobian_j;
  Eigen::MatrixXd psi;
};

struct FusionSettings {
  int max_iters = 10;
  double step_tol = 1e-8;
  bool perform_ci = true;
  CiWeight ci_weight{0.99};
};

struct GatingSettings {
  bool enabled = false;
  double probability = 0.997;
};

// Evaluated Jacobians with the finite-difference fallback applied.
Eigen::MatrixXd process_jacobian_state(const ProcessModel& pm, const Element& x,
                                       const Eigen::VectorXd& u, Side side);
Eigen::MatrixXd process_jacobian_noise(const ProcessModel& pm, const Element& x,
                                       const Eigen::VectorXd& u, Side side);
Eigen::MatrixXd measurement_jacobian(const MeasurementModel& mm,
                                     const Element& x, Side side);

Belief predict(const Belief& b, const ProcessModel& pm, const Eigen::VectorXd& u);

struct UpdateResult {
  Belief belief;
  Eigen::VectorXd innovation;
  Eigen::MatrixXd innovation_cov;
  double nis = 0.0;
  bool rejected = false;  // gating only; belief is the prior when set
};

UpdateResult update_local(const Belief& b, const MeasurementModel& mm,
                          const Eigen::VectorXd& y, GatingSettings gating = {});

struct FusionResult {
  Belief i;
  Belief j;
  int iterations = 0;
  // ||c_ij|| at each linearization point, then at the final iterate.
  std::vector<double> residual_norms;
};

FusionResult fuse_pseudo(const Belief& bi, const Belief& bj,
                         const PseudoModel& pm, const FusionSettings& s);

struct ResidualBlock {
  std::function<Eigen::VectorXd(const Element&)> evaluate;
  std::function<Eigen::MatrixXd(const Element&)> jacobian;  // optional
  Eigen::MatrixXd weight;                                   // information
};

struct MapResult {
  Belief posterior;
  bool converged = false;
  int iterations = 0;
};

// Minimizes ||X (-) prior||^2_{P^-1} + sum r_k(X)^T W_k r_k(X).
MapResult gauss_newton_map(const Belief& prior,
                           const std::vector<ResidualBlock>& blocks,
                           const FusionSettings& s);

// Quantile of the chi-square distribution; thin wrapper over Boost.Math.
double chi_square_quantile(double p, double dof);

}  // namespace decest
