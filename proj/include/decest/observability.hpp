#pragma once

// Local observability of the joint decentralized system: stack the local
// measurement and pseudomeasurement Jacobians along a trajectory, transported
// by the total-state transition matrices, and check the column rank.

#include <Eigen/Core>
#include <vector>

namespace decest {

struct TrajectoryLinearization {
  std::vector<int> robot_dofs;
  // F[k] maps step k to k+1 (K entries); G[k] and Phi[k] act at step k
  // (K+1 entries). All are in total-state columns.
  std::vector<Eigen::MatrixXd> F;
  std::vector<Eigen::MatrixXd> G;
  std::vector<Eigen::MatrixXd> Phi;

  int steps() const { return static_cast<int>(F.size()); }
  int total_dof() const;
};

// One step of per-robot Jacobians before placement into total-state columns.
struct EdgeJacobian {
  int i = 0;
  int j = 0;
  Eigen::MatrixXd S_i;
  Eigen::MatrixXd S_j;
};

struct StepJacobians {
  std::vector<Eigen::MatrixXd> F;  // per robot, dof x dof; empty at the last step
  std::vector<Eigen::MatrixXd> G;  // per robot, rows x dof (rows may be 0)
  std::vector<EdgeJacobian> edges;
};

Eigen::MatrixXd block_diagonal(const std::vector<Eigen::MatrixXd>& blocks);

// Places edge rows into total-state columns; rows grouped per edge in order.
Eigen::MatrixXd assemble_pseudo_rows(const std::vector<int>& robot_dofs,
                                     const std::vector<EdgeJacobian>& edges);

TrajectoryLinearization assemble_linearization(
    const std::vector<int>& robot_dofs, const std::vector<StepJacobians>& steps);

// [M_0; M_1 F_0; ...; M_K F_{K-1} ... F_0] with M_k = [G_k; Phi_k].
Eigen::MatrixXd build_observability_matrix(const TrajectoryLinearization& lin);

struct ObservabilityReport {
  int rank = 0;
  int required = 0;
  std::vector<double> singular_values;  // descending
  bool observable = false;
  Eigen::MatrixXd null_directions;      // required x (required - rank)
};

ObservabilityReport is_observable(const Eigen::MatrixXd& O, double rel_tol = 1e-8);

// Rank of the leading prefix of the stack for every K up to lin.steps().
std::vector<int> rank_by_steps(const TrajectoryLinearization& lin,
                               double rel_tol = 1e-8);

}  // namespace decest
