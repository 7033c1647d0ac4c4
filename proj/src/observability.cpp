#include "decest/observability.hpp"

#include <Eigen/SVD>
#include <numeric>
#include <stdexcept>
#include <string>

namespace decest {

namespace {

std::vector<int> offsets(const std::vector<int>& dofs) {
  std::vector<int> off(dofs.size(), 0);
  for (std::size_t i = 1; i < dofs.size(); ++i) off[i] = off[i - 1] + dofs[i - 1];
  return off;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument("observability: " + what);
}

Eigen::MatrixXd stack(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows() + b.rows(), a.cols());
  out << a, b;
  return out;
}

}  // namespace

int TrajectoryLinearization::total_dof() const {
  return std::accumulate(robot_dofs.begin(), robot_dofs.end(), 0);
}

Eigen::MatrixXd block_diagonal(const std::vector<Eigen::MatrixXd>& blocks) {
  Eigen::Index rows = 0, cols = 0;
  for (const auto& b : blocks) {
    rows += b.rows();
    cols += b.cols();
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(rows, cols);
  Eigen::Index r = 0, c = 0;
  for (const auto& b : blocks) {
    out.block(r, c, b.rows(), b.cols()) = b;
    r += b.rows();
    c += b.cols();
  }
  return out;
}

Eigen::MatrixXd assemble_pseudo_rows(const std::vector<int>& dofs,
                                     const std::vector<EdgeJacobian>& edges) {
  const auto off = offsets(dofs);
  const int n = std::accumulate(dofs.begin(), dofs.end(), 0);
  Eigen::Index rows = 0;
  for (const auto& e : edges) rows += e.S_i.rows();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(rows, n);
  Eigen::Index r = 0;
  for (const auto& e : edges) {
    const int nr = static_cast<int>(dofs.size());
    require(e.i >= 0 && e.i < nr && e.j >= 0 && e.j < nr && e.i != e.j,
            "edge endpoints out of range");
    require(e.S_i.cols() == dofs[e.i] && e.S_j.cols() == dofs[e.j] &&
                e.S_i.rows() == e.S_j.rows(),
            "edge Jacobian shapes do not match robot dofs");
    out.block(r, off[e.i], e.S_i.rows(), dofs[e.i]) = e.S_i;
    out.block(r, off[e.j], e.S_j.rows(), dofs[e.j]) = e.S_j;
    r += e.S_i.rows();
  }
  return out;
}

TrajectoryLinearization assemble_linearization(
    const std::vector<int>& dofs, const std::vector<StepJacobians>& steps) {
  require(!steps.empty(), "no steps");
  TrajectoryLinearization lin;
  lin.robot_dofs = dofs;
  const int n = lin.total_dof();
  for (std::size_t k = 0; k < steps.size(); ++k) {
    const auto& s = steps[k];
    require(s.G.size() == dofs.size(), "one G block per robot expected");
    for (std::size_t i = 0; i < dofs.size(); ++i) {
      require(s.G[i].cols() == dofs[i], "G block width != robot dof");
    }
    lin.G.push_back(block_diagonal(s.G));
    lin.Phi.push_back(s.edges.empty() ? Eigen::MatrixXd::Zero(0, n)
                                      : assemble_pseudo_rows(dofs, s.edges));
    if (k + 1 < steps.size()) {
      require(s.F.size() == dofs.size(), "one F block per robot expected");
      for (std::size_t i = 0; i < dofs.size(); ++i) {
        require(s.F[i].rows() == dofs[i] && s.F[i].cols() == dofs[i],
                "F block shape != robot dof");
      }
      lin.F.push_back(block_diagonal(s.F));
    }
  }
  return lin;
}

Eigen::MatrixXd build_observability_matrix(const TrajectoryLinearization& lin) {
  const int n = lin.total_dof();
  const int K = lin.steps();
  require(static_cast<int>(lin.G.size()) == K + 1 &&
              static_cast<int>(lin.Phi.size()) == K + 1,
          "need K+1 measurement blocks for K transitions");
  Eigen::Index rows = 0;
  for (int k = 0; k <= K; ++k) {
    require(lin.G[k].cols() == n && lin.Phi[k].cols() == n,
            "measurement block width != total dof");
    rows += lin.G[k].rows() + lin.Phi[k].rows();
  }
  Eigen::MatrixXd O(rows, n);
  Eigen::MatrixXd transport = Eigen::MatrixXd::Identity(n, n);
  Eigen::Index r = 0;
  for (int k = 0; k <= K; ++k) {
    const Eigen::MatrixXd m = stack(lin.G[k], lin.Phi[k]);
    O.middleRows(r, m.rows()) = m * transport;
    r += m.rows();
    if (k < K) {
      require(lin.F[k].rows() == n && lin.F[k].cols() == n,
              "transition shape != total dof");
      transport = lin.F[k] * transport;
    }
  }
  return O;
}

ObservabilityReport is_observable(const Eigen::MatrixXd& O, double rel_tol) {
  require(O.cols() > 0, "empty matrix");
  ObservabilityReport rep;
  const int n = static_cast<int>(O.cols());
  rep.required = n;
  // Pad to at least n rows so the full right singular basis is available.
  Eigen::MatrixXd a = O;
  if (a.rows() < n) {
    a.conservativeResize(n, Eigen::NoChange);
    a.bottomRows(n - O.rows()).setZero();
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const Eigen::VectorXd sv = svd.singularValues();
  rep.singular_values.assign(sv.data(), sv.data() + sv.size());
  const double smax = sv.size() ? sv(0) : 0.0;
  rep.rank = 0;
  for (int i = 0; i < sv.size(); ++i) {
    if (smax > 0 && sv(i) > rel_tol * smax) ++rep.rank;
  }
  rep.observable = rep.rank == n;
  rep.null_directions = svd.matrixV().rightCols(n - rep.rank);
  return rep;
}

std::vector<int> rank_by_steps(const TrajectoryLinearization& lin,
                               double rel_tol) {
  std::vector<int> out;
  for (int K = 0; K <= lin.steps(); ++K) {
    TrajectoryLinearization prefix;
    prefix.robot_dofs = lin.robot_dofs;
    prefix.F.assign(lin.F.begin(), lin.F.begin() + K);
    prefix.G.assign(lin.G.begin(), lin.G.begin() + K + 1);
    prefix.Phi.assign(lin.Phi.begin(), lin.Phi.begin() + K + 1);
    out.push_back(is_observable(build_observability_matrix(prefix), rel_tol).rank);
  }
  return out;
}

}  // namespace decest
