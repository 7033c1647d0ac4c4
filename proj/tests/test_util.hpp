#pragma once

#include <Eigen/Core>
#include <random>

#include "decest/manifold.hpp"

namespace decest::testing {

inline Eigen::VectorXd randn(int n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = nd(rng);
  return v;
}

inline Eigen::MatrixXd random_spd(int n, std::mt19937_64& rng,
                                  double floor = 0.1) {
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i) a.col(i) = randn(n, rng);
  return a * a.transpose() + floor * Eigen::MatrixXd::Identity(n, n);
}

// Rotation angles kept below ~2.5 rad so Log stays well inside its domain.
inline Element random_element(const GroupDescriptor& d, std::mt19937_64& rng,
                              double scale = 0.8) {
  return exp_map(d, randn(d.dof(), rng, scale));
}

inline double rel_err(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).norm() / std::max(1.0, b.norm());
}

}  // namespace decest::testing
