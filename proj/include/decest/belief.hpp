#pragma once

#include <Eigen/Core>
#include <random>
#include <utility>

#include "decest/manifold.hpp"

namespace decest {

class Belief {
 public:
  Belief() = default;
  // Symmetrizes cov. Throws std::invalid_argument on a size mismatch,
  // non-finite entries or a negative diagonal.
  Belief(Element mean, Eigen::MatrixXd cov, Side side);

  const Element& mean() const { return mean_; }
  const Eigen::MatrixXd& cov() const { return cov_; }
  Side side() const { return side_; }
  int dof() const { return mean_.dof(); }
  const GroupDescriptor& descriptor() const { return mean_.descriptor(); }

  Belief with_mean(Element m) const { return Belief(std::move(m), cov_, side_); }
  Belief with_cov(Eigen::MatrixXd c) const { return Belief(mean_, std::move(c), side_); }

  // Member i of a composite belief with its diagonal covariance block.
  Belief marginal(int member) const;

 private:
  Element mean_;
  Eigen::MatrixXd cov_;
  Side side_ = Side::kRight;
};

class CiWeight {
 public:
  // Throws std::invalid_argument outside (0, 1).
  explicit CiWeight(double w = 0.99);
  double value() const { return w_; }

 private:
  double w_;
};

std::pair<Belief, Belief> ci_inflate(const Belief& a, const Belief& b,
                                     CiWeight w);

// mean (+) L n with L L^T = cov (+ 1e-12 jitter if needed), n ~ N(0, 1).
Element sample(const Belief& b, std::mt19937_64& rng);
// Zero-mean tangent draw from cov.
Eigen::VectorXd sample_tangent(const Eigen::MatrixXd& cov, std::mt19937_64& rng);

// e^T cov^-1 e with e = truth (-) mean on the belief's side.
double nees(const Belief& b, const Element& truth);
double nees_tangent(const Eigen::MatrixXd& cov, const Eigen::VectorXd& e);

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& m);

}  // namespace decest
