#include "decest/belief.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <stdexcept>

#include "decest/errors.hpp"

namespace decest {

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& m) {
  return 0.5 * (m + m.transpose());
}

Belief::Belief(Element mean, Eigen::MatrixXd cov, Side side)
    : mean_(std::move(mean)), cov_(std::move(cov)), side_(side) {
  const int n = mean_.dof();
  if (cov_.rows() != n || cov_.cols() != n) {
    throw std::invalid_argument("Belief: covariance is " +
                                std::to_string(cov_.rows()) + "x" +
                                std::to_string(cov_.cols()) + ", expected " +
                                std::to_string(n));
  }
  if (!cov_.allFinite()) throw std::invalid_argument("Belief: non-finite covariance");
  if (n > 0 && cov_.diagonal().minCoeff() < -1e-10) {
    throw std::invalid_argument("Belief: negative variance");
  }
  cov_ = symmetrize(cov_);
}

Belief Belief::marginal(int member) const {
  const auto& d = descriptor();
  const int o = d.member_offset(member);
  const int n = d.member(member).dof();
  return Belief(mean_.member(member), cov_.block(o, o, n, n), side_);
}

CiWeight::CiWeight(double w) : w_(w) {
  if (!(w > 0.0 && w < 1.0)) {
    throw std::invalid_argument("CI weight must lie in (0, 1)");
  }
}

std::pair<Belief, Belief> ci_inflate(const Belief& a, const Belief& b,
                                     CiWeight w) {
  return {a.with_cov(a.cov() / w.value()),
          b.with_cov(b.cov() / (1.0 - w.value()))};
}

Eigen::VectorXd sample_tangent(const Eigen::MatrixXd& cov, std::mt19937_64& rng) {
  const int n = static_cast<int>(cov.rows());
  std::normal_distribution<double> nd(0.0, 1.0);
  Eigen::VectorXd z(n);
  for (int i = 0; i < n; ++i) z(i) = nd(rng);
  if (n == 0 || cov.isZero(0.0)) return Eigen::VectorXd::Zero(n);
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) {
    llt.compute(cov + 1e-12 * Eigen::MatrixXd::Identity(n, n));
    if (llt.info() != Eigen::Success) {
      // PSD but rank deficient: fall back to a symmetric square root.
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
      if (es.eigenvalues().minCoeff() < -1e-10) {
        throw NumericalError("sample: covariance is not PSD");
      }
      const Eigen::VectorXd s = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
      return es.eigenvectors() * s.asDiagonal() * z;
    }
  }
  return llt.matrixL() * z;
}

Element sample(const Belief& b, std::mt19937_64& rng) {
  return oplus(b.mean(), sample_tangent(b.cov(), rng), b.side());
}

double nees_tangent(const Eigen::MatrixXd& cov, const Eigen::VectorXd& e) {
  Eigen::LDLT<Eigen::MatrixXd> ldlt(cov);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
      (ldlt.vectorD().array() <= 0.0).any()) {
    throw NumericalError("nees: singular covariance");
  }
  return e.dot(ldlt.solve(e));
}

double nees(const Belief& b, const Element& truth) {
  return nees_tangent(b.cov(), ominus(truth, b.mean(), b.side()));
}

}  // namespace decest
