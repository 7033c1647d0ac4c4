#include "decest/estimator.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <tuple>

#include "decest/errors.hpp"

namespace decest {

namespace {

Eigen::MatrixXd solve_spd(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                          const char* what) {
  Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
      (ldlt.vectorD().array().abs() <=
       1e-14 * std::max(1.0, a.diagonal().cwiseAbs().maxCoeff()))
          .any()) {
    throw NumericalError(std::string(what) + ": singular matrix");
  }
  return ldlt.solve(b);
}

}  // namespace

double chi_square_quantile(double p, double dof) {
  boost::math::chi_squared dist(dof);
  return boost::math::quantile(dist, p);
}

Eigen::MatrixXd process_jacobian_state(const ProcessModel& pm, const Element& x,
                                       const Eigen::VectorXd& u, Side side) {
  if (pm.jacobian_state) return pm.jacobian_state(x, u);
  const Eigen::VectorXd w0 = Eigen::VectorXd::Zero(pm.noise_cov.rows());
  return numerical_jacobian(
      [&](const Element& e) { return pm.evaluate(e, u, w0); }, x, side);
}

Eigen::MatrixXd process_jacobian_noise(const ProcessModel& pm, const Element& x,
                                       const Eigen::VectorXd& u, Side side) {
  if (pm.jacobian_noise) return pm.jacobian_noise(x, u);
  const Eigen::VectorXd w0 = Eigen::VectorXd::Zero(pm.noise_cov.rows());
  return numerical_jacobian_from_vec(
      [&](const Eigen::VectorXd& w) { return pm.evaluate(x, u, w); }, w0, side);
}

Eigen::MatrixXd measurement_jacobian(const MeasurementModel& mm,
                                     const Element& x, Side side) {
  if (mm.jacobian) return mm.jacobian(x);
  return numerical_jacobian_vec(mm.evaluate, x, side);
}

Belief predict(const Belief& b, const ProcessModel& pm, const Eigen::VectorXd& u) {
  const Eigen::VectorXd w0 = Eigen::VectorXd::Zero(pm.noise_cov.rows());
  const Eigen::MatrixXd f = process_jacobian_state(pm, b.mean(), u, b.side());
  const Eigen::MatrixXd l = process_jacobian_noise(pm, b.mean(), u, b.side());
  Element mean = pm.evaluate(b.mean(), u, w0);
  return Belief(std::move(mean),
                f * b.cov() * f.transpose() + l * pm.noise_cov * l.transpose(),
                b.side());
}

UpdateResult update_local(const Belief& b, const MeasurementModel& mm,
                          const Eigen::VectorXd& y, GatingSettings gating) {
  const Eigen::MatrixXd g = measurement_jacobian(mm, b.mean(), b.side());
  const Eigen::MatrixXd& p = b.cov();
  const Eigen::MatrixXd pgt = p * g.transpose();
  const Eigen::MatrixXd s = g * pgt + mm.noise_cov;
  const Eigen::VectorXd innov = y - mm.evaluate(b.mean());

  UpdateResult r;
  r.innovation = innov;
  r.innovation_cov = s;
  r.nis = innov.dot(solve_spd(s, innov, "update_local").col(0));
  if (gating.enabled &&
      r.nis > chi_square_quantile(gating.probability,
                                  static_cast<double>(innov.size()))) {
    r.belief = b;
    r.rejected = true;
    return r;
  }
  const Eigen::MatrixXd k = solve_spd(s, pgt.transpose(), "update_local").transpose();
  const Eigen::MatrixXd ikg =
      Eigen::MatrixXd::Identity(b.dof(), b.dof()) - k * g;
  const Eigen::MatrixXd cov =
      ikg * p * ikg.transpose() + k * mm.noise_cov * k.transpose();
  r.belief = Belief(oplus(b.mean(), k * innov, b.side()), cov, b.side());
  return r;
}

FusionResult fuse_pseudo(const Belief& bi, const Belief& bj,
                         const PseudoModel& pm, const FusionSettings& s) {
  if (s.max_iters < 1 || !(s.step_tol > 0.0)) {
    throw std::invalid_argument("fuse_pseudo: bad settings");
  }
  Belief ti = bi;
  Belief tj = bj;
  if (s.perform_ci) std::tie(ti, tj) = ci_inflate(bi, bj, s.ci_weight);

  Element xi = ti.mean();
  Element xj = tj.mean();
  FusionResult out;
  Eigen::MatrixXd pi, pj, ki, kj, si, sj;

  for (int it = 0; it < s.max_iters; ++it) {
    const Eigen::VectorXd ei = ominus(xi, ti.mean(), ti.side());
    const Eigen::VectorXd ej = ominus(xj, tj.mean(), tj.side());
    const Eigen::MatrixXd ji = group_jacobian(xi.descriptor(), ei, ti.side());
    const Eigen::MatrixXd jj = group_jacobian(xj.descriptor(), ej, tj.side());
    si = pm.jacobian_i(xi, xj);
    sj = pm.jacobian_j(xi, xj);
    const Eigen::VectorXd c = pm.evaluate(xi, xj);
    out.residual_norms.push_back(c.norm());

    pi = ji * ti.cov() * ji.transpose();
    pj = jj * tj.cov() * jj.transpose();
    const Eigen::MatrixXd v =
        pm.psi + si * pi * si.transpose() + sj * pj * sj.transpose();
    const Eigen::VectorXd z = -c + si * (ji * ei) + sj * (jj * ej);
    ki = solve_spd(v, si * pi, "fuse_pseudo").transpose();
    kj = solve_spd(v, sj * pj, "fuse_pseudo").transpose();

    const Eigen::VectorXd di = -ji * ei + ki * z;
    const Eigen::VectorXd dj = -jj * ej + kj * z;
    xi = oplus(xi, di, ti.side());
    xj = oplus(xj, dj, tj.side());
    out.iterations = it + 1;
    if (std::max(di.norm(), dj.norm()) < s.step_tol) break;
  }
  out.residual_norms.push_back(pm.evaluate(xi, xj).norm());

  const int ni = bi.dof();
  const int nj = bj.dof();
  out.i = Belief(xi, (Eigen::MatrixXd::Identity(ni, ni) - ki * si) * pi,
                 ti.side());
  out.j = Belief(xj, (Eigen::MatrixXd::Identity(nj, nj) - kj * sj) * pj,
                 tj.side());
  return out;
}

MapResult gauss_newton_map(const Belief& prior,
                           const std::vector<ResidualBlock>& blocks,
                           const FusionSettings& s) {
  const Side side = prior.side();
  const int n = prior.dof();
  const Eigen::MatrixXd prior_info =
      solve_spd(prior.cov(), Eigen::MatrixXd::Identity(n, n), "gauss_newton_map");

  Element x = prior.mean();
  MapResult out;
  auto normal_matrix = [&](const Element& at, Eigen::VectorXd* grad) {
    const Eigen::VectorXd e = ominus(at, prior.mean(), side);
    const Eigen::MatrixXd jinv = group_jacobian_inverse(at.descriptor(), e, side);
    Eigen::MatrixXd a = jinv.transpose() * prior_info * jinv;
    Eigen::VectorXd g = jinv.transpose() * prior_info * e;
    for (const auto& b : blocks) {
      const Eigen::MatrixXd h =
          b.jacobian ? b.jacobian(at) : numerical_jacobian_vec(b.evaluate, at, side);
      const Eigen::VectorXd r = b.evaluate(at);
      a += h.transpose() * b.weight * h;
      g += h.transpose() * b.weight * r;
    }
    if (grad) *grad = g;
    return a;
  };

  for (int it = 0; it < s.max_iters; ++it) {
    Eigen::VectorXd g;
    const Eigen::MatrixXd a = normal_matrix(x, &g);
    const Eigen::VectorXd dx = -solve_spd(a, g, "gauss_newton_map");
    x = oplus(x, dx, side);
    out.iterations = it + 1;
    if (dx.norm() < s.step_tol) {
      out.converged = true;
      break;
    }
  }
  const Eigen::MatrixXd a = normal_matrix(x, nullptr);
  out.posterior = Belief(
      x, solve_spd(a, Eigen::MatrixXd::Identity(n, n), "gauss_newton_map"), side);
  return out;
}

}  // namespace decest
