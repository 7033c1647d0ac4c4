#include "decest/models.hpp"

#include <stdexcept>

#include "decest/manifold.hpp"

namespace decest::models {

namespace {

Mat9 se23_jr_inv(const Vec9& e) {
  return group_jacobian_inverse(GroupDescriptor::SE23(), e, Side::kRight);
}

Mat3 se2_jr_inv(const Vec3& e) {
  return group_jacobian_inverse(GroupDescriptor::SE2(), e, Side::kRight);
}

// Product of the factors and, per factor, the adjoint that carries a right
// perturbation of the underlying X to the right end of the product.
template <typename M, typename AdM, typename AdFn, typename InvFn>
M product_with_adjoints(const std::vector<M>& x,
                        const std::vector<bool>& inverted, AdFn ad, InvFn inv,
                        std::vector<AdM>& ads) {
  const std::size_t n = x.size();
  if (inverted.size() != n || n == 0) {
    throw std::invalid_argument("product log: factor list mismatch");
  }
  std::vector<M> m(n);
  for (std::size_t k = 0; k < n; ++k) m[k] = inverted[k] ? inv(x[k]) : x[k];
  // right[k] = m[k+1] ... m[n-1]
  std::vector<M> right(n, M::Identity());
  for (std::size_t k = n - 1; k > 0; --k) right[k - 1] = m[k] * right[k];
  ads.clear();
  for (std::size_t k = 0; k < n; ++k) {
    // X R -> Ad(R^-1); X^-1 R -> -Ad((X^-1 R)^-1)
    if (inverted[k]) {
      ads.push_back(-ad(inv(m[k] * right[k])));
    } else {
      ads.push_back(ad(inv(right[k])));
    }
  }
  return m[0] * right[0];
}

}  // namespace

// ---------------------------------------------------------------------------

ProcessModel linear(const Eigen::MatrixXd& F, const Eigen::MatrixXd& L,
                    const Eigen::MatrixXd& Q, double dt) {
  ProcessModel pm;
  pm.evaluate = [F, L](const Element& x, const Eigen::VectorXd& u,
                       const Eigen::VectorXd& w) {
    return Element::FromVector(F * x.vector() + L * (u + w));
  };
  pm.jacobian_state = [F](const Element&, const Eigen::VectorXd&) {
    return F;
  };
  pm.jacobian_noise = [L](const Element&, const Eigen::VectorXd&) {
    return L;
  };
  pm.noise_cov = Q;
  pm.dt = dt;
  return pm;
}

ProcessModel wheel(double dt, const Mat3& Q) {
  ProcessModel pm;
  pm.evaluate = [dt](const Element& x, const Eigen::VectorXd& u,
                     const Eigen::VectorXd& w) {
    return compose(x, make_unchecked(GroupDescriptor::SE2(),
                                     wheel_step(u + w, dt)));
  };
  pm.jacobian_state = [dt](const Element&, const Eigen::VectorXd& u) {
    return Eigen::MatrixXd(se2::adjoint(se2::inverse(wheel_step(u, dt))));
  };
  pm.jacobian_noise = [dt](const Element&, const Eigen::VectorXd& u) {
    return Eigen::MatrixXd(dt * se2::right_jacobian(dt * Vec3(u)));
  };
  pm.noise_cov = Q;
  pm.dt = dt;
  return pm;
}

ProcessModel imu(double dt, const Vec3& gravity, const Mat6& Q) {
  const auto input = [dt](const Eigen::VectorXd& u) {
    return ImuInput{u.head<3>(), u.tail<3>(), dt};
  };
  const Element g =
      make_unchecked(GroupDescriptor::SE23(), imu_gravity_matrix(dt, gravity));
  ProcessModel pm;
  pm.evaluate = [input, g](const Element& x, const Eigen::VectorXd& u,
                           const Eigen::VectorXd& w) {
    const Element U = make_unchecked(GroupDescriptor::SE23(),
                                     imu_increment_matrix(input(u + w)));
    return compose(g, compose(x, U));
  };
  pm.jacobian_state = [input](const Element&, const Eigen::VectorXd& u) {
    return Eigen::MatrixXd(
        se23::adjoint(se23::inverse(imu_increment_matrix(input(u)))));
  };
  pm.jacobian_noise = [input](const Element&, const Eigen::VectorXd& u) {
    return Eigen::MatrixXd(imu_input_jacobian(input(u)));
  };
  pm.noise_cov = Q;
  pm.dt = dt;
  return pm;
}

// ---------------------------------------------------------------------------

ProductLog se23_product_log(const std::vector<Mat5>& x,
                            const std::vector<bool>& inverted) {
  std::vector<Mat9> ads;
  const Mat5 p = product_with_adjoints<Mat5, Mat9>(
      x, inverted, [](const Mat5& m) { return se23::adjoint(m); },
      [](const Mat5& m) { return se23::inverse(m); }, ads);
  ProductLog out;
  out.value = se23::log(p);
  const Mat9 jinv = se23_jr_inv(out.value);
  for (const auto& a : ads) out.jacobians.push_back(jinv * a);
  return out;
}

ProductLog2 se2_product_log(const std::vector<Mat3>& x,
                            const std::vector<bool>& inverted) {
  std::vector<Mat3> ads;
  const Mat3 p = product_with_adjoints<Mat3, Mat3>(
      x, inverted, [](const Mat3& m) { return se2::adjoint(m); },
      [](const Mat3& m) { return se2::inverse(m); }, ads);
  ProductLog2 out;
  out.value = se2::log(p);
  const Mat3 jinv = se2_jr_inv(out.value);
  for (const auto& a : ads) out.jacobians.push_back(jinv * a);
  return out;
}

}  // namespace decest::models
