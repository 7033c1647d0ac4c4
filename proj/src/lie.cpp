#include "decest/lie.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>
#include <array>
#include <cmath>

#include "decest/errors.hpp"

namespace decest {

namespace {

constexpr double kTimeOffsetTol = 1e-9;

// Every coefficient below is an even power series in the rotation angle t.
// Below kSmallAngle the series is summed directly, well past double
// precision; above it the closed form is used, where cancellation costs at
// most a few ulps.

constexpr int kSeriesTerms = 16;
// The derivative coefficients cancel more severely in closed form, so their
// series range is extended.
constexpr double kWideSeriesAngle = 2.0 * kSmallAngle;

double inv_factorial(int n) {
  static const auto table = [] {
    std::array<double, 64> t{};
    t[0] = 1.0;
    for (int i = 1; i < 64; ++i) t[i] = t[i - 1] / i;
    return t;
  }();
  return table[n];
}

template <class Coef>
double even_series(double t, Coef coef, int first = 0,
                   int terms = kSeriesTerms) {
  const double t2 = t * t;
  double sum = 0.0;
  double p = 1.0;
  for (int k = first; k < first + terms; ++k) {
    sum += coef(k) * p;
    p *= t2;
  }
  return sum;
}

double alt(int k) { return (k % 2) ? -1.0 : 1.0; }

// sin(t)/t
double coef_a(double t) {
  if (t < kSmallAngle) {
    return even_series(t, [](int k) { return alt(k) * inv_factorial(2 * k + 1); });
  }
  return std::sin(t) / t;
}

// (1 - cos t)/t^2
double coef_b(double t) {
  if (t < kSmallAngle) {
    return even_series(t, [](int k) { return alt(k) * inv_factorial(2 * k + 2); });
  }
  const double s = std::sin(0.5 * t) / t;
  return 2.0 * s * s;
}

// (t - sin t)/t^3
double coef_c(double t) {
  if (t < kSmallAngle) {
    return even_series(t, [](int k) { return alt(k) * inv_factorial(2 * k + 3); });
  }
  return (t - std::sin(t)) / (t * t * t);
}

// 1/t^2 - (1 + cos t)/(2 t sin t) = (1 - (t/2) cot(t/2))/t^2
double coef_jinv(double t) {
  if (t < kSmallAngle) {
    // Bernoulli numbers B_2 .. B_24.
    static constexpr double kB[] = {
        1.0 / 6,         -1.0 / 30,      1.0 / 42,        -1.0 / 30,
        5.0 / 66,        -691.0 / 2730,  7.0 / 6,         -3617.0 / 510,
        43867.0 / 798,   -174611.0 / 330, 854513.0 / 138, -236364091.0 / 2730};
    return even_series(
        t,
        [](int k) {
          const int n = k + 1;
          return -alt(n) * kB[k] * inv_factorial(2 * n);
        },
        0, 12);
  }
  return 1.0 / (t * t) - (1.0 + std::cos(t)) / (2.0 * t * std::sin(t));
}

// (t^2 + 2 cos t - 2)/(2 t^4)
double coef_q2(double t) {
  if (t < kSmallAngle) {
    return even_series(t, [](int k) { return alt(k) * inv_factorial(2 * k + 4); });
  }
  const double t2 = t * t;
  return (t2 + 2.0 * std::cos(t) - 2.0) / (2.0 * t2 * t2);
}

// (2t - 3 sin t + t cos t)/(2 t^5)
double coef_q3(double t) {
  if (t < kWideSeriesAngle) {
    return even_series(
        t, [](int k) { return alt(k) * (k + 1) * inv_factorial(2 * k + 5); });
  }
  const double t2 = t * t;
  return (2.0 * t - 3.0 * std::sin(t) + t * std::cos(t)) / (2.0 * t2 * t2 * t);
}

// b'(t)/t
double coef_db(double t) {
  if (t < kWideSeriesAngle) {
    return even_series(
        t, [](int k) { return alt(k) * 2 * k * inv_factorial(2 * k + 2); }, 1);
  }
  const double t2 = t * t;
  return (t * std::sin(t) - 2.0 * (1.0 - std::cos(t))) / (t2 * t2);
}

// c'(t)/t
double coef_dc(double t) {
  if (t < kWideSeriesAngle) {
    return even_series(
        t, [](int k) { return alt(k) * 2 * k * inv_factorial(2 * k + 3); }, 1);
  }
  const double t2 = t * t;
  return ((1.0 - std::cos(t)) * t - 3.0 * (t - std::sin(t))) / (t2 * t2 * t);
}

// d'(t)/t with d(t) = (t^2 - 2 + 2 cos t)/t^4
double coef_dd(double t) {
  if (t < kWideSeriesAngle) {
    return even_series(
        t, [](int k) { return alt(k) * 4 * k * inv_factorial(2 * k + 4); }, 1);
  }
  const double t2 = t * t;
  return (2.0 * t * (t - std::sin(t)) - 4.0 * (t2 - 2.0 + 2.0 * std::cos(t))) /
         (t2 * t2 * t2);
}

// t/(2 sin t); no cancellation, only the removable singularity at 0.
double coef_log(double t) {
  if (t < 1e-6) return 0.5 + t * t / 12.0;
  return t / (2.0 * std::sin(t));
}

// d/dphi of  a + alpha(t) phi^ a + beta(t) phi^ phi^ a,
// given alpha, beta and alpha'(t)/t, beta'(t)/t.
Mat3 series_product_derivative(const Vec3& phi, const Vec3& a, double alpha,
                               double beta, double dalpha_over_t,
                               double dbeta_over_t) {
  const Mat3 phi_hat = so3::hat(phi);
  const Vec3 pa = phi_hat * a;
  const Vec3 ppa = phi_hat * pa;
  Mat3 d = -alpha * so3::hat(a);
  d += beta * (phi.dot(a) * Mat3::Identity() + phi * a.transpose() -
               2.0 * a * phi.transpose());
  d += pa * (dalpha_over_t * phi.transpose());
  d += ppa * (dbeta_over_t * phi.transpose());
  return d;
}

}  // namespace

namespace so3 {

Mat3 hat(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

Vec3 vee(const Mat3& m) { return Vec3(m(2, 1), m(0, 2), m(1, 0)); }

Mat3 exp(const Vec3& phi) {
  const double t = phi.norm();
  const Mat3 k = hat(phi);
  return Mat3::Identity() + coef_a(t) * k + coef_b(t) * k * k;
}

Vec3 log(const Mat3& c) {
  const Vec3 axis2 = vee(c - c.transpose());  // 2 sin(t) * axis
  const double s = 0.5 * axis2.norm();
  const double co = 0.5 * (c.trace() - 1.0);
  const double t = std::atan2(s, co);
  if (t > M_PI - kLogPiMargin) {
    throw DomainError("SO(3) log: rotation angle too close to pi");
  }
  return coef_log(t) * axis2;
}

Mat3 left_jacobian(const Vec3& phi) {
  const double t = phi.norm();
  const Mat3 k = hat(phi);
  return Mat3::Identity() + coef_b(t) * k + coef_c(t) * k * k;
}

Mat3 left_jacobian_inverse(const Vec3& phi) {
  const double t = phi.norm();
  const Mat3 k = hat(phi);
  return Mat3::Identity() - 0.5 * k + coef_jinv(t) * k * k;
}

Mat3 right_jacobian(const Vec3& phi) { return left_jacobian(-phi); }

Mat3 right_jacobian_inverse(const Vec3& phi) {
  return left_jacobian_inverse(-phi);
}

Mat3 n_matrix(const Vec3& phi) {
  const double t = phi.norm();
  const Mat3 k = hat(phi);
  return Mat3::Identity() + 2.0 * coef_c(t) * k + 2.0 * coef_q2(t) * k * k;
}

Mat3 left_jacobian_times_derivative(const Vec3& phi, const Vec3& a) {
  const double t = phi.norm();
  return series_product_derivative(phi, a, coef_b(t), coef_c(t), coef_db(t),
                                   coef_dc(t));
}

Mat3 n_matrix_times_derivative(const Vec3& phi, const Vec3& a) {
  const double t = phi.norm();
  return series_product_derivative(phi, a, 2.0 * coef_c(t), 2.0 * coef_q2(t),
                                   2.0 * coef_dc(t), coef_dd(t));
}

Mat3 project(const Mat3& c) {
  Eigen::JacobiSVD<Mat3> svd(c, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 d = Mat3::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) {
    d(2, 2) = -1.0;
  }
  return svd.matrixU() * d * svd.matrixV().transpose();
}

}  // namespace so3

namespace se2 {

namespace {
Eigen::Matrix2d rot(double t) {
  Eigen::Matrix2d c;
  c << std::cos(t), -std::sin(t), std::sin(t), std::cos(t);
  return c;
}
}  // namespace

Mat3 exp(const Vec3& xi) {
  const double t = xi(0);
  const double a = coef_a(std::abs(t));
  const double b = coef_b(std::abs(t)) * t;
  Eigen::Matrix2d v;
  v << a, -b, b, a;
  Mat3 out = Mat3::Identity();
  out.topLeftCorner<2, 2>() = rot(t);
  out.topRightCorner<2, 1>() = v * xi.tail<2>();
  return out;
}

Vec3 log(const Mat3& tm) {
  const double t = std::atan2(tm(1, 0), tm(0, 0));
  if (std::abs(t) > M_PI - kLogPiMargin) {
    throw DomainError("SE(2) log: heading too close to pi");
  }
  const double a = coef_a(std::abs(t));
  const double b = coef_b(std::abs(t)) * t;
  Eigen::Matrix2d vinv;
  vinv << a, b, -b, a;
  vinv /= (a * a + b * b);
  Vec3 out;
  out(0) = t;
  out.tail<2>() = vinv * tm.topRightCorner<2, 1>();
  return out;
}

Mat3 inverse(const Mat3& tm) {
  Mat3 out = Mat3::Identity();
  const Eigen::Matrix2d ct = tm.topLeftCorner<2, 2>().transpose();
  out.topLeftCorner<2, 2>() = ct;
  out.topRightCorner<2, 1>() = -ct * tm.topRightCorner<2, 1>();
  return out;
}

Mat3 adjoint(const Mat3& tm) {
  Mat3 ad = Mat3::Zero();
  ad(0, 0) = 1.0;
  ad(1, 0) = tm(1, 2);
  ad(2, 0) = -tm(0, 2);
  ad.bottomRightCorner<2, 2>() = tm.topLeftCorner<2, 2>();
  return ad;
}

Mat3 right_jacobian(const Vec3& xi) {
  const double t = xi(0);
  const double at = std::abs(t);
  // (t - sin t)/t^2 and (1 - cos t)/t^2, odd/even in t respectively.
  const double a = coef_c(at) * t;
  const double b = coef_b(at);
  const double s = coef_a(at);
  const double c = b * t;  // (1 - cos t)/t
  const double x = xi(1);
  const double y = xi(2);
  Mat3 j;
  j << 1.0, 0.0, 0.0,
       x * a - y * b, s, c,
       x * b + y * a, -c, s;
  return j;
}

Mat3 left_jacobian(const Vec3& xi) { return right_jacobian(-xi); }

}  // namespace se2

namespace se23 {

Mat3 q_matrix(const Vec3& phi, const Vec3& rho) {
  const double t = phi.norm();
  const Mat3 p = so3::hat(phi);
  const Mat3 r = so3::hat(rho);
  const Mat3 pr = p * r;
  const Mat3 rp = r * p;
  const Mat3 prp = pr * p;
  const Mat3 pp = p * p;
  return 0.5 * r + coef_c(t) * (pr + rp + prp) +
         coef_q2(t) * (pp * r + rp * p - 3.0 * prp) +
         coef_q3(t) * (prp * p + pp * r * p);
}

Mat5 exp(const Vec9& xi) {
  const Vec3 phi = xi.head<3>();
  const Mat3 jl = so3::left_jacobian(phi);
  Mat5 out = Mat5::Identity();
  out.topLeftCorner<3, 3>() = so3::exp(phi);
  out.block<3, 1>(0, 3) = jl * xi.segment<3>(3);
  out.block<3, 1>(0, 4) = jl * xi.segment<3>(6);
  return out;
}

Vec9 log(const Mat5& tm) {
  if (std::abs(time_offset(tm)) > kTimeOffsetTol) {
    throw DomainError("SE_2(3) log: element carries a nonzero time offset");
  }
  const Vec3 phi = so3::log(tm.topLeftCorner<3, 3>());
  const Mat3 jinv = so3::left_jacobian_inverse(phi);
  Vec9 out;
  out.head<3>() = phi;
  out.segment<3>(3) = jinv * tm.block<3, 1>(0, 3);
  out.segment<3>(6) = jinv * tm.block<3, 1>(0, 4);
  return out;
}

Mat5 inverse(const Mat5& tm) {
  const Mat3 ct = tm.topLeftCorner<3, 3>().transpose();
  const Vec3 v = tm.block<3, 1>(0, 3);
  const Vec3 r = tm.block<3, 1>(0, 4);
  const double tau = time_offset(tm);
  Mat5 out = Mat5::Identity();
  out.topLeftCorner<3, 3>() = ct;
  out.block<3, 1>(0, 3) = -ct * v;
  out.block<3, 1>(0, 4) = -ct * (r - tau * v);
  out(3, 4) = -tau;
  return out;
}

Mat9 adjoint(const Mat5& tm) {
  const Mat3 c = tm.topLeftCorner<3, 3>();
  const Vec3 v = tm.block<3, 1>(0, 3);
  const Vec3 r = tm.block<3, 1>(0, 4);
  const double tau = time_offset(tm);
  Mat9 ad = Mat9::Zero();
  ad.block<3, 3>(0, 0) = c;
  ad.block<3, 3>(3, 0) = so3::hat(v) * c;
  ad.block<3, 3>(3, 3) = c;
  ad.block<3, 3>(6, 0) = so3::hat(r - tau * v) * c;
  ad.block<3, 3>(6, 3) = -tau * c;
  ad.block<3, 3>(6, 6) = c;
  return ad;
}

Mat9 left_jacobian(const Vec9& xi) {
  const Vec3 phi = xi.head<3>();
  const Mat3 j = so3::left_jacobian(phi);
  Mat9 out = Mat9::Zero();
  out.block<3, 3>(0, 0) = j;
  out.block<3, 3>(3, 3) = j;
  out.block<3, 3>(6, 6) = j;
  out.block<3, 3>(3, 0) = q_matrix(phi, xi.segment<3>(3));
  out.block<3, 3>(6, 0) = q_matrix(phi, xi.segment<3>(6));
  return out;
}

Mat9 right_jacobian(const Vec9& xi) { return left_jacobian(-xi); }

}  // namespace se23

}  // namespace decest
