#include "decest/preintegration.hpp"

#include <bit>
#include <cstring>
#include <stdexcept>
#include <string>

#include "decest/errors.hpp"

namespace decest {

namespace {

static_assert(std::endian::native == std::endian::little,
              "wire format assumes a little-endian host");

constexpr std::size_t kHeaderBytes = 4 + 4 + 8 + 8;

void check_start(const Span& s, std::int64_t expected) {
  if (s.p != expected) {
    throw SpanMismatch("increment starts at step " + std::to_string(s.p) +
                       ", state expects " + std::to_string(expected));
  }
}

struct MemberMap {
  int offset = 0;
  int dof = 0;
  Element mean;
};

MemberMap locate(const Belief& b, int member) {
  if (!b.descriptor().is_composite()) return {0, b.dof(), b.mean()};
  return {b.descriptor().member_offset(member),
          b.descriptor().member(member).dof(), b.mean().member(member)};
}

Belief replace_member(const Belief& b, int member, Element m,
                      const Eigen::MatrixXd& F, const Eigen::MatrixXd& Q) {
  const MemberMap mm = locate(b, member);
  const Element mean = b.descriptor().is_composite()
                           ? b.mean().with_member(member, std::move(m))
                           : std::move(m);
  const Eigen::MatrixXd& P = b.cov();
  Eigen::MatrixXd out = P;
  // Rows then columns of the member block; cheaper than a dense F P F^T.
  out.middleRows(mm.offset, mm.dof) = F * P.middleRows(mm.offset, mm.dof);
  out.middleCols(mm.offset, mm.dof) =
      out.middleCols(mm.offset, mm.dof) * F.transpose();
  out.block(mm.offset, mm.offset, mm.dof, mm.dof) += Q;
  return Belief(mean, out, b.side());
}

// Same tolerance as compose().
Mat3 reortho(const Mat3& c) {
  return (c.transpose() * c - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-9
             ? so3::project(c)
             : c;
}

Eigen::MatrixXd lower(const Eigen::MatrixXd& q) {
  const int n = static_cast<int>(q.rows());
  Eigen::VectorXd v(n * (n + 1) / 2);
  int k = 0;
  for (int j = 0; j < n; ++j)
    for (int i = j; i < n; ++i) v(k++) = q(i, j);
  return v;
}

Eigen::MatrixXd unlower(const double* v, int n) {
  Eigen::MatrixXd q(n, n);
  int k = 0;
  for (int j = 0; j < n; ++j)
    for (int i = j; i < n; ++i) q(i, j) = q(j, i) = v[k++];
  return q;
}

class Writer {
 public:
  Writer(RmiKind kind, std::uint32_t dim, const Span& s) {
    put(static_cast<std::uint32_t>(kind));
    put(dim);
    put(s.p);
    put(s.q);
  }
  template <typename T>
  void put(T x) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&x);
    buf_.insert(buf_.end(), p, p + sizeof(T));
  }
  template <typename Derived>
  void put_all(const Eigen::DenseBase<Derived>& m) {
    // Column-major order.
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      for (Eigen::Index i = 0; i < m.rows(); ++i) put<double>(m(i, j));
  }
  std::vector<std::uint8_t> take() { return std::move(buf_); }

 private:
  std::vector<std::uint8_t> buf_;
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& b) : b_(b) {}
  template <typename T>
  T get() {
    if (pos_ + sizeof(T) > b_.size()) {
      throw std::invalid_argument("RMI message truncated");
    }
    T x;
    std::memcpy(&x, b_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return x;
  }
  Eigen::MatrixXd matrix(int rows, int cols) {
    Eigen::MatrixXd m(rows, cols);
    for (int j = 0; j < cols; ++j)
      for (int i = 0; i < rows; ++i) m(i, j) = get<double>();
    return m;
  }
  std::size_t pos() const { return pos_; }

 private:
  const std::vector<std::uint8_t>& b_;
  std::size_t pos_ = 0;
};

Mat5 extended_from_top(const Eigen::MatrixXd& top, double tau) {
  Mat5 m = Mat5::Identity();
  m.topRows<3>() = top;
  m(3, 4) = tau;
  return m;
}

}  // namespace

// ---------------------------------------------------------------------------

LinearRmi LinearRmi::Identity(int n, std::int64_t at_step) {
  return {Eigen::MatrixXd::Identity(n, n), Eigen::VectorXd::Zero(n),
          Eigen::MatrixXd::Zero(n, n), {at_step, at_step}};
}

WheelRmi WheelRmi::Identity(std::int64_t at_step) {
  WheelRmi r;
  r.span = {at_step, at_step};
  return r;
}

ImuRmi ImuRmi::Identity(std::int64_t at_step, const Vec3& gravity) {
  ImuRmi r;
  r.gravity = gravity;
  r.span = {at_step, at_step};
  return r;
}

RmiKind kind_of(const Rmi& r) {
  switch (r.index()) {
    case 0:
      return RmiKind::kLinear;
    case 1:
      return RmiKind::kWheel;
    default:
      return RmiKind::kImu;
  }
}

Span span_of(const Rmi& r) {
  return std::visit([](const auto& x) { return x.span; }, r);
}

Rmi identity_rmi(RmiKind kind, std::int64_t at_step, int linear_dim) {
  switch (kind) {
    case RmiKind::kLinear:
      return LinearRmi::Identity(linear_dim, at_step);
    case RmiKind::kWheel:
      return WheelRmi::Identity(at_step);
    case RmiKind::kImu:
      return ImuRmi::Identity(at_step);
  }
  throw std::invalid_argument("unknown RMI kind");
}

// ---------------------------------------------------------------------------

Mat3 wheel_step(const Vec3& u, double dt) { return se2::exp(dt * u); }

Mat5 imu_increment_matrix(const ImuInput& u) {
  const double dt = u.dt;
  const Vec3 phi = dt * u.gyro;
  Mat5 m = Mat5::Identity();
  m.topLeftCorner<3, 3>() = so3::exp(phi);
  m.block<3, 1>(0, 3) = dt * so3::left_jacobian(phi) * u.accel;
  m.block<3, 1>(0, 4) = 0.5 * dt * dt * so3::n_matrix(phi) * u.accel;
  m(3, 4) = dt;
  return m;
}

Mat5 imu_gravity_matrix(double dt, const Vec3& g) {
  Mat5 m = Mat5::Identity();
  m.block<3, 1>(0, 3) = dt * g;
  m.block<3, 1>(0, 4) = -0.5 * dt * dt * g;
  m(3, 4) = -dt;
  return m;
}

Mat96 imu_input_jacobian(const ImuInput& u) {
  const double dt = u.dt;
  const Vec3 phi = dt * u.gyro;
  const Mat3 ct = so3::exp(phi).transpose();
  Mat96 l = Mat96::Zero();
  l.block<3, 3>(0, 0) = dt * so3::right_jacobian(phi);
  l.block<3, 3>(3, 0) =
      dt * dt * ct * so3::left_jacobian_times_derivative(phi, u.accel);
  l.block<3, 3>(3, 3) = dt * ct * so3::left_jacobian(phi);
  l.block<3, 3>(6, 0) =
      0.5 * dt * dt * dt * ct * so3::n_matrix_times_derivative(phi, u.accel);
  l.block<3, 3>(6, 3) = 0.5 * dt * dt * ct * so3::n_matrix(phi);
  return l;
}

// ---------------------------------------------------------------------------

LinearRmi increment_linear(const LinearRmi& rmi, const Eigen::MatrixXd& F_k,
                           const Eigen::MatrixXd& L_k,
                           const Eigen::VectorXd& u_k,
                           const Eigen::MatrixXd& Q_k) {
  const auto n = rmi.F.rows();
  if (F_k.rows() != n || F_k.cols() != n || L_k.rows() != n ||
      L_k.cols() != u_k.size() || Q_k.rows() != u_k.size() ||
      Q_k.cols() != u_k.size()) {
    throw std::invalid_argument("increment_linear: inconsistent shapes");
  }
  LinearRmi out;
  out.F = F_k * rmi.F;
  out.dx = F_k * rmi.dx + L_k * u_k;
  out.Q = symmetrize(F_k * rmi.Q * F_k.transpose() +
                     L_k * Q_k * L_k.transpose());
  out.span = {rmi.span.p, rmi.span.q + 1};
  return out;
}

WheelRmi increment_wheel(const WheelRmi& rmi, const Vec3& u_k, const Mat3& Q_k,
                         double dt) {
  if (!(dt > 0)) throw std::invalid_argument("increment_wheel: dt <= 0");
  const Mat3 step = wheel_step(u_k, dt);
  const Mat3 F = se2::adjoint(se2::inverse(step));
  const Mat3 L = dt * se2::right_jacobian(dt * u_k);
  WheelRmi out;
  out.dT = rmi.dT * step;
  out.Q = F * rmi.Q * F.transpose() + L * Q_k * L.transpose();
  out.Q = 0.5 * (out.Q + out.Q.transpose()).eval();
  out.span = {rmi.span.p, rmi.span.q + 1};
  return out;
}

ImuRmi increment_imu(const ImuRmi& rmi, const ImuInput& u,
                     const Eigen::Matrix<double, 6, 6>& Q_k) {
  if (!(u.dt > 0)) throw std::invalid_argument("increment_imu: dt <= 0");
  const Mat5 U = imu_increment_matrix(u);
  const Mat9 F = se23::adjoint(se23::inverse(U));
  const Mat96 L = imu_input_jacobian(u);
  ImuRmi out = rmi;
  out.dU = rmi.dU * U;
  out.dU.topLeftCorner<3, 3>() = reortho(out.dU.topLeftCorner<3, 3>());
  out.dG = imu_gravity_matrix(u.dt, rmi.gravity) * rmi.dG;
  Mat9 q = F * rmi.Q.topLeftCorner<9, 9>() * F.transpose() +
           L * Q_k * L.transpose();
  out.Q.topLeftCorner<9, 9>() = 0.5 * (q + q.transpose());
  // Biased input is u - b, so the bias enters with the opposite sign.
  out.B = F * rmi.B - L;
  out.span = {rmi.span.p, rmi.span.q + 1};
  out.dt_total = rmi.dt_total + u.dt;
  return out;
}

// ---------------------------------------------------------------------------

Belief apply_rmi(const Belief& b, int member, const LinearRmi& rmi,
                 std::int64_t expected_start) {
  check_start(rmi.span, expected_start);
  const MemberMap mm = locate(b, member);
  if (mm.mean.descriptor().kind() != GroupDescriptor::Kind::kVectorSpace ||
      mm.dof != rmi.F.rows()) {
    throw DescriptorMismatch("linear increment on " +
                             mm.mean.descriptor().to_string());
  }
  const Eigen::VectorXd x = rmi.F * mm.mean.vector() + rmi.dx;
  return replace_member(b, member, Element::FromVector(x), rmi.F, rmi.Q);
}

Belief apply_rmi(const Belief& b, int member, const WheelRmi& rmi,
                 std::int64_t expected_start) {
  check_start(rmi.span, expected_start);
  const MemberMap mm = locate(b, member);
  const Mat3 t = mm.mean.se2() * rmi.dT;
  Element m = make_unchecked(GroupDescriptor::SE2(), t);
  if (b.side() == Side::kRight) {
    return replace_member(b, member, std::move(m),
                          se2::adjoint(se2::inverse(rmi.dT)), rmi.Q);
  }
  const Mat3 ad = se2::adjoint(t);
  return replace_member(b, member, std::move(m), Mat3::Identity(),
                        ad * rmi.Q * ad.transpose());
}

Belief apply_rmi(const Belief& b, int member, const ImuRmi& rmi,
                 ImuPlacement placement, std::int64_t expected_start) {
  check_start(rmi.span, expected_start);
  const MemberMap mm = locate(b, member);
  const Mat5 t0 = mm.mean.se23();
  const Mat5 lhs =
      placement == ImuPlacement::kWorldPose ? rmi.dG : Mat5::Identity().eval();
  Mat5 t = lhs * t0 * rmi.dU;
  t.topLeftCorner<3, 3>() = reortho(t.topLeftCorner<3, 3>());
  const Mat9 q = rmi.Q.topLeftCorner<9, 9>();
  Element m = make_unchecked(GroupDescriptor::SE23(), t);
  if (b.side() == Side::kRight) {
    return replace_member(b, member, std::move(m),
                          se23::adjoint(se23::inverse(rmi.dU)), q);
  }
  const Mat9 ad = se23::adjoint(t);
  return replace_member(b, member, std::move(m), se23::adjoint(lhs),
                        ad * q * ad.transpose());
}

Belief apply_rmi_with_bias(const Belief& b, int pose_member, int bias_member,
                           const ImuRmi& rmi, std::int64_t expected_start) {
  check_start(rmi.span, expected_start);
  if (b.side() != Side::kRight || !b.descriptor().is_composite()) {
    throw DescriptorMismatch(
        "bias-corrected increments need a right-perturbed composite state");
  }
  const auto& d = b.descriptor();
  if (d.member(bias_member).dof() != 6 ||
      d.member(bias_member).kind() != GroupDescriptor::Kind::kVectorSpace) {
    throw DescriptorMismatch("bias member must be R6");
  }
  const Vec6 bias = b.mean().member(bias_member).vector();
  const Vec9 corr = rmi.B * bias;
  const Mat5 du = rmi.dU * se23::exp(corr);
  Mat5 t = b.mean().member(pose_member).se23() * du;
  t.topLeftCorner<3, 3>() = reortho(t.topLeftCorner<3, 3>());

  const int po = d.member_offset(pose_member);
  const int bo = d.member_offset(bias_member);
  const int n = b.dof();
  Eigen::MatrixXd F = Eigen::MatrixXd::Identity(n, n);
  F.block(po, po, 9, 9) = se23::adjoint(se23::inverse(du));
  F.block(po, bo, 9, 6) = se23::right_jacobian(corr) * rmi.B;
  Eigen::MatrixXd P = F * b.cov() * F.transpose();
  P.block(po, po, 9, 9) += rmi.Q.topLeftCorner<9, 9>();
  return Belief(b.mean().with_member(pose_member,
                                     make_unchecked(GroupDescriptor::SE23(), t)),
                P, b.side());
}

ImuRmi correct_bias(const ImuRmi& rmi, const Vec6& bias) {
  ImuRmi out = rmi;
  out.dU = rmi.dU * se23::exp(rmi.B * bias);
  return out;
}

// ---------------------------------------------------------------------------

std::size_t serialized_size(RmiKind kind, int n) {
  switch (kind) {
    case RmiKind::kLinear:
      return kHeaderBytes + 8 * (n * n + n + n * (n + 1) / 2);
    case RmiKind::kWheel:
      return kHeaderBytes + 8 * (6 + 6);
    case RmiKind::kImu:
      return kHeaderBytes + 8 * (16 + 16 + 1 + 3 + 120 + 54);
  }
  throw std::invalid_argument("unknown RMI kind");
}

std::size_t raw_input_bytes(RmiKind kind, std::int64_t steps, int input_dim) {
  std::size_t per_step = 0;
  switch (kind) {
    case RmiKind::kLinear:
      per_step = input_dim;
      break;
    case RmiKind::kWheel:
      per_step = 3;
      break;
    case RmiKind::kImu:
      per_step = 7;
      break;
  }
  return kHeaderBytes + 8 * per_step * static_cast<std::size_t>(steps);
}

std::vector<std::uint8_t> serialize(const Rmi& r) {
  return std::visit(
      [](const auto& x) -> std::vector<std::uint8_t> {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, LinearRmi>) {
          Writer w(RmiKind::kLinear, static_cast<std::uint32_t>(x.F.rows()),
                   x.span);
          w.put_all(x.F);
          w.put_all(x.dx);
          w.put_all(lower(x.Q));
          return w.take();
        } else if constexpr (std::is_same_v<T, WheelRmi>) {
          Writer w(RmiKind::kWheel, 3, x.span);
          w.put_all(x.dT.template topRows<2>());
          w.put_all(lower(x.Q));
          return w.take();
        } else {
          Writer w(RmiKind::kImu, 9, x.span);
          w.put_all(x.dU.template topRows<3>());
          w.put<double>(x.dU(3, 4));
          w.put_all(x.dG.template topRows<3>());
          w.put<double>(x.dG(3, 4));
          w.put<double>(x.dt_total);
          w.put_all(x.gravity);
          w.put_all(lower(x.Q));
          w.put_all(x.B);
          return w.take();
        }
      },
      r);
}

Rmi deserialize(const std::vector<std::uint8_t>& bytes) {
  Reader rd(bytes);
  const auto kind = static_cast<RmiKind>(rd.get<std::uint32_t>());
  const auto dim = static_cast<int>(rd.get<std::uint32_t>());
  Span s;
  s.p = rd.get<std::int64_t>();
  s.q = rd.get<std::int64_t>();
  if (kind != RmiKind::kLinear && kind != RmiKind::kWheel &&
      kind != RmiKind::kImu) {
    throw std::invalid_argument("unknown RMI kind tag");
  }
  if (bytes.size() != serialized_size(kind, dim)) {
    throw std::invalid_argument("RMI message has the wrong length");
  }
  switch (kind) {
    case RmiKind::kLinear: {
      LinearRmi r;
      r.F = rd.matrix(dim, dim);
      r.dx = rd.matrix(dim, 1);
      const Eigen::VectorXd q = rd.matrix(dim * (dim + 1) / 2, 1);
      r.Q = unlower(q.data(), dim);
      r.span = s;
      return r;
    }
    case RmiKind::kWheel: {
      WheelRmi r;
      r.dT.topRows<2>() = rd.matrix(2, 3);
      const Eigen::VectorXd q = rd.matrix(6, 1);
      r.Q = unlower(q.data(), 3);
      r.span = s;
      return r;
    }
    case RmiKind::kImu: {
      ImuRmi r;
      const Eigen::MatrixXd u = rd.matrix(3, 5);
      r.dU = extended_from_top(u, rd.get<double>());
      const Eigen::MatrixXd g = rd.matrix(3, 5);
      r.dG = extended_from_top(g, rd.get<double>());
      r.dt_total = rd.get<double>();
      r.gravity = rd.matrix(3, 1);
      const Eigen::VectorXd q = rd.matrix(120, 1);
      r.Q = unlower(q.data(), 15);
      r.B = rd.matrix(9, 6);
      r.span = s;
      return r;
    }
  }
  throw std::invalid_argument("unknown RMI kind tag");
}

}  // namespace decest
