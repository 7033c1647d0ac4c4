#include "decest/manifold.hpp"

#include <Eigen/LU>
#include <cmath>
#include <sstream>

#include "decest/errors.hpp"

namespace decest {

namespace {

constexpr double kStructureTol = 1e-9;
constexpr double kReorthoTol = 1e-9;

using Kind = GroupDescriptor::Kind;

void require_same(const GroupDescriptor& a, const GroupDescriptor& b,
                  const char* what) {
  if (a != b) {
    throw DescriptorMismatch(std::string(what) + ": " + a.to_string() +
                             " vs " + b.to_string());
  }
}

void require_dof(const GroupDescriptor& d, const Eigen::VectorXd& xi,
                 const char* what) {
  if (xi.size() != d.dof()) {
    throw DescriptorMismatch(std::string(what) + ": tangent of size " +
                             std::to_string(xi.size()) + " for " +
                             d.to_string());
  }
}

double rot_error(const Eigen::Ref<const Eigen::MatrixXd>& c) {
  const Eigen::MatrixXd e =
      c.transpose() * c - Eigen::MatrixXd::Identity(c.rows(), c.cols());
  return e.cwiseAbs().maxCoeff();
}

Mat3 maybe_project(const Mat3& c) {
  return rot_error(c) > kReorthoTol ? so3::project(c) : c;
}

}  // namespace

const char* to_string(Side s) { return s == Side::kLeft ? "left" : "right"; }

// ---------------------------------------------------------------------------
// GroupDescriptor

GroupDescriptor GroupDescriptor::VectorSpace(int n) {
  if (n < 0) throw std::invalid_argument("vector space dimension < 0");
  return GroupDescriptor(Kind::kVectorSpace, n);
}

GroupDescriptor GroupDescriptor::Composite(std::vector<GroupDescriptor> members) {
  auto m = std::make_shared<Members>();
  int off = 0;
  for (const auto& d : members) {
    m->offsets.push_back(off);
    off += d.dof();
  }
  m->list = std::move(members);
  GroupDescriptor g(Kind::kComposite, off);
  g.members_ = std::move(m);
  return g;
}

int GroupDescriptor::num_members() const {
  return members_ ? static_cast<int>(members_->list.size()) : 0;
}

const GroupDescriptor& GroupDescriptor::member(int i) const {
  if (!members_ || i < 0 || i >= num_members()) {
    throw std::out_of_range("GroupDescriptor::member");
  }
  return members_->list[i];
}

int GroupDescriptor::member_offset(int i) const {
  if (!members_ || i < 0 || i >= num_members()) {
    throw std::out_of_range("GroupDescriptor::member_offset");
  }
  return members_->offsets[i];
}

std::string GroupDescriptor::to_string() const {
  switch (kind_) {
    case Kind::kVectorSpace:
      return "R" + std::to_string(dof_);
    case Kind::kSO3:
      return "SO3";
    case Kind::kSE2:
      return "SE2";
    case Kind::kSE23:
      return "SE23";
    case Kind::kComposite: {
      std::string s = "(";
      for (int i = 0; i < num_members(); ++i) {
        if (i) s += ",";
        s += members_->list[i].to_string();
      }
      return s + ")";
    }
  }
  return "?";
}

bool operator==(const GroupDescriptor& a, const GroupDescriptor& b) {
  if (a.kind_ != b.kind_ || a.dof_ != b.dof_) return false;
  if (a.kind_ != Kind::kComposite) return true;
  if (a.members_ == b.members_) return true;
  if (a.num_members() != b.num_members()) return false;
  for (int i = 0; i < a.num_members(); ++i) {
    if (a.member(i) != b.member(i)) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Element

Element make_unchecked(const GroupDescriptor& d, Eigen::MatrixXd value) {
  Element e;
  e.desc_ = d;
  e.value_ = std::move(value);
  return e;
}

Element Element::FromVector(const Eigen::VectorXd& x) {
  return make_unchecked(GroupDescriptor::VectorSpace(static_cast<int>(x.size())),
                        x);
}

Element Element::FromSO3(const Mat3& c) {
  if (!c.allFinite() || rot_error(c) > kStructureTol || c.determinant() < 0) {
    throw DomainError("FromSO3: matrix is not a rotation");
  }
  return make_unchecked(GroupDescriptor::SO3(), c);
}

Element Element::FromSE2(const Mat3& t) {
  if (!t.allFinite() || rot_error(t.topLeftCorner<2, 2>()) > kStructureTol ||
      t.topLeftCorner<2, 2>().determinant() < 0 ||
      (t.row(2) - Eigen::RowVector3d(0, 0, 1)).cwiseAbs().maxCoeff() != 0.0) {
    throw DomainError("FromSE2: matrix is not an SE(2) pose");
  }
  return make_unchecked(GroupDescriptor::SE2(), t);
}

Element Element::FromSE23(const Mat5& t) {
  Eigen::Matrix<double, 2, 5> tail;
  tail << 0, 0, 0, 1, t(3, 4), 0, 0, 0, 0, 1;
  if (!t.allFinite() || rot_error(t.topLeftCorner<3, 3>()) > kStructureTol ||
      t.topLeftCorner<3, 3>().determinant() < 0 ||
      (t.bottomRows<2>() - tail).cwiseAbs().maxCoeff() != 0.0) {
    throw DomainError("FromSE23: matrix is not an extended pose");
  }
  return make_unchecked(GroupDescriptor::SE23(), t);
}

Element Element::FromMembers(std::vector<Element> members) {
  std::vector<GroupDescriptor> ds;
  ds.reserve(members.size());
  for (const auto& m : members) ds.push_back(m.descriptor());
  Element e;
  e.desc_ = GroupDescriptor::Composite(std::move(ds));
  e.members_ = std::move(members);
  return e;
}

const Eigen::MatrixXd& Element::matrix() const {
  if (desc_.is_composite()) {
    throw DescriptorMismatch("matrix() on composite element");
  }
  return value_;
}

Eigen::VectorXd Element::vector() const {
  if (desc_.kind() != Kind::kVectorSpace) {
    throw DescriptorMismatch("vector() on " + desc_.to_string());
  }
  return value_;
}

Mat3 Element::so3() const {
  if (desc_.kind() != Kind::kSO3) {
    throw DescriptorMismatch("so3() on " + desc_.to_string());
  }
  return value_;
}

Mat3 Element::se2() const {
  if (desc_.kind() != Kind::kSE2) {
    throw DescriptorMismatch("se2() on " + desc_.to_string());
  }
  return value_;
}

Mat5 Element::se23() const {
  if (desc_.kind() != Kind::kSE23) {
    throw DescriptorMismatch("se23() on " + desc_.to_string());
  }
  return value_;
}

const Element& Element::member(int i) const {
  if (i < 0 || i >= num_members()) throw std::out_of_range("Element::member");
  return members_[i];
}

Element Element::with_member(int i, Element e) const {
  if (i < 0 || i >= num_members()) {
    throw std::out_of_range("Element::with_member");
  }
  require_same(members_[i].descriptor(), e.descriptor(), "with_member");
  Element out = *this;
  out.members_[i] = std::move(e);
  return out;
}

// ---------------------------------------------------------------------------
// Group operations

Element identity(const GroupDescriptor& d) {
  switch (d.kind()) {
    case Kind::kVectorSpace:
      return make_unchecked(d, Eigen::VectorXd::Zero(d.dof()));
    case Kind::kSO3:
    case Kind::kSE2:
      return make_unchecked(d, Eigen::MatrixXd::Identity(3, 3));
    case Kind::kSE23:
      return make_unchecked(d, Eigen::MatrixXd::Identity(5, 5));
    case Kind::kComposite: {
      std::vector<Element> ms;
      for (int i = 0; i < d.num_members(); ++i) ms.push_back(identity(d.member(i)));
      return Element::FromMembers(std::move(ms));
    }
  }
  return {};
}

Element compose(const Element& a, const Element& b) {
  require_same(a.descriptor(), b.descriptor(), "compose");
  const auto& d = a.descriptor();
  switch (d.kind()) {
    case Kind::kVectorSpace:
      return make_unchecked(d, a.matrix() + b.matrix());
    case Kind::kSO3:
      return make_unchecked(d, maybe_project(a.so3() * b.so3()));
    case Kind::kSE2: {
      Mat3 t = a.se2() * b.se2();
      if (rot_error(t.topLeftCorner<2, 2>()) > kReorthoTol) {
        const double th = std::atan2(t(1, 0), t(0, 0));
        t.topLeftCorner<2, 2>() << std::cos(th), -std::sin(th), std::sin(th),
            std::cos(th);
      }
      return make_unchecked(d, t);
    }
    case Kind::kSE23: {
      Mat5 t = a.se23() * b.se23();
      t.topLeftCorner<3, 3>() = maybe_project(t.topLeftCorner<3, 3>());
      return make_unchecked(d, t);
    }
    case Kind::kComposite: {
      std::vector<Element> ms;
      ms.reserve(a.num_members());
      for (int i = 0; i < a.num_members(); ++i) {
        ms.push_back(compose(a.member(i), b.member(i)));
      }
      return Element::FromMembers(std::move(ms));
    }
  }
  return {};
}

Element inverse(const Element& a) {
  const auto& d = a.descriptor();
  switch (d.kind()) {
    case Kind::kVectorSpace:
      return make_unchecked(d, -a.matrix());
    case Kind::kSO3:
      return make_unchecked(d, a.matrix().transpose());
    case Kind::kSE2:
      return make_unchecked(d, se2::inverse(a.se2()));
    case Kind::kSE23:
      return make_unchecked(d, se23::inverse(a.se23()));
    case Kind::kComposite: {
      std::vector<Element> ms;
      for (const auto& m : a.members()) ms.push_back(inverse(m));
      return Element::FromMembers(std::move(ms));
    }
  }
  return {};
}

Element exp_map(const GroupDescriptor& d, const Eigen::VectorXd& xi) {
  require_dof(d, xi, "exp_map");
  switch (d.kind()) {
    case Kind::kVectorSpace:
      return make_unchecked(d, xi);
    case Kind::kSO3:
      return make_unchecked(d, so3::exp(xi));
    case Kind::kSE2:
      return make_unchecked(d, se2::exp(xi));
    case Kind::kSE23:
      return make_unchecked(d, se23::exp(xi));
    case Kind::kComposite: {
      std::vector<Element> ms;
      for (int i = 0; i < d.num_members(); ++i) {
        const auto& md = d.member(i);
        ms.push_back(exp_map(md, xi.segment(d.member_offset(i), md.dof())));
      }
      return Element::FromMembers(std::move(ms));
    }
  }
  return {};
}

Eigen::VectorXd log_map(const Element& a) {
  const auto& d = a.descriptor();
  switch (d.kind()) {
    case Kind::kVectorSpace:
      return a.vector();
    case Kind::kSO3:
      return so3::log(a.so3());
    case Kind::kSE2:
      return se2::log(a.se2());
    case Kind::kSE23:
      return se23::log(a.se23());
    case Kind::kComposite: {
      Eigen::VectorXd out(d.dof());
      for (int i = 0; i < d.num_members(); ++i) {
        out.segment(d.member_offset(i), d.member(i).dof()) = log_map(a.member(i));
      }
      return out;
    }
  }
  return {};
}

Eigen::MatrixXd adjoint(const Element& a) {
  const auto& d = a.descriptor();
  switch (d.kind()) {
    case Kind::kVectorSpace:
      return Eigen::MatrixXd::Identity(d.dof(), d.dof());
    case Kind::kSO3:
      return a.matrix();
    case Kind::kSE2:
      return se2::adjoint(a.se2());
    case Kind::kSE23:
      return se23::adjoint(a.se23());
    case Kind::kComposite: {
      Eigen::MatrixXd out = Eigen::MatrixXd::Zero(d.dof(), d.dof());
      for (int i = 0; i < d.num_members(); ++i) {
        const int o = d.member_offset(i);
        const int n = d.member(i).dof();
        out.block(o, o, n, n) = adjoint(a.member(i));
      }
      return out;
    }
  }
  return {};
}

Eigen::MatrixXd wedge(const GroupDescriptor& d, const Eigen::VectorXd& xi) {
  require_dof(d, xi, "wedge");
  switch (d.kind()) {
    case Kind::kVectorSpace:
      return xi;
    case Kind::kSO3:
      return so3::hat(xi);
    case Kind::kSE2: {
      Eigen::MatrixXd m = Eigen::MatrixXd::Zero(3, 3);
      m(0, 1) = -xi(0);
      m(1, 0) = xi(0);
      m(0, 2) = xi(1);
      m(1, 2) = xi(2);
      return m;
    }
    case Kind::kSE23: {
      Eigen::MatrixXd m = Eigen::MatrixXd::Zero(5, 5);
      m.topLeftCorner(3, 3) = so3::hat(xi.head<3>());
      m.block(0, 3, 3, 1) = xi.segment<3>(3);
      m.block(0, 4, 3, 1) = xi.segment<3>(6);
      return m;
    }
    case Kind::kComposite:
      break;
  }
  throw DescriptorMismatch("wedge on composite");
}

Eigen::VectorXd vee(const GroupDescriptor& d, const Eigen::MatrixXd& m) {
  switch (d.kind()) {
    case Kind::kVectorSpace:
      return m;
    case Kind::kSO3:
      return so3::vee(m);
    case Kind::kSE2:
      return Eigen::Vector3d(m(1, 0), m(0, 2), m(1, 2));
    case Kind::kSE23: {
      Eigen::VectorXd v(9);
      v << so3::vee(m.topLeftCorner<3, 3>()), m.block<3, 1>(0, 3),
          m.block<3, 1>(0, 4);
      return v;
    }
    case Kind::kComposite:
      break;
  }
  throw DescriptorMismatch("vee on composite");
}

namespace {

Eigen::MatrixXd leaf_jacobian(const GroupDescriptor& d,
                              const Eigen::VectorXd& xi, Side side,
                              bool inv) {
  const Eigen::VectorXd x = side == Side::kRight ? Eigen::VectorXd(-xi) : xi;
  // Everything below is the left Jacobian at x; J_r(xi) = J_l(-xi).
  switch (d.kind()) {
    case Kind::kVectorSpace:
      return Eigen::MatrixXd::Identity(d.dof(), d.dof());
    case Kind::kSO3:
      return inv ? Eigen::MatrixXd(so3::left_jacobian_inverse(x))
                 : Eigen::MatrixXd(so3::left_jacobian(x));
    case Kind::kSE2: {
      const Mat3 j = se2::left_jacobian(x);
      return inv ? Eigen::MatrixXd(j.inverse()) : Eigen::MatrixXd(j);
    }
    case Kind::kSE23: {
      if (!inv) return se23::left_jacobian(x);
      // Block lower-triangular inverse.
      const Vec3 phi = x.head<3>();
      const Mat3 ji = so3::left_jacobian_inverse(phi);
      Eigen::MatrixXd out = Eigen::MatrixXd::Zero(9, 9);
      out.block<3, 3>(0, 0) = ji;
      out.block<3, 3>(3, 3) = ji;
      out.block<3, 3>(6, 6) = ji;
      out.block<3, 3>(3, 0) = -ji * se23::q_matrix(phi, x.segment<3>(3)) * ji;
      out.block<3, 3>(6, 0) = -ji * se23::q_matrix(phi, x.segment<3>(6)) * ji;
      return out;
    }
    case Kind::kComposite:
      break;
  }
  throw DescriptorMismatch("leaf_jacobian on composite");
}

Eigen::MatrixXd jacobian_impl(const GroupDescriptor& d,
                              const Eigen::VectorXd& xi, Side side, bool inv) {
  require_dof(d, xi, "group_jacobian");
  if (!d.is_composite()) return leaf_jacobian(d, xi, side, inv);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(d.dof(), d.dof());
  for (int i = 0; i < d.num_members(); ++i) {
    const int o = d.member_offset(i);
    const int n = d.member(i).dof();
    out.block(o, o, n, n) = jacobian_impl(d.member(i), xi.segment(o, n), side, inv);
  }
  return out;
}

}  // namespace

Eigen::MatrixXd group_jacobian(const GroupDescriptor& d,
                               const Eigen::VectorXd& xi, Side side) {
  return jacobian_impl(d, xi, side, false);
}

Eigen::MatrixXd group_jacobian_inverse(const GroupDescriptor& d,
                                       const Eigen::VectorXd& xi, Side side) {
  return jacobian_impl(d, xi, side, true);
}

Element oplus(const Element& a, const Eigen::VectorXd& dx, Side side) {
  const Element e = exp_map(a.descriptor(), dx);
  return side == Side::kRight ? compose(a, e) : compose(e, a);
}

Eigen::VectorXd ominus(const Element& a, const Element& b, Side side) {
  require_same(a.descriptor(), b.descriptor(), "ominus");
  if (a.descriptor().kind() == Kind::kVectorSpace) {
    return a.vector() - b.vector();
  }
  return side == Side::kRight ? log_map(compose(inverse(b), a))
                              : log_map(compose(a, inverse(b)));
}

Eigen::MatrixXd numerical_jacobian(
    const std::function<Element(const Element&)>& fn, const Element& at,
    Side side, double h) {
  const int n = at.dof();
  const Element f0 = fn(at);
  Eigen::MatrixXd j(f0.dof(), n);
  for (int k = 0; k < n; ++k) {
    Eigen::VectorXd d = Eigen::VectorXd::Zero(n);
    d(k) = h;
    const Eigen::VectorXd fp = ominus(fn(oplus(at, d, side)), f0, side);
    const Eigen::VectorXd fm = ominus(fn(oplus(at, -d, side)), f0, side);
    j.col(k) = (fp - fm) / (2.0 * h);
  }
  return j;
}

Eigen::MatrixXd numerical_jacobian_vec(
    const std::function<Eigen::VectorXd(const Element&)>& fn,
    const Element& at, Side side, double h) {
  const int n = at.dof();
  const Eigen::VectorXd f0 = fn(at);
  Eigen::MatrixXd j(f0.size(), n);
  for (int k = 0; k < n; ++k) {
    Eigen::VectorXd d = Eigen::VectorXd::Zero(n);
    d(k) = h;
    j.col(k) = (fn(oplus(at, d, side)) - fn(oplus(at, -d, side))) / (2.0 * h);
  }
  return j;
}

Eigen::MatrixXd numerical_jacobian_from_vec(
    const std::function<Element(const Eigen::VectorXd&)>& fn,
    const Eigen::VectorXd& at, Side side, double h) {
  const Element f0 = fn(at);
  Eigen::MatrixXd j(f0.dof(), at.size());
  for (int k = 0; k < at.size(); ++k) {
    Eigen::VectorXd d = Eigen::VectorXd::Zero(at.size());
    d(k) = h;
    const Eigen::VectorXd fp = ominus(fn(at + d), f0, side);
    const Eigen::VectorXd fm = ominus(fn(at - d), f0, side);
    j.col(k) = (fp - fm) / (2.0 * h);
  }
  return j;
}

double orthonormality_error(const Element& a) {
  switch (a.descriptor().kind()) {
    case Kind::kVectorSpace:
      return 0.0;
    case Kind::kSO3:
      return rot_error(a.matrix());
    case Kind::kSE2:
      return rot_error(a.matrix().topLeftCorner(2, 2));
    case Kind::kSE23:
      return rot_error(a.matrix().topLeftCorner(3, 3));
    case Kind::kComposite: {
      double e = 0.0;
      for (const auto& m : a.members()) e = std::max(e, orthonormality_error(m));
      return e;
    }
  }
  return 0.0;
}

}  // namespace decest
