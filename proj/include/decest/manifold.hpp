#pragma once

// Group-agnostic layer over the closed forms in lie.hpp. Elements are
// immutable values tagged with a descriptor; composites nest.

#include <Eigen/Core>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "decest/lie.hpp"

namespace decest {

enum class Side { kLeft, kRight };

const char* to_string(Side s);

class GroupDescriptor {
 public:
  enum class Kind { kVectorSpace, kSO3, kSE2, kSE23, kComposite };

  GroupDescriptor() : GroupDescriptor(Kind::kVectorSpace, 0) {}

  static GroupDescriptor VectorSpace(int n);
  static GroupDescriptor SO3() { return GroupDescriptor(Kind::kSO3, 3); }
  static GroupDescriptor SE2() { return GroupDescriptor(Kind::kSE2, 3); }
  static GroupDescriptor SE23() { return GroupDescriptor(Kind::kSE23, 9); }
  static GroupDescriptor Composite(std::vector<GroupDescriptor> members);

  Kind kind() const { return kind_; }
  int dof() const { return dof_; }
  bool is_composite() const { return kind_ == Kind::kComposite; }

  // Composite only.
  int num_members() const;
  const GroupDescriptor& member(int i) const;
  // Offset of member i in the stacked tangent vector.
  int member_offset(int i) const;

  std::string to_string() const;

  friend bool operator==(const GroupDescriptor& a, const GroupDescriptor& b);
  friend bool operator!=(const GroupDescriptor& a, const GroupDescriptor& b) {
    return !(a == b);
  }

 private:
  struct Members {
    std::vector<GroupDescriptor> list;
    std::vector<int> offsets;
  };

  GroupDescriptor(Kind k, int dof) : kind_(k), dof_(dof) {}

  Kind kind_;
  int dof_;
  std::shared_ptr<const Members> members_;
};

class Element {
 public:
  Element() = default;

  static Element FromVector(const Eigen::VectorXd& x);
  // Rotation / pose inputs are checked for structure (orthonormality to 1e-9,
  // fixed bottom rows) and throw DomainError otherwise.
  static Element FromSO3(const Mat3& c);
  static Element FromSE2(const Mat3& t);
  static Element FromSE23(const Mat5& t);
  static Element FromMembers(std::vector<Element> members);

  const GroupDescriptor& descriptor() const { return desc_; }
  int dof() const { return desc_.dof(); }

  // Leaf storage. For a vector space this is an n x 1 matrix.
  const Eigen::MatrixXd& matrix() const;
  Eigen::VectorXd vector() const;
  Mat3 so3() const;
  Mat3 se2() const;
  Mat5 se23() const;

  int num_members() const { return static_cast<int>(members_.size()); }
  const Element& member(int i) const;
  const std::vector<Element>& members() const { return members_; }
  Element with_member(int i, Element e) const;

 private:
  friend Element make_unchecked(const GroupDescriptor&, Eigen::MatrixXd);

  GroupDescriptor desc_;
  Eigen::MatrixXd value_;
  std::vector<Element> members_;
};

// Leaf element without structural checks; used internally where the value
// is known to be valid by construction.
Element make_unchecked(const GroupDescriptor& d, Eigen::MatrixXd value);

Element identity(const GroupDescriptor& d);
Element compose(const Element& a, const Element& b);
Element inverse(const Element& a);

Element exp_map(const GroupDescriptor& d, const Eigen::VectorXd& xi);
Eigen::VectorXd log_map(const Element& a);

Eigen::MatrixXd adjoint(const Element& a);

// Lie algebra matrix of a leaf group (vector spaces return the column xi).
Eigen::MatrixXd wedge(const GroupDescriptor& d, const Eigen::VectorXd& xi);
Eigen::VectorXd vee(const GroupDescriptor& d, const Eigen::MatrixXd& m);

// J_r or J_l; block diagonal for composites.
Eigen::MatrixXd group_jacobian(const GroupDescriptor& d,
                               const Eigen::VectorXd& xi, Side side);
Eigen::MatrixXd group_jacobian_inverse(const GroupDescriptor& d,
                                       const Eigen::VectorXd& xi, Side side);

Element oplus(const Element& a, const Eigen::VectorXd& dx, Side side);
Eigen::VectorXd ominus(const Element& a, const Element& b, Side side);

// Central differences of fn(X (+) d) (-) fn(X).
Eigen::MatrixXd numerical_jacobian(
    const std::function<Element(const Element&)>& fn, const Element& at,
    Side side, double h = 1e-6);
// Same with a vector-valued output.
Eigen::MatrixXd numerical_jacobian_vec(
    const std::function<Eigen::VectorXd(const Element&)>& fn,
    const Element& at, Side side, double h = 1e-6);
// Derivative of a map from a plain vector to a group element, output
// differences taken on `side`.
Eigen::MatrixXd numerical_jacobian_from_vec(
    const std::function<Element(const Eigen::VectorXd&)>& fn,
    const Eigen::VectorXd& at, Side side, double h = 1e-6);

// Max |C^T C - I| over all rotation blocks (0 for groups without one).
double orthonormality_error(const Element& a);

}  // namespace decest
