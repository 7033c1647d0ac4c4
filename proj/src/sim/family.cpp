#include "decest/sim/family.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "decest/manifold.hpp"
#include "decest/models.hpp"

namespace decest::sim {

namespace {

using Mat6 = Eigen::Matrix<double, 6, 6>;

Eigen::MatrixXd diag_sq(const std::vector<double>& s) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(s.size()));
  for (std::size_t i = 0; i < s.size(); ++i) v(i) = s[i] * s[i];
  return v.asDiagonal();
}

double gauss(std::mt19937_64& rng) {
  return std::normal_distribution<double>(0.0, 1.0)(rng);
}

double uniform(std::mt19937_64& rng, double a, double b) {
  return std::uniform_real_distribution<double>(a, b)(rng);
}

Eigen::VectorXd noisy(const Eigen::VectorXd& v, const std::vector<double>& std,
                      std::mt19937_64& rng, bool noise_free) {
  Eigen::VectorXd out = v;
  if (noise_free) return out;
  for (Eigen::Index i = 0; i < v.size(); ++i) out(i) += std[i] * gauss(rng);
  return out;
}

// Members of a slot element as a flat list.
void append_members(const Element& e, std::vector<Element>& out) {
  if (e.descriptor().is_composite()) {
    for (const auto& m : e.members()) out.push_back(m);
  } else {
    out.push_back(e);
  }
}

Vec3 position2(const Mat3& t) { return Vec3(t(0, 2), t(1, 2), 0.0); }

}  // namespace

// ---------------------------------------------------------------------------
// Layout and shared helpers

int Layout::slot_of(int robot) const {
  auto it = std::find(robots.begin(), robots.end(), robot);
  return it == robots.end() ? -1 : static_cast<int>(it - robots.begin());
}

Family::Family(ScenarioConfig cfg) : cfg_(std::move(cfg)) {}

Layout Family::layout(int robot) const {
  Layout l;
  l.owner = robot;
  l.robots.push_back(robot);
  for (int j : cfg_.neighbors(robot)) l.robots.push_back(j);
  return l;
}

Layout Family::joint_layout() const {
  Layout l;
  l.owner = -1;
  for (int r = 0; r < num_robots(); ++r) l.robots.push_back(r);
  return l;
}

GroupDescriptor Family::state_descriptor(const Layout& l) const {
  std::vector<GroupDescriptor> m;
  for (int s = 0; s < l.slots(); ++s) {
    for (const auto& d : slot_members()) m.push_back(d);
  }
  return GroupDescriptor::Composite(m);
}

int Family::slot_dof() const {
  int d = 0;
  for (const auto& m : slot_members()) d += m.dof();
  return d;
}

int Family::member_index(const Layout& l, int robot, int k) const {
  const int s = l.slot_of(robot);
  if (s < 0) throw std::out_of_range("robot not in layout");
  return s * members_per_slot() + k;
}

int Family::tangent_offset(const Layout& l, int robot, int k) const {
  const int s = l.slot_of(robot);
  if (s < 0) throw std::out_of_range("robot not in layout");
  int off = s * slot_dof();
  const auto m = slot_members();
  for (int i = 0; i < k; ++i) off += m[i].dof();
  return off;
}

Eigen::VectorXd Family::noise_std(const Measurement& m) const {
  const auto& spec = cfg_.robots.at(m.robot).sensors.at(m.sensor);
  const int n = noise_dim(spec.kind, cfg_.family);
  Eigen::VectorXd s(n);
  for (int i = 0; i < n; ++i) {
    s(i) = spec.noise_std.size() == 1 ? spec.noise_std[0] : spec.noise_std[i];
  }
  return s;
}

Eigen::VectorXd Family::generate(const Measurement& m,
                                 const std::vector<Element>& truth,
                                 std::mt19937_64& rng) const {
  Eigen::VectorXd y = measure(m, truth);
  if (cfg_.noise_free) return y;
  const Eigen::VectorXd s = noise_std(m);
  for (Eigen::Index i = 0; i < y.size(); ++i) y(i) += s(i) * gauss(rng);
  return y;
}

std::vector<Measurement> Family::channels(int robot) const {
  std::vector<Measurement> out;
  const auto& sensors = cfg_.robots.at(robot).sensors;
  for (std::size_t s = 0; s < sensors.size(); ++s) {
    Measurement m;
    m.robot = robot;
    m.sensor = static_cast<int>(s);
    m.kind = sensors[s].kind;
    if (!sensors[s].targets.empty() || !sensors[s].landmarks.empty()) {
      for (int t : sensors[s].targets) {
        m.target = t;
        m.landmark = -1;
        out.push_back(m);
      }
      for (int l : sensors[s].landmarks) {
        m.target = -1;
        m.landmark = l;
        out.push_back(m);
      }
    } else {
      out.push_back(m);
    }
  }
  return out;
}

int Family::tag_pairs(int robot, int target) const {
  const auto a = std::max<std::size_t>(1, cfg_.robots.at(robot).tags.size());
  const auto b = std::max<std::size_t>(1, cfg_.robots.at(target).tags.size());
  return static_cast<int>(a * b);
}

Element Family::slot_truth(int, int robot, const std::vector<Element>& truth) const {
  return truth.at(robot);
}

Element Family::joint_slot_truth(int robot, const std::vector<Element>& truth) const {
  return truth.at(robot);
}

Element Family::state_truth(const Layout& l, const std::vector<Element>& truth) const {
  std::vector<Element> m;
  for (int r : l.robots) {
    append_members(l.owner < 0 ? joint_slot_truth(r, truth)
                               : slot_truth(l.owner, r, truth),
                   m);
  }
  return Element::FromMembers(m);
}

Element Family::joint_truth(const std::vector<Element>& truth) const {
  return state_truth(joint_layout(), truth);
}

Eigen::VectorXd Family::slot_prior_std(int, int robot) const {
  const auto& s = cfg_.robots.at(robot).initial_std;
  return Eigen::Map<const Eigen::VectorXd>(s.data(), static_cast<Eigen::Index>(s.size()));
}

Element Family::slot_prior_mean(const Element& t, const Eigen::VectorXd& draw) const {
  return oplus(t, draw, Side::kRight);
}

Belief Family::initial_belief(const Layout& l,
                              const std::vector<Element>& slots_truth,
                              std::mt19937_64& rng) const {
  const int d = slot_dof();
  const int n = d * l.slots();
  Eigen::VectorXd var(n);
  std::vector<Element> members;
  for (int s = 0; s < l.slots(); ++s) {
    const Eigen::VectorXd sd = slot_prior_std(l.owner, l.robots[s]);
    Eigen::VectorXd draw = Eigen::VectorXd::Zero(d);
    if (!cfg_.noise_free) {
      for (int i = 0; i < d; ++i) draw(i) = sd(i) * gauss(rng);
    }
    var.segment(s * d, d) = sd.array().square();
    append_members(slot_prior_mean(slots_truth.at(s), draw), members);
  }
  return Belief(Element::FromMembers(members), Eigen::MatrixXd(var.asDiagonal()),
                Side::kRight);
}

Rmi Family::rmi_identity(std::int64_t) const {
  throw std::logic_error("family does not share increments");
}

Rmi Family::rmi_increment(const Rmi&, const Eigen::VectorXd&) const {
  throw std::logic_error("family does not share increments");
}

Belief Family::rmi_apply(const Belief&, const Layout&, int, const Rmi&,
                         std::int64_t) const {
  throw std::logic_error("family does not share increments");
}

MeasurementModel Family::joint_measurement(const Measurement& m) const {
  return measurement_model(joint_layout(), m);
}

Eigen::MatrixXd Family::input_cov() const { return diag_sq(cfg_.process.input_std); }

std::uint64_t trial_seed(std::uint64_t base, int trial) {
  std::seed_seq seq{static_cast<std::uint32_t>(base),
                    static_cast<std::uint32_t>(base >> 32),
                    static_cast<std::uint32_t>(trial), 0x5eedu};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
}

std::mt19937_64 make_stream(std::uint64_t seed, int robot, int purpose, int index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(robot + 1),
                    static_cast<std::uint32_t>(purpose),
                    static_cast<std::uint32_t>(index)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return std::mt19937_64((static_cast<std::uint64_t>(out[1]) << 32) | out[0]);
}

namespace {

// Stacked values of a composite whose members are all vector spaces.
Eigen::VectorXd stacked(const Element& x) {
  Eigen::VectorXd v(x.dof());
  int o = 0;
  for (const auto& m : x.members()) {
    v.segment(o, m.dof()) = m.vector();
    o += m.dof();
  }
  return v;
}

// ---------------------------------------------------------------------------
// Toy: 1-D robots on a line, random-walk motion, full state overlap.

class ToyFamily final : public Family {
 public:
  using Family::Family;

  Layout layout(int robot) const override {
    Layout l = joint_layout();
    l.owner = robot;
    return l;
  }
  std::vector<GroupDescriptor> slot_members() const override {
    return {GroupDescriptor::VectorSpace(1)};
  }
  std::vector<std::string> member_names() const override { return {"position"}; }
  bool shares_rmis() const override { return false; }

  TruthRun simulate(int steps, std::uint64_t seed) const override {
    const int n = num_robots();
    TruthRun run;
    std::vector<Element> x0;
    std::vector<std::mt19937_64> rng;
    for (int r = 0; r < n; ++r) {
      rng.push_back(make_stream(seed, r, kStreamTrajectory));
      const double e = cfg_.trajectory.extent;
      x0.push_back(Element::FromVector(
          Eigen::VectorXd::Constant(1, uniform(rng[r], -e, e))));
    }
    run.truth.push_back(x0);
    const double q = cfg_.process.random_walk_std * std::sqrt(dt());
    for (int k = 0; k < steps; ++k) {
      std::vector<Element> next;
      std::vector<Eigen::VectorXd> none(n, Eigen::VectorXd(0));
      for (int r = 0; r < n; ++r) {
        Eigen::VectorXd v = run.truth.back()[r].vector();
        if (!cfg_.noise_free) v(0) += q * gauss(rng[r]);
        next.push_back(Element::FromVector(v));
      }
      run.truth.push_back(next);
      run.true_inputs.push_back(none);
      run.measured_inputs.push_back(none);
    }
    return run;
  }

  Eigen::VectorXd measure(const Measurement& m,
                          const std::vector<Element>& truth) const override {
    Eigen::VectorXd y = truth.at(m.robot).vector();
    if (m.kind == SensorKind::kRelativePosition) y -= truth.at(m.target).vector();
    return y;
  }

  ProcessModel own_process(const Layout& l) const override {
    const int n = l.slots();
    ProcessModel pm;
    pm.evaluate = [](const Element& x, const Eigen::VectorXd&,
                     const Eigen::VectorXd& w) { return oplus(x, w, Side::kRight); };
    pm.jacobian_state = [n](const Element&, const Eigen::VectorXd&) {
      return Eigen::MatrixXd(Eigen::MatrixXd::Identity(n, n));
    };
    pm.jacobian_noise = pm.jacobian_state;
    const double s = cfg_.process.random_walk_std;
    pm.noise_cov = Eigen::MatrixXd::Identity(n, n) * s * s * dt();
    pm.dt = dt();
    return pm;
  }

  MeasurementModel measurement_model(const Layout& l,
                                     const Measurement& m) const override {
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(1, l.slots());
    G(0, l.slot_of(m.robot)) = 1.0;
    if (m.kind == SensorKind::kRelativePosition) G(0, l.slot_of(m.target)) = -1.0;
    MeasurementModel mm;
    mm.evaluate = [G](const Element& x) { return Eigen::VectorXd(G * stacked(x)); };
    mm.jacobian = [G](const Element&) { return G; };
    mm.noise_cov = Eigen::MatrixXd(noise_std(m).array().square().matrix().asDiagonal());
    return mm;
  }

  PseudoModel pseudo_model(const Layout& li, const Layout&) const override {
    const int n = li.slots();
    PseudoModel pm;
    pm.evaluate = [](const Element& a, const Element& b) {
      return Eigen::VectorXd(stacked(a) - stacked(b));
    };
    pm.jacobian_i = [n](const Element&, const Element&) {
      return Eigen::MatrixXd(Eigen::MatrixXd::Identity(n, n));
    };
    pm.jacobian_j = [n](const Element&, const Element&) {
      return Eigen::MatrixXd(-Eigen::MatrixXd::Identity(n, n));
    };
    pm.psi = cfg_.fusion.psi * Eigen::MatrixXd::Identity(n, n);
    return pm;
  }

  ProcessModel joint_process() const override { return own_process(joint_layout()); }

  Eigen::MatrixXd full_transition(const Layout& l, const Element&,
                                  const std::vector<Eigen::VectorXd>&,
                                  const std::vector<Element>&) const override {
    return Eigen::MatrixXd::Identity(l.slots(), l.slots());
  }

  double position_error(const Element& a, const Element& b) const override {
    return std::abs(a.vector()(0) - b.vector()(0));
  }
};

// ---------------------------------------------------------------------------
// Ground robots: SE(2) world poses, wheel odometry (omega, v, lateral).

struct GroundProfile {
  double v0, av, fv, pv;
  double w0, aw, fw, pw;
  Vec3 at(double t) const {
    return Vec3(w0 + aw * std::sin(fw * t + pw), v0 + av * std::sin(fv * t + pv), 0.0);
  }
};

class GroundFamily final : public Family {
 public:
  using Family::Family;

  std::vector<GroupDescriptor> slot_members() const override {
    return {GroupDescriptor::SE2()};
  }
  std::vector<std::string> member_names() const override { return {"pose"}; }
  bool shares_rmis() const override { return true; }

  TruthRun simulate(int steps, std::uint64_t seed) const override {
    const int n = num_robots();
    const auto& tc = cfg_.trajectory;
    TruthRun run;
    std::vector<GroundProfile> prof;
    std::vector<std::mt19937_64> noise;
    std::vector<Element> x0;
    for (int r = 0; r < n; ++r) {
      auto rng = make_stream(seed, r, kStreamTrajectory);
      const double x = uniform(rng, -tc.extent, tc.extent);
      const double y = uniform(rng, -tc.extent, tc.extent);
      const double th = uniform(rng, -M_PI, M_PI);
      Mat3 T = Mat3::Identity();
      T.topLeftCorner<2, 2>() << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
      T.topRightCorner<2, 1>() << x, y;
      x0.push_back(Element::FromSE2(T));
      GroundProfile p;
      p.v0 = tc.speed * uniform(rng, 0.8, 1.2);
      p.av = 0.2 * tc.speed;
      p.fv = 2 * M_PI * uniform(rng, 0.05, 0.2);
      p.pv = uniform(rng, 0, 2 * M_PI);
      p.w0 = (uniform(rng, 0, 1) < 0.5 ? -0.5 : 0.5) * tc.turn_rate;
      p.aw = tc.turn_rate * uniform(rng, 0.5, 1.0);
      p.fw = 2 * M_PI * uniform(rng, 0.02, 0.1);
      p.pw = uniform(rng, 0, 2 * M_PI);
      prof.push_back(p);
      noise.push_back(make_stream(seed, r, kStreamInputNoise));
    }
    run.truth.push_back(x0);
    for (int k = 0; k < steps; ++k) {
      const double t = (k + 0.5) * dt();
      std::vector<Element> next;
      std::vector<Eigen::VectorXd> ut, um;
      for (int r = 0; r < n; ++r) {
        const Vec3 u = prof[r].at(t);
        ut.push_back(u);
        um.push_back(noisy(u, cfg_.process.input_std, noise[r], cfg_.noise_free));
        next.push_back(make_unchecked(GroupDescriptor::SE2(),
                                      run.truth.back()[r].se2() * wheel_step(u, dt())));
      }
      run.truth.push_back(next);
      run.true_inputs.push_back(ut);
      run.measured_inputs.push_back(um);
    }
    return run;
  }

  Eigen::VectorXd measure(const Measurement& m,
                          const std::vector<Element>& truth) const override {
    const Mat3 ts = truth.at(m.robot).se2();
    if (m.kind == SensorKind::kRange) {
      const Mat3 tt = truth.at(m.target).se2();
      return Eigen::VectorXd::Constant(1, (position2(tt) - position2(ts)).norm());
    }
    const Eigen::Vector2d l = cfg_.world.landmarks.at(m.landmark).head<2>();
    return ts.topLeftCorner<2, 2>().transpose() * (l - ts.topRightCorner<2, 1>());
  }

  ProcessModel own_process(const Layout& l) const override {
    const int n = l.slots() * 3;
    const int mi = member_index(l, l.owner);
    const int off = tangent_offset(l, l.owner);
    const double h = dt();
    ProcessModel pm;
    pm.evaluate = [mi, h](const Element& x, const Eigen::VectorXd& u,
                          const Eigen::VectorXd& w) {
      return x.with_member(mi, make_unchecked(GroupDescriptor::SE2(),
                                              x.member(mi).se2() * wheel_step(u + w, h)));
    };
    pm.jacobian_state = [n, off, h](const Element&, const Eigen::VectorXd& u) {
      Eigen::MatrixXd F = Eigen::MatrixXd::Identity(n, n);
      F.block(off, off, 3, 3) = se2::adjoint(se2::inverse(wheel_step(u, h)));
      return F;
    };
    pm.jacobian_noise = [n, off, h](const Element&, const Eigen::VectorXd& u) {
      Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, 3);
      L.block(off, 0, 3, 3) = h * se2::right_jacobian(h * Vec3(u));
      return L;
    };
    pm.noise_cov = input_cov();
    pm.dt = h;
    return pm;
  }

  Rmi rmi_identity(std::int64_t step) const override { return WheelRmi::Identity(step); }

  Rmi rmi_increment(const Rmi& r, const Eigen::VectorXd& u) const override {
    return increment_wheel(std::get<WheelRmi>(r), Vec3(u), Mat3(input_cov()), dt());
  }

  Belief rmi_apply(const Belief& b, const Layout& l, int sender, const Rmi& r,
                   std::int64_t expected) const override {
    return apply_rmi(b, member_index(l, sender), std::get<WheelRmi>(r), expected);
  }

  MeasurementModel measurement_model(const Layout& l,
                                     const Measurement& m) const override {
    const int n = l.slots() * 3;
    const int ms = member_index(l, m.robot);
    const int os = tangent_offset(l, m.robot);
    MeasurementModel mm;
    mm.noise_cov = Eigen::MatrixXd(noise_std(m).array().square().matrix().asDiagonal());
    if (m.kind == SensorKind::kRange) {
      const int mt = member_index(l, m.target);
      const int ot = tangent_offset(l, m.target);
      mm.evaluate = [ms, mt](const Element& x) {
        const Mat3 a = x.member(ms).se2(), b = x.member(mt).se2();
        return Eigen::VectorXd::Constant(1, (position2(b) - position2(a)).norm());
      };
      mm.jacobian = [n, ms, mt, os, ot](const Element& x) {
        const Mat3 a = x.member(ms).se2(), b = x.member(mt).se2();
        const Eigen::Vector2d d = b.topRightCorner<2, 1>() - a.topRightCorner<2, 1>();
        const Eigen::RowVector2d u = d.transpose() / std::max(d.norm(), 1e-12);
        Eigen::MatrixXd G = Eigen::MatrixXd::Zero(1, n);
        G.block(0, os + 1, 1, 2) = -u * a.topLeftCorner<2, 2>();
        G.block(0, ot + 1, 1, 2) = u * b.topLeftCorner<2, 2>();
        return G;
      };
      return mm;
    }
    const Eigen::Vector2d lm = cfg_.world.landmarks.at(m.landmark).head<2>();
    mm.evaluate = [ms, lm](const Element& x) {
      const Mat3 a = x.member(ms).se2();
      return Eigen::VectorXd(a.topLeftCorner<2, 2>().transpose() *
                             (lm - a.topRightCorner<2, 1>()));
    };
    mm.jacobian = [n, ms, os, lm](const Element& x) {
      const Mat3 a = x.member(ms).se2();
      const Eigen::Vector2d y =
          a.topLeftCorner<2, 2>().transpose() * (lm - a.topRightCorner<2, 1>());
      Eigen::MatrixXd G = Eigen::MatrixXd::Zero(2, n);
      G(0, os) = y(1);   // -J y with J = [0 -1; 1 0]
      G(1, os) = -y(0);
      G.block(0, os + 1, 2, 2) = -Eigen::Matrix2d::Identity();
      return G;
    };
    return mm;
  }

  // Stacked Log(T^[i]^-1 T^[j]) over every robot both states carry: the two
  // endpoints first, then common neighbors in id order.
  PseudoModel pseudo_model(const Layout& li, const Layout& lj) const override {
    std::vector<int> shared{li.owner, lj.owner};
    for (int r : li.robots) {
      if (r != li.owner && r != lj.owner && lj.slot_of(r) >= 0) shared.push_back(r);
    }
    std::sort(shared.begin() + 2, shared.end());
    struct Row { int mi, mj, oi, oj; };
    std::vector<Row> rows;
    for (int r : shared) {
      rows.push_back({member_index(li, r), member_index(lj, r), tangent_offset(li, r),
                      tangent_offset(lj, r)});
    }
    const int ni = li.slots() * 3, nj = lj.slots() * 3;
    const int c = static_cast<int>(rows.size()) * 3;
    auto logs = [rows](const Element& a, const Element& b) {
      std::vector<models::ProductLog2> out;
      for (const auto& r : rows) {
        out.push_back(models::se2_product_log({a.member(r.mi).se2(), b.member(r.mj).se2()},
                                              {true, false}));
      }
      return out;
    };
    PseudoModel pm;
    pm.evaluate = [logs, c](const Element& a, const Element& b) {
      Eigen::VectorXd v(c);
      int k = 0;
      for (const auto& pl : logs(a, b)) v.segment<3>(3 * k++) = pl.value;
      return v;
    };
    pm.jacobian_i = [logs, rows, c, ni](const Element& a, const Element& b) {
      Eigen::MatrixXd S = Eigen::MatrixXd::Zero(c, ni);
      const auto pls = logs(a, b);
      for (std::size_t k = 0; k < rows.size(); ++k) {
        S.block(3 * k, rows[k].oi, 3, 3) = pls[k].jacobians[0];
      }
      return S;
    };
    pm.jacobian_j = [logs, rows, c, nj](const Element& a, const Element& b) {
      Eigen::MatrixXd S = Eigen::MatrixXd::Zero(c, nj);
      const auto pls = logs(a, b);
      for (std::size_t k = 0; k < rows.size(); ++k) {
        S.block(3 * k, rows[k].oj, 3, 3) = pls[k].jacobians[1];
      }
      return S;
    };
    pm.psi = cfg_.fusion.psi * Eigen::MatrixXd::Identity(c, c);
    return pm;
  }

  ProcessModel joint_process() const override {
    const int N = num_robots();
    const double h = dt();
    ProcessModel pm;
    pm.evaluate = [N, h](const Element& x, const Eigen::VectorXd& u,
                         const Eigen::VectorXd& w) {
      Element out = x;
      for (int r = 0; r < N; ++r) {
        const Vec3 ur = u.segment<3>(3 * r) + w.segment<3>(3 * r);
        out = out.with_member(r, make_unchecked(GroupDescriptor::SE2(),
                                                x.member(r).se2() * wheel_step(ur, h)));
      }
      return out;
    };
    pm.jacobian_state = [N, h](const Element&, const Eigen::VectorXd& u) {
      Eigen::MatrixXd F = Eigen::MatrixXd::Zero(3 * N, 3 * N);
      for (int r = 0; r < N; ++r) {
        F.block<3, 3>(3 * r, 3 * r) =
            se2::adjoint(se2::inverse(wheel_step(u.segment<3>(3 * r), h)));
      }
      return F;
    };
    pm.jacobian_noise = [N, h](const Element&, const Eigen::VectorXd& u) {
      Eigen::MatrixXd L = Eigen::MatrixXd::Zero(3 * N, 3 * N);
      for (int r = 0; r < N; ++r) {
        L.block<3, 3>(3 * r, 3 * r) =
            h * se2::right_jacobian(h * Vec3(u.segment<3>(3 * r)));
      }
      return L;
    };
    Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(3 * N, 3 * N);
    for (int r = 0; r < N; ++r) Q.block(3 * r, 3 * r, 3, 3) = input_cov();
    pm.noise_cov = Q;
    pm.dt = h;
    return pm;
  }

  Eigen::MatrixXd full_transition(const Layout& l, const Element&,
                                  const std::vector<Eigen::VectorXd>& u,
                                  const std::vector<Element>&) const override {
    const int n = 3 * l.slots();
    Eigen::MatrixXd F = Eigen::MatrixXd::Zero(n, n);
    for (int s = 0; s < l.slots(); ++s) {
      F.block<3, 3>(3 * s, 3 * s) =
          se2::adjoint(se2::inverse(wheel_step(u.at(l.robots[s]), dt())));
    }
    return F;
  }

  double position_error(const Element& a, const Element& b) const override {
    return (position2(a.se2()) - position2(b.se2())).norm();
  }
};

// ---------------------------------------------------------------------------
// Quadcopters: SE_2(3) extended poses with IMU biases.

struct QuadProfile {
  Vec3 center, amp, freq, phase;   // position
  Vec3 att_amp, att_freq, att_phase, att_offset;

  Vec3 position(double t) const {
    return center + amp.cwiseProduct((freq * t + phase).array().sin().matrix());
  }
  Vec3 velocity(double t) const {
    return amp.cwiseProduct(freq).cwiseProduct((freq * t + phase).array().cos().matrix());
  }
  Vec3 acceleration(double t) const {
    return -amp.cwiseProduct(freq.cwiseAbs2())
                .cwiseProduct((freq * t + phase).array().sin().matrix());
  }
  Vec3 rotvec(double t) const {
    return att_offset +
           att_amp.cwiseProduct((att_freq * t + att_phase).array().sin().matrix());
  }
  Vec3 rotvec_rate(double t) const {
    return att_amp.cwiseProduct(att_freq).cwiseProduct(
        (att_freq * t + att_phase).array().cos().matrix());
  }
};

class QuadFamily final : public Family {
 public:
  using Family::Family;

  int members_per_slot() const override { return 2; }
  std::vector<GroupDescriptor> slot_members() const override {
    return {GroupDescriptor::SE23(), GroupDescriptor::VectorSpace(6)};
  }
  std::vector<std::string> member_names() const override { return {"pose", "bias"}; }
  bool shares_rmis() const override { return true; }

  TruthRun simulate(int steps, std::uint64_t seed) const override {
    const int n = num_robots();
    const auto& tc = cfg_.trajectory;
    const Vec3 g = cfg_.world.gravity;
    TruthRun run;
    std::vector<QuadProfile> prof;
    std::vector<std::mt19937_64> noise, walk;
    std::vector<Element> x0;
    for (int r = 0; r < n; ++r) {
      auto rng = make_stream(seed, r, kStreamTrajectory);
      QuadProfile p;
      const double ang = 2 * M_PI * r / n;
      p.center = Vec3(tc.extent * std::cos(ang) + uniform(rng, -0.5, 0.5),
                      tc.extent * std::sin(ang) + uniform(rng, -0.5, 0.5), tc.height);
      p.amp = Vec3(tc.amplitude, tc.amplitude, 0.3);
      for (int a = 0; a < 3; ++a) {
        p.freq(a) = uniform(rng, 0.3, 0.8);
        p.phase(a) = uniform(rng, 0, 2 * M_PI);
        p.att_freq(a) = uniform(rng, 0.3, 0.8);
        p.att_phase(a) = uniform(rng, 0, 2 * M_PI);
      }
      p.att_amp = Vec3(0.1, 0.1, 0.8);
      p.att_offset = Vec3(0, 0, uniform(rng, -1.0, 1.0));
      prof.push_back(p);
      noise.push_back(make_stream(seed, r, kStreamInputNoise));
      walk.push_back(make_stream(seed, r, kStreamBias));

      Mat5 T = Mat5::Identity();
      T.topLeftCorner<3, 3>() = so3::exp(p.rotvec(0));
      T.block<3, 1>(0, 3) = p.velocity(0);
      T.block<3, 1>(0, 4) = p.position(0);
      Eigen::VectorXd b = Eigen::VectorXd::Zero(6);
      if (!cfg_.noise_free) {
        for (int i = 0; i < 6; ++i) b(i) = cfg_.process.initial_bias_std[i] * gauss(walk[r]);
      }
      x0.push_back(Element::FromMembers(
          {make_unchecked(GroupDescriptor::SE23(), T), Element::FromVector(b)}));
    }
    run.truth.push_back(x0);
    const Mat5 G = imu_gravity_matrix(dt(), g);
    for (int k = 0; k < steps; ++k) {
      const double t = (k + 0.5) * dt();
      std::vector<Element> next;
      std::vector<Eigen::VectorXd> ut, um;
      for (int r = 0; r < n; ++r) {
        const auto& p = prof[r];
        const Vec3 phi = p.rotvec(t);
        const Vec3 omega = so3::right_jacobian(phi) * p.rotvec_rate(t);
        const Vec3 f = so3::exp(phi).transpose() * (p.acceleration(t) - g);
        Eigen::VectorXd u(6);
        u << omega, f;
        const Element& cur = run.truth.back()[r];
        const Eigen::VectorXd b = cur.member(1).vector();
        ut.push_back(u);
        um.push_back(noisy(u + b, cfg_.process.input_std, noise[r], cfg_.noise_free));
        const Mat5 T = G * cur.member(0).se23() *
                       imu_increment_matrix(ImuInput{omega, f, dt()});
        Eigen::VectorXd bn = b;
        if (!cfg_.noise_free) {
          const double s = std::sqrt(dt());
          for (int i = 0; i < 6; ++i) bn(i) += cfg_.process.bias_walk_std[i] * s * gauss(walk[r]);
        }
        next.push_back(Element::FromMembers(
            {make_unchecked(GroupDescriptor::SE23(), T), Element::FromVector(bn)}));
      }
      run.truth.push_back(next);
      run.true_inputs.push_back(ut);
      run.measured_inputs.push_back(um);
    }
    return run;
  }

  Vec3 tag(int robot, int k) const {
    const auto& t = cfg_.robots.at(robot).tags;
    return t.empty() ? Vec3::Zero() : t.at(k);
  }

  Eigen::VectorXd measure(const Measurement& m,
                          const std::vector<Element>& truth) const override {
    const Mat5 T = truth.at(m.robot).member(0).se23();
    const Mat3 C = T.topLeftCorner<3, 3>();
    const Vec3 r = T.block<3, 1>(0, 4);
    switch (m.kind) {
      case SensorKind::kOwnPosition: return r;
      case SensorKind::kHeight: return Eigen::VectorXd::Constant(1, r(2));
      case SensorKind::kMagnetometer:
        return Eigen::VectorXd(C.transpose() * cfg_.world.magnetic_field);
      case SensorKind::kRange: {
        const Mat5 Tt = truth.at(m.target).member(0).se23();
        const Vec3 pa = C * tag(m.robot, m.tag_self) + r;
        const Vec3 pb = Tt.topLeftCorner<3, 3>() * tag(m.target, m.tag_target) +
                        Tt.block<3, 1>(0, 4);
        return Eigen::VectorXd::Constant(1, (pb - pa).norm());
      }
      default: break;
    }
    throw std::logic_error("sensor not available for quadcopters");
  }

  Element slot_truth(int owner, int robot,
                     const std::vector<Element>& truth) const override {
    if (owner < 0 || owner == robot) return truth.at(robot);
    const Mat5 rel = se23::inverse(truth.at(owner).member(0).se23()) *
                     truth.at(robot).member(0).se23();
    return Element::FromMembers({make_unchecked(GroupDescriptor::SE23(), rel),
                                 truth.at(robot).member(1)});
  }

  Eigen::VectorXd slot_prior_std(int owner, int robot) const override {
    if (owner < 0 || owner == robot) return Family::slot_prior_std(owner, robot);
    const auto& s = cfg_.world.relative_initial_std;
    return Eigen::Map<const Eigen::VectorXd>(s.data(), 15);
  }

  // Bias estimates start at zero; the true bias is the random quantity.
  Element slot_prior_mean(const Element& t, const Eigen::VectorXd& draw) const override {
    return Element::FromMembers({oplus(t.member(0), draw.head(9), Side::kRight),
                                 Element::FromVector(Eigen::VectorXd::Zero(6))});
  }

  Mat6 imu_cov() const { return input_cov(); }
  Mat6 bias_step_cov() const {
    return Mat6(diag_sq(cfg_.process.bias_walk_std)) * dt();
  }
  ImuInput input(const Eigen::VectorXd& u) const {
    return ImuInput{u.head<3>(), u.tail<3>(), dt()};
  }

  ProcessModel own_process(const Layout& l) const override {
    const int S = l.slots();
    const int n = 15 * S;
    const int self = l.owner;
    const int mT = member_index(l, self, 0), mb = member_index(l, self, 1);
    const int oT = tangent_offset(l, self, 0), ob = tangent_offset(l, self, 1);
    const Mat5 G = imu_gravity_matrix(dt(), cfg_.world.gravity);
    const double h = dt();
    auto unbiased = [mb, h](const Element& x, const Eigen::VectorXd& u) {
      const Eigen::VectorXd ub = u - x.member(mb).vector();
      return ImuInput{ub.head<3>(), ub.tail<3>(), h};
    };
    ProcessModel pm;
    pm.evaluate = [=](const Element& x, const Eigen::VectorXd& u,
                      const Eigen::VectorXd& w) {
      const Mat5 U = imu_increment_matrix(unbiased(x, u + w.head(6)));
      const Mat5 Ui = se23::inverse(U);
      std::vector<Element> m = x.members();
      m[mT] = make_unchecked(GroupDescriptor::SE23(), G * x.member(mT).se23() * U);
      for (int s = 0; s < S; ++s) {
        const int pose = 2 * s, bias = 2 * s + 1;
        if (s > 0) {
          m[pose] = make_unchecked(GroupDescriptor::SE23(), Ui * x.member(pose).se23());
        }
        m[bias] = Element::FromVector(x.member(bias).vector() + w.segment(6 + 6 * s, 6));
      }
      return Element::FromMembers(m);
    };
    pm.jacobian_state = [=](const Element& x, const Eigen::VectorXd& u) {
      const ImuInput in = unbiased(x, u);
      const Mat5 Ui = se23::inverse(imu_increment_matrix(in));
      const Mat96 L = imu_input_jacobian(in);
      Eigen::MatrixXd F = Eigen::MatrixXd::Identity(n, n);
      F.block<9, 9>(oT, oT) = se23::adjoint(Ui);
      F.block<9, 6>(oT, ob) = -L;
      for (int s = 1; s < S; ++s) {
        const Mat5 M = Ui * x.member(2 * s).se23();
        F.block<9, 6>(15 * s, ob) = se23::adjoint(se23::inverse(M)) * L;
      }
      return F;
    };
    pm.jacobian_noise = [=](const Element& x, const Eigen::VectorXd& u) {
      const ImuInput in = unbiased(x, u);
      const Mat5 Ui = se23::inverse(imu_increment_matrix(in));
      const Mat96 L = imu_input_jacobian(in);
      Eigen::MatrixXd Lw = Eigen::MatrixXd::Zero(n, 6 + 6 * S);
      Lw.block<9, 6>(oT, 0) = L;
      for (int s = 0; s < S; ++s) {
        if (s > 0) {
          const Mat5 M = Ui * x.member(2 * s).se23();
          Lw.block<9, 6>(15 * s, 0) = -se23::adjoint(se23::inverse(M)) * L;
        }
        Lw.block<6, 6>(15 * s + 9, 6 + 6 * s).setIdentity();
      }
      return Lw;
    };
    Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(6 + 6 * S, 6 + 6 * S);
    Q.topLeftCorner<6, 6>() = imu_cov();
    for (int s = 0; s < S; ++s) Q.block<6, 6>(6 + 6 * s, 6 + 6 * s) = bias_step_cov();
    pm.noise_cov = Q;
    pm.dt = h;
    return pm;
  }

  Rmi rmi_identity(std::int64_t step) const override {
    return ImuRmi::Identity(step, cfg_.world.gravity);
  }

  Rmi rmi_increment(const Rmi& r, const Eigen::VectorXd& u) const override {
    return increment_imu(std::get<ImuRmi>(r), input(u), imu_cov());
  }

  Belief rmi_apply(const Belief& b, const Layout& l, int sender, const Rmi& r,
                   std::int64_t expected) const override {
    const auto& rmi = std::get<ImuRmi>(r);
    const int bias = member_index(l, sender, 1);
    const Belief out = apply_rmi_with_bias(b, member_index(l, sender, 0), bias, rmi, expected);
    // The increment carries no bias noise; the walk over the span is added here.
    Eigen::MatrixXd P = out.cov();
    const int bo = out.descriptor().member_offset(bias);
    P.block(bo, bo, 6, 6) += bias_step_cov() * static_cast<double>(rmi.span.steps());
    return Belief(out.mean(), P, out.side());
  }

  // Row of the range Jacobian with respect to a right perturbation of the
  // relative pose T_ab, and the predicted range.
  static std::pair<double, Eigen::Matrix<double, 1, 9>> range_rel(const Mat5& Tab,
                                                                  const Vec3& pa,
                                                                  const Vec3& pb) {
    const Mat3 C = Tab.topLeftCorner<3, 3>();
    const Vec3 d = C * pb + Tab.block<3, 1>(0, 4) - pa;
    const double rho = d.norm();
    const Eigen::RowVector3d u = d.transpose() / std::max(rho, 1e-12);
    Eigen::Matrix<double, 1, 9> g = Eigen::Matrix<double, 1, 9>::Zero();
    g.segment<3>(0) = -u * C * so3::hat(pb);
    g.segment<3>(6) = u * C;
    return {rho, g};
  }

  MeasurementModel pose_sensor(const Layout& l, const Measurement& m) const {
    const int n = 15 * l.slots();
    const int mT = member_index(l, m.robot, 0);
    const int oT = tangent_offset(l, m.robot, 0);
    const Vec3 field = cfg_.world.magnetic_field;
    const SensorKind kind = m.kind;
    MeasurementModel mm;
    mm.noise_cov = Eigen::MatrixXd(noise_std(m).array().square().matrix().asDiagonal());
    mm.evaluate = [=](const Element& x) -> Eigen::VectorXd {
      const Mat5 T = x.member(mT).se23();
      const Mat3 C = T.topLeftCorner<3, 3>();
      if (kind == SensorKind::kOwnPosition) return Vec3(T.block<3, 1>(0, 4));
      if (kind == SensorKind::kHeight) return Eigen::VectorXd::Constant(1, T(2, 4));
      return Vec3(C.transpose() * field);
    };
    mm.jacobian = [=](const Element& x) {
      const Mat5 T = x.member(mT).se23();
      const Mat3 C = T.topLeftCorner<3, 3>();
      if (kind == SensorKind::kOwnPosition) {
        Eigen::MatrixXd G = Eigen::MatrixXd::Zero(3, n);
        G.block<3, 3>(0, oT + 6) = C;
        return G;
      }
      if (kind == SensorKind::kHeight) {
        Eigen::MatrixXd G = Eigen::MatrixXd::Zero(1, n);
        G.block<1, 3>(0, oT + 6) = C.row(2);
        return G;
      }
      Eigen::MatrixXd G = Eigen::MatrixXd::Zero(3, n);
      G.block<3, 3>(0, oT) = so3::hat(C.transpose() * field);
      return G;
    };
    return mm;
  }

  MeasurementModel measurement_model(const Layout& l,
                                     const Measurement& m) const override {
    if (m.kind != SensorKind::kRange) return pose_sensor(l, m);
    const int n = 15 * l.slots();
    const int mt = member_index(l, m.target, 0);
    const int ot = tangent_offset(l, m.target, 0);
    const Vec3 pa = tag(m.robot, m.tag_self), pb = tag(m.target, m.tag_target);
    MeasurementModel mm;
    mm.noise_cov = Eigen::MatrixXd(noise_std(m).array().square().matrix().asDiagonal());
    mm.evaluate = [=](const Element& x) {
      return Eigen::VectorXd::Constant(1, range_rel(x.member(mt).se23(), pa, pb).first);
    };
    mm.jacobian = [=](const Element& x) {
      Eigen::MatrixXd G = Eigen::MatrixXd::Zero(1, n);
      G.block<1, 9>(0, ot) = range_rel(x.member(mt).se23(), pa, pb).second;
      return G;
    };
    return mm;
  }

  MeasurementModel joint_measurement(const Measurement& m) const override {
    const Layout l = joint_layout();
    if (m.kind != SensorKind::kRange) return pose_sensor(l, m);
    const int n = 15 * l.slots();
    const int ma = member_index(l, m.robot), mb = member_index(l, m.target);
    const int oa = tangent_offset(l, m.robot), ob = tangent_offset(l, m.target);
    const Vec3 pa = tag(m.robot, m.tag_self), pb = tag(m.target, m.tag_target);
    auto rel = [=](const Element& x) {
      return Mat5(se23::inverse(x.member(ma).se23()) * x.member(mb).se23());
    };
    MeasurementModel mm;
    mm.noise_cov = Eigen::MatrixXd(noise_std(m).array().square().matrix().asDiagonal());
    mm.evaluate = [=](const Element& x) {
      return Eigen::VectorXd::Constant(1, range_rel(rel(x), pa, pb).first);
    };
    mm.jacobian = [=](const Element& x) {
      const Mat5 Tab = rel(x);
      const auto g = range_rel(Tab, pa, pb).second;
      Eigen::MatrixXd G = Eigen::MatrixXd::Zero(1, n);
      G.block<1, 9>(0, oa) = -g * se23::adjoint(se23::inverse(Tab));
      G.block<1, 9>(0, ob) = g;
      return G;
    };
    return mm;
  }

  // Loop closure, reciprocity, bias agreement and triangle rows.
  PseudoModel pseudo_model(const Layout& li, const Layout& lj) const override {
    const int i = li.owner, j = lj.owner;
    const int ni = 15 * li.slots(), nj = 15 * lj.slots();
    std::vector<int> common;
    for (int r : li.robots) {
      if (r != i && r != j && lj.slot_of(r) >= 0) common.push_back(r);
    }
    std::sort(common.begin(), common.end());
    const int c = 30 + 9 * static_cast<int>(common.size());
    // member indices / tangent offsets
    const int iTwi = member_index(li, i), iTij = member_index(li, j);
    const int ibi = member_index(li, i, 1), ibj = member_index(li, j, 1);
    const int jTwj = member_index(lj, j), jTji = member_index(lj, i);
    const int jbi = member_index(lj, i, 1), jbj = member_index(lj, j, 1);
    const int oTwi = tangent_offset(li, i), oTij = tangent_offset(li, j);
    const int obi = tangent_offset(li, i, 1), obj = tangent_offset(li, j, 1);
    const int pTwj = tangent_offset(lj, j), pTji = tangent_offset(lj, i);
    const int pbi = tangent_offset(lj, i, 1), pbj = tangent_offset(lj, j, 1);
    struct Tri { int iTil, jTjl, oTil, pTjl; };
    std::vector<Tri> tris;
    for (int l : common) {
      tris.push_back({member_index(li, l), member_index(lj, l), tangent_offset(li, l),
                      tangent_offset(lj, l)});
    }

    struct Parts {
      models::ProductLog loop, recip;
      std::vector<models::ProductLog> tri;
    };
    auto parts = [=](const Element& a, const Element& b) {
      Parts p;
      p.loop = models::se23_product_log(
          {a.member(iTwi).se23(), a.member(iTij).se23(), b.member(jTwj).se23()},
          {false, false, true});
      p.recip = models::se23_product_log({a.member(iTij).se23(), b.member(jTji).se23()},
                                         {false, false});
      for (const auto& t : tris) {
        p.tri.push_back(models::se23_product_log(
            {a.member(iTij).se23(), b.member(t.jTjl).se23(), a.member(t.iTil).se23()},
            {false, false, true}));
      }
      return p;
    };

    PseudoModel pm;
    pm.evaluate = [=](const Element& a, const Element& b) {
      const Parts p = parts(a, b);
      Eigen::VectorXd v(c);
      v.segment<9>(0) = p.loop.value;
      v.segment<9>(9) = p.recip.value;
      v.segment<6>(18) = a.member(ibi).vector() - b.member(jbi).vector();
      v.segment<6>(24) = a.member(ibj).vector() - b.member(jbj).vector();
      for (std::size_t k = 0; k < p.tri.size(); ++k) v.segment<9>(30 + 9 * k) = p.tri[k].value;
      return v;
    };
    pm.jacobian_i = [=](const Element& a, const Element& b) {
      const Parts p = parts(a, b);
      Eigen::MatrixXd S = Eigen::MatrixXd::Zero(c, ni);
      S.block<9, 9>(0, oTwi) = p.loop.jacobians[0];
      S.block<9, 9>(0, oTij) = p.loop.jacobians[1];
      S.block<9, 9>(9, oTij) = p.recip.jacobians[0];
      S.block<6, 6>(18, obi).setIdentity();
      S.block<6, 6>(24, obj).setIdentity();
      for (std::size_t k = 0; k < p.tri.size(); ++k) {
        S.block<9, 9>(30 + 9 * k, oTij) = p.tri[k].jacobians[0];
        S.block<9, 9>(30 + 9 * k, tris[k].oTil) = p.tri[k].jacobians[2];
      }
      return S;
    };
    pm.jacobian_j = [=](const Element& a, const Element& b) {
      const Parts p = parts(a, b);
      Eigen::MatrixXd S = Eigen::MatrixXd::Zero(c, nj);
      S.block<9, 9>(0, pTwj) = p.loop.jacobians[2];
      S.block<9, 9>(9, pTji) = p.recip.jacobians[1];
      S.block<6, 6>(18, pbi) = -Mat6::Identity();
      S.block<6, 6>(24, pbj) = -Mat6::Identity();
      for (std::size_t k = 0; k < p.tri.size(); ++k) {
        S.block<9, 9>(30 + 9 * k, tris[k].pTjl) = p.tri[k].jacobians[1];
      }
      return S;
    };
    pm.psi = cfg_.fusion.psi * Eigen::MatrixXd::Identity(c, c);
    return pm;
  }

  ProcessModel joint_process() const override {
    const int N = num_robots();
    const double h = dt();
    const Mat5 G = imu_gravity_matrix(h, cfg_.world.gravity);
    auto unbiased = [h](const Element& x, const Eigen::VectorXd& u, int r) {
      const Eigen::VectorXd ub = u.segment(6 * r, 6) - x.member(2 * r + 1).vector();
      return ImuInput{ub.head<3>(), ub.tail<3>(), h};
    };
    ProcessModel pm;
    pm.evaluate = [=](const Element& x, const Eigen::VectorXd& u,
                      const Eigen::VectorXd& w) {
      std::vector<Element> m = x.members();
      for (int r = 0; r < N; ++r) {
        Eigen::VectorXd ur = u;
        ur.segment(6 * r, 6) += w.segment(12 * r, 6);
        const Mat5 U = imu_increment_matrix(unbiased(x, ur, r));
        m[2 * r] = make_unchecked(GroupDescriptor::SE23(), G * x.member(2 * r).se23() * U);
        m[2 * r + 1] =
            Element::FromVector(x.member(2 * r + 1).vector() + w.segment(12 * r + 6, 6));
      }
      return Element::FromMembers(m);
    };
    pm.jacobian_state = [=](const Element& x, const Eigen::VectorXd& u) {
      Eigen::MatrixXd F = Eigen::MatrixXd::Identity(15 * N, 15 * N);
      for (int r = 0; r < N; ++r) {
        const ImuInput in = unbiased(x, u, r);
        F.block<9, 9>(15 * r, 15 * r) =
            se23::adjoint(se23::inverse(imu_increment_matrix(in)));
        F.block<9, 6>(15 * r, 15 * r + 9) = -imu_input_jacobian(in);
      }
      return F;
    };
    pm.jacobian_noise = [=](const Element& x, const Eigen::VectorXd& u) {
      Eigen::MatrixXd L = Eigen::MatrixXd::Zero(15 * N, 12 * N);
      for (int r = 0; r < N; ++r) {
        L.block<9, 6>(15 * r, 12 * r) = imu_input_jacobian(unbiased(x, u, r));
        L.block<6, 6>(15 * r + 9, 12 * r + 6).setIdentity();
      }
      return L;
    };
    Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(12 * N, 12 * N);
    for (int r = 0; r < N; ++r) {
      Q.block<6, 6>(12 * r, 12 * r) = imu_cov();
      Q.block<6, 6>(12 * r + 6, 12 * r + 6) = bias_step_cov();
    }
    pm.noise_cov = Q;
    pm.dt = h;
    return pm;
  }

  Eigen::MatrixXd full_transition(const Layout& l, const Element& x,
                                  const std::vector<Eigen::VectorXd>& u_true,
                                  const std::vector<Element>& truth) const override {
    const int self = l.owner;
    const Eigen::VectorXd u_meas = u_true.at(self) + truth.at(self).member(1).vector();
    const Eigen::MatrixXd F_own = own_process(l).jacobian_state(x, u_meas);
    Eigen::MatrixXd F_nb = Eigen::MatrixXd::Identity(F_own.rows(), F_own.cols());
    for (int s = 1; s < l.slots(); ++s) {
      const ImuInput in = input(u_true.at(l.robots[s]));
      F_nb.block<9, 9>(15 * s, 15 * s) =
          se23::adjoint(se23::inverse(imu_increment_matrix(in)));
      F_nb.block<9, 6>(15 * s, 15 * s + 9) = -imu_input_jacobian(in);
    }
    return F_nb * F_own;
  }

  double position_error(const Element& a, const Element& b) const override {
    return (a.se23().block<3, 1>(0, 4) - b.se23().block<3, 1>(0, 4)).norm();
  }
};

}  // namespace

std::unique_ptr<Family> make_family(const ScenarioConfig& cfg) {
  switch (cfg.family) {
    case FamilyKind::kToy: return std::make_unique<ToyFamily>(cfg);
    case FamilyKind::kGround: return std::make_unique<GroundFamily>(cfg);
    case FamilyKind::kQuad: return std::make_unique<QuadFamily>(cfg);
  }
  throw std::logic_error("unknown family");
}

}  // namespace decest::sim
