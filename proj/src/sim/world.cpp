#include "decest/sim/world.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <ostream>
#include <stdexcept>

#include "decest/errors.hpp"

namespace decest::sim {

const char* to_string(Variant v) {
  switch (v) {
    case Variant::kProposed: return "proposed";
    case Variant::kNaive: return "naive";
    case Variant::kCentralized: return "centralized";
  }
  return "?";
}

Variant variant_from_string(const std::string& s) {
  if (s == "proposed") return Variant::kProposed;
  if (s == "naive") return Variant::kNaive;
  if (s == "centralized") return Variant::kCentralized;
  throw std::invalid_argument("unknown variant: " + s);
}

bool fires(std::int64_t k, double rate, double input_rate) {
  if (k < 1) return false;
  const double r = rate / input_rate;
  return std::floor(k * r + 1e-9) > std::floor((k - 1) * r + 1e-9);
}

// ---------------------------------------------------------------------------
// Event stream

EventStream generate_stream(const Family& f, std::uint64_t seed) {
  const auto& cfg = f.config();
  const int K = cfg.steps();
  EventStream es;
  es.run = f.simulate(K, seed);
  es.measurements.assign(K + 1, {});
  es.share_step.assign(K + 1, 0);
  es.record_step.assign(K + 1, 0);
  es.record_step[0] = 1;

  struct Channel {
    Measurement m;
    double rate;
    std::mt19937_64 rng;
    int tag_counter = 0;
    int pairs = 1;
    int target_tags = 1;
  };
  std::vector<Channel> channels;
  for (int r = 0; r < f.num_robots(); ++r) {
    for (const auto& m : f.channels(r)) {
      const int which = m.target >= 0 ? m.target : 500 + m.landmark;
      Channel c{m, cfg.robots[r].sensors[m.sensor].rate,
                make_stream(seed, r, kStreamSensor, m.sensor * 1000 + which)};
      if (m.kind == SensorKind::kRange && cfg.family == FamilyKind::kQuad) {
        c.pairs = f.tag_pairs(r, m.target);
        c.target_tags = std::max<int>(1, static_cast<int>(cfg.robots[m.target].tags.size()));
      }
      channels.push_back(std::move(c));
    }
  }
  for (int k = 1; k <= K; ++k) {
    for (auto& c : channels) {
      if (!fires(k, c.rate, cfg.rates.input)) continue;
      Measurement m = c.m;
      if (c.pairs > 1) {
        const int p = c.tag_counter++ % c.pairs;
        m.tag_self = p / c.target_tags;
        m.tag_target = p % c.target_tags;
      }
      m.y = f.generate(m, es.run.truth[k], c.rng);
      es.measurements[k].push_back(std::move(m));
    }
    es.share_step[k] = fires(k, cfg.rates.share, cfg.rates.input);
    es.record_step[k] = fires(k, cfg.rates.record, cfg.rates.input);
  }
  return es;
}

std::size_t state_share_bytes(const Belief& b) {
  std::size_t params = 0;
  std::vector<Element> leaves;
  if (b.mean().descriptor().is_composite()) {
    leaves = b.mean().members();
  } else {
    leaves.push_back(b.mean());
  }
  for (const auto& e : leaves) {
    switch (e.descriptor().kind()) {
      case GroupDescriptor::Kind::kSE2: params += 3; break;
      case GroupDescriptor::Kind::kSE23: params += 15; break;
      case GroupDescriptor::Kind::kSO3: params += 9; break;
      default: params += static_cast<std::size_t>(e.dof()); break;
    }
  }
  const auto n = static_cast<std::size_t>(b.dof());
  return 24 + 8 * (params + n * (n + 1) / 2);
}

// ---------------------------------------------------------------------------
// Queue and graph

bool EventQueue::Later::operator()(const Event& a, const Event& b) const {
  if (a.step != b.step) return a.step > b.step;
  if (a.phase != b.phase) return a.phase > b.phase;
  if (a.robot != b.robot) return a.robot > b.robot;
  return a.seq > b.seq;
}

void EventQueue::push(Event e) {
  e.seq = next_seq_++;
  heap_.push(std::move(e));
}

Event EventQueue::pop() {
  Event e = heap_.top();
  heap_.pop();
  return e;
}

CommGraph::CommGraph(int n, std::vector<std::pair<int, int>> edges)
    : n_(n), edges_(std::move(edges)), adj_(n) {
  for (const auto& [a, b] : edges_) {
    if (a < 0 || b < 0 || a >= n || b >= n || a == b) {
      throw std::invalid_argument("CommGraph: bad edge");
    }
    adj_[a].push_back(b);
    adj_[b].push_back(a);
  }
  for (auto& v : adj_) std::sort(v.begin(), v.end());
}

bool CommGraph::adjacent(int a, int b) const {
  const auto& v = adj_.at(a);
  return std::binary_search(v.begin(), v.end(), b);
}

FusionSettings fusion_settings(const ScenarioConfig& c, Variant v) {
  FusionSettings fs;
  fs.max_iters = c.fusion.max_iters;
  fs.perform_ci = c.fusion.perform_ci && v != Variant::kNaive;
  fs.ci_weight = CiWeight(c.fusion.ci_weight);
  return fs;
}

// ---------------------------------------------------------------------------
// Robot node

RobotNode::RobotNode(const Family& f, int id, Belief prior, FusionSettings fs)
    : f_(f),
      id_(id),
      layout_(f.layout(id)),
      belief_(std::move(prior)),
      fs_(fs),
      process_(f.own_process(layout_)),
      neighbors_(f.config().neighbors(id)) {
  if (f.shares_rmis()) {
    for (std::size_t i = 0; i < neighbors_.size(); ++i) {
      outgoing_.push_back(f.rmi_identity(0));
      applied_.push_back(0);
    }
  }
}

bool RobotNode::intermediate(int robot) const {
  if (robot == id_ || applied_.empty()) return false;
  auto it = std::find(neighbors_.begin(), neighbors_.end(), robot);
  if (it == neighbors_.end()) return false;
  return applied_[it - neighbors_.begin()] != steps_;
}

bool RobotNode::any_intermediate() const {
  for (auto a : applied_) {
    if (a != steps_) return true;
  }
  return false;
}

void RobotNode::on_input(const Eigen::VectorXd& u) {
  belief_ = predict(belief_, process_, u);
  for (auto& r : outgoing_) r = f_.rmi_increment(r, u);
  ++steps_;
}

Message RobotNode::make_rmi(int receiver, std::int64_t now) {
  auto it = std::find(neighbors_.begin(), neighbors_.end(), receiver);
  if (it == neighbors_.end() || outgoing_.empty()) {
    throw std::invalid_argument("make_rmi: not a neighbor");
  }
  auto& slot = outgoing_[it - neighbors_.begin()];
  Message m;
  m.kind = Message::Kind::kRmiShare;
  m.sender = id_;
  m.receiver = receiver;
  m.send_step = m.deliver_step = now;
  m.rmi = slot;
  m.bytes = serialized_size(kind_of(slot));
  slot = f_.rmi_identity(span_of(slot).q);
  return m;
}

void RobotNode::on_rmi(const Message& msg) {
  auto it = std::find(neighbors_.begin(), neighbors_.end(), msg.sender);
  if (it == neighbors_.end()) throw std::invalid_argument("on_rmi: not a neighbor");
  auto& applied = applied_[it - neighbors_.begin()];
  belief_ = f_.rmi_apply(belief_, layout_, msg.sender, *msg.rmi, applied);
  applied = span_of(*msg.rmi).q;
}

bool RobotNode::on_measurement(const Measurement& m) {
  if (m.target >= 0 && intermediate(m.target)) return false;
  belief_ = update_local(belief_, f_.measurement_model(layout_, m), m.y).belief;
  return true;
}

Message RobotNode::make_state_share(int receiver, std::int64_t now) const {
  Message m;
  m.kind = Message::Kind::kStateShare;
  m.sender = id_;
  m.receiver = receiver;
  m.send_step = m.deliver_step = now;
  m.belief = belief_;
  m.bytes = state_share_bytes(belief_);
  return m;
}

RobotNode::Fusion RobotNode::on_state_share(const Message& msg) {
  if (std::find(neighbors_.begin(), neighbors_.end(), msg.sender) == neighbors_.end()) {
    throw std::invalid_argument("on_state_share: sender is not a neighbor");
  }
  if (any_intermediate()) return Fusion::kNotPhysical;
  const auto pm = f_.pseudo_model(layout_, f_.layout(msg.sender));
  try {
    belief_ = fuse_pseudo(belief_, *msg.belief, pm, fs_).i;
  } catch (const NumericalError&) {
    return Fusion::kSingular;
  }
  return Fusion::kApplied;
}

// ---------------------------------------------------------------------------
// Centralized node

CentralNode::CentralNode(const Family& f, Belief prior)
    : f_(f), belief_(std::move(prior)), process_(f.joint_process()) {}

void CentralNode::on_inputs(const std::vector<Eigen::VectorXd>& u) {
  Eigen::Index n = 0;
  for (const auto& v : u) n += v.size();
  Eigen::VectorXd s(n);
  n = 0;
  for (const auto& v : u) {
    s.segment(n, v.size()) = v;
    n += v.size();
  }
  belief_ = predict(belief_, process_, s);
}

void CentralNode::on_measurement(const Measurement& m) {
  belief_ = update_local(belief_, f_.joint_measurement(m), m.y).belief;
}

// ---------------------------------------------------------------------------
// Recording

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

TraceRow make_row(int trial, std::int64_t step, double time, int robot, int slot_robot,
                  std::string name, const Eigen::VectorXd& e, const Eigen::MatrixXd& P) {
  TraceRow row;
  row.trial = trial;
  row.step = step;
  row.time = time;
  row.robot = robot;
  row.slot_robot = slot_robot;
  row.substate = std::move(name);
  row.dof = static_cast<int>(e.size());
  row.error = e;
  row.error_norm = e.norm();
  row.sigma = P.diagonal().cwiseMax(0.0).cwiseSqrt();
  row.cov_trace = P.trace();
  row.nees = e.dot(P.ldlt().solve(e));
  row.pos_error = kNaN;
  return row;
}

// Rows for every physical slot member of one belief, then "all".
void record_belief(const Family& f, const Layout& l, const Belief& b,
                   const std::vector<Element>& truth, int trial, std::int64_t step,
                   double time, int robot, const std::vector<char>& physical,
                   std::vector<TraceRow>& out) {
  const auto names = f.member_names();
  const auto members = f.slot_members();
  bool all_physical = true;
  for (int s = 0; s < l.slots(); ++s) {
    const int r = l.robots[s];
    if (!physical[s]) {
      all_physical = false;
      continue;
    }
    const Element slot = l.owner < 0 ? f.joint_slot_truth(r, truth)
                                     : f.slot_truth(l.owner, r, truth);
    for (int k = 0; k < f.members_per_slot(); ++k) {
      const Element& t = slot.descriptor().is_composite() ? slot.member(k) : slot;
      const Element& est = b.mean().member(f.member_index(l, r, k));
      const int off = f.tangent_offset(l, r, k);
      const int d = members[k].dof();
      auto row = make_row(trial, step, time, robot < 0 ? r : robot, r,
                          names[k] + "@" + std::to_string(r), ominus(t, est, Side::kRight),
                          b.cov().block(off, off, d, d));
      if (k == 0) row.pos_error = f.position_error(t, est);
      out.push_back(std::move(row));
    }
  }
  if (all_physical) {
    const Element t = f.state_truth(l, truth);
    out.push_back(make_row(trial, step, time, robot, -1, "all",
                           ominus(t, b.mean(), Side::kRight), b.cov()));
  }
}

std::vector<Belief> decentralized_priors(const Family& f, const EventStream& es,
                                         std::uint64_t seed) {
  std::vector<Belief> out;
  for (int i = 0; i < f.num_robots(); ++i) {
    const Layout l = f.layout(i);
    std::vector<Element> slots;
    for (int r : l.robots) slots.push_back(f.slot_truth(i, r, es.run.truth[0]));
    auto rng = make_stream(seed, i, kStreamPrior);
    out.push_back(f.initial_belief(l, slots, rng));
  }
  return out;
}

// Joint prior assembled from each robot's own slot.
Belief joint_prior(const Family& f, const std::vector<Belief>& priors) {
  const int d = f.slot_dof();
  const int N = f.num_robots();
  std::vector<Element> members;
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(d * N, d * N);
  for (int r = 0; r < N; ++r) {
    const Layout l = f.layout(r);
    for (int k = 0; k < f.members_per_slot(); ++k) {
      members.push_back(priors[r].mean().member(f.member_index(l, r, k)));
    }
    const int off = f.tangent_offset(l, r);
    P.block(d * r, d * r, d, d) = priors[r].cov().block(off, off, d, d);
  }
  return Belief(Element::FromMembers(members), P, Side::kRight);
}

ScenarioTrace run_centralized(const Family& f, const EventStream& es,
                              const std::vector<Belief>& priors, int trial) {
  ScenarioTrace tr;
  tr.variant = Variant::kCentralized;
  tr.trial = trial;
  CentralNode node(f, joint_prior(f, priors));
  const Layout l = f.joint_layout();
  const std::vector<char> physical(l.slots(), 1);
  const double dt = f.dt();
  record_belief(f, l, node.belief(), es.run.truth[0], trial, 0, 0.0, -1, physical,
                tr.rows);
  for (int k = 1; k <= es.steps(); ++k) {
    node.on_inputs(es.run.measured_inputs[k - 1]);
    for (const auto& m : es.measurements[k]) node.on_measurement(m);
    if (es.record_step[k]) {
      record_belief(f, l, node.belief(), es.run.truth[k], trial, k, k * dt, -1, physical,
                    tr.rows);
    }
  }
  return tr;
}

ScenarioTrace run_decentralized(const Family& f, const EventStream& es,
                                const std::vector<Belief>& priors, int trial, Variant v) {
  const auto& cfg = f.config();
  const int N = f.num_robots();
  const CommGraph graph(N, cfg.edges);
  const FusionSettings fs = fusion_settings(cfg, v);
  const std::int64_t lat = cfg.latency_steps;
  const double dt = f.dt();
  const bool rmis = f.shares_rmis();

  ScenarioTrace tr;
  tr.variant = v;
  tr.trial = trial;
  std::vector<RobotNode> nodes;
  for (int i = 0; i < N; ++i) nodes.emplace_back(f, i, priors[i], fs);

  auto record = [&](std::int64_t k) {
    for (auto& n : nodes) {
      std::vector<char> physical;
      for (int r : n.layout().robots) physical.push_back(!n.intermediate(r));
      record_belief(f, n.layout(), n.belief(), es.run.truth[k], trial, k, k * dt, n.id(),
                    physical, tr.rows);
    }
  };
  auto count_rmi = [&](const Message& m) {
    ++tr.stats.rmi_msgs;
    tr.stats.rmi_bytes += m.bytes;
    tr.stats.raw_input_bytes +=
        raw_input_bytes(kind_of(*m.rmi), span_of(*m.rmi).steps(), input_dim(cfg.family));
  };
  auto count_state = [&](const Message& m) {
    ++tr.stats.state_msgs;
    tr.stats.state_bytes += m.bytes;
  };

  record(0);
  EventQueue q;
  for (std::int64_t k = 1; k <= es.steps(); ++k) {
    for (int i = 0; i < N; ++i) q.push({k, Phase::kInput, i, 0, {}});
    for (const auto& m : es.measurements[k]) {
      if (rmis && m.target >= 0) q.push({k, Phase::kRmiRequest, m.target, 0, m});
      q.push({k, Phase::kMeasurement, m.robot, 0, m});
    }
    if (es.share_step[k]) {
      for (int i = 0; i < N; ++i) {
        if (rmis) q.push({k, Phase::kRmiFlush, i, 0, {}});
        q.push({k, Phase::kShareSend, i, 0, {}});
      }
    }
    if (es.record_step[k]) q.push({k, Phase::kRecord, 0, 0, {}});

    while (!q.empty() && q.top().step <= k) {
      Event e = q.pop();
      switch (e.phase) {
        case Phase::kInput:
          nodes[e.robot].on_input(es.run.measured_inputs[k - 1][e.robot]);
          break;
        case Phase::kRmiRequest: {
          const auto& m = std::get<Measurement>(e.payload);
          Message msg = nodes[m.target].make_rmi(m.robot, k);
          msg.deliver_step = k + lat;
          count_rmi(msg);
          q.push({msg.deliver_step, Phase::kRmiDelivery, msg.receiver, 0, msg});
          break;
        }
        case Phase::kRmiDelivery:
        case Phase::kFlushDelivery:
          nodes[e.robot].on_rmi(std::get<Message>(e.payload));
          break;
        case Phase::kMeasurement:
          if (!nodes[e.robot].on_measurement(std::get<Measurement>(e.payload))) {
            ++tr.stats.skipped_measurements;
          }
          break;
        case Phase::kRmiFlush:
          for (int j : graph.neighbors(e.robot)) {
            Message msg = nodes[e.robot].make_rmi(j, k);
            msg.deliver_step = k + lat;
            count_rmi(msg);
            q.push({msg.deliver_step, Phase::kFlushDelivery, j, 0, msg});
          }
          break;
        case Phase::kShareSend:
          if (cfg.fusion.two_sided) {
            // Each edge fused once, both halves applied, at the lowest id's turn.
            for (int j : graph.neighbors(e.robot)) {
              if (j < e.robot) continue;
              auto& a = nodes[e.robot];
              auto& b = nodes[j];
              count_state(a.make_state_share(j, k));
              count_state(b.make_state_share(e.robot, k));
              if (a.any_intermediate() || b.any_intermediate()) {
                ++tr.stats.skipped_fusions;
                continue;
              }
              const auto pm = f.pseudo_model(a.layout(), b.layout());
              try {
                auto res = fuse_pseudo(a.belief(), b.belief(), pm, fs);
                a.set_belief(std::move(res.i));
                b.set_belief(std::move(res.j));
              } catch (const NumericalError&) {
                ++tr.stats.singular_fusions;
              }
            }
          } else {
            for (int j : graph.neighbors(e.robot)) {
              Message msg = nodes[e.robot].make_state_share(j, k);
              msg.deliver_step = k + lat;
              count_state(msg);
              q.push({msg.deliver_step, Phase::kShareDelivery, j, 0, msg});
            }
          }
          break;
        case Phase::kShareDelivery:
          switch (nodes[e.robot].on_state_share(std::get<Message>(e.payload))) {
            case RobotNode::Fusion::kNotPhysical: ++tr.stats.skipped_fusions; break;
            case RobotNode::Fusion::kSingular: ++tr.stats.singular_fusions; break;
            case RobotNode::Fusion::kApplied: break;
          }
          break;
        case Phase::kRecord:
          record(k);
          break;
      }
    }
  }
  return tr;
}

}  // namespace

std::vector<ScenarioTrace> run_trial(const ScenarioConfig& c, int trial,
                                     const std::vector<Variant>& variants) {
  validate(c);
  const auto f = make_family(c);
  const std::uint64_t seed = trial_seed(c.seed, trial);
  const EventStream es = generate_stream(*f, seed);
  const auto priors = decentralized_priors(*f, es, seed);
  std::vector<ScenarioTrace> out;
  for (Variant v : variants) {
    out.push_back(v == Variant::kCentralized ? run_centralized(*f, es, priors, trial)
                                             : run_decentralized(*f, es, priors, trial, v));
  }
  return out;
}

ScenarioTrace run_scenario(const ScenarioConfig& c, std::uint64_t seed, Variant v) {
  ScenarioConfig s = c;
  s.seed = seed;
  return run_trial(s, 0, {v}).front();
}

void write_trace_header(std::ostream& os) {
  os << "trial,step,time,robot,substate,dof,error_norm,pos_error,nees,"
        "nees_normalized,cov_trace\n";
}

void write_trace_rows(std::ostream& os, const ScenarioTrace& t) {
  const auto flags = os.flags();
  const auto prec = os.precision();
  os << std::setprecision(10);
  for (const auto& r : t.rows) {
    os << r.trial << ',' << r.step << ',' << r.time << ',' << r.robot << ','
       << r.substate << ',' << r.dof << ',' << r.error_norm << ',';
    if (std::isnan(r.pos_error)) {
      os << "";
    } else {
      os << r.pos_error;
    }
    os << ',' << r.nees << ',' << r.nees / r.dof << ',' << r.cov_trace << '\n';
  }
  os.flags(flags);
  os.precision(prec);
}

}  // namespace decest::sim
