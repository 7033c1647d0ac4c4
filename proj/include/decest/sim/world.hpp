#pragma once

// Deterministic event-driven multi-robot world. One trial = one truth run and
// one measurement stream, consumed by any number of estimator variants.
//
// Within a step the event order is fixed by phase, then robot id, then
// insertion order:
//   input -> rmi request -> rmi delivery -> measurement -> rmi flush ->
//   flush delivery -> state share send -> state share delivery -> record

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <queue>
#include <string>
#include <variant>
#include <vector>

#include "decest/sim/family.hpp"

namespace decest::sim {

enum class Variant { kProposed, kNaive, kCentralized };
const char* to_string(Variant v);
Variant variant_from_string(const std::string& s);

// True when a sensor at `rate` fires at step k >= 1 of an input clock.
bool fires(std::int64_t k, double rate, double input_rate);

struct EventStream {
  TruthRun run;
  // measurements[k]: sensor outputs at time index k (empty at k = 0).
  std::vector<std::vector<Measurement>> measurements;
  std::vector<char> share_step;
  std::vector<char> record_step;
  int steps() const { return static_cast<int>(run.true_inputs.size()); }
};

EventStream generate_stream(const Family& f, std::uint64_t trial_seed);

struct Message {
  enum class Kind { kStateShare, kRmiShare };
  Kind kind = Kind::kStateShare;
  int sender = 0;
  int receiver = 0;
  std::int64_t send_step = 0;
  std::int64_t deliver_step = 0;
  std::optional<Belief> belief;
  std::optional<Rmi> rmi;
  std::size_t bytes = 0;
};

// Wire size of a state share: header plus mean parameters and the upper
// triangle of the covariance as float64.
std::size_t state_share_bytes(const Belief& b);

enum class Phase : int {
  kInput = 0,
  kRmiRequest,
  kRmiDelivery,
  kMeasurement,
  kRmiFlush,
  kFlushDelivery,
  kShareSend,
  kShareDelivery,
  kRecord,
};

struct Event {
  std::int64_t step = 0;
  Phase phase = Phase::kInput;
  int robot = 0;
  std::uint64_t seq = 0;
  std::variant<std::monostate, Measurement, Message> payload;
};

class EventQueue {
 public:
  void push(Event e);
  Event pop();
  bool empty() const { return heap_.empty(); }
  std::size_t size() const { return heap_.size(); }
  const Event& top() const { return heap_.top(); }

 private:
  struct Later {
    bool operator()(const Event& a, const Event& b) const;
  };
  std::priority_queue<Event, std::vector<Event>, Later> heap_;
  std::uint64_t next_seq_ = 0;
};

class CommGraph {
 public:
  CommGraph(int n, std::vector<std::pair<int, int>> edges);
  int size() const { return n_; }
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }
  const std::vector<int>& neighbors(int i) const { return adj_.at(i); }
  bool adjacent(int a, int b) const;

 private:
  int n_;
  std::vector<std::pair<int, int>> edges_;
  std::vector<std::vector<int>> adj_;
};

FusionSettings fusion_settings(const ScenarioConfig& c, Variant v);

// One robot's estimator. It sees only its own belief and delivered payloads.
class RobotNode {
 public:
  RobotNode(const Family& f, int id, Belief prior, FusionSettings fs);

  int id() const { return id_; }
  const Layout& layout() const { return layout_; }
  const Belief& belief() const { return belief_; }
  bool intermediate(int robot) const;
  bool any_intermediate() const;
  std::int64_t inputs_seen() const { return steps_; }

  void on_input(const Eigen::VectorXd& u);
  Message make_rmi(int receiver, std::int64_t now);
  void on_rmi(const Message& msg);
  // False when the measurement touches a slot still awaiting an increment.
  bool on_measurement(const Measurement& m);
  Message make_state_share(int receiver, std::int64_t now) const;
  enum class Fusion { kApplied, kNotPhysical, kSingular };
  // A singular innovation (a collapsed covariance, typical of the naive
  // variant) leaves the belief untouched.
  Fusion on_state_share(const Message& msg);
  void set_belief(Belief b) { belief_ = std::move(b); }

 private:
  const Family& f_;
  int id_;
  Layout layout_;
  Belief belief_;
  FusionSettings fs_;
  ProcessModel process_;
  std::int64_t steps_ = 0;
  std::vector<int> neighbors_;
  std::vector<Rmi> outgoing_;           // per neighbor, own inputs since last send
  std::vector<std::int64_t> applied_;   // per neighbor, inputs applied so far
};

// Reference filter over every robot's physical substate.
class CentralNode {
 public:
  CentralNode(const Family& f, Belief prior);
  const Belief& belief() const { return belief_; }
  void on_inputs(const std::vector<Eigen::VectorXd>& u);
  void on_measurement(const Measurement& m);

 private:
  const Family& f_;
  Belief belief_;
  ProcessModel process_;
};

struct TraceRow {
  int trial = 0;
  std::int64_t step = 0;
  double time = 0.0;
  int robot = 0;         // estimating robot, -1 for the joint state
  int slot_robot = 0;    // whose substate, -1 for "all"
  std::string substate;  // "<member>@<robot>" or "all"
  int dof = 0;
  double error_norm = 0.0;
  double pos_error = 0.0;  // NaN where not a pose or position
  double nees = 0.0;
  double cov_trace = 0.0;
  Eigen::VectorXd error;  // truth (-) estimate, in memory only
  Eigen::VectorXd sigma;  // marginal standard deviations
};

struct MessageStats {
  std::size_t state_msgs = 0, state_bytes = 0;
  std::size_t rmi_msgs = 0, rmi_bytes = 0;
  std::size_t raw_input_bytes = 0;  // same inputs shipped one by one
  std::size_t skipped_measurements = 0;
  std::size_t skipped_fusions = 0;   // shared slots not physical
  std::size_t singular_fusions = 0;
};

struct ScenarioTrace {
  Variant variant = Variant::kProposed;
  int trial = 0;
  std::vector<TraceRow> rows;
  MessageStats stats;
};

// Runs every requested variant on one trial's event stream.
std::vector<ScenarioTrace> run_trial(const ScenarioConfig& c, int trial,
                                     const std::vector<Variant>& variants);
// Single run with an explicit seed, trial 0.
ScenarioTrace run_scenario(const ScenarioConfig& c, std::uint64_t seed,
                           Variant v = Variant::kProposed);

void write_trace_header(std::ostream& os);
void write_trace_rows(std::ostream& os, const ScenarioTrace& t);

}  // namespace decest::sim
