#pragma once

// What the robots are: truth kinematics, sensor functions and the estimator
// models for one robot's composite state. A robot's state is a list of slots,
// one per robot it tracks (itself and its neighbors), each slot holding that
// robot's physical substate as seen by the owner.
//
//   toy     slot = position (R^1); every robot tracks every robot
//   ground  slot = SE(2) world pose
//   quad    slot = (SE_2(3) pose, R^6 IMU bias); own pose is world-frame,
//           neighbor poses are relative to the owner

#include <Eigen/Core>
#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "decest/estimator.hpp"
#include "decest/preintegration.hpp"
#include "decest/sim/config.hpp"

namespace decest::sim {

struct Layout {
  int owner = 0;
  std::vector<int> robots;  // slot order

  int slots() const { return static_cast<int>(robots.size()); }
  int slot_of(int robot) const;  // -1 when absent
};

struct Measurement {
  int robot = 0;     // measuring robot
  int sensor = 0;    // index into the robot's sensor list
  SensorKind kind = SensorKind::kOwnPosition;
  int target = -1;   // robot id for ranges and robot-relative positions
  int landmark = -1;
  int tag_self = 0;
  int tag_target = 0;
  Eigen::VectorXd y;
};

// Ground truth of one trial: truth[k][robot] for k = 0..K and the inputs
// consumed between k and k+1.
struct TruthRun {
  std::vector<std::vector<Element>> truth;
  std::vector<std::vector<Eigen::VectorXd>> true_inputs;
  std::vector<std::vector<Eigen::VectorXd>> measured_inputs;
};

class Family {
 public:
  explicit Family(ScenarioConfig cfg);
  virtual ~Family() = default;

  const ScenarioConfig& config() const { return cfg_; }
  int num_robots() const { return cfg_.num_robots(); }
  double dt() const { return cfg_.dt(); }

  // ---- layout
  virtual Layout layout(int robot) const;  // self first, then neighbors
  Layout joint_layout() const;             // every robot once, in id order
  virtual int members_per_slot() const { return 1; }
  virtual std::vector<GroupDescriptor> slot_members() const = 0;
  virtual std::vector<std::string> member_names() const = 0;
  GroupDescriptor state_descriptor(const Layout& l) const;
  int member_index(const Layout& l, int robot, int k = 0) const;
  int tangent_offset(const Layout& l, int robot, int k = 0) const;
  int slot_dof() const;
  virtual bool shares_rmis() const = 0;

  // ---- truth and sensors
  virtual TruthRun simulate(int steps, std::uint64_t trial_seed) const = 0;
  // Noise-free sensor output.
  virtual Eigen::VectorXd measure(const Measurement& m,
                                  const std::vector<Element>& truth) const = 0;
  Eigen::VectorXd noise_std(const Measurement& m) const;
  // measure() plus Gaussian noise (none when noise_free).
  Eigen::VectorXd generate(const Measurement& m, const std::vector<Element>& truth,
                           std::mt19937_64& rng) const;
  // One entry per (sensor, target or landmark) of a robot, tags at 0.
  std::vector<Measurement> channels(int robot) const;
  int tag_pairs(int robot, int target) const;

  // The owner's view of `robot`'s physical substate (a slot element).
  virtual Element slot_truth(int owner, int robot,
                             const std::vector<Element>& truth) const;
  Element state_truth(const Layout& l, const std::vector<Element>& truth) const;
  // Same for the centralized joint state.
  virtual Element joint_slot_truth(int robot,
                                   const std::vector<Element>& truth) const;
  Element joint_truth(const std::vector<Element>& truth) const;

  // Prior of one slot: truth (+) draw, unless noise_free.
  virtual Eigen::VectorXd slot_prior_std(int owner, int robot) const;
  virtual Element slot_prior_mean(const Element& slot_truth,
                                  const Eigen::VectorXd& draw) const;
  Belief initial_belief(const Layout& l, const std::vector<Element>& slots_truth,
                        std::mt19937_64& rng) const;

  // ---- decentralized estimator models (right perturbations)
  virtual ProcessModel own_process(const Layout& l) const = 0;
  virtual Rmi rmi_identity(std::int64_t step) const;
  virtual Rmi rmi_increment(const Rmi& r, const Eigen::VectorXd& u) const;
  virtual Belief rmi_apply(const Belief& b, const Layout& l, int sender,
                           const Rmi& r, std::int64_t expected_start) const;
  virtual MeasurementModel measurement_model(const Layout& l,
                                             const Measurement& m) const = 0;
  virtual PseudoModel pseudo_model(const Layout& li, const Layout& lj) const = 0;

  // ---- centralized baseline over every robot's physical substate
  virtual ProcessModel joint_process() const = 0;  // input: stacked inputs
  virtual MeasurementModel joint_measurement(const Measurement& m) const;

  // ---- observability: one-step transition of a full (physical) state given
  // every robot's true input and the true state.
  virtual Eigen::MatrixXd full_transition(
      const Layout& l, const Element& x,
      const std::vector<Eigen::VectorXd>& true_inputs,
      const std::vector<Element>& truth) const = 0;

  // ---- metrics: position error of slot member 0 (world or owner frame).
  virtual double position_error(const Element& truth_slot0,
                                const Element& est_slot0) const = 0;

 protected:
  Eigen::MatrixXd input_cov() const;
  ScenarioConfig cfg_;
};

std::unique_ptr<Family> make_family(const ScenarioConfig& cfg);

// Purposes of the random streams of a trial.
enum StreamPurpose : int {
  kStreamTrajectory = 1,
  kStreamInputNoise = 2,
  kStreamSensor = 3,
  kStreamPrior = 4,
  kStreamBias = 5,
};

// Independent stream for (trial, robot, purpose, index).
std::mt19937_64 make_stream(std::uint64_t trial_seed, int robot, int purpose,
                            int index = 0);
std::uint64_t trial_seed(std::uint64_t base_seed, int trial);

}  // namespace decest::sim
