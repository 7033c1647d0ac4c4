#pragma once

// Scenario configuration: a versioned JSON document describing the robots,
// their sensors, the communication graph, rates, noise and fusion settings.

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace decest::sim {

enum class FamilyKind { kToy, kGround, kQuad };

enum class SensorKind {
  kOwnPosition,
  kRelativePosition,  // to a landmark or to another robot
  kRange,             // between tags, with lever arms
  kHeight,
  kMagnetometer,
};

const char* to_string(FamilyKind f);
const char* to_string(SensorKind k);

struct SensorSpec {
  SensorKind kind = SensorKind::kOwnPosition;
  double rate = 10.0;               // Hz
  std::vector<double> noise_std;    // per axis
  std::vector<int> targets;         // robot ids
  std::vector<int> landmarks;       // landmark ids
};

struct RobotConfig {
  int id = 0;
  std::vector<double> initial_std;  // own physical substate, per tangent axis
  std::vector<SensorSpec> sensors;
  std::vector<Eigen::Vector3d> tags;  // range lever arms in the body frame
};

struct Rates {
  double input = 100.0;
  double share = 10.0;
  double record = 10.0;
};

struct ProcessNoise {
  std::vector<double> input_std;         // per input axis, per sample
  std::vector<double> bias_walk_std;     // per sqrt(s), quadcopter only
  std::vector<double> initial_bias_std;  // true bias spread, quadcopter only
  double random_walk_std = 0.0;          // toy: per sqrt(s)
};

struct FusionConfig {
  double psi = 0.0;        // pseudomeasurement covariance, psi * identity
  double ci_weight = 0.99;
  bool perform_ci = true;
  int max_iters = 1;
  bool two_sided = false;
};

struct TrajectoryConfig {
  double speed = 1.0;       // ground: mean forward speed
  double turn_rate = 0.3;   // ground: yaw-rate amplitude
  double amplitude = 1.5;   // quad: horizontal excursion
  double height = 1.5;      // quad: mean altitude
  double extent = 5.0;      // spread of start positions
};

struct WorldConfig {
  std::vector<Eigen::Vector3d> landmarks;
  Eigen::Vector3d gravity{0.0, 0.0, -9.80665};
  Eigen::Vector3d magnetic_field{1.0, 0.0, 0.0};
  // Prior spread on a neighbor's relative pose and bias (quadcopter).
  std::vector<double> relative_initial_std;
};

struct ScenarioConfig {
  int version = 1;
  std::string name;
  FamilyKind family = FamilyKind::kToy;
  std::uint64_t seed = 1;
  int trials = 1;
  double duration = 30.0;
  Rates rates;
  int latency_steps = 0;
  bool noise_free = false;
  ProcessNoise process;
  FusionConfig fusion;
  std::vector<std::pair<int, int>> edges;
  WorldConfig world;
  TrajectoryConfig trajectory;
  std::vector<RobotConfig> robots;

  int num_robots() const { return static_cast<int>(robots.size()); }
  double dt() const { return 1.0 / rates.input; }
  int steps() const;
  std::vector<int> neighbors(int robot) const;
  bool adjacent(int a, int b) const;
};

// Per-family sizes used by validation and the estimators.
int slot_dof(FamilyKind f);
int input_dim(FamilyKind f);
int noise_dim(SensorKind k, FamilyKind f);

// Throws ConfigError listing every offending field path.
void validate(const ScenarioConfig& c);

ScenarioConfig from_json(const nlohmann::json& j);  // parses and validates
nlohmann::json to_json(const ScenarioConfig& c);

ScenarioConfig load_config(const std::string& path);

// FNV-1a over the canonical (key-sorted, compact) JSON form.
std::string config_hash(const ScenarioConfig& c);
std::string json_hash(const nlohmann::json& j);

}  // namespace decest::sim
