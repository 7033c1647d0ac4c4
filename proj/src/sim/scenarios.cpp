#include "decest/sim/scenarios.hpp"

#include <random>
#include <stdexcept>
#include <string>

namespace decest::sim {

namespace {

SensorSpec sensor(SensorKind kind, double rate, std::vector<double> std,
                  std::vector<int> targets = {}, std::vector<int> landmarks = {}) {
  SensorSpec s;
  s.kind = kind;
  s.rate = rate;
  s.noise_std = std::move(std);
  s.targets = std::move(targets);
  s.landmarks = std::move(landmarks);
  return s;
}

}  // namespace

ScenarioConfig scenario_toy(int n) {
  if (n < 2) throw std::invalid_argument("scenario_toy: need at least 2 robots");
  ScenarioConfig c;
  c.name = "toy" + std::to_string(n);
  c.family = FamilyKind::kToy;
  c.seed = 7;
  c.trials = 100;
  c.duration = 30.0;
  c.rates = {10.0, 10.0, 10.0};
  c.process.random_walk_std = 0.1;
  c.fusion.psi = 10.0;
  c.fusion.max_iters = 1;
  c.trajectory.extent = 5.0;
  for (int i = 0; i + 1 < n; ++i) c.edges.push_back({i, i + 1});
  for (int i = 0; i < n; ++i) {
    RobotConfig r;
    r.id = i;
    r.initial_std = {1.0};
    if (i == 0) {
      r.sensors.push_back(sensor(SensorKind::kOwnPosition, 10.0, {0.5}));
    } else {
      r.sensors.push_back(sensor(SensorKind::kRelativePosition, 10.0, {0.5}, {i - 1}));
    }
    c.robots.push_back(r);
  }
  return c;
}

ScenarioConfig scenario_ground() {
  ScenarioConfig c;
  c.name = "ground";
  c.family = FamilyKind::kGround;
  c.seed = 11;
  c.trials = 1;
  c.duration = 60.0;
  c.rates = {100.0, 10.0, 10.0};
  c.process.input_std = {0.02, 0.05, 0.01};
  c.fusion.psi = 0.0;
  c.fusion.max_iters = 1;
  c.trajectory.speed = 0.5;
  c.trajectory.turn_rate = 0.3;
  c.trajectory.extent = 4.0;
  c.edges = {{0, 1}, {0, 2}, {1, 2}, {2, 3}};
  // Landmarks drawn once with a fixed generator and stored in the config.
  std::mt19937_64 rng(20231);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  for (int k = 0; k < 6; ++k) c.world.landmarks.emplace_back(u(rng), u(rng), 0.0);
  const std::vector<int> all{0, 1, 2, 3, 4, 5};
  for (int i = 0; i < 4; ++i) {
    RobotConfig r;
    r.id = i;
    r.initial_std = {0.1, 0.1, 0.1};
    std::vector<int> nb;
    for (const auto& [a, b] : c.edges) {
      if (a == i) nb.push_back(b);
      if (b == i) nb.push_back(a);
    }
    r.sensors.push_back(sensor(SensorKind::kRange, 10.0, {0.1}, nb));
    if (i == 0 || i == 3) {
      r.sensors.push_back(sensor(SensorKind::kRelativePosition, 10.0, {0.3, 0.3}, {}, all));
    }
    c.robots.push_back(r);
  }
  return c;
}

ScenarioConfig scenario_quad() {
  ScenarioConfig c;
  c.name = "quad";
  c.family = FamilyKind::kQuad;
  c.seed = 13;
  c.trials = 1;
  c.duration = 60.0;
  c.rates = {200.0, 10.0, 10.0};
  c.process.input_std = {0.01, 0.01, 0.01, 0.05, 0.05, 0.05};
  c.process.bias_walk_std = {1e-4, 1e-4, 1e-4, 1e-3, 1e-3, 1e-3};
  c.process.initial_bias_std = {0.005, 0.005, 0.005, 0.05, 0.05, 0.05};
  c.fusion.psi = 0.0;
  c.fusion.max_iters = 1;
  c.trajectory.amplitude = 1.5;
  c.trajectory.height = 1.5;
  c.trajectory.extent = 3.0;
  c.edges = {{0, 1}, {0, 2}, {1, 2}};
  c.world.relative_initial_std = {0.05, 0.05, 0.1, 0.15, 0.15, 0.15, 0.4, 0.4, 0.4,
                                  0.005, 0.005, 0.005, 0.05, 0.05, 0.05};
  const std::vector<std::vector<Eigen::Vector3d>> tags = {
      {{0.2, 0.0, 0.0}, {-0.1, 0.2, 0.05}},
      {{0.0, 0.2, 0.0}, {-0.15, -0.1, 0.05}},
      {{0.15, -0.15, 0.0}, {-0.1, 0.1, -0.05}}};
  for (int i = 0; i < 3; ++i) {
    RobotConfig r;
    r.id = i;
    r.initial_std = {0.02, 0.02, 0.05, 0.1, 0.1, 0.1, 0.3, 0.3, 0.3,
                     0.005, 0.005, 0.005, 0.05, 0.05, 0.05};
    r.tags = tags[i];
    std::vector<int> others;
    for (int j = 0; j < 3; ++j) {
      if (j != i) others.push_back(j);
    }
    r.sensors.push_back(sensor(SensorKind::kHeight, 30.0, {0.05}));
    r.sensors.push_back(sensor(SensorKind::kRange, 45.0, {0.1}, others));
    if (i < 2) {
      r.sensors.push_back(sensor(SensorKind::kMagnetometer, 30.0, {0.05}));
      r.sensors.push_back(sensor(SensorKind::kOwnPosition, 10.0, {0.3}));
    }
    c.robots.push_back(r);
  }
  return c;
}

}  // namespace decest::sim
