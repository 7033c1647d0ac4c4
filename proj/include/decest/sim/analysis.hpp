#pragma once

// Scenario-level studies: observability of the decentralized system along a
// true trajectory, share-rate sweeps and RMI message sizes.

#include <cstdint>
#include <vector>

#include "decest/observability.hpp"
#include "decest/sim/metrics.hpp"
#include "json.hpp"

namespace decest::sim {

struct LinearizationOptions {
  int steps = 20;       // linearization points after the first
  int stride = 10;      // input steps between points
  bool landmarks = true;
  bool pseudomeasurements = true;
  std::uint64_t trial_seed = 0;  // 0: first trial of the config seed
};

// Total state = every robot's local state in id order. F between points is
// the product of the one-step transitions, G stacks every sensor channel and
// tag pair, Phi holds one block per graph edge.
TrajectoryLinearization linearize_scenario(const ScenarioConfig& c,
                                           const LinearizationOptions& o = {});

nlohmann::json to_json(const ObservabilityReport& r, int sv_tail = 10);

struct ObservabilityStudy {
  ObservabilityReport report;
  std::vector<int> rank_by_steps;
};

ObservabilityStudy observability_study(const ScenarioConfig& c,
                                       const LinearizationOptions& o = {});

struct SharePoint {
  double rate = 0.0;
  std::vector<double> rmse;  // per robot, time-averaged own position
};

std::vector<SharePoint> sweep_share_rate(const ScenarioConfig& c,
                                         const std::vector<double>& rates,
                                         int trials, int threads = 0);

struct MessageSizeRow {
  std::int64_t steps = 0;
  std::size_t rmi_bytes = 0;
  std::size_t raw_input_bytes = 0;
};

// RMIs accumulated from robot 0's measured inputs over each interval length.
std::vector<MessageSizeRow> bench_message_size(const ScenarioConfig& c,
                                               const std::vector<std::int64_t>& lengths);

}  // namespace decest::sim
