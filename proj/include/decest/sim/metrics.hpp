#pragma once

// Monte-Carlo aggregation: RMSE and NEES per recorded step, chi-square
// envelopes, summaries, manifests and file output.

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "decest/sim/world.hpp"
#include "json.hpp"

namespace decest::sim {

inline constexpr const char* kVersion = "decest 0.1.0";

// Two-sided envelope for the trial-averaged NEES of a dof-dimensional error.
std::pair<double, double> nees_envelope(int dof, int trials, double prob = 0.95);

struct Series {
  int dof = 0;
  std::vector<int> count;          // trials contributing at each step
  std::vector<double> rmse;        // of error_norm
  std::vector<double> pos_rmse;    // NaN when no position error
  std::vector<double> nees;        // mean over trials
};

struct MetricSeries {
  std::vector<std::int64_t> steps;
  std::vector<double> time;
  int trials = 0;
  // keyed by (robot, substate)
  std::map<std::pair<int, std::string>, Series> series;

  const Series& at(int robot, const std::string& substate) const;
  // Own-slot position series of a robot (works for the centralized variant).
  const Series& own_pose(int robot, const std::string& member) const;
};

MetricSeries aggregate(const std::vector<ScenarioTrace>& traces);

struct MonteCarloResult {
  ScenarioConfig config;
  int trials = 0;
  std::vector<Variant> variants;
  std::map<Variant, std::vector<ScenarioTrace>> traces;
  std::map<Variant, MetricSeries> metrics;
};

// Trials are independent and run on `threads` workers (0 = hardware).
MonteCarloResult monte_carlo(const ScenarioConfig& c, int trials,
                             const std::vector<Variant>& variants, int threads = 0);

// Time-averaged and final own-position RMSE, average normalized NEES,
// message byte counts, per variant.
nlohmann::json summary_json(const MonteCarloResult& r);

struct RunManifest {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> trial_seeds;
  int trials = 0;
  std::vector<Variant> variants;
  std::string version = kVersion;
  std::vector<std::string> outputs;
  nlohmann::json config;
};

nlohmann::json to_json(const RunManifest& m);
RunManifest manifest_from_json(const nlohmann::json& j);
bool is_manifest(const nlohmann::json& j);

// Writes trace_<variant>.csv, summary.json and manifest.json into dir.
RunManifest write_outputs(const MonteCarloResult& r, const std::string& dir);

}  // namespace decest::sim
