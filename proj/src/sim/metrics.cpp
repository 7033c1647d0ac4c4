#include "decest/sim/metrics.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "decest/errors.hpp"
#include "decest/estimator.hpp"

namespace decest::sim {

using nlohmann::json;

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

std::pair<double, double> nees_envelope(int dof, int trials, double prob) {
  if (dof < 1 || trials < 1) throw std::invalid_argument("nees_envelope: need dof, trials >= 1");
  const double md = static_cast<double>(dof) * trials;
  const double a = (1.0 - prob) / 2.0;
  return {chi_square_quantile(a, md) / trials, chi_square_quantile(1.0 - a, md) / trials};
}

const Series& MetricSeries::at(int robot, const std::string& substate) const {
  auto it = series.find({robot, substate});
  if (it == series.end()) {
    throw std::out_of_range("no series for robot " + std::to_string(robot) + " " + substate);
  }
  return it->second;
}

const Series& MetricSeries::own_pose(int robot, const std::string& member) const {
  return at(robot, member + "@" + std::to_string(robot));
}

MetricSeries aggregate(const std::vector<ScenarioTrace>& traces) {
  MetricSeries out;
  out.trials = static_cast<int>(traces.size());
  std::map<std::int64_t, std::size_t> index;
  std::map<std::int64_t, double> times;
  for (const auto& t : traces) {
    for (const auto& r : t.rows) times.emplace(r.step, r.time);
  }
  for (const auto& [s, tm] : times) {
    index[s] = out.steps.size();
    out.steps.push_back(s);
    out.time.push_back(tm);
  }
  const std::size_t n = out.steps.size();
  struct Acc {
    int dof = 0;
    std::vector<int> count, pos_count;
    std::vector<double> err2, pos2, nees;
  };
  std::map<std::pair<int, std::string>, Acc> acc;
  for (const auto& t : traces) {
    for (const auto& r : t.rows) {
      auto& a = acc[{r.robot, r.substate}];
      if (a.count.empty()) {
        a.dof = r.dof;
        a.count.assign(n, 0);
        a.pos_count.assign(n, 0);
        a.err2.assign(n, 0.0);
        a.pos2.assign(n, 0.0);
        a.nees.assign(n, 0.0);
      }
      const std::size_t i = index[r.step];
      ++a.count[i];
      a.err2[i] += r.error_norm * r.error_norm;
      a.nees[i] += r.nees;
      if (!std::isnan(r.pos_error)) {
        ++a.pos_count[i];
        a.pos2[i] += r.pos_error * r.pos_error;
      }
    }
  }
  for (auto& [key, a] : acc) {
    Series s;
    s.dof = a.dof;
    s.count = a.count;
    s.rmse.assign(n, kNaN);
    s.pos_rmse.assign(n, kNaN);
    s.nees.assign(n, kNaN);
    for (std::size_t i = 0; i < n; ++i) {
      if (a.count[i] > 0) {
        s.rmse[i] = std::sqrt(a.err2[i] / a.count[i]);
        s.nees[i] = a.nees[i] / a.count[i];
      }
      if (a.pos_count[i] > 0) s.pos_rmse[i] = std::sqrt(a.pos2[i] / a.pos_count[i]);
    }
    out.series.emplace(key, std::move(s));
  }
  return out;
}

MonteCarloResult monte_carlo(const ScenarioConfig& c, int trials,
                             const std::vector<Variant>& variants, int threads) {
  if (trials < 1) throw std::invalid_argument("monte_carlo: trials must be >= 1");
  validate(c);
  std::vector<std::vector<ScenarioTrace>> per_trial(trials);
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (int t = next++; t < trials; t = next++) {
      try {
        per_trial[t] = run_trial(c, t, variants);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  int n = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  n = std::clamp(n, 1, trials);
  std::vector<std::thread> pool;
  for (int i = 0; i < n; ++i) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);

  MonteCarloResult r;
  r.config = c;
  r.trials = trials;
  r.variants = variants;
  for (std::size_t v = 0; v < variants.size(); ++v) {
    auto& list = r.traces[variants[v]];
    for (auto& tr : per_trial) list.push_back(std::move(tr[v]));
    r.metrics[variants[v]] = aggregate(list);
  }
  return r;
}

namespace {

double finite_mean(const std::vector<double>& v) {
  double s = 0.0;
  int n = 0;
  for (double x : v) {
    if (std::isfinite(x)) {
      s += x;
      ++n;
    }
  }
  return n ? s / n : kNaN;
}

double last_finite(const std::vector<double>& v) {
  for (auto it = v.rbegin(); it != v.rend(); ++it) {
    if (std::isfinite(*it)) return *it;
  }
  return kNaN;
}

json number(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

}  // namespace

json summary_json(const MonteCarloResult& r) {
  json out;
  out["name"] = r.config.name;
  out["family"] = to_string(r.config.family);
  out["config_hash"] = config_hash(r.config);
  out["trials"] = r.trials;
  out["version"] = kVersion;
  const auto f = make_family(r.config);
  const std::string pose = f->member_names().front();
  json variants = json::object();
  std::map<Variant, std::vector<double>> avg_rmse;
  for (Variant v : r.variants) {
    const auto& m = r.metrics.at(v);
    json robots = json::array();
    for (int i = 0; i < r.config.num_robots(); ++i) {
      const Series& s = m.own_pose(i, pose);
      json row;
      row["robot"] = i;
      row["rmse_time_avg"] = number(finite_mean(s.pos_rmse));
      row["rmse_final"] = number(last_finite(s.pos_rmse));
      avg_rmse[v].push_back(finite_mean(s.pos_rmse));
      if (v != Variant::kCentralized) {
        const Series& all = m.at(i, "all");
        row["nees_avg"] = number(finite_mean(all.nees));
        row["nees_normalized_avg"] = number(finite_mean(all.nees) / all.dof);
        row["dof"] = all.dof;
      }
      robots.push_back(row);
    }
    json vj;
    vj["robots"] = robots;
    if (v == Variant::kCentralized) {
      const Series& all = m.at(-1, "all");
      vj["joint_nees_avg"] = number(finite_mean(all.nees));
      vj["joint_dof"] = all.dof;
    }
    MessageStats total;
    for (const auto& tr : r.traces.at(v)) {
      total.state_msgs += tr.stats.state_msgs;
      total.state_bytes += tr.stats.state_bytes;
      total.rmi_msgs += tr.stats.rmi_msgs;
      total.rmi_bytes += tr.stats.rmi_bytes;
      total.raw_input_bytes += tr.stats.raw_input_bytes;
      total.skipped_measurements += tr.stats.skipped_measurements;
      total.skipped_fusions += tr.stats.skipped_fusions;
      total.singular_fusions += tr.stats.singular_fusions;
    }
    const double nt = r.trials;
    vj["messages_per_trial"] = {
        {"state_msgs", total.state_msgs / nt},
        {"state_bytes", total.state_bytes / nt},
        {"rmi_msgs", total.rmi_msgs / nt},
        {"rmi_bytes", total.rmi_bytes / nt},
        {"raw_input_bytes", total.raw_input_bytes / nt},
    };
    vj["skipped_measurements"] = total.skipped_measurements;
    vj["skipped_fusions"] = total.skipped_fusions;
    vj["singular_fusions"] = total.singular_fusions;
    variants[to_string(v)] = vj;
  }
  out["variants"] = variants;
  if (avg_rmse.count(Variant::kCentralized)) {
    json ratios = json::object();
    for (Variant v : r.variants) {
      if (v == Variant::kCentralized) continue;
      json list = json::array();
      for (std::size_t i = 0; i < avg_rmse[v].size(); ++i) {
        list.push_back(number(avg_rmse[v][i] / avg_rmse[Variant::kCentralized][i]));
      }
      ratios[to_string(v)] = list;
    }
    out["rmse_ratio_to_centralized"] = ratios;
  }
  return out;
}

json to_json(const RunManifest& m) {
  json v = json::array();
  for (Variant x : m.variants) v.push_back(to_string(x));
  return {{"manifest_version", 1},
          {"config_hash", m.config_hash},
          {"seed", m.seed},
          {"trial_seeds", m.trial_seeds},
          {"trials", m.trials},
          {"variants", v},
          {"version", m.version},
          {"outputs", m.outputs},
          {"config", m.config}};
}

bool is_manifest(const json& j) { return j.is_object() && j.contains("manifest_version"); }

RunManifest manifest_from_json(const json& j) {
  std::vector<std::string> bad;
  for (const char* k : {"config", "trials", "variants", "config_hash"}) {
    if (!j.contains(k)) bad.push_back(std::string(k) + ": missing");
  }
  if (!bad.empty()) throw ConfigError(bad);
  RunManifest m;
  m.config = j.at("config");
  m.config_hash = j.at("config_hash").get<std::string>();
  m.trials = j.at("trials").get<int>();
  for (const auto& v : j.at("variants")) m.variants.push_back(variant_from_string(v));
  m.seed = j.value("seed", std::uint64_t{0});
  m.trial_seeds = j.value("trial_seeds", std::vector<std::uint64_t>{});
  m.version = j.value("version", std::string(kVersion));
  m.outputs = j.value("outputs", std::vector<std::string>{});
  const auto cfg = from_json(m.config);
  if (config_hash(cfg) != m.config_hash) {
    throw ConfigError({"config_hash: does not match the embedded config"});
  }
  return m;
}

RunManifest write_outputs(const MonteCarloResult& r, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  RunManifest m;
  m.config_hash = config_hash(r.config);
  m.seed = r.config.seed;
  for (int t = 0; t < r.trials; ++t) m.trial_seeds.push_back(trial_seed(r.config.seed, t));
  m.trials = r.trials;
  m.variants = r.variants;
  m.config = to_json(r.config);
  for (Variant v : r.variants) {
    const std::string name = std::string("trace_") + to_string(v) + ".csv";
    std::ofstream os(fs::path(dir) / name);
    write_trace_header(os);
    for (const auto& tr : r.traces.at(v)) write_trace_rows(os, tr);
    m.outputs.push_back(name);
  }
  {
    std::ofstream os(fs::path(dir) / "summary.json");
    os << summary_json(r).dump(2) << '\n';
    m.outputs.push_back("summary.json");
  }
  m.outputs.push_back("manifest.json");
  std::ofstream os(fs::path(dir) / "manifest.json");
  os << to_json(m).dump(2) << '\n';
  return m;
}

}  // namespace decest::sim
