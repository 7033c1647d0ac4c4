// decest: run scenarios, observability checks, share-rate sweeps and
// message-size benchmarks from JSON configs.
//
// exit codes: 0 ok, 1 runtime failure, 2 bad config, 64 usage

#include <CLI11.hpp>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "decest/errors.hpp"
#include "decest/sim/analysis.hpp"
#include "json.hpp"

using namespace decest;
using namespace decest::sim;
using nlohmann::json;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitUsage = 64;

json read_json(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError({path + ": cannot open"});
  try {
    return json::parse(is);
  } catch (const json::parse_error& e) {
    throw ConfigError({path + ": " + e.what()});
  }
}

struct RunArgs {
  std::string path;
  std::uint64_t seed = 0;
  int trials = 0;
  bool naive = false, centralized = false;
  std::string out = "out";
  int threads = 0;
};

int cmd_run(const RunArgs& a, bool seed_set, bool trials_set) {
  const json doc = read_json(a.path);
  ScenarioConfig cfg;
  int trials;
  std::vector<Variant> variants;
  if (is_manifest(doc)) {
    const RunManifest m = manifest_from_json(doc);
    cfg = from_json(m.config);
    trials = m.trials;
    variants = m.variants;
  } else {
    cfg = from_json(doc);
    trials = cfg.trials;
    variants = {Variant::kProposed};
  }
  if (seed_set) cfg.seed = a.seed;
  if (trials_set) trials = a.trials;
  auto add = [&](Variant v) {
    if (std::find(variants.begin(), variants.end(), v) == variants.end()) variants.push_back(v);
  };
  if (a.naive) add(Variant::kNaive);
  if (a.centralized) add(Variant::kCentralized);
  if (trials < 1) throw ConfigError({"trials: must be >= 1"});

  const auto r = monte_carlo(cfg, trials, variants, a.threads);
  const auto m = write_outputs(r, a.out);
  std::cout << summary_json(r).dump(2) << '\n';
  std::cerr << "wrote";
  for (const auto& o : m.outputs) std::cerr << ' ' << a.out << '/' << o;
  std::cerr << '\n';
  return 0;
}

int cmd_observability(const std::string& path, const LinearizationOptions& o) {
  const auto cfg = load_config(path);
  const auto s = observability_study(cfg, o);
  json j = to_json(s.report);
  j["steps"] = o.steps;
  j["stride"] = o.stride;
  j["rank_by_steps"] = s.rank_by_steps;
  std::cout << j.dump(2) << '\n';
  return 0;
}

int cmd_sweep(const std::string& path, const std::vector<double>& rates, int trials,
              int threads) {
  const auto cfg = load_config(path);
  const auto pts = sweep_share_rate(cfg, rates, trials > 0 ? trials : cfg.trials, threads);
  std::cout << "rate_hz";
  for (int i = 0; i < cfg.num_robots(); ++i) std::cout << "\trmse_robot" << i;
  std::cout << '\n' << std::setprecision(6);
  for (const auto& p : pts) {
    std::cout << p.rate;
    for (double e : p.rmse) std::cout << '\t' << e;
    std::cout << '\n';
  }
  return 0;
}

int cmd_bench(const std::string& path, const std::vector<std::int64_t>& lengths) {
  const auto cfg = load_config(path);
  std::cout << "steps\trmi_bytes\traw_input_bytes\n";
  for (const auto& r : bench_message_size(cfg, lengths)) {
    std::cout << r.steps << '\t' << r.rmi_bytes << '\t' << r.raw_input_bytes << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"decentralized multi-robot estimation simulator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  RunArgs ra;
  auto* run = app.add_subcommand("run", "Monte-Carlo run of a config or manifest");
  run->add_option("config", ra.path, "scenario config or run manifest")->required();
  auto* seed_opt = run->add_option("--seed", ra.seed, "base seed");
  auto* trials_opt = run->add_option("--trials", ra.trials, "number of trials");
  run->add_flag("--naive", ra.naive, "also run without covariance intersection");
  run->add_flag("--centralized", ra.centralized, "also run the centralized filter");
  run->add_option("--out", ra.out, "output directory")->capture_default_str();
  run->add_option("--threads", ra.threads, "worker threads (0 = all cores)");

  std::string obs_path;
  LinearizationOptions lo;
  bool no_landmarks = false, no_pseudo = false;
  auto* obs = app.add_subcommand("observability", "rank test along the true trajectory");
  obs->add_option("config", obs_path)->required();
  obs->add_option("--steps", lo.steps, "linearization points")->capture_default_str();
  obs->add_option("--stride", lo.stride, "input steps between points")->capture_default_str();
  obs->add_flag("--no-landmarks", no_landmarks, "drop landmark measurements");
  obs->add_flag("--no-pseudo", no_pseudo, "drop pseudomeasurement rows");

  std::string sweep_path;
  std::vector<double> rates;
  int sweep_trials = 0, sweep_threads = 0;
  auto* sweep = app.add_subcommand("sweep-share-rate", "own-position RMSE per share rate");
  sweep->add_option("config", sweep_path)->required();
  sweep->add_option("--rates", rates, "share rates in Hz")->required();
  sweep->add_option("--trials", sweep_trials, "trials per rate (default: config)");
  sweep->add_option("--threads", sweep_threads);

  std::string bench_path;
  std::vector<std::int64_t> lengths{1, 2, 5, 10, 20, 50, 100, 200, 500, 1000};
  auto* bench = app.add_subcommand("bench-message-size", "RMI vs raw input bytes");
  bench->add_option("config", bench_path)->required();
  bench->add_option("--lengths", lengths, "interval lengths in steps");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*run) return cmd_run(ra, seed_opt->count() > 0, trials_opt->count() > 0);
    if (*obs) {
      lo.landmarks = !no_landmarks;
      lo.pseudomeasurements = !no_pseudo;
      return cmd_observability(obs_path, lo);
    }
    if (*sweep) return cmd_sweep(sweep_path, rates, sweep_trials, sweep_threads);
    if (*bench) return cmd_bench(bench_path, lengths);
  } catch (const ConfigError& e) {
    std::cerr << e.what() << '\n';
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return kExitUsage;
}
