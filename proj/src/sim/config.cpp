#include "decest/sim/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "decest/errors.hpp"

namespace decest::sim {

using nlohmann::json;

const char* to_string(FamilyKind f) {
  switch (f) {
    case FamilyKind::kToy: return "toy";
    case FamilyKind::kGround: return "ground";
    case FamilyKind::kQuad: return "quad";
  }
  return "?";
}

const char* to_string(SensorKind k) {
  switch (k) {
    case SensorKind::kOwnPosition: return "own_position";
    case SensorKind::kRelativePosition: return "relative_position";
    case SensorKind::kRange: return "range";
    case SensorKind::kHeight: return "height";
    case SensorKind::kMagnetometer: return "magnetometer";
  }
  return "?";
}

int ScenarioConfig::steps() const {
  return static_cast<int>(std::llround(duration * rates.input));
}

std::vector<int> ScenarioConfig::neighbors(int robot) const {
  std::set<int> out;
  for (const auto& [a, b] : edges) {
    if (a == robot) out.insert(b);
    if (b == robot) out.insert(a);
  }
  return {out.begin(), out.end()};
}

bool ScenarioConfig::adjacent(int a, int b) const {
  for (const auto& [x, y] : edges) {
    if ((x == a && y == b) || (x == b && y == a)) return true;
  }
  return false;
}

int slot_dof(FamilyKind f) {
  switch (f) {
    case FamilyKind::kToy: return 1;
    case FamilyKind::kGround: return 3;
    case FamilyKind::kQuad: return 15;
  }
  return 0;
}

int input_dim(FamilyKind f) {
  switch (f) {
    case FamilyKind::kToy: return 0;
    case FamilyKind::kGround: return 3;
    case FamilyKind::kQuad: return 6;
  }
  return 0;
}

int noise_dim(SensorKind k, FamilyKind f) {
  switch (k) {
    case SensorKind::kOwnPosition: return f == FamilyKind::kQuad ? 3 : 1;
    case SensorKind::kRelativePosition: return f == FamilyKind::kGround ? 2 : 1;
    case SensorKind::kRange: return 1;
    case SensorKind::kHeight: return 1;
    case SensorKind::kMagnetometer: return 3;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// Validation

namespace {

class Issues {
 public:
  void add(const std::string& path, const std::string& what) {
    list_.push_back(path + ": " + what);
  }
  void check(bool ok, const std::string& path, const std::string& what) {
    if (!ok) add(path, what);
  }
  void throw_if_any() const {
    if (!list_.empty()) throw ConfigError(list_);
  }

 private:
  std::vector<std::string> list_;
};

std::string idx(const std::string& base, std::size_t i) {
  return base + "[" + std::to_string(i) + "]";
}

bool all_nonneg(const std::vector<double>& v) {
  for (double x : v) {
    if (!(x >= 0.0) || !std::isfinite(x)) return false;
  }
  return true;
}

bool sensor_allowed(FamilyKind f, SensorKind k) {
  switch (f) {
    case FamilyKind::kToy:
      return k == SensorKind::kOwnPosition || k == SensorKind::kRelativePosition;
    case FamilyKind::kGround:
      return k == SensorKind::kRange || k == SensorKind::kRelativePosition;
    case FamilyKind::kQuad:
      return k == SensorKind::kOwnPosition || k == SensorKind::kRange ||
             k == SensorKind::kHeight || k == SensorKind::kMagnetometer;
  }
  return false;
}

}  // namespace

void validate(const ScenarioConfig& c) {
  Issues is;
  is.check(c.version == 1, "version", "unsupported version (expected 1)");
  is.check(c.trials >= 1, "trials", "must be >= 1");
  is.check(c.duration > 0 && std::isfinite(c.duration), "duration", "must be > 0");
  is.check(c.rates.input > 0, "rates.input", "must be > 0");
  is.check(c.rates.share > 0 && c.rates.share <= c.rates.input, "rates.share",
           "must be in (0, rates.input]");
  is.check(c.rates.record > 0 && c.rates.record <= c.rates.input, "rates.record",
           "must be in (0, rates.input]");
  is.check(c.latency_steps >= 0, "latency_steps", "must be >= 0");
  if (c.rates.input > 0 && c.duration > 0) {
    is.check(c.steps() >= 1, "duration", "shorter than one input step");
  }

  const int n = c.num_robots();
  const int dof = slot_dof(c.family);
  is.check(n >= (c.family == FamilyKind::kToy ? 2 : 1), "robots",
           c.family == FamilyKind::kToy ? "toy needs at least 2 robots"
                                    : "at least one robot required");

  std::set<std::pair<int, int>> seen;
  for (std::size_t e = 0; e < c.edges.size(); ++e) {
    auto [a, b] = c.edges[e];
    const std::string p = idx("graph.edges", e);
    is.check(a >= 0 && a < n && b >= 0 && b < n, p, "unknown robot id");
    is.check(a != b, p, "self loop");
    const auto key = std::minmax(a, b);
    is.check(seen.insert(key).second, p, "duplicate edge");
  }

  for (std::size_t r = 0; r < c.robots.size(); ++r) {
    const auto& rc = c.robots[r];
    const std::string p = idx("robots", r);
    is.check(rc.id == static_cast<int>(r), p + ".id", "ids must be 0..N-1 in order");
    is.check(static_cast<int>(rc.initial_std.size()) == dof,
             p + ".initial_std", "expected " + std::to_string(dof) + " entries");
    is.check(all_nonneg(rc.initial_std), p + ".initial_std", "must be >= 0");
    for (std::size_t s = 0; s < rc.sensors.size(); ++s) {
      const auto& ss = rc.sensors[s];
      const std::string q = idx(p + ".sensors", s);
      is.check(sensor_allowed(c.family, ss.kind), q + ".kind",
               std::string("not available for family ") + to_string(c.family));
      is.check(ss.rate > 0 && ss.rate <= c.rates.input, q + ".rate",
               "must be in (0, rates.input]");
      const int nd = noise_dim(ss.kind, c.family);
      is.check(static_cast<int>(ss.noise_std.size()) == nd ||
                   ss.noise_std.size() == 1,
               q + ".noise_std", "expected 1 or " + std::to_string(nd) + " entries");
      is.check(all_nonneg(ss.noise_std), q + ".noise_std", "must be >= 0");
      for (std::size_t t = 0; t < ss.targets.size(); ++t) {
        const int tg = ss.targets[t];
        const std::string tp = idx(q + ".targets", t);
        is.check(tg >= 0 && tg < n && tg != static_cast<int>(r), tp,
                 "must be another robot");
        if (c.family != FamilyKind::kToy && tg >= 0 && tg < n) {
          is.check(c.adjacent(static_cast<int>(r), tg), tp,
                   "target must be a graph neighbor");
        }
      }
      for (std::size_t t = 0; t < ss.landmarks.size(); ++t) {
        const int lm = ss.landmarks[t];
        is.check(lm >= 0 && lm < static_cast<int>(c.world.landmarks.size()),
                 idx(q + ".landmarks", t), "unknown landmark");
      }
      const bool needs_target = ss.kind == SensorKind::kRange ||
                                ss.kind == SensorKind::kRelativePosition;
      if (needs_target) {
        const bool has = c.family == FamilyKind::kGround &&
                                 ss.kind == SensorKind::kRelativePosition
                             ? !ss.landmarks.empty()
                             : !ss.targets.empty();
        is.check(has, q, "needs targets or landmarks");
      }
      if (ss.kind == SensorKind::kRange && c.family == FamilyKind::kQuad) {
        is.check(!rc.tags.empty(), p + ".tags", "range needs at least one tag");
        for (int tg : ss.targets) {
          if (tg >= 0 && tg < n) {
            is.check(!c.robots[tg].tags.empty(), idx("robots", tg) + ".tags",
                     "range target needs at least one tag");
          }
        }
      }
    }
  }

  const int m = input_dim(c.family);
  is.check(static_cast<int>(c.process.input_std.size()) == m,
           "process.input_std", "expected " + std::to_string(m) + " entries");
  is.check(all_nonneg(c.process.input_std), "process.input_std", "must be >= 0");
  if (c.family == FamilyKind::kQuad) {
    is.check(c.process.bias_walk_std.size() == 6, "process.bias_walk_std",
             "expected 6 entries");
    is.check(c.process.initial_bias_std.size() == 6,
             "process.initial_bias_std", "expected 6 entries");
    is.check(c.world.relative_initial_std.size() == 15,
             "world.relative_initial_std", "expected 15 entries");
  }
  is.check(all_nonneg(c.process.bias_walk_std), "process.bias_walk_std", "must be >= 0");
  is.check(all_nonneg(c.process.initial_bias_std), "process.initial_bias_std",
           "must be >= 0");
  is.check(all_nonneg(c.world.relative_initial_std), "world.relative_initial_std",
           "must be >= 0");
  is.check(c.process.random_walk_std >= 0, "process.random_walk_std", "must be >= 0");

  is.check(c.fusion.psi >= 0, "fusion.psi", "must be >= 0");
  is.check(c.fusion.ci_weight > 0 && c.fusion.ci_weight < 1, "fusion.ci_weight",
           "must be in (0, 1)");
  is.check(c.fusion.max_iters >= 1, "fusion.max_iters", "must be >= 1");
  is.throw_if_any();
}

// ---------------------------------------------------------------------------
// JSON

namespace {

class Reader {
 public:
  explicit Reader(Issues& is) : is_(is) {}

  template <typename T>
  void get(const json& j, const char* key, const std::string& path, T& out,
           bool required = false) {
    if (!j.is_object() || !j.contains(key)) {
      if (required) is_.add(path, "missing");
      return;
    }
    try {
      out = j.at(key).get<T>();
    } catch (const json::exception&) {
      is_.add(path, "wrong type");
    }
  }

  void vec3(const json& j, const std::string& path, Eigen::Vector3d& out) {
    std::vector<double> v;
    try {
      v = j.get<std::vector<double>>();
    } catch (const json::exception&) {
      is_.add(path, "expected a list of numbers");
      return;
    }
    if (v.size() == 2) v.push_back(0.0);
    if (v.size() != 3) {
      is_.add(path, "expected 2 or 3 numbers");
      return;
    }
    out = Eigen::Vector3d(v[0], v[1], v[2]);
  }

  void vec3_list(const json& j, const char* key, const std::string& path,
                 std::vector<Eigen::Vector3d>& out) {
    if (!j.contains(key)) return;
    const auto& a = j.at(key);
    if (!a.is_array()) {
      is_.add(path, "expected a list");
      return;
    }
    out.resize(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) vec3(a[i], idx(path, i), out[i]);
  }

 private:
  Issues& is_;
};

FamilyKind parse_family(const std::string& s, Issues& is) {
  if (s == "toy") return FamilyKind::kToy;
  if (s == "ground") return FamilyKind::kGround;
  if (s == "quad") return FamilyKind::kQuad;
  is.add("family", "unknown family '" + s + "'");
  return FamilyKind::kToy;
}

SensorKind parse_kind(const std::string& s, const std::string& path, Issues& is) {
  for (auto k : {SensorKind::kOwnPosition, SensorKind::kRelativePosition,
                 SensorKind::kRange, SensorKind::kHeight, SensorKind::kMagnetometer}) {
    if (s == to_string(k)) return k;
  }
  is.add(path, "unknown sensor kind '" + s + "'");
  return SensorKind::kOwnPosition;
}

json vec3_json(const Eigen::Vector3d& v) { return json::array({v(0), v(1), v(2)}); }

}  // namespace

ScenarioConfig from_json(const json& j) {
  Issues is;
  ScenarioConfig c;
  if (!j.is_object()) {
    is.add("<root>", "expected a JSON object");
    is.throw_if_any();
  }
  Reader rd(is);
  rd.get(j, "version", "version", c.version, true);
  rd.get(j, "name", "name", c.name);
  std::string fam;
  rd.get(j, "family", "family", fam, true);
  if (!fam.empty()) c.family = parse_family(fam, is);
  rd.get(j, "seed", "seed", c.seed);
  rd.get(j, "trials", "trials", c.trials);
  rd.get(j, "duration", "duration", c.duration, true);
  rd.get(j, "latency_steps", "latency_steps", c.latency_steps);
  rd.get(j, "noise_free", "noise_free", c.noise_free);

  if (j.contains("rates")) {
    const auto& r = j["rates"];
    rd.get(r, "input", "rates.input", c.rates.input, true);
    rd.get(r, "share", "rates.share", c.rates.share);
    rd.get(r, "record", "rates.record", c.rates.record);
  } else {
    is.add("rates", "missing");
  }
  if (j.contains("process")) {
    const auto& p = j["process"];
    rd.get(p, "input_std", "process.input_std", c.process.input_std);
    rd.get(p, "bias_walk_std", "process.bias_walk_std", c.process.bias_walk_std);
    rd.get(p, "initial_bias_std", "process.initial_bias_std",
           c.process.initial_bias_std);
    rd.get(p, "random_walk_std", "process.random_walk_std",
           c.process.random_walk_std);
  }
  if (j.contains("fusion")) {
    const auto& f = j["fusion"];
    rd.get(f, "psi", "fusion.psi", c.fusion.psi);
    rd.get(f, "ci_weight", "fusion.ci_weight", c.fusion.ci_weight);
    rd.get(f, "perform_ci", "fusion.perform_ci", c.fusion.perform_ci);
    rd.get(f, "max_iters", "fusion.max_iters", c.fusion.max_iters);
    rd.get(f, "two_sided", "fusion.two_sided", c.fusion.two_sided);
  }
  if (j.contains("graph")) {
    std::vector<std::vector<int>> edges;
    rd.get(j["graph"], "edges", "graph.edges", edges);
    for (std::size_t e = 0; e < edges.size(); ++e) {
      if (edges[e].size() != 2) {
        is.add(idx("graph.edges", e), "expected a pair");
        continue;
      }
      c.edges.emplace_back(edges[e][0], edges[e][1]);
    }
  }
  if (j.contains("world")) {
    const auto& w = j["world"];
    rd.vec3_list(w, "landmarks", "world.landmarks", c.world.landmarks);
    if (w.contains("gravity")) rd.vec3(w["gravity"], "world.gravity", c.world.gravity);
    if (w.contains("magnetic_field")) {
      rd.vec3(w["magnetic_field"], "world.magnetic_field", c.world.magnetic_field);
    }
    rd.get(w, "relative_initial_std", "world.relative_initial_std",
           c.world.relative_initial_std);
  }
  if (j.contains("trajectory")) {
    const auto& t = j["trajectory"];
    rd.get(t, "speed", "trajectory.speed", c.trajectory.speed);
    rd.get(t, "turn_rate", "trajectory.turn_rate", c.trajectory.turn_rate);
    rd.get(t, "amplitude", "trajectory.amplitude", c.trajectory.amplitude);
    rd.get(t, "height", "trajectory.height", c.trajectory.height);
    rd.get(t, "extent", "trajectory.extent", c.trajectory.extent);
  }
  if (j.contains("robots") && j["robots"].is_array()) {
    const auto& rs = j["robots"];
    for (std::size_t r = 0; r < rs.size(); ++r) {
      const std::string p = idx("robots", r);
      RobotConfig rc;
      rc.id = static_cast<int>(r);
      rd.get(rs[r], "id", p + ".id", rc.id);
      rd.get(rs[r], "initial_std", p + ".initial_std", rc.initial_std, true);
      rd.vec3_list(rs[r], "tags", p + ".tags", rc.tags);
      if (rs[r].contains("sensors") && rs[r]["sensors"].is_array()) {
        const auto& ss = rs[r]["sensors"];
        for (std::size_t s = 0; s < ss.size(); ++s) {
          const std::string q = idx(p + ".sensors", s);
          SensorSpec spec;
          std::string kind;
          rd.get(ss[s], "kind", q + ".kind", kind, true);
          if (!kind.empty()) spec.kind = parse_kind(kind, q + ".kind", is);
          rd.get(ss[s], "rate", q + ".rate", spec.rate, true);
          rd.get(ss[s], "noise_std", q + ".noise_std", spec.noise_std, true);
          rd.get(ss[s], "targets", q + ".targets", spec.targets);
          rd.get(ss[s], "landmarks", q + ".landmarks", spec.landmarks);
          rc.sensors.push_back(std::move(spec));
        }
      }
      c.robots.push_back(std::move(rc));
    }
  } else {
    is.add("robots", "missing or not a list");
  }
  is.throw_if_any();
  validate(c);
  return c;
}

json to_json(const ScenarioConfig& c) {
  json j;
  j["version"] = c.version;
  j["name"] = c.name;
  j["family"] = to_string(c.family);
  j["seed"] = c.seed;
  j["trials"] = c.trials;
  j["duration"] = c.duration;
  j["latency_steps"] = c.latency_steps;
  j["noise_free"] = c.noise_free;
  j["rates"] = {{"input", c.rates.input}, {"share", c.rates.share},
                {"record", c.rates.record}};
  j["process"] = {{"input_std", c.process.input_std},
                  {"bias_walk_std", c.process.bias_walk_std},
                  {"initial_bias_std", c.process.initial_bias_std},
                  {"random_walk_std", c.process.random_walk_std}};
  j["fusion"] = {{"psi", c.fusion.psi},
                 {"ci_weight", c.fusion.ci_weight},
                 {"perform_ci", c.fusion.perform_ci},
                 {"max_iters", c.fusion.max_iters},
                 {"two_sided", c.fusion.two_sided}};
  json edges = json::array();
  for (const auto& [a, b] : c.edges) edges.push_back({a, b});
  j["graph"] = {{"edges", edges}};
  json lms = json::array();
  for (const auto& l : c.world.landmarks) lms.push_back(vec3_json(l));
  j["world"] = {{"landmarks", lms},
                {"gravity", vec3_json(c.world.gravity)},
                {"magnetic_field", vec3_json(c.world.magnetic_field)},
                {"relative_initial_std", c.world.relative_initial_std}};
  j["trajectory"] = {{"speed", c.trajectory.speed},
                     {"turn_rate", c.trajectory.turn_rate},
                     {"amplitude", c.trajectory.amplitude},
                     {"height", c.trajectory.height},
                     {"extent", c.trajectory.extent}};
  json robots = json::array();
  for (const auto& r : c.robots) {
    json jr;
    jr["id"] = r.id;
    jr["initial_std"] = r.initial_std;
    json tags = json::array();
    for (const auto& t : r.tags) tags.push_back(vec3_json(t));
    jr["tags"] = tags;
    json sensors = json::array();
    for (const auto& s : r.sensors) {
      json js;
      js["kind"] = to_string(s.kind);
      js["rate"] = s.rate;
      js["noise_std"] = s.noise_std;
      if (!s.targets.empty()) js["targets"] = s.targets;
      if (!s.landmarks.empty()) js["landmarks"] = s.landmarks;
      sensors.push_back(js);
    }
    jr["sensors"] = sensors;
    robots.push_back(jr);
  }
  j["robots"] = robots;
  return j;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({path + ": cannot open"});
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError({path + ": " + e.what()});
  }
  return from_json(j);
}

std::string json_hash(const json& j) {
  const std::string s = j.dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string config_hash(const ScenarioConfig& c) { return json_hash(to_json(c)); }

}  // namespace decest::sim
