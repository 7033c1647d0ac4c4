#include "decest/sim/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "decest/estimator.hpp"
#include "decest/preintegration.hpp"

namespace decest::sim {

using nlohmann::json;

namespace {

Eigen::MatrixXd stack_rows(const std::vector<Eigen::MatrixXd>& blocks, int cols) {
  Eigen::Index rows = 0;
  for (const auto& b : blocks) rows += b.rows();
  Eigen::MatrixXd out(rows, cols);
  Eigen::Index r = 0;
  for (const auto& b : blocks) {
    out.middleRows(r, b.rows()) = b;
    r += b.rows();
  }
  return out;
}

Eigen::MatrixXd channel_rows(const Family& f, const Layout& l, const Element& x,
                             const Measurement& m) {
  return measurement_jacobian(f.measurement_model(l, m), x, Side::kRight);
}

}  // namespace

TrajectoryLinearization linearize_scenario(const ScenarioConfig& c,
                                           const LinearizationOptions& o) {
  if (o.steps < 1 || o.stride < 1) {
    throw std::invalid_argument("linearize_scenario: steps and stride must be >= 1");
  }
  validate(c);
  const auto f = make_family(c);
  const int n = c.num_robots();
  const int K = o.steps * o.stride;
  const std::uint64_t seed = o.trial_seed ? o.trial_seed : trial_seed(c.seed, 0);
  const TruthRun run = f->simulate(K, seed);

  std::vector<Layout> layouts;
  std::vector<int> dofs;
  for (int i = 0; i < n; ++i) {
    layouts.push_back(f->layout(i));
    dofs.push_back(f->state_descriptor(layouts.back()).dof());
  }

  std::vector<StepJacobians> steps;
  for (int p = 0; p <= o.steps; ++p) {
    const int k = p * o.stride;
    const auto& truth = run.truth[k];
    StepJacobians s;
    for (int i = 0; i < n; ++i) {
      const Layout& l = layouts[i];
      const Element x = f->state_truth(l, truth);
      std::vector<Eigen::MatrixXd> rows;
      for (Measurement m : f->channels(i)) {
        if (m.landmark >= 0 && !o.landmarks) continue;
        if (m.kind == SensorKind::kRange && c.family == FamilyKind::kQuad) {
          const int tt = std::max<int>(1, static_cast<int>(c.robots[m.target].tags.size()));
          for (int q = 0; q < f->tag_pairs(i, m.target); ++q) {
            m.tag_self = q / tt;
            m.tag_target = q % tt;
            rows.push_back(channel_rows(*f, l, x, m));
          }
        } else {
          rows.push_back(channel_rows(*f, l, x, m));
        }
      }
      s.G.push_back(stack_rows(rows, dofs[i]));

      if (p < o.steps) {
        Eigen::MatrixXd F = Eigen::MatrixXd::Identity(dofs[i], dofs[i]);
        for (int t = k; t < k + o.stride; ++t) {
          const Element xt = f->state_truth(l, run.truth[t]);
          F = f->full_transition(l, xt, run.true_inputs[t], run.truth[t]) * F;
        }
        s.F.push_back(F);
      }
    }
    if (o.pseudomeasurements) {
      for (auto [a, b] : c.edges) {
        if (a > b) std::swap(a, b);
        const PseudoModel pm = f->pseudo_model(layouts[a], layouts[b]);
        const Element xa = f->state_truth(layouts[a], truth);
        const Element xb = f->state_truth(layouts[b], truth);
        s.edges.push_back({a, b, pm.jacobian_i(xa, xb), pm.jacobian_j(xa, xb)});
      }
    }
    steps.push_back(std::move(s));
  }
  return assemble_linearization(dofs, steps);
}

json to_json(const ObservabilityReport& r, int sv_tail) {
  const int n = static_cast<int>(r.singular_values.size());
  const int from = std::max(0, n - sv_tail);
  json tail = json::array();
  for (int i = from; i < n; ++i) tail.push_back(r.singular_values[i]);
  json null = json::array();
  for (Eigen::Index c = 0; c < r.null_directions.cols(); ++c) {
    json col = json::array();
    for (Eigen::Index i = 0; i < r.null_directions.rows(); ++i) {
      col.push_back(r.null_directions(i, c));
    }
    null.push_back(col);
  }
  return {{"rank", r.rank},
          {"required", r.required},
          {"observable", r.observable},
          {"singular_value_max", n ? r.singular_values.front() : 0.0},
          {"singular_value_tail", tail},
          {"null_directions", null}};
}

ObservabilityStudy observability_study(const ScenarioConfig& c,
                                       const LinearizationOptions& o) {
  const auto lin = linearize_scenario(c, o);
  ObservabilityStudy s;
  s.report = is_observable(build_observability_matrix(lin));
  s.rank_by_steps = rank_by_steps(lin);
  return s;
}

std::vector<SharePoint> sweep_share_rate(const ScenarioConfig& c,
                                         const std::vector<double>& rates,
                                         int trials, int threads) {
  std::vector<SharePoint> out;
  for (double rate : rates) {
    ScenarioConfig cc = c;
    cc.rates.share = rate;
    const auto r = monte_carlo(cc, trials, {Variant::kProposed}, threads);
    const auto f = make_family(cc);
    const std::string pose = f->member_names().front();
    SharePoint p;
    p.rate = rate;
    const auto& m = r.metrics.at(Variant::kProposed);
    for (int i = 0; i < cc.num_robots(); ++i) {
      const auto& v = m.own_pose(i, pose).pos_rmse;
      double sum = 0.0;
      int cnt = 0;
      for (double e : v) {
        if (std::isfinite(e)) {
          sum += e;
          ++cnt;
        }
      }
      p.rmse.push_back(cnt ? sum / cnt : std::numeric_limits<double>::quiet_NaN());
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<MessageSizeRow> bench_message_size(const ScenarioConfig& c,
                                               const std::vector<std::int64_t>& lengths) {
  validate(c);
  const auto f = make_family(c);
  if (!f->shares_rmis()) {
    throw std::invalid_argument("bench_message_size: this family shares no increments");
  }
  std::int64_t longest = 0;
  for (auto n : lengths) {
    if (n < 1) throw std::invalid_argument("bench_message_size: lengths must be >= 1");
    longest = std::max(longest, n);
  }
  const TruthRun run = f->simulate(static_cast<int>(longest), trial_seed(c.seed, 0));
  std::vector<MessageSizeRow> out;
  for (auto n : lengths) {
    Rmi r = f->rmi_identity(0);
    for (std::int64_t k = 0; k < n; ++k) r = f->rmi_increment(r, run.measured_inputs[k][0]);
    MessageSizeRow row;
    row.steps = n;
    row.rmi_bytes = serialize(r).size();
    row.raw_input_bytes = raw_input_bytes(kind_of(r), n, input_dim(c.family));
    out.push_back(row);
  }
  return out;
}

}  // namespace decest::sim
