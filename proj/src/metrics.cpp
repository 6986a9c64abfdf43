#include "sgda/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "sgda/errors.hpp"
#include "sgda/io.hpp"
#include "sgda/stl.hpp"
#include "sgda/util.hpp"

namespace sgda::metrics {

using nlohmann::json;

double dtw_distance(const std::vector<std::vector<double>>& a,
                    const std::vector<std::vector<double>>& b) {
  if (a.empty() || b.empty()) throw InputError("dtw_distance: empty sequence");
  const std::size_t n = a.size(), m = b.size();
  auto local = [&](std::size_t i, std::size_t j) {
    double sq = 0.0;
    for (std::size_t d = 0; d < a[i].size(); ++d) {
      double diff = a[i][d] - b[j][d];
      sq += diff * diff;
    }
    return std::sqrt(sq);
  };
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> prev(m + 1, inf), cur(m + 1, inf);
  prev[0] = 0.0;
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = inf;
    for (std::size_t j = 1; j <= m; ++j)
      cur[j] = local(i - 1, j - 1) +
               std::min({prev[j], cur[j - 1], prev[j - 1]});
    prev.swap(cur);
  }
  return prev[m];
}

namespace {

std::vector<std::vector<double>> dtw_features(const sim::Trajectory& t) {
  std::vector<std::vector<double>> out;
  out.reserve(t.steps.size());
  for (const auto& s : t.steps)
    out.push_back({s.state.ego.x, s.state.ego.y, s.state.ego.speed});
  return out;
}

}  // namespace

double dtw_distance(const sim::Trajectory& a, const sim::Trajectory& b) {
  return dtw_distance(dtw_features(a), dtw_features(b));
}

// ---------------------------------------------------------------------------
// Test set

std::vector<std::size_t> TestSet::spec_counts() const {
  std::vector<std::size_t> counts(base_counts.size(), 0);
  for (const auto& e : entries) ++counts[e.expert_spec];
  return counts;
}

TestSet build_test_set(const sim::Policy& expert, const stp::Partition& part,
                       const sim::ScenarioGeometry& geom,
                       const sim::ParamRanges& ranges, std::size_t size,
                       double floor_frac, std::size_t attempt_cap,
                       std::uint64_t seed, unsigned jobs) {
  const std::size_t num_specs = part.num_specs();
  if (floor_frac * static_cast<double>(num_specs) > 1.0)
    throw ConfigError("test-set floor fraction infeasible: floor_frac * 2^l > 1");
  if (size == 0) throw InputError("test set size must be > 0");

  TestSet test;
  test.base_size = size;
  test.floor_count =
      static_cast<std::size_t>(std::ceil(floor_frac * static_cast<double>(size)));
  test.base_counts.assign(num_specs, 0);
  test.topup_counts.assign(num_specs, 0);
  test.shortfalls.assign(num_specs, 0);

  // Base phase: uniform-prior sample, rollouts parallel over preassigned seeds.
  Rng env_rng(derive_seed(seed, "test-env"));
  std::vector<TestEntry> base(size);
  for (std::size_t i = 0; i < size; ++i) {
    base[i].e = sim::sample_uniform_env(ranges, env_rng);
    base[i].seed = derive_seed(seed, "test-rollout", i);
  }
  parallel_for(size, jobs, [&](std::size_t i) {
    base[i].expert_traj = sim::rollout(expert, base[i].e, geom, base[i].seed);
    base[i].expert_spec = stp::classify(part, base[i].expert_traj, geom);
  });
  for (auto& entry : base) {
    ++test.base_counts[entry.expert_spec];
    test.entries.push_back(std::move(entry));
  }

  // Top-up phase: per-spec rejection sampling until the floor is met or the
  // attempt cap runs out.
  auto counts = test.spec_counts();
  Rng topup_rng(derive_seed(seed, "topup-env"));
  std::uint64_t topup_counter = 0;
  for (std::size_t j = 0; j < num_specs; ++j) {
    std::size_t attempts = 0;
    while (counts[j] < test.floor_count && attempts < attempt_cap) {
      ++attempts;
      TestEntry entry;
      entry.e = sim::sample_uniform_env(ranges, topup_rng);
      entry.seed = derive_seed(seed, "topup-rollout", topup_counter++);
      entry.expert_traj = sim::rollout(expert, entry.e, geom, entry.seed);
      entry.expert_spec = stp::classify(part, entry.expert_traj, geom);
      if (entry.expert_spec == j) {
        ++counts[j];
        ++test.topup_counts[j];
        test.entries.push_back(std::move(entry));
      }
    }
    if (counts[j] < test.floor_count)
      test.shortfalls[j] = test.floor_count - counts[j];
  }
  return test;
}

MatchReport outcome_matching(const sim::Policy& policy, const TestSet& test,
                             const stp::Partition& part,
                             const sim::ScenarioGeometry& geom, unsigned jobs) {
  if (test.entries.empty()) throw InputError("outcome_matching: empty test set");
  MatchReport report;
  report.rows.resize(part.num_specs());
  for (std::size_t j = 0; j < part.num_specs(); ++j) report.rows[j].spec = j;
  report.dtw.assign(test.entries.size(), 0.0);

  std::vector<std::size_t> policy_spec(test.entries.size());
  parallel_for(test.entries.size(), jobs, [&](std::size_t i) {
    const auto& entry = test.entries[i];
    sim::Trajectory traj = sim::rollout(policy, entry.e, geom, entry.seed);
    policy_spec[i] = stp::classify(part, traj, geom);
    report.dtw[i] = dtw_distance(entry.expert_traj, traj);
  });

  std::size_t matched = 0;
  for (std::size_t i = 0; i < test.entries.size(); ++i) {
    auto& row = report.rows[test.entries[i].expert_spec];
    ++row.count;
    if (policy_spec[i] == test.entries[i].expert_spec) {
      ++row.matched;
      ++matched;
    }
  }
  report.overall = static_cast<double>(matched) / test.entries.size();

  double sum = 0.0;
  for (double d : report.dtw) sum += d;
  report.mean_dtw = sum / report.dtw.size();
  std::vector<double> sorted = report.dtw;
  std::sort(sorted.begin(), sorted.end());
  std::size_t n = sorted.size();
  report.median_dtw =
      n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  return report;
}

double l1_test_loss(const sim::Policy& policy, const TestSet& test) {
  if (test.entries.empty()) throw InputError("l1_test_loss: empty test set");
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& entry : test.entries) {
    for (const auto& step : entry.expert_traj.steps) {
      sum += std::abs(policy.act(step.state).longitudinal -
                      step.action.longitudinal);
      ++n;
    }
  }
  return n ? sum / static_cast<double>(n) : 0.0;
}

void save_test_set(const TestSet& test, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  json meta{{"type", "meta"},
            {"base_size", test.base_size},
            {"floor_count", test.floor_count},
            {"base_counts", test.base_counts},
            {"topup_counts", test.topup_counts},
            {"shortfalls", test.shortfalls}};
  out << meta.dump() << "\n";
  for (const auto& entry : test.entries) {
    json j{{"type", "entry"},
           {"e", io::env_to_json(entry.e)},
           {"seed", entry.seed},
           {"expert_spec", entry.expert_spec},
           {"traj", io::trajectory_to_json(entry.expert_traj)}};
    out << j.dump() << "\n";
  }
}

TestSet load_test_set(const std::filesystem::path& path, std::size_t num_specs) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path.string());
  TestSet test;
  test.base_counts.assign(num_specs, 0);
  test.topup_counts.assign(num_specs, 0);
  test.shortfalls.assign(num_specs, 0);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    std::string type = j.value("type", "");
    if (type == "meta") {
      test.base_size = j.at("base_size").get<std::size_t>();
      test.floor_count = j.at("floor_count").get<std::size_t>();
      test.base_counts = j.at("base_counts").get<std::vector<std::size_t>>();
      test.topup_counts = j.at("topup_counts").get<std::vector<std::size_t>>();
      test.shortfalls = j.at("shortfalls").get<std::vector<std::size_t>>();
      if (test.base_counts.size() != num_specs)
        throw InputError("test set spec count mismatch in " + path.string());
    } else if (type == "entry") {
      TestEntry entry;
      entry.e = io::env_from_json(j.at("e"));
      entry.seed = j.at("seed").get<std::uint64_t>();
      entry.expert_spec = j.at("expert_spec").get<std::size_t>();
      entry.expert_traj = io::trajectory_from_json(j.at("traj"));
      test.entries.push_back(std::move(entry));
    }
  }
  return test;
}

std::vector<BrakeSweepRow> brake_threshold_sweep(
    const std::vector<const sim::Policy*>& policies, const TestSet& test,
    const sim::ScenarioGeometry& geom, const std::vector<double>& thresholds,
    unsigned jobs) {
  if (test.entries.empty()) throw InputError("brake sweep: empty test set");

  auto max_brake = [](const sim::Trajectory& t) {
    double mx = 0.0;
    for (const auto& s : t.steps)
      mx = std::max(mx, std::max(0.0, -s.action.longitudinal));
    return mx;
  };

  std::vector<double> expert_brake(test.entries.size());
  for (std::size_t i = 0; i < test.entries.size(); ++i)
    expert_brake[i] = max_brake(test.entries[i].expert_traj);

  // One rollout per (policy, entry); thresholds only re-slice the results.
  std::vector<std::vector<double>> policy_brake(
      policies.size(), std::vector<double>(test.entries.size()));
  for (std::size_t p = 0; p < policies.size(); ++p) {
    parallel_for(test.entries.size(), jobs, [&](std::size_t i) {
      sim::Trajectory traj =
          sim::rollout(*policies[p], test.entries[i].e, geom, test.entries[i].seed);
      policy_brake[p][i] = max_brake(traj);
    });
  }

  std::vector<BrakeSweepRow> rows;
  for (double th : thresholds) {
    BrakeSweepRow row;
    row.threshold = th;
    std::vector<std::size_t> match(policies.size(), 0);
    for (std::size_t i = 0; i < test.entries.size(); ++i) {
      if (expert_brake[i] > th) {
        ++row.expert_violations;
        for (std::size_t p = 0; p < policies.size(); ++p)
          if (policy_brake[p][i] > th) ++match[p];
      }
    }
    row.violation_frequency =
        static_cast<double>(row.expert_violations) / test.entries.size();
    for (std::size_t p = 0; p < policies.size(); ++p)
      row.match_rates.push_back(
          row.expert_violations
              ? static_cast<double>(match[p]) / row.expert_violations
              : 1.0);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace sgda::metrics
