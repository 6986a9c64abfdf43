#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "sgda/simenv.hpp"
#include "sgda/stp.hpp"

namespace sgda::metrics {

// Classic boundary-matched DTW with Euclidean local cost and no warping
// window. Throws InputError on empty input.
double dtw_distance(const std::vector<std::vector<double>>& a,
                    const std::vector<std::vector<double>>& b);

// Trajectory DTW over per-step (ego x, ego y, ego speed) features.
double dtw_distance(const sim::Trajectory& a, const sim::Trajectory& b);

struct TestEntry {
  sim::EnvCondition e;
  std::uint64_t seed = 0;  // rollout seed, reused for the policy under test
  sim::Trajectory expert_traj;
  std::size_t expert_spec = 0;
};

struct TestSet {
  std::vector<TestEntry> entries;
  std::size_t base_size = 0;                 // uniform sample count before top-up
  std::vector<std::size_t> base_counts;      // per-spec counts in the base sample
  std::vector<std::size_t> topup_counts;     // rejection-sampled additions
  std::vector<std::size_t> shortfalls;       // floor deficit after the attempt cap
  std::size_t floor_count = 0;

  std::vector<std::size_t> spec_counts() const;
};

// Uniform-prior base sample plus per-spec rejection-sampled top-ups until
// each spec holds >= ceil(floor_frac * size) entries or the per-spec attempt
// cap is exhausted (recorded as a shortfall, not a failure).
TestSet build_test_set(const sim::Policy& expert, const stp::Partition& part,
                       const sim::ScenarioGeometry& geom,
                       const sim::ParamRanges& ranges, std::size_t size,
                       double floor_frac, std::size_t attempt_cap,
                       std::uint64_t seed, unsigned jobs = 1);

struct OutcomeRow {
  std::size_t spec = 0;
  std::size_t count = 0;    // test entries whose expert outcome is this spec
  std::size_t matched = 0;  // of those, policy landed in the same spec
  double rate() const { return count ? static_cast<double>(matched) / count : 0.0; }
};

struct MatchReport {
  double overall = 0.0;
  std::vector<OutcomeRow> rows;  // one per spec, indexed by spec
  std::vector<double> dtw;       // per entry, expert vs policy
  double mean_dtw = 0.0;
  double median_dtw = 0.0;
};

// Rolls the policy on every test e under the entry's recorded seed (shared
// noise stream), classifies, and compares outcomes grouped by the expert's
// spec.
MatchReport outcome_matching(const sim::Policy& policy, const TestSet& test,
                             const stp::Partition& part,
                             const sim::ScenarioGeometry& geom,
                             unsigned jobs = 1);

// Open-loop mean |policy(s) - a| over all expert state-action pairs.
double l1_test_loss(const sim::Policy& policy, const TestSet& test);

void save_test_set(const TestSet& test, const std::filesystem::path& path);
TestSet load_test_set(const std::filesystem::path& path, std::size_t num_specs);

// Brake-threshold sweep row: the appendix robustness experiment re-evaluated
// at one threshold.
struct BrakeSweepRow {
  double threshold = 0.0;
  std::size_t expert_violations = 0;
  double violation_frequency = 0.0;
  // per policy under test: of the entries where the expert violates, how many
  // the policy also violates
  std::vector<double> match_rates;
};

std::vector<BrakeSweepRow> brake_threshold_sweep(
    const std::vector<const sim::Policy*>& policies, const TestSet& test,
    const sim::ScenarioGeometry& geom, const std::vector<double>& thresholds,
    unsigned jobs = 1);

}  // namespace sgda::metrics
