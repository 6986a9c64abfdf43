#pragma once

#include <filesystem>
#include <vector>

#include "sgda/config.hpp"
#include "sgda/ecselect.hpp"
#include "sgda/metrics.hpp"
#include "sgda/policy.hpp"
#include "sgda/simenv.hpp"
#include "sgda/stp.hpp"

namespace sgda::run {

struct PoolEntry {
  sim::EnvCondition e;
  std::uint64_t seed = 0;
  sim::Trajectory traj;    // learner trajectory
  std::size_t spec = 0;    // spec the learner trajectory satisfies
};

struct RoundArtifacts {
  std::size_t round = 0;
  std::size_t pool_size = 0;
  std::vector<std::size_t> selected;  // indices into the round's pool
  std::size_t dataset_pairs_after = 0;
};

struct RunResult {
  std::filesystem::path outdir;
  policy::MlpPolicy final_policy;
  metrics::TestSet test;
  metrics::MatchReport report;
  double l1_loss = 0.0;
  std::vector<RoundArtifacts> rounds;
};

// Full train -> sample -> select -> aggregate pipeline for the configured
// strategy, persisting per-round artifacts under outdir:
//   config.snapshot
//   initial/{dataset.jsonl, policy.ckpt}
//   round_<i>/{pool.jsonl, selected.csv, selection_report.csv,
//              dataset_delta.jsonl, partition.csv, bandit_trace.csv,
//              surrogate_log.csv, policy.ckpt}
//   final/{metrics.csv, per_outcome.csv, dtw.csv, test_set.jsonl}
// The directory must not already contain a run.
RunResult run_experiment(const config::ExperimentConfig& cfg,
                         const std::filesystem::path& outdir);

// Metric file emission shared by `run` and `evaluate`.
void write_metric_files(const std::filesystem::path& dir,
                        const config::ExperimentConfig& cfg,
                        const stp::Partition& part,
                        const metrics::TestSet& test,
                        const metrics::MatchReport& report, double l1);

}  // namespace sgda::run
