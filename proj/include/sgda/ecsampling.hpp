#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "sgda/bayesopt.hpp"
#include "sgda/simenv.hpp"
#include "sgda/stp.hpp"
#include "sgda/util.hpp"

namespace sgda::ecs {

// UCB over normalized Q plus an exploration term finite at N = 0 and t = 0:
//   argmax_j  weights[j] * Q_j / (max_i Q_i + eps) + c * sqrt(2 ln(t+2) / (N_j+1))
// Ties break toward the lowest index. Throws InputError on empty inputs.
std::size_t ucb_pick(const std::vector<double>& q,
                     const std::vector<std::size_t>& n, std::size_t t,
                     const std::vector<double>& weights, double c);

// Rollout of the learner under (e, seed); injectable so synthetic
// environments can exercise the loop.
using RolloutFn =
    std::function<sim::Trajectory(const sim::EnvCondition&, std::uint64_t)>;

struct SampleRecord {
  std::size_t iteration = 0;
  std::size_t target_spec = 0;  // spec the proposal aimed for
  sim::EnvCondition e;
  std::uint64_t seed = 0;
  sim::Trajectory traj;
  std::size_t landed_spec = 0;
  double target = 0.0;
  std::vector<double> q_after;
  std::vector<std::size_t> n_after;
};

struct EcSamplingOptions {
  double ucb_c = 1.0;
  // UCB weights; empty means all-ones. SGDA passes the partition's spec
  // weights when the property-weight generalization is on.
  std::vector<double> ucb_weights;
};

// One pass of the UCB-scheduled sampling loop: k iterations of propose ->
// rollout -> classify/record -> feed the surrogate -> recompute Q -> pick the
// next target spec. Landed stores and cumulative attempts persist in the
// partition across calls.
std::vector<SampleRecord> ec_sampling(stp::Partition& part,
                                      bo::SamplerState& sampler,
                                      const RolloutFn& rollout_fn,
                                      std::size_t k,
                                      const sim::ScenarioGeometry& geom,
                                      const sim::ParamRanges& ranges,
                                      std::uint64_t seed,
                                      const EcSamplingOptions& options = {});

// Per-iteration trace CSV: t, target spec, e fields, landed spec, target
// value, Q vector, N vector.
std::string bandit_trace_csv(const std::vector<SampleRecord>& records);

}  // namespace sgda::ecs
