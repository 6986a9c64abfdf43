#include "sgda/ecsampling.hpp"

#include <algorithm>
#include <cmath>

#include "sgda/errors.hpp"

namespace sgda::ecs {

std::size_t ucb_pick(const std::vector<double>& q,
                     const std::vector<std::size_t>& n, std::size_t t,
                     const std::vector<double>& weights, double c) {
  if (q.empty() || q.size() != n.size() || q.size() != weights.size())
    throw InputError("ucb_pick: empty or mismatched inputs");
  constexpr double kEps = 1e-9;
  double q_max = *std::max_element(q.begin(), q.end());
  double best = -std::numeric_limits<double>::infinity();
  std::size_t best_j = 0;
  for (std::size_t j = 0; j < q.size(); ++j) {
    double exploit = weights[j] * q[j] / (q_max + kEps);
    double explore =
        c * std::sqrt(2.0 * std::log(static_cast<double>(t) + 2.0) /
                      (static_cast<double>(n[j]) + 1.0));
    double score = exploit + explore;
    if (score > best) {
      best = score;
      best_j = j;
    }
  }
  return best_j;
}

std::vector<SampleRecord> ec_sampling(stp::Partition& part,
                                      bo::SamplerState& sampler,
                                      const RolloutFn& rollout_fn,
                                      std::size_t k,
                                      const sim::ScenarioGeometry& geom,
                                      const sim::ParamRanges& ranges,
                                      std::uint64_t seed,
                                      const EcSamplingOptions& options) {
  const std::size_t num_specs = part.num_specs();
  std::vector<double> weights = options.ucb_weights;
  if (weights.empty()) weights.assign(num_specs, 1.0);
  if (weights.size() != num_specs)
    throw InputError("ec_sampling: UCB weight count mismatch");

  Rng rng(derive_seed(seed, "ec-sampling"));

  // initial target spec: uniform over specs with nonzero weight
  std::vector<std::size_t> eligible;
  for (std::size_t j = 0; j < num_specs; ++j)
    if (weights[j] > 0.0) eligible.push_back(j);
  if (eligible.empty()) throw InputError("ec_sampling: no spec has weight > 0");
  std::size_t current = eligible[rng.next_index(eligible.size())];

  std::vector<std::size_t> attempts(num_specs, 0);  // N, this call only
  std::vector<double> q(num_specs, 0.0);
  auto recompute_q = [&] {
    auto landed = part.landed_counts();
    std::size_t mx = *std::max_element(landed.begin(), landed.end());
    for (std::size_t j = 0; j < num_specs; ++j)
      q[j] = static_cast<double>(mx) - static_cast<double>(landed[j]);
  };

  std::vector<SampleRecord> records;
  records.reserve(k);
  for (std::size_t t = 0; t < k; ++t) {
    SampleRecord rec;
    rec.iteration = t;
    rec.target_spec = current;
    rec.e = bo::propose(sampler, current, ranges, rng);
    ++attempts[current];
    ++part.attempts[current];
    rec.seed = derive_seed(seed, "ec-rollout", t);
    rec.traj = rollout_fn(rec.e, rec.seed);

    // target against the store before this trajectory lands in it
    rec.target = bo::target_value(part, current, rec.traj, geom,
                                  sampler.config.bonus_coeff,
                                  sampler.config.dtw_cap);
    rec.landed_spec = stp::classify_and_record(part, rec.e, rec.traj, geom);
    bo::observe(sampler, current, rec.e, rec.target, ranges);

    recompute_q();
    current = ucb_pick(q, attempts, t, weights, options.ucb_c);

    rec.q_after = q;
    rec.n_after = attempts;
    records.push_back(std::move(rec));
  }
  return records;
}

std::string bandit_trace_csv(const std::vector<SampleRecord>& records) {
  std::string out =
      "t,target_spec,ego_init_distance,ado_side,ado_maneuver,"
      "ado_init_distance,ado_min_speed,ado_max_speed,landed_spec,target,"
      "q,n\n";
  for (const auto& r : records) {
    out += std::to_string(r.iteration) + "," + std::to_string(r.target_spec) +
           "," + format_double(r.e.ego_init_distance) + "," +
           sim::to_string(r.e.ado_side) + "," +
           sim::to_string(r.e.ado_maneuver) + "," +
           format_double(r.e.ado_init_distance) + "," +
           format_double(r.e.ado_min_speed) + "," +
           format_double(r.e.ado_max_speed) + "," +
           std::to_string(r.landed_spec) + "," + format_double(r.target) + ",";
    for (std::size_t j = 0; j < r.q_after.size(); ++j)
      out += (j ? ";" : "") + format_double(r.q_after[j]);
    out += ",";
    for (std::size_t j = 0; j < r.n_after.size(); ++j)
      out += (j ? ";" : "") + std::to_string(r.n_after[j]);
    out += "\n";
  }
  return out;
}

}  // namespace sgda::ecs
