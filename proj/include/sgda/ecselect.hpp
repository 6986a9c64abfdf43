#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "sgda/util.hpp"

namespace sgda::ecsel {

// Per-spec mismatch counters built from the previous round's (expert spec,
// imitation spec) outcome pairs. A matched pair touches one spec's N once; a
// mismatched pair touches both involved specs' N once each. M counts expert
// outcomes the imitation matched.
struct OutcomePairTable {
  explicit OutcomePairTable(std::size_t num_specs)
      : involved(num_specs, 0), matched(num_specs, 0) {}

  void add_pair(std::size_t expert_spec, std::size_t il_spec);
  std::size_t num_specs() const { return involved.size(); }

  std::vector<std::size_t> involved;  // N_phi
  std::vector<std::size_t> matched;   // M_phi
};

// weight_phi = (N - M) / N when N > 0, else 1. The single correctly-rounded
// integer division keeps the worked examples exact.
std::vector<double> selection_weights(const OutcomePairTable& table);

// Selects m pool members without replacement. With weights: draw a spec from
// the weight distribution restricted to specs with remaining members, then a
// member of that spec uniformly; a drained spec drops out of the
// normalization. Without weights (round 0) the draw is uniform over the
// pool. All weights zero falls back to uniform. Returns indices into the
// pool. Throws InputError when m exceeds the pool size.
std::vector<std::size_t> ec_select(const std::vector<std::size_t>& pool_specs,
                                   const std::optional<std::vector<double>>& weights,
                                   std::size_t m, Rng& rng);

// Selection report CSV: spec, N, M, weight, pool members, selected count.
std::string selection_csv(const OutcomePairTable& table,
                          const std::vector<double>& weights,
                          const std::vector<std::size_t>& pool_specs,
                          const std::vector<std::size_t>& selected);

}  // namespace sgda::ecsel
