#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "sgda/simenv.hpp"
#include "sgda/stl.hpp"

namespace sgda::stp {

struct Property {
  std::string name;
  stl::FormulaPtr formula;
  double weight = 0.5;  // strictly inside (0,1)
};

// One partition element: the conjunction over all properties, each either
// as-is (sign bit set) or negated. index == binary encoding of the sign bits.
struct Specification {
  std::size_t index = 0;
  std::vector<bool> signs;  // signs[i] <=> property i appears non-negated

  stl::FormulaPtr literal_formula(const std::vector<Property>& props) const;
  std::string sign_string() const;  // e.g. "101", bit i = character i
};

struct LandedSample {
  sim::EnvCondition e;
  sim::Trajectory traj;
};

// The semantic trajectory partition: all 2^l sign-conjunctions plus per-spec
// bookkeeping (landed trajectory stores, cumulative sampling attempts,
// weights from the property-weight product).
struct Partition {
  std::vector<Property> properties;
  std::vector<Specification> specs;            // canonical index order
  std::vector<std::vector<LandedSample>> landed;
  std::vector<std::size_t> attempts;           // cumulative N_phi
  std::vector<double> spec_weights;

  std::size_t num_properties() const { return properties.size(); }
  std::size_t num_specs() const { return specs.size(); }
  std::vector<std::size_t> landed_counts() const;
};

inline constexpr std::size_t kMaxProperties = 8;

// Enumerates all 2^l specifications. Throws ConfigError when l is 0 or
// exceeds the cap.
Partition build_partition(std::vector<Property> props);

// Per-property robustness of a trajectory's signals.
std::vector<double> robustness_vector(const Partition& part,
                                      const stl::SignalTable& signals);
std::vector<double> robustness_vector(const Partition& part,
                                      const sim::Trajectory& traj,
                                      const sim::ScenarioGeometry& geom);

// Spec-level robustness: min over sign-adjusted per-property values.
double spec_robustness(const Specification& spec, const std::vector<double>& rho);

// Index of the unique spec the trajectory satisfies (sign-vector encoding of
// the per-property Boolean values; no 2^l scan).
std::size_t classify(const Partition& part, const stl::SignalTable& signals);
std::size_t classify(const Partition& part, const sim::Trajectory& traj,
                     const sim::ScenarioGeometry& geom);

// Recording variant: also appends (e, traj) to the landed store. Mutates the
// partition; callers serialize writes.
std::size_t classify_and_record(Partition& part, const sim::EnvCondition& e,
                                const sim::Trajectory& traj,
                                const sim::ScenarioGeometry& geom);

// CSV with one row per spec: index, sign pattern, landed count, attempts,
// weight.
std::string partition_csv(const Partition& part);

}  // namespace sgda::stp
