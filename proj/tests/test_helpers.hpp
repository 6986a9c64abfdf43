#pragma once

#include <vector>

#include "sgda/simenv.hpp"
#include "sgda/stl.hpp"
#include "sgda/stp.hpp"
#include "sgda/util.hpp"

namespace sgda::test {

inline sim::ScenarioGeometry test_geometry() {
  return sim::ScenarioGeometry{};  // desk defaults
}

inline sim::ExpertParams test_expert_params() { return sim::ExpertParams{}; }

// The three monitored properties with default weights.
inline std::vector<stp::Property> standard_properties() {
  return {
      {"no_collision", stl::parse_formula("G(ego_ado_distance >= 0)"), 0.5},
      {"no_halt", stl::parse_formula("G(ego_speed >= 0.05)"), 0.5},
      {"no_hard_brake", stl::parse_formula("G(brake_intensity <= 0.4)"), 0.5},
  };
}

// Builds a trajectory whose extracted signals take exactly the given values.
// The ado sits on the +x axis at (gap + radius sum) so ego_ado_distance
// equals `dist`, ego speed equals `speed`, and the action encodes `brake`.
inline sim::Trajectory fabricate_trajectory(const std::vector<double>& dist,
                                            const std::vector<double>& speed,
                                            const std::vector<double>& brake,
                                            const sim::ScenarioGeometry& geom,
                                            double dt = 0.1) {
  sim::Trajectory traj;
  double radius_sum = geom.ego_radius + geom.ado_radius;
  for (std::size_t k = 0; k < dist.size(); ++k) {
    sim::Step step;
    step.state.t = static_cast<double>(k) * dt;
    step.state.ego = {0.0, 0.0, 0.0, speed[k]};
    step.state.ado = {dist[k] + radius_sum, 0.0, 0.0, 0.0};
    step.action.longitudinal = -brake[k];
    traj.steps.push_back(step);
  }
  return traj;
}

// Random trajectory covering both sides of every property threshold.
inline sim::Trajectory random_trajectory(Rng& rng, std::size_t max_len = 20) {
  std::size_t n = 1 + rng.next_index(max_len);
  std::vector<double> dist(n), speed(n), brake(n);
  for (std::size_t k = 0; k < n; ++k) {
    dist[k] = rng.uniform(-1.0, 10.0);
    speed[k] = rng.uniform(0.0, 12.0);
    brake[k] = rng.next_double() < 0.5 ? 0.0 : rng.uniform(0.0, 1.0);
  }
  return fabricate_trajectory(dist, speed, brake, test_geometry());
}

// Random signal table over the standard signal names, dyadic values so
// shift/duality identities stay exact in floating point.
inline stl::SignalTable random_signal_table(Rng& rng, std::size_t max_len = 50) {
  std::size_t n = 1 + rng.next_index(max_len);
  stl::SignalTable table;
  for (const char* name : {"ego_ado_distance", "ego_speed", "brake_intensity"}) {
    stl::Signal s;
    s.name = name;
    for (std::size_t k = 0; k < n; ++k) {
      s.times.push_back(0.1 * static_cast<double>(k));
      s.values.push_back(static_cast<double>(
                             static_cast<long>(rng.next_index(161)) - 80) /
                         8.0);  // dyadic in [-10, 10]
    }
    table.signals.push_back(std::move(s));
  }
  return table;
}

// Random formula of bounded depth over the standard signal names.
inline stl::FormulaPtr random_formula(Rng& rng, int depth = 3) {
  const char* names[] = {"ego_ado_distance", "ego_speed", "brake_intensity"};
  if (depth == 0 || rng.next_double() < 0.3) {
    const char* name = names[rng.next_index(3)];
    double c = static_cast<double>(static_cast<long>(rng.next_index(161)) - 80) / 8.0;
    return rng.next_double() < 0.5 ? stl::atom_ge(name, c) : stl::atom_le(name, c);
  }
  switch (rng.next_index(5)) {
    case 0: return stl::negate(random_formula(rng, depth - 1));
    case 1:
      return stl::conj({random_formula(rng, depth - 1),
                        random_formula(rng, depth - 1)});
    case 2:
      return stl::disj({random_formula(rng, depth - 1),
                        random_formula(rng, depth - 1)});
    case 3: return stl::globally(random_formula(rng, depth - 1));
    default: return stl::eventually(random_formula(rng, depth - 1));
  }
}

}  // namespace sgda::test
