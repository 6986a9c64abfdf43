#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sgda/util.hpp"

namespace sgda::sim {

enum class AdoSide { Opposite, Left, Right };
enum class Maneuver { Straight, Left, Right };

std::string to_string(AdoSide s);
std::string to_string(Maneuver m);
AdoSide ado_side_from_string(const std::string& s);
Maneuver maneuver_from_string(const std::string& s);

// The environment condition e: one point in the scenario parameter space.
struct EnvCondition {
  double ego_init_distance = 30.0;  // spawn distance from intersection center, m
  AdoSide ado_side = AdoSide::Left;
  Maneuver ado_maneuver = Maneuver::Straight;
  double ado_init_distance = 30.0;
  double ado_min_speed = 5.0;  // m/s, spawn speed
  double ado_max_speed = 10.0;
};

struct ParamRanges {
  double ego_init_distance_min = 15.0, ego_init_distance_max = 45.0;
  double ado_init_distance_min = 10.0, ado_init_distance_max = 50.0;
  double ado_speed_min = 3.0, ado_speed_max = 15.0;
};

// Throws InputError when e lies outside the configured ranges.
void validate_env(const EnvCondition& e, const ParamRanges& ranges);
EnvCondition sample_uniform_env(const ParamRanges& ranges, Rng& rng);

struct VehicleState {
  double x = 0.0, y = 0.0;
  double heading = 0.0;  // rad, world frame
  double speed = 0.0;    // m/s, >= 0
};

struct AdoObservation {
  double x = 0.0, y = 0.0, speed = 0.0;  // noisy estimate
};

struct State {
  double t = 0.0;
  VehicleState ego;
  double ego_accel = 0.0;  // acceleration applied on the previous step, m/s^2
  VehicleState ado;
  bool ado_visible = false;
  std::optional<AdoObservation> ado_obs;  // present iff ado_visible
  // Simulator-maintained sighting clock: steps elapsed since the ado first
  // became visible, -1 if it never has. World state, not policy memory.
  int sight_age = -1;
};

struct Action {
  // Negative = brake fraction of max decel, positive = throttle fraction of
  // max accel. Clamped to [-1, 1].
  double longitudinal = 0.0;
};

enum class Termination { GoalReached, Collision, Timeout };
std::string to_string(Termination t);
Termination termination_from_string(const std::string& s);

struct Step {
  State state;
  Action action;
};

struct Trajectory {
  std::vector<Step> steps;
  Termination termination = Termination::Timeout;
};

// Arc-length parameterized polyline.
class PolylinePath {
 public:
  PolylinePath() = default;
  explicit PolylinePath(std::vector<double> xs, std::vector<double> ys);

  double length() const { return cum_.empty() ? 0.0 : cum_.back(); }
  // Position/heading at arc length s (clamped to [0, length]); beyond the end
  // the path extrapolates along its final segment direction.
  void sample(double s, double* x, double* y, double* heading) const;

 private:
  std::vector<double> xs_, ys_, cum_;
};

struct OccluderBox {
  double xmin = -20.0, ymin = -20.0, xmax = -5.0, ymax = -5.0;
};

// True when the segment (x0,y0)-(x1,y1) passes through the box.
bool segment_hits_box(double x0, double y0, double x1, double y1,
                      const OccluderBox& box);

struct ScenarioGeometry {
  double lane_width = 3.5;
  double ego_radius = 1.0, ado_radius = 1.0;
  OccluderBox occluder;
  double dt = 0.1;
  int max_steps = 300;
  double max_accel = 3.0;   // m/s^2
  double max_decel = 8.0;   // m/s^2 (positive magnitude)
  double ado_accel = 2.5;   // m/s^2
  double ego_init_speed = 8.0;
  double approach_length = 60.0;  // template approach length from center, m
  double exit_length = 30.0;      // path continues this far past the box, m
  Maneuver ego_maneuver = Maneuver::Straight;
  // Observation noise: variances per the appendix model.
  double obs_pos_variance = 2.0;    // m^2 per coordinate
  double obs_speed_variance = 1.0;  // (m/s)^2
  bool ado_enabled = true;          // test hook: spawn no ado when false
};

void validate_geometry(const ScenarioGeometry& geom);

// Compass arm a vehicle approaches from. The ego always approaches from
// South; ado sides map Left->West, Right->East, Opposite->North.
enum class Approach { South, North, West, East };
Approach ado_approach(AdoSide side);

// Builds the (approach, maneuver) lane path: approach leg, intersection
// crossing (straight or turn arc), exit leg. Right-hand traffic lanes.
PolylinePath build_path(Approach approach, Maneuver maneuver,
                        const ScenarioGeometry& geom);

struct Policy {
  virtual ~Policy() = default;
  virtual Action act(const State& state) const = 0;
};

// d(pi, e): deterministic rollout given (policy, e, geom, seed). The
// observation noise stream is keyed on (seed, step) only, so it is identical
// across policies under the same e.
Trajectory rollout(const Policy& policy, const EnvCondition& e,
                   const ScenarioGeometry& geom, std::uint64_t seed);

// Rushing ado speed update: accelerate toward max, never below spawn speed.
double ado_speed_command(double current_speed, const EnvCondition& e,
                         const ScenarioGeometry& geom);

struct ExpertParams {
  double target_speed = 8.0;
  double cruise_gain = 0.5;      // throttle per m/s of speed deficit
  double time_margin = 1.0;      // s; arrival-time overlap that keeps a brake
  double entry_margin = 0.5;     // s; stricter overlap needed to start braking
  double imminence_horizon = 2.2;  // s; ignore conflicts further out than this
  double hysteresis_margin = 0.6;  // extra window on top of time_margin while braking
  double coast_band = 0.8;       // s; near-conflicts coast instead of throttle
  double speed_blend = 0.6;      // weight of the noisy speed vs the prior
  double prior_speed = 9.0;      // m/s; assumed ado speed blended into tta
  double corridor_halfwidth = 3.0;  // m; react only to ados near the ego lane
  double dt = 0.1;               // control period, matches the simulator
  int decision_hold = 4;         // steps between re-evaluations while braking
  double conflict_radius = 4.0;  // m around the intersection center
  double stop_buffer = 1.5;      // m; aim to stop this far short of the zone
  double min_stop_distance = 0.5;  // m; floor for the required-decel division
  double brake_gain = 1.15;      // safety factor on the required deceleration
  double decel_capacity = 8.0;   // m/s^2 the driver assumes for full brake
  double crawl_speed = 0.5;      // m/s; below this, hold the brake to a stop
  double hold_brake = 0.15;
  double commit_speed = 2.5;     // m/s; a restart below this runs open-loop
  double release_distance = 9.0;  // m; from a stop, a farther ado reads as clear
  int reaction_steps = 3;        // latency after first sighting
};

// Deliberately fallible hand-written controller standing in for the expert:
// cruises to target speed; when the (noisy, occlusion-limited) observation
// predicts an arrival-time conflict, brakes with the deceleration required to
// stop short of the conflict zone, saturating at full brake when the notice
// is too short.
class ScriptedExpert : public Policy {
 public:
  explicit ScriptedExpert(ExpertParams params) : params_(params) {}
  Action act(const State& state) const override;
  const ExpertParams& params() const { return params_; }

 private:
  ExpertParams params_;
};

}  // namespace sgda::sim
