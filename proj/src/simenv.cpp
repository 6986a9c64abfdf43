#include "sgda/simenv.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "sgda/errors.hpp"

namespace sgda::sim {

std::string to_string(AdoSide s) {
  switch (s) {
    case AdoSide::Opposite: return "opposite";
    case AdoSide::Left: return "left";
    case AdoSide::Right: return "right";
  }
  return "?";
}

std::string to_string(Maneuver m) {
  switch (m) {
    case Maneuver::Straight: return "straight";
    case Maneuver::Left: return "left";
    case Maneuver::Right: return "right";
  }
  return "?";
}

AdoSide ado_side_from_string(const std::string& s) {
  if (s == "opposite") return AdoSide::Opposite;
  if (s == "left") return AdoSide::Left;
  if (s == "right") return AdoSide::Right;
  throw ConfigError("unknown ado side: " + s);
}

Maneuver maneuver_from_string(const std::string& s) {
  if (s == "straight") return Maneuver::Straight;
  if (s == "left") return Maneuver::Left;
  if (s == "right") return Maneuver::Right;
  throw ConfigError("unknown maneuver: " + s);
}

std::string to_string(Termination t) {
  switch (t) {
    case Termination::GoalReached: return "goal_reached";
    case Termination::Collision: return "collision";
    case Termination::Timeout: return "timeout";
  }
  return "?";
}

Termination termination_from_string(const std::string& s) {
  if (s == "goal_reached") return Termination::GoalReached;
  if (s == "collision") return Termination::Collision;
  if (s == "timeout") return Termination::Timeout;
  throw InputError("unknown termination: " + s);
}

void validate_env(const EnvCondition& e, const ParamRanges& r) {
  auto in = [](double v, double lo, double hi) { return v >= lo && v <= hi; };
  if (!in(e.ego_init_distance, r.ego_init_distance_min, r.ego_init_distance_max))
    throw InputError("ego_init_distance out of range");
  if (!in(e.ado_init_distance, r.ado_init_distance_min, r.ado_init_distance_max))
    throw InputError("ado_init_distance out of range");
  if (!in(e.ado_min_speed, r.ado_speed_min, r.ado_speed_max) ||
      !in(e.ado_max_speed, r.ado_speed_min, r.ado_speed_max))
    throw InputError("ado speed out of range");
  if (e.ado_min_speed > e.ado_max_speed)
    throw InputError("ado_min_speed exceeds ado_max_speed");
}

EnvCondition sample_uniform_env(const ParamRanges& r, Rng& rng) {
  EnvCondition e;
  e.ego_init_distance = rng.uniform(r.ego_init_distance_min, r.ego_init_distance_max);
  e.ado_side = static_cast<AdoSide>(rng.next_index(3));
  e.ado_maneuver = static_cast<Maneuver>(rng.next_index(3));
  e.ado_init_distance = rng.uniform(r.ado_init_distance_min, r.ado_init_distance_max);
  double a = rng.uniform(r.ado_speed_min, r.ado_speed_max);
  double b = rng.uniform(r.ado_speed_min, r.ado_speed_max);
  e.ado_min_speed = std::min(a, b);
  e.ado_max_speed = std::max(a, b);
  return e;
}

void validate_geometry(const ScenarioGeometry& geom) {
  if (geom.lane_width <= 0 || geom.ego_radius <= 0 || geom.ado_radius <= 0 ||
      geom.dt <= 0 || geom.max_steps <= 0 || geom.max_accel <= 0 ||
      geom.max_decel <= 0 || geom.ado_accel <= 0 || geom.approach_length <= 0)
    throw ConfigError("scenario geometry has non-positive dimensions");
  if (geom.approach_length <= 2 * geom.lane_width)
    throw ConfigError("approach_length must exceed the intersection box");
}

// ---------------------------------------------------------------------------
// Paths

PolylinePath::PolylinePath(std::vector<double> xs, std::vector<double> ys)
    : xs_(std::move(xs)), ys_(std::move(ys)) {
  if (xs_.size() != ys_.size() || xs_.size() < 2)
    throw InputError("polyline needs >= 2 points");
  cum_.resize(xs_.size());
  cum_[0] = 0.0;
  for (std::size_t i = 1; i < xs_.size(); ++i)
    cum_[i] = cum_[i - 1] + std::hypot(xs_[i] - xs_[i - 1], ys_[i] - ys_[i - 1]);
}

void PolylinePath::sample(double s, double* x, double* y, double* heading) const {
  const std::size_t last = xs_.size() - 1;
  if (s >= cum_.back()) {
    // extrapolate along the final segment
    double dx = xs_[last] - xs_[last - 1];
    double dy = ys_[last] - ys_[last - 1];
    double len = std::hypot(dx, dy);
    double over = s - cum_.back();
    *x = xs_[last] + dx / len * over;
    *y = ys_[last] + dy / len * over;
    *heading = std::atan2(dy, dx);
    return;
  }
  if (s < 0) s = 0;
  auto it = std::upper_bound(cum_.begin(), cum_.end(), s);
  std::size_t hi = std::min<std::size_t>(std::distance(cum_.begin(), it), last);
  if (hi == 0) hi = 1;
  std::size_t lo = hi - 1;
  double seg = cum_[hi] - cum_[lo];
  double f = seg > 0 ? (s - cum_[lo]) / seg : 0.0;
  *x = xs_[lo] + f * (xs_[hi] - xs_[lo]);
  *y = ys_[lo] + f * (ys_[hi] - ys_[lo]);
  *heading = std::atan2(ys_[hi] - ys_[lo], xs_[hi] - xs_[lo]);
}

bool segment_hits_box(double x0, double y0, double x1, double y1,
                      const OccluderBox& box) {
  // Liang-Barsky clipping.
  double t0 = 0.0, t1 = 1.0;
  double dx = x1 - x0, dy = y1 - y0;
  auto clip = [&](double p, double q) {
    if (p == 0.0) return q >= 0.0;
    double r = q / p;
    if (p < 0.0) {
      if (r > t1) return false;
      if (r > t0) t0 = r;
    } else {
      if (r < t0) return false;
      if (r < t1) t1 = r;
    }
    return true;
  };
  return clip(-dx, x0 - box.xmin) && clip(dx, box.xmax - x0) &&
         clip(-dy, y0 - box.ymin) && clip(dy, box.ymax - y0);
}

Approach ado_approach(AdoSide side) {
  // Ego approaches from South heading north: its left arm is West.
  switch (side) {
    case AdoSide::Opposite: return Approach::North;
    case AdoSide::Left: return Approach::West;
    case AdoSide::Right: return Approach::East;
  }
  return Approach::North;
}

namespace {

struct Pt {
  double x, y;
};

// Rotation applied to the South-approach template path.
Pt rotate_from_south(Approach a, Pt p) {
  switch (a) {
    case Approach::South: return p;
    case Approach::West: return {p.y, -p.x};    // -90 deg
    case Approach::North: return {-p.x, -p.y};  // 180 deg
    case Approach::East: return {-p.y, p.x};    // +90 deg
  }
  return p;
}

void append_arc(std::vector<Pt>& pts, Pt center, double radius,
                double theta0, double theta1) {
  double arc_len = std::abs(theta1 - theta0) * radius;
  int n = std::max(2, static_cast<int>(std::ceil(arc_len / 0.2)));
  for (int i = 1; i <= n; ++i) {
    double th = theta0 + (theta1 - theta0) * i / n;
    pts.push_back({center.x + radius * std::cos(th),
                   center.y + radius * std::sin(th)});
  }
}

}  // namespace

PolylinePath build_path(Approach approach, Maneuver maneuver,
                        const ScenarioGeometry& geom) {
  const double w = geom.lane_width;   // intersection box is [-w, w]^2
  const double half = w / 2.0;        // lane center offset
  const double A = geom.approach_length;
  const double E = geom.exit_length;

  // Template: approaching from South in lane x = +w/2, heading north.
  std::vector<Pt> pts;
  pts.push_back({half, -A});
  pts.push_back({half, -w});
  switch (maneuver) {
    case Maneuver::Straight:
      pts.push_back({half, w});
      pts.push_back({half, w + E});
      break;
    case Maneuver::Right:
      // quarter arc, radius w/2, around the near corner (w, -w)
      append_arc(pts, {w, -w}, half, M_PI, M_PI / 2.0);
      pts.push_back({w + E, -half});
      break;
    case Maneuver::Left:
      // quarter arc, radius 3w/2, around the far-left corner (-w, -w)
      append_arc(pts, {-w, -w}, 1.5 * w, 0.0, M_PI / 2.0);
      pts.push_back({-(w + E), half});
      break;
  }

  std::vector<double> xs, ys;
  xs.reserve(pts.size());
  ys.reserve(pts.size());
  for (Pt p : pts) {
    Pt q = rotate_from_south(approach, p);
    xs.push_back(q.x);
    ys.push_back(q.y);
  }
  return PolylinePath(std::move(xs), std::move(ys));
}

// ---------------------------------------------------------------------------
// Rollout

double ado_speed_command(double current_speed, const EnvCondition& e,
                         const ScenarioGeometry& geom) {
  double next = std::min(current_speed + geom.ado_accel * geom.dt, e.ado_max_speed);
  return std::max(next, std::min(e.ado_min_speed, e.ado_max_speed));
}

Trajectory rollout(const Policy& policy, const EnvCondition& e,
                   const ScenarioGeometry& geom, std::uint64_t seed) {
  validate_geometry(geom);
  if (e.ado_min_speed > e.ado_max_speed || e.ado_min_speed < 0 ||
      e.ego_init_distance <= 0 || e.ado_init_distance <= 0)
    throw InputError("invalid environment condition");
  if (e.ego_init_distance >= geom.approach_length ||
      e.ado_init_distance >= geom.approach_length)
    throw InputError("spawn distance beyond approach length");

  const PolylinePath ego_path = build_path(Approach::South, geom.ego_maneuver, geom);
  const PolylinePath ado_path =
      build_path(ado_approach(e.ado_side), e.ado_maneuver, geom);

  double ego_s = geom.approach_length - e.ego_init_distance;
  double ado_s = geom.approach_length - e.ado_init_distance;
  double ego_speed = geom.ego_init_speed;
  double ego_accel = 0.0;
  double ado_speed = std::min(e.ado_min_speed, e.ado_max_speed);
  int sight_age = -1;

  const double radius_sum = geom.ego_radius + geom.ado_radius;
  const double pos_sigma = std::sqrt(geom.obs_pos_variance);
  const double speed_sigma = std::sqrt(geom.obs_speed_variance);

  Trajectory traj;
  for (int k = 0;; ++k) {
    State st;
    st.t = k * geom.dt;
    ego_path.sample(ego_s, &st.ego.x, &st.ego.y, &st.ego.heading);
    st.ego.speed = ego_speed;
    st.ego_accel = ego_accel;

    if (geom.ado_enabled) {
      ado_path.sample(ado_s, &st.ado.x, &st.ado.y, &st.ado.heading);
      st.ado.speed = ado_speed;
      st.ado_visible = !segment_hits_box(st.ego.x, st.ego.y, st.ado.x, st.ado.y,
                                         geom.occluder);
    } else {
      st.ado = VehicleState{1e9, 1e9, 0.0, 0.0};
      st.ado_visible = false;
    }
    if (st.ado_visible && sight_age < 0) sight_age = 0;
    st.sight_age = sight_age;
    if (st.ado_visible) {
      // Counter-based noise keyed on (seed, step): identical for any policy.
      auto c = static_cast<std::uint64_t>(k);
      st.ado_obs = AdoObservation{
          st.ado.x + pos_sigma * gaussian_from_counter(seed, 3 * c),
          st.ado.y + pos_sigma * gaussian_from_counter(seed, 3 * c + 1),
          st.ado.speed + speed_sigma * gaussian_from_counter(seed, 3 * c + 2)};
    }

    Action a = policy.act(st);
    a.longitudinal = std::clamp(a.longitudinal, -1.0, 1.0);
    traj.steps.push_back({st, a});

    double gap = geom.ado_enabled
                     ? std::hypot(st.ego.x - st.ado.x, st.ego.y - st.ado.y) - radius_sum
                     : 1e9;
    if (gap <= 0.0) {
      traj.termination = Termination::Collision;
      break;
    }
    if (ego_s >= ego_path.length()) {
      traj.termination = Termination::GoalReached;
      break;
    }
    if (k + 1 >= geom.max_steps) {
      traj.termination = Termination::Timeout;
      break;
    }

    // Semi-implicit Euler for the ego's longitudinal motion.
    double accel = a.longitudinal >= 0 ? a.longitudinal * geom.max_accel
                                       : a.longitudinal * geom.max_decel;
    ego_speed = std::max(0.0, ego_speed + accel * geom.dt);
    ego_s += ego_speed * geom.dt;
    ego_accel = accel;

    ado_speed = ado_speed_command(ado_speed, e, geom);
    ado_s += ado_speed * geom.dt;
    if (sight_age >= 0) ++sight_age;
  }
  return traj;
}

// ---------------------------------------------------------------------------
// Scripted expert

namespace {
double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }
}  // namespace

namespace {

// Deceleration needed to stop short of the conflict zone, as a brake
// fraction. Noise-free: depends only on the ego's own state.
double stop_brake(const ExpertParams& p, const State& st, double ego_gap) {
  double stop_dist = std::max(ego_gap - p.stop_buffer, p.min_stop_distance);
  double brake = std::clamp(p.brake_gain * st.ego.speed * st.ego.speed /
                                (2.0 * stop_dist * p.decel_capacity),
                            0.0, 1.0);
  if (st.ego.speed < p.crawl_speed) brake = std::max(brake, p.hold_brake);
  return brake;
}

}  // namespace

Action ScriptedExpert::act(const State& st) const {
  const ExpertParams& p = params_;
  double cruise = clamp01(p.cruise_gain * (p.target_speed - st.ego.speed));
  double dist_center = std::hypot(st.ego.x, st.ego.y);
  double ego_gap = dist_center - p.conflict_radius;

  // Committed restart: after coming (nearly) to a stop the driver pulls out
  // and stops cross-checking until back up to speed.
  if (st.ego.speed > 0.02 && st.ego.speed < p.commit_speed &&
      st.ego_accel >= 0.0)
    return {cruise};

  // The noisy conflict gate runs at a human-ish decision rate; between ticks
  // an ongoing brake keeps tracking the (noise-free) stop profile.
  bool braking = st.ego_accel < -0.05;
  long step = std::lround(st.t / p.dt);
  if (p.decision_hold > 1 && step % p.decision_hold != 0) {
    if (braking) return {-stop_brake(p, st, ego_gap)};
    return {cruise};
  }

  if (!st.ado_visible || !st.ado_obs || st.sight_age < p.reaction_steps)
    return {cruise};

  double dirx = std::cos(st.ego.heading), diry = std::sin(st.ego.heading);
  // only react while heading toward the intersection or still inside it
  bool approaching = (-st.ego.x * dirx - st.ego.y * diry) > 0.0 || ego_gap < 0.0;
  if (!approaching) return {cruise};

  double ado_gap = std::hypot(st.ado_obs->x, st.ado_obs->y) - p.conflict_radius;
  // oncoming traffic tracking the opposite lane is parallel, not crossing;
  // the central band stays guarded (a turner reveals itself there)
  if (std::abs(st.ado_obs->x + st.ego.x) < p.corridor_halfwidth &&
      std::abs(st.ado_obs->y) > p.conflict_radius + 1.0)
    return {cruise};

  // waiting at a stop, anything that looks far enough away reads as clear
  // (the observation carries no approach/recede direction)
  if (st.ego.speed < 0.3 && ado_gap + p.conflict_radius > p.release_distance)
    return {cruise};

  // straight-line extrapolation of the noisy observation toward the zone;
  // the speed estimate is blended with a prior to tame far-range jitter
  double tte = std::max(0.0, ego_gap) / std::max(st.ego.speed, 0.5);
  double v_hat = std::max(0.5, p.speed_blend * st.ado_obs->speed +
                                   (1.0 - p.speed_blend) * p.prior_speed);
  double tta = std::max(0.0, ado_gap) / v_hat;
  double overlap = std::abs(tte - tta);
  // strict margin to start braking, wider one to keep the foot on the brake
  double margin =
      braking ? p.time_margin + p.hysteresis_margin : p.entry_margin;
  bool imminent = std::min(tte, tta) < p.imminence_horizon;
  if (overlap >= margin || !imminent) {
    // near-conflict: coast rather than throttle back toward the crossing
    if (imminent && overlap < p.time_margin + p.coast_band) return {0.0};
    return {cruise};
  }

  // brake with the deceleration needed to stop short of the zone
  return {-stop_brake(p, st, ego_gap)};
}

}  // namespace sgda::sim
