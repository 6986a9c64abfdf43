#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "sgda/errors.hpp"
#include "sgda/simenv.hpp"
#include "sgda/stl.hpp"
#include "test_helpers.hpp"

using namespace sgda;
using test::test_geometry;

namespace {

struct ConstantPolicy : sim::Policy {
  double value;
  explicit ConstantPolicy(double v) : value(v) {}
  sim::Action act(const sim::State&) const override { return {value}; }
};

bool states_equal(const sim::Step& a, const sim::Step& b) {
  auto eq = [](const sim::VehicleState& u, const sim::VehicleState& v) {
    return u.x == v.x && u.y == v.y && u.heading == v.heading && u.speed == v.speed;
  };
  if (!(a.state.t == b.state.t && eq(a.state.ego, b.state.ego) &&
        a.state.ego_accel == b.state.ego_accel && eq(a.state.ado, b.state.ado) &&
        a.state.ado_visible == b.state.ado_visible &&
        a.state.sight_age == b.state.sight_age &&
        a.action.longitudinal == b.action.longitudinal))
    return false;
  if (a.state.ado_obs.has_value() != b.state.ado_obs.has_value()) return false;
  if (a.state.ado_obs) {
    if (!(a.state.ado_obs->x == b.state.ado_obs->x &&
          a.state.ado_obs->y == b.state.ado_obs->y &&
          a.state.ado_obs->speed == b.state.ado_obs->speed))
      return false;
  }
  return true;
}

}  // namespace

TEST_CASE("zero policy with zero initial speed never moves and times out") {
  auto geom = test_geometry();
  geom.ego_init_speed = 0.0;
  geom.ado_enabled = false;
  ConstantPolicy idle(0.0);
  auto traj = sim::rollout(idle, sim::EnvCondition{}, geom, 1);
  CHECK(traj.termination == sim::Termination::Timeout);
  CHECK(traj.steps.size() == static_cast<std::size_t>(geom.max_steps));
  double x0 = traj.steps.front().state.ego.x;
  double y0 = traj.steps.front().state.ego.y;
  for (const auto& s : traj.steps) {
    CHECK(s.state.ego.speed == 0.0);
    CHECK(s.state.ego.x == x0);
    CHECK(s.state.ego.y == y0);
  }
}

TEST_CASE("full throttle on an empty road: nondecreasing speed until the goal") {
  auto geom = test_geometry();
  geom.ado_enabled = false;
  ConstantPolicy full(1.0);
  auto traj = sim::rollout(full, sim::EnvCondition{}, geom, 2);
  CHECK(traj.termination == sim::Termination::GoalReached);
  for (std::size_t k = 1; k < traj.steps.size(); ++k)
    CHECK(traj.steps[k].state.ego.speed >= traj.steps[k - 1].state.ego.speed);
}

TEST_CASE("five-step Euler integration matches a hand-computed rollout") {
  auto geom = test_geometry();
  geom.ado_enabled = false;
  geom.ego_init_speed = 8.0;
  ConstantPolicy half_brake(-0.5);
  sim::EnvCondition e;
  e.ego_init_distance = 30.0;
  auto traj = sim::rollout(half_brake, e, geom, 3);
  REQUIRE(traj.steps.size() >= 5);

  // Independent replica: a = -0.5 * 8 = -4 m/s^2, dt = 0.1,
  // v' = max(0, v + a dt), s' = s + v' dt, spawn 30 m south of the center
  // on the lane x = 1.75.
  double v = 8.0, y = -30.0;
  for (int k = 0; k < 5; ++k) {
    const auto& st = traj.steps[k].state;
    CHECK(st.ego.x == doctest::Approx(1.75).epsilon(1e-12));
    CHECK(st.ego.y == doctest::Approx(y).epsilon(1e-12));
    CHECK(st.ego.speed == doctest::Approx(v).epsilon(1e-12));
    CHECK(st.t == doctest::Approx(0.1 * k).epsilon(1e-12));
    v = std::max(0.0, v - 4.0 * 0.1);
    y += v * 0.1;
  }
  // recorded acceleration lags one step
  CHECK(traj.steps[0].state.ego_accel == 0.0);
  CHECK(traj.steps[1].state.ego_accel == doctest::Approx(-4.0));
}

TEST_CASE("rollouts are bit-identical under the same seed") {
  auto geom = test_geometry();
  sim::ScriptedExpert expert({});
  sim::EnvCondition e;
  e.ado_side = sim::AdoSide::Left;
  e.ado_init_distance = 25.0;
  e.ado_min_speed = 6.0;
  e.ado_max_speed = 12.0;
  auto a = sim::rollout(expert, e, geom, 99);
  auto b = sim::rollout(expert, e, geom, 99);
  REQUIRE(a.steps.size() == b.steps.size());
  CHECK(a.termination == b.termination);
  for (std::size_t k = 0; k < a.steps.size(); ++k)
    CHECK(states_equal(a.steps[k], b.steps[k]));
}

TEST_CASE("observation noise stream does not depend on the policy") {
  auto geom = test_geometry();
  sim::EnvCondition e;
  e.ado_side = sim::AdoSide::Opposite;  // clear sightline from the start
  e.ado_maneuver = sim::Maneuver::Left;
  e.ado_init_distance = 40.0;
  e.ado_min_speed = 4.0;
  e.ado_max_speed = 9.0;
  ConstantPolicy idle(0.0);
  ConstantPolicy full(1.0);
  auto a = sim::rollout(idle, e, geom, 7);
  auto b = sim::rollout(full, e, geom, 7);
  std::size_t compared = 0;
  for (std::size_t k = 0; k < std::min(a.steps.size(), b.steps.size()); ++k) {
    const auto& sa = a.steps[k].state;
    const auto& sb = b.steps[k].state;
    if (sa.ado_obs && sb.ado_obs) {
      // noise offsets agree even though the ego states differ
      CHECK(sa.ado_obs->x - sa.ado.x == doctest::Approx(sb.ado_obs->x - sb.ado.x));
      CHECK(sa.ado_obs->y - sa.ado.y == doctest::Approx(sb.ado_obs->y - sb.ado.y));
      CHECK(sa.ado_obs->speed - sa.ado.speed ==
            doctest::Approx(sb.ado_obs->speed - sb.ado.speed));
      ++compared;
    }
  }
  CHECK(compared > 10);
}

TEST_CASE("collision termination iff the minimum gap is non-positive") {
  auto geom = test_geometry();
  sim::ScriptedExpert expert({});
  Rng rng(21);
  int collisions = 0;
  for (int i = 0; i < 60; ++i) {
    auto e = sim::sample_uniform_env(sim::ParamRanges{}, rng);
    auto traj = sim::rollout(expert, e, geom, derive_seed(21, "case", i));
    auto table = stl::extract_signals(traj, geom);
    double min_gap = 1e18;
    for (double v : table.at("ego_ado_distance").values)
      min_gap = std::min(min_gap, v);
    if (traj.termination == sim::Termination::Collision) {
      ++collisions;
      CHECK(min_gap <= 0.0);
      CHECK(table.at("ego_ado_distance").values.back() <= 0.0);
    } else {
      CHECK(min_gap > 0.0);
    }
    for (const auto& s : traj.steps) CHECK(s.state.ego.speed >= 0.0);
  }
  INFO("collisions seen: " << collisions);
}

TEST_CASE("ado controller accelerates to max speed and holds it") {
  auto geom = test_geometry();
  sim::EnvCondition e;
  e.ado_min_speed = 4.0;
  e.ado_max_speed = 10.0;
  CHECK(sim::ado_speed_command(10.0, e, geom) == doctest::Approx(10.0));
  CHECK(sim::ado_speed_command(4.0, e, geom) ==
        doctest::Approx(4.0 + geom.ado_accel * geom.dt));
  CHECK(sim::ado_speed_command(9.99, e, geom) == doctest::Approx(10.0));
  // never below the spawn speed
  CHECK(sim::ado_speed_command(0.0, e, geom) >= 4.0);
}

TEST_CASE("ado crossing: distance signal grows monotonically after the pass") {
  auto geom = test_geometry();
  geom.ego_init_speed = 0.0;  // park the ego so only the ado moves
  ConstantPolicy idle(0.0);
  sim::EnvCondition e;
  e.ado_side = sim::AdoSide::Right;
  e.ado_maneuver = sim::Maneuver::Straight;
  e.ado_init_distance = 20.0;
  e.ado_min_speed = 8.0;
  e.ado_max_speed = 8.0;
  auto traj = sim::rollout(idle, e, geom, 5);
  auto table = stl::extract_signals(traj, geom);
  const auto& dist = table.at("ego_ado_distance").values;
  auto min_it = std::min_element(dist.begin(), dist.end());
  for (auto it = min_it; it + 1 != dist.end(); ++it) CHECK(*(it + 1) >= *it);
  CHECK(dist.back() > *min_it);  // the ado leaves the scene
}

TEST_CASE("scripted expert cruises when nothing is visible") {
  sim::ExpertParams p;
  sim::ScriptedExpert expert(p);
  sim::State st;
  st.ego = {1.75, -20.0, M_PI / 2, 5.0};
  st.ado_visible = false;
  auto a = expert.act(st);
  CHECK(a.longitudinal > 0.0);  // below target speed -> throttle

  st.ego.speed = p.target_speed;
  CHECK(expert.act(st).longitudinal == 0.0);
}

TEST_CASE("scripted expert slams the brake at tiny time-to-conflict") {
  sim::ExpertParams p;
  sim::ScriptedExpert expert(p);
  sim::State st;
  st.ego = {1.75, -5.0, M_PI / 2, 10.0};  // 5 m from center at 10 m/s
  st.ado = {-4.0, -1.75, 0.0, 12.0};
  st.ado_visible = true;
  st.sight_age = p.reaction_steps;
  st.ado_obs = sim::AdoObservation{-4.0, -1.75, 12.0};
  auto a = expert.act(st);
  CHECK(a.longitudinal == doctest::Approx(-1.0));
}

TEST_CASE("scripted expert ignores the ado during the reaction latency") {
  sim::ExpertParams p;
  sim::ScriptedExpert expert(p);
  sim::State st;
  st.ego = {1.75, -5.0, M_PI / 2, 10.0};
  st.ado_visible = true;
  st.sight_age = p.reaction_steps - 1;
  st.ado_obs = sim::AdoObservation{-4.0, -1.75, 12.0};
  CHECK(expert.act(st).longitudinal >= 0.0);
}

TEST_CASE("segment-box intersection") {
  sim::OccluderBox box{-2, -2, 2, 2};
  CHECK(sim::segment_hits_box(-5, 0, 5, 0, box));
  CHECK_FALSE(sim::segment_hits_box(-5, 3, 5, 3, box));
  CHECK(sim::segment_hits_box(0, 0, 5, 5, box));  // endpoint inside
  CHECK_FALSE(sim::segment_hits_box(3, 3, 5, 5, box));
  CHECK(sim::segment_hits_box(-5, -5, 5, 5, box));  // diagonal through
}

TEST_CASE("occluder hides a left-side ado from a distant ego") {
  auto geom = test_geometry();
  CHECK(sim::segment_hits_box(1.75, -25.0, -30.0, -1.75, geom.occluder));
  // near the intersection the line of sight clears
  CHECK_FALSE(sim::segment_hits_box(1.75, -6.0, -4.0, -1.75, geom.occluder));
}

TEST_CASE("turn paths end in the expected exit lanes") {
  auto geom = test_geometry();
  double w = geom.lane_width;
  double x, y, h;

  auto right = sim::build_path(sim::Approach::South, sim::Maneuver::Right, geom);
  right.sample(right.length(), &x, &y, &h);
  CHECK(y == doctest::Approx(-w / 2));  // eastbound exit lane
  CHECK(std::cos(h) == doctest::Approx(1.0));

  auto left = sim::build_path(sim::Approach::South, sim::Maneuver::Left, geom);
  left.sample(left.length(), &x, &y, &h);
  CHECK(y == doctest::Approx(w / 2));  // westbound exit lane
  CHECK(std::cos(h) == doctest::Approx(-1.0));

  auto north = sim::build_path(sim::Approach::North, sim::Maneuver::Straight, geom);
  north.sample(0.0, &x, &y, &h);
  CHECK(x == doctest::Approx(-w / 2));  // southbound approach lane
  CHECK(std::sin(h) == doctest::Approx(-1.0));
}

TEST_CASE("uniform environment sampling respects the ranges") {
  sim::ParamRanges r;
  Rng rng(33);
  for (int i = 0; i < 500; ++i) {
    auto e = sim::sample_uniform_env(r, rng);
    CHECK(e.ego_init_distance >= r.ego_init_distance_min);
    CHECK(e.ego_init_distance <= r.ego_init_distance_max);
    CHECK(e.ado_init_distance >= r.ado_init_distance_min);
    CHECK(e.ado_init_distance <= r.ado_init_distance_max);
    CHECK(e.ado_min_speed <= e.ado_max_speed);
    CHECK(e.ado_min_speed >= r.ado_speed_min);
    CHECK(e.ado_max_speed <= r.ado_speed_max);
    CHECK_NOTHROW(sim::validate_env(e, r));
  }
}

TEST_CASE("invalid environment conditions are rejected") {
  auto geom = test_geometry();
  ConstantPolicy idle(0.0);
  sim::EnvCondition e;
  e.ado_min_speed = 9.0;
  e.ado_max_speed = 3.0;
  CHECK_THROWS_AS(sim::rollout(idle, e, geom, 1), InputError);
  sim::ParamRanges r;
  CHECK_THROWS_AS(sim::validate_env(e, r), InputError);
  e = sim::EnvCondition{};
  e.ego_init_distance = 99.0;
  CHECK_THROWS_AS(sim::rollout(idle, e, geom, 1), InputError);
}
