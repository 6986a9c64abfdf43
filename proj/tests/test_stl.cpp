#include <doctest.h>

#include <cmath>

#include "sgda/errors.hpp"
#include "sgda/stl.hpp"
#include "test_helpers.hpp"

using namespace sgda;
using test::fabricate_trajectory;
using test::random_formula;
using test::random_signal_table;
using test::test_geometry;

TEST_CASE("extract_signals: single step, 10 m centers, 2 m radius sum") {
  auto geom = test_geometry();
  auto traj = fabricate_trajectory({8.0}, {5.0}, {0.0}, geom);
  // fabricate places the ado so the gap is exactly 8; double-check by hand:
  // centers 10 m apart, radius sum 2 m -> distance 8.
  CHECK(traj.steps[0].state.ado.x == doctest::Approx(10.0));
  auto table = stl::extract_signals(traj, geom);
  REQUIRE(table.at("ego_ado_distance").values.size() == 1);
  CHECK(table.at("ego_ado_distance").values[0] == doctest::Approx(8.0));
}

TEST_CASE("extract_signals: stationary ego gives all-zero speed") {
  auto geom = test_geometry();
  auto traj = fabricate_trajectory({5, 5, 5, 5}, {0, 0, 0, 0}, {0, 0, 0, 0}, geom);
  auto table = stl::extract_signals(traj, geom);
  for (double v : table.at("ego_speed").values) CHECK(v == 0.0);
}

TEST_CASE("extract_signals: brake intensity is zero while throttling") {
  auto geom = test_geometry();
  sim::Trajectory traj = fabricate_trajectory({5, 5}, {1, 1}, {0.7, 0.0}, geom);
  traj.steps[1].action.longitudinal = 0.9;  // throttle
  auto table = stl::extract_signals(traj, geom);
  CHECK(table.at("brake_intensity").values[0] == doctest::Approx(0.7));
  CHECK(table.at("brake_intensity").values[1] == 0.0);
}

TEST_CASE("extract_signals matches an independent 5-step hand simulation") {
  // Scripted expert on an empty road (ado disabled), ego starting below the
  // target speed so the controller applies full throttle throughout.
  auto geom = test_geometry();
  geom.ado_enabled = false;
  geom.ego_init_speed = 6.0;
  sim::ExpertParams params;  // target 8, cruise gain 0.5 -> throttle 1.0
  sim::ScriptedExpert expert(params);
  sim::EnvCondition e;
  auto traj = sim::rollout(expert, e, geom, 42);
  REQUIRE(traj.steps.size() >= 5);

  // Hand-computed per-step speeds: throttle = min(1, 0.5*(8 - v)) and
  // v' = v + throttle * 3.0 * 0.1 until v reaches 8.
  double v = 6.0;
  for (int k = 0; k < 5; ++k) {
    CHECK(traj.steps[k].state.ego.speed == doctest::Approx(v).epsilon(1e-12));
    double throttle = std::min(1.0, 0.5 * (8.0 - v));
    v = v + throttle * 3.0 * 0.1;
  }
  auto table = stl::extract_signals(traj, geom);
  for (int k = 0; k < 5; ++k)
    CHECK(table.at("ego_speed").values[k] ==
          doctest::Approx(traj.steps[k].state.ego.speed));
}

TEST_CASE("eval_bool matches the worked examples") {
  auto geom = test_geometry();
  auto halt = stl::parse_formula("G(ego_speed >= 0.05)");
  auto coll = stl::parse_formula("G(ego_ado_distance >= 0)");

  auto traj = fabricate_trajectory({3.2, 4.0}, {1.0, 0.0}, {0, 0}, geom);
  auto table = stl::extract_signals(traj, geom);
  CHECK_FALSE(stl::eval_bool(*halt, table));  // min speed 0.0
  CHECK(stl::eval_bool(*coll, table));        // min distance 3.2
}

TEST_CASE("eval_quant matches the worked examples") {
  auto geom = test_geometry();
  auto traj = fabricate_trajectory({3.2, 5.0}, {0.0, 2.0}, {0.7, 0.2}, geom);
  auto table = stl::extract_signals(traj, geom);

  CHECK(stl::eval_quant(*stl::parse_formula("G(ego_ado_distance >= 0)"), table) ==
        doctest::Approx(3.2));
  CHECK(stl::eval_quant(*stl::parse_formula("G(brake_intensity <= 0.4)"), table) ==
        doctest::Approx(-0.3));
  CHECK(stl::eval_quant(*stl::parse_formula("!(G(ego_speed >= 0.05))"), table) ==
        doctest::Approx(0.05));
}

TEST_CASE("unresolvable signal names raise EvalError") {
  Rng rng(1);
  auto table = random_signal_table(rng);
  CHECK_THROWS_AS(stl::eval_bool(*stl::parse_formula("nope >= 1"), table),
                  EvalError);
  CHECK_THROWS_AS(stl::eval_quant(*stl::parse_formula("nope >= 1"), table),
                  EvalError);
}

TEST_CASE("sign consistency between quantitative and Boolean semantics") {
  Rng rng(7);
  int checked = 0;
  for (int i = 0; i < 2000; ++i) {
    auto table = random_signal_table(rng);
    auto f = random_formula(rng);
    double q = stl::eval_quant(*f, table);
    bool b = stl::eval_bool(*f, table);
    if (q > 0) {
      CHECK(b);
      ++checked;
    } else if (q < 0) {
      CHECK_FALSE(b);
      ++checked;
    }
  }
  CHECK(checked > 1500);  // zeros should be rare
}

TEST_CASE("negation antisymmetry is exact") {
  Rng rng(8);
  for (int i = 0; i < 300; ++i) {
    auto table = random_signal_table(rng);
    auto f = random_formula(rng);
    CHECK(stl::eval_quant(*stl::negate(f), table) == -stl::eval_quant(*f, table));
  }
}

TEST_CASE("raising an atom threshold shifts robustness down exactly") {
  Rng rng(9);
  for (int i = 0; i < 300; ++i) {
    auto table = random_signal_table(rng);
    double c = static_cast<double>(static_cast<long>(rng.next_index(33)) - 16) / 4.0;
    double delta = static_cast<double>(1 + rng.next_index(8)) / 4.0;
    auto f1 = stl::globally(stl::atom_ge("ego_speed", c));
    auto f2 = stl::globally(stl::atom_ge("ego_speed", c + delta));
    // dyadic thresholds and values keep the identity exact
    CHECK(stl::eval_quant(*f2, table) == stl::eval_quant(*f1, table) - delta);
  }
}

TEST_CASE("globally/eventually duality is exact") {
  Rng rng(10);
  for (int i = 0; i < 300; ++i) {
    auto table = random_signal_table(rng);
    auto f = random_formula(rng, 2);
    CHECK(stl::eval_quant(*stl::globally(f), table) ==
          -stl::eval_quant(*stl::eventually(stl::negate(f)), table));
  }
}

TEST_CASE("parser handles the documented grammar") {
  auto f = stl::parse_formula("G(ego_ado_distance >= 0) & !F(ego_speed <= 0.1)");
  CHECK(f->kind == stl::Formula::Kind::And);
  CHECK(f->children.size() == 2);
  CHECK(f->children[1]->kind == stl::Formula::Kind::Not);

  // '|' binds looser than '&'
  auto g = stl::parse_formula("ego_speed >= 1 & ego_speed <= 2 | brake_intensity <= 0");
  CHECK(g->kind == stl::Formula::Kind::Or);

  // identifiers starting with G are not temporal operators
  auto geom = test_geometry();
  auto h = stl::parse_formula("Gap_value >= 2");
  CHECK(h->kind == stl::Formula::Kind::AtomGe);
  CHECK(h->signal == "Gap_value");

  CHECK_THROWS_AS(stl::parse_formula("G(ego_speed >= )"), ParseError);
  CHECK_THROWS_AS(stl::parse_formula("ego_speed > 1"), ParseError);
  CHECK_THROWS_AS(stl::parse_formula("(ego_speed >= 1"), ParseError);
  CHECK_THROWS_AS(stl::parse_formula("ego_speed >= 1 extra"), ParseError);
}

TEST_CASE("parse round-trips through to_string") {
  Rng rng(11);
  for (int i = 0; i < 100; ++i) {
    auto f = random_formula(rng);
    auto g = stl::parse_formula(stl::to_string(*f));
    auto table = random_signal_table(rng);
    CHECK(stl::eval_quant(*f, table) == stl::eval_quant(*g, table));
    CHECK(stl::eval_bool(*f, table) == stl::eval_bool(*g, table));
  }
}
