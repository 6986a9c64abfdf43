#include <doctest.h>

#include <cmath>

#include "sgda/errors.hpp"
#include "sgda/stp.hpp"
#include "test_helpers.hpp"

using namespace sgda;
using test::fabricate_trajectory;
using test::random_trajectory;
using test::standard_properties;
using test::test_geometry;

namespace {

std::vector<stp::Property> two_properties(double wa = 0.5, double wb = 0.5) {
  return {
      {"A", stl::parse_formula("G(ego_ado_distance >= 0)"), wa},
      {"B", stl::parse_formula("G(ego_speed <= 8)"), wb},  // "no speeding"
  };
}

std::size_t index_for(const stp::Partition& part, const std::vector<bool>& signs) {
  for (const auto& spec : part.specs)
    if (spec.signs == signs) return spec.index;
  FAIL("sign pattern not found");
  return 0;
}

}  // namespace

TEST_CASE("build_partition enumerates all sign conjunctions") {
  auto p2 = stp::build_partition(two_properties());
  CHECK(p2.num_specs() == 4);
  // all four sign patterns present exactly once
  CHECK(index_for(p2, {true, true}) == 3);
  CHECK(index_for(p2, {false, true}) == 2);
  CHECK(index_for(p2, {true, false}) == 1);
  CHECK(index_for(p2, {false, false}) == 0);

  auto p3 = stp::build_partition(standard_properties());
  CHECK(p3.num_specs() == 8);
  for (const auto& spec : p3.specs) CHECK(spec.signs.size() == 3);
  for (std::size_t j = 0; j < 8; ++j) CHECK(p3.specs[j].index == j);
}

TEST_CASE("build_partition rejects empty and oversized property sets") {
  CHECK_THROWS_AS(stp::build_partition({}), ConfigError);
  std::vector<stp::Property> many;
  for (int i = 0; i < 9; ++i)
    many.push_back({"p" + std::to_string(i),
                    stl::parse_formula("ego_speed >= 0"), 0.5});
  CHECK_THROWS_AS(stp::build_partition(many), ConfigError);
  CHECK_THROWS_AS(stp::build_partition(two_properties(0.0, 0.5)), ConfigError);
  CHECK_THROWS_AS(stp::build_partition(two_properties(1.0, 0.5)), ConfigError);
}

TEST_CASE("spec weights reproduce the worked 0.1/0.6 example") {
  auto part = stp::build_partition(two_properties(0.1, 0.6));
  CHECK(part.spec_weights[index_for(part, {true, true})] ==
        doctest::Approx(0.06).epsilon(1e-12));
  CHECK(part.spec_weights[index_for(part, {false, true})] ==
        doctest::Approx(0.54).epsilon(1e-12));
  CHECK(part.spec_weights[index_for(part, {true, false})] ==
        doctest::Approx(0.04).epsilon(1e-12));
  CHECK(part.spec_weights[index_for(part, {false, false})] ==
        doctest::Approx(0.36).epsilon(1e-12));
}

TEST_CASE("spec weights sum to one") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<stp::Property> props;
    std::size_t l = 1 + rng.next_index(5);
    for (std::size_t i = 0; i < l; ++i)
      props.push_back({"p" + std::to_string(i),
                       stl::parse_formula("ego_speed >= 0"),
                       rng.uniform(0.01, 0.99)});
    auto part = stp::build_partition(props);
    double sum = 0.0;
    for (double w : part.spec_weights) sum += w;
    CHECK(std::abs(sum - 1.0) < 1e-12);
  }
}

TEST_CASE("classify returns the definitional spec") {
  auto geom = test_geometry();
  auto part = stp::build_partition(standard_properties());

  // collision (negative gap) and a halt, no hard braking
  auto traj = fabricate_trajectory({4.0, -0.5}, {6.0, 0.0}, {0.2, 0.2}, geom);
  std::size_t j = stp::classify(part, traj, geom);
  CHECK(part.specs[j].signs == std::vector<bool>{false, false, true});

  // all three properties satisfied -> all-true spec
  auto clean = fabricate_trajectory({4.0, 5.0}, {6.0, 7.0}, {0.1, 0.0}, geom);
  CHECK(stp::classify(part, clean, geom) == part.num_specs() - 1);
}

TEST_CASE("classify agrees with exhaustive Boolean evaluation, exactly one spec") {
  auto geom = test_geometry();
  auto part = stp::build_partition(standard_properties());
  Rng rng(17);
  for (int i = 0; i < 500; ++i) {
    auto traj = random_trajectory(rng);
    auto signals = stl::extract_signals(traj, geom);
    std::size_t fast = stp::classify(part, signals);
    std::size_t satisfied = 0, found = part.num_specs();
    for (const auto& spec : part.specs) {
      if (stl::eval_bool(*spec.literal_formula(part.properties), signals)) {
        ++satisfied;
        found = spec.index;
      }
    }
    CHECK(satisfied == 1);
    CHECK(found == fast);
  }
}

TEST_CASE("classify_and_record appends to exactly one store") {
  auto geom = test_geometry();
  auto part = stp::build_partition(standard_properties());
  Rng rng(4);
  for (int i = 0; i < 50; ++i)
    stp::classify_and_record(part, sim::EnvCondition{}, random_trajectory(rng), geom);
  std::size_t total = 0;
  for (const auto& store : part.landed) total += store.size();
  CHECK(total == 50);
}

TEST_CASE("spec_robustness is the min of sign-adjusted values") {
  stp::Specification spec;
  spec.signs = {true, false, true};
  CHECK(stp::spec_robustness(spec, {3.2, -0.05, 0.1}) == doctest::Approx(0.05));
  stp::Specification all_true;
  all_true.signs = {true, true, true};
  CHECK(stp::spec_robustness(all_true, {3.2, 0.7, 0.1}) == doctest::Approx(0.1));
}

TEST_CASE("positive spec robustness and classification coincide") {
  auto geom = test_geometry();
  auto part = stp::build_partition(standard_properties());
  Rng rng(5);
  for (int i = 0; i < 300; ++i) {
    auto traj = random_trajectory(rng);
    auto signals = stl::extract_signals(traj, geom);
    auto rho = stp::robustness_vector(part, signals);
    std::size_t landed = stp::classify(part, signals);
    for (const auto& spec : part.specs) {
      double r = stp::spec_robustness(spec, rho);
      if (r > 0) CHECK(spec.index == landed);
      if (spec.index == landed) CHECK(r >= 0);
    }
  }
}

TEST_CASE("partition csv lists every spec") {
  auto part = stp::build_partition(standard_properties());
  auto csv = stp::partition_csv(part);
  std::size_t lines = std::count(csv.begin(), csv.end(), '\n');
  CHECK(lines == part.num_specs() + 1);
  CHECK(csv.find("spec_index,signs,landed,attempts,weight") == 0);
}
