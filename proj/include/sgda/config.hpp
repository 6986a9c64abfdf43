#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "sgda/bayesopt.hpp"
#include "sgda/policy.hpp"
#include "sgda/simenv.hpp"
#include "sgda/stp.hpp"

namespace sgda::config {

// Minimal TOML subset: [table] / [[array-of-table]] headers with dotted
// names, `key = value` pairs with strings, integers, floats, booleans, and
// flat arrays, and # comments. Enough for the run configs this project uses.
struct TomlValue {
  enum class Type { String, Float, Int, Bool, Array };
  Type type = Type::String;
  std::string str;
  double num = 0.0;
  std::int64_t integer = 0;
  bool boolean = false;
  std::vector<TomlValue> array;

  double as_double() const;
  std::int64_t as_int() const;
  bool as_bool() const;
  const std::string& as_string() const;
};

struct TomlTable {
  std::map<std::string, TomlValue> values;
  std::map<std::string, TomlTable> tables;
  std::map<std::string, std::vector<TomlTable>> table_arrays;

  bool has(const std::string& key) const { return values.count(key) > 0; }
  const TomlValue& at(const std::string& key) const;
};

TomlTable parse_toml(const std::string& text);

enum class Strategy { Sgda, Uniform, SingleSpec, IndividualProps };
std::string to_string(Strategy s);
Strategy strategy_from_string(const std::string& s);

struct EvaluationConfig {
  std::size_t test_size = 100;
  double floor_frac = 0.04;
  std::size_t rejection_cap = 5000;
  std::vector<double> brake_thresholds = {0.2, 0.3, 0.4, 0.5};
};

struct ExperimentConfig {
  Strategy strategy = Strategy::Sgda;
  std::size_t rounds = 2;             // n
  std::size_t initial_episodes = 40;
  std::size_t samples_per_round = 40;  // k, seed phase included
  std::size_t seed_samples = 10;
  std::size_t selections_per_round = 20;  // m
  std::uint64_t master_seed = 1;
  unsigned jobs = 0;  // 0 = hardware concurrency

  sim::ScenarioGeometry geometry;
  sim::ParamRanges ranges;
  sim::ExpertParams expert;
  std::vector<stp::Property> properties;
  policy::TrainConfig training;
  policy::FeatureScaling scaling;
  bo::SamplerConfig sampler;
  double ucb_c = 1.0;
  bool use_property_weights = false;
  EvaluationConfig evaluation;

  std::string source_text;  // original file contents, for snapshots
};

// Parses and validates; throws ConfigError with a descriptive message.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(const std::string& text);

}  // namespace sgda::config
