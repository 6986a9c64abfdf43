#include "sgda/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>

#include "sgda/errors.hpp"
#include "sgda/io.hpp"
#include "sgda/stl.hpp"

namespace sgda::config {

double TomlValue::as_double() const {
  if (type == Type::Float) return num;
  if (type == Type::Int) return static_cast<double>(integer);
  throw ConfigError("expected a number");
}

std::int64_t TomlValue::as_int() const {
  if (type == Type::Int) return integer;
  throw ConfigError("expected an integer");
}

bool TomlValue::as_bool() const {
  if (type == Type::Bool) return boolean;
  throw ConfigError("expected a boolean");
}

const std::string& TomlValue::as_string() const {
  if (type == Type::String) return str;
  throw ConfigError("expected a string");
}

const TomlValue& TomlTable::at(const std::string& key) const {
  auto it = values.find(key);
  if (it == values.end()) throw ConfigError("missing key: " + key);
  return it->second;
}

// ---------------------------------------------------------------------------
// Parser

namespace {

struct TomlParser {
  const std::string& text;
  std::size_t pos = 0;
  int line = 1;

  [[noreturn]] void fail(const std::string& msg) const {
    throw ConfigError("config line " + std::to_string(line) + ": " + msg);
  }

  void skip_inline_ws() {
    while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t')) ++pos;
  }

  void skip_to_eol() {
    while (pos < text.size() && text[pos] != '\n') ++pos;
  }

  bool at_eol() {
    skip_inline_ws();
    if (pos >= text.size()) return true;
    if (text[pos] == '#') {
      skip_to_eol();
      return true;
    }
    return text[pos] == '\n' || text[pos] == '\r';
  }

  void consume_eol() {
    if (pos < text.size() && text[pos] == '\r') ++pos;
    if (pos < text.size() && text[pos] == '\n') {
      ++pos;
      ++line;
    }
  }

  std::string bare_key() {
    skip_inline_ws();
    std::size_t start = pos;
    while (pos < text.size() &&
           (std::isalnum(static_cast<unsigned char>(text[pos])) ||
            text[pos] == '_' || text[pos] == '-'))
      ++pos;
    if (start == pos) fail("expected a key");
    return text.substr(start, pos - start);
  }

  std::vector<std::string> dotted_key() {
    std::vector<std::string> parts{bare_key()};
    skip_inline_ws();
    while (pos < text.size() && text[pos] == '.') {
      ++pos;
      parts.push_back(bare_key());
      skip_inline_ws();
    }
    return parts;
  }

  TomlValue value() {
    skip_inline_ws();
    if (pos >= text.size()) fail("expected a value");
    char c = text[pos];
    TomlValue v;
    if (c == '"') {
      ++pos;
      std::string s;
      while (pos < text.size() && text[pos] != '"') {
        if (text[pos] == '\\' && pos + 1 < text.size()) {
          ++pos;
          char esc = text[pos];
          if (esc == 'n') s += '\n';
          else if (esc == 't') s += '\t';
          else s += esc;
        } else {
          s += text[pos];
        }
        ++pos;
      }
      if (pos >= text.size()) fail("unterminated string");
      ++pos;
      v.type = TomlValue::Type::String;
      v.str = std::move(s);
      return v;
    }
    if (c == '[') {
      ++pos;
      v.type = TomlValue::Type::Array;
      skip_inline_ws();
      if (pos < text.size() && text[pos] == ']') {
        ++pos;
        return v;
      }
      for (;;) {
        v.array.push_back(value());
        skip_inline_ws();
        if (pos < text.size() && text[pos] == ',') {
          ++pos;
          continue;
        }
        if (pos < text.size() && text[pos] == ']') {
          ++pos;
          return v;
        }
        fail("expected ',' or ']' in array");
      }
    }
    if (text.compare(pos, 4, "true") == 0) {
      pos += 4;
      v.type = TomlValue::Type::Bool;
      v.boolean = true;
      return v;
    }
    if (text.compare(pos, 5, "false") == 0) {
      pos += 5;
      v.type = TomlValue::Type::Bool;
      v.boolean = false;
      return v;
    }
    // number: integer unless it contains '.', 'e', or 'E'
    std::size_t start = pos;
    while (pos < text.size() &&
           (std::isdigit(static_cast<unsigned char>(text[pos])) ||
            text[pos] == '+' || text[pos] == '-' || text[pos] == '.' ||
            text[pos] == 'e' || text[pos] == 'E' || text[pos] == '_'))
      ++pos;
    if (start == pos) fail("unrecognized value");
    std::string num = text.substr(start, pos - start);
    num.erase(std::remove(num.begin(), num.end(), '_'), num.end());
    if (num.find_first_of(".eE") == std::string::npos) {
      v.type = TomlValue::Type::Int;
      v.integer = std::strtoll(num.c_str(), nullptr, 10);
    } else {
      v.type = TomlValue::Type::Float;
      v.num = std::strtod(num.c_str(), nullptr);
    }
    return v;
  }

  TomlTable parse() {
    TomlTable root;
    TomlTable* current = &root;
    while (pos < text.size()) {
      skip_inline_ws();
      if (pos >= text.size()) break;
      char c = text[pos];
      if (c == '\n' || c == '\r') {
        consume_eol();
        continue;
      }
      if (c == '#') {
        skip_to_eol();
        consume_eol();
        continue;
      }
      if (c == '[') {
        bool array = pos + 1 < text.size() && text[pos + 1] == '[';
        pos += array ? 2 : 1;
        auto parts = dotted_key();
        skip_inline_ws();
        if (array) {
          if (text.compare(pos, 2, "]]") != 0) fail("expected ']]'");
          pos += 2;
        } else {
          if (pos >= text.size() || text[pos] != ']') fail("expected ']'");
          ++pos;
        }
        TomlTable* node = &root;
        for (std::size_t i = 0; i + 1 < parts.size(); ++i)
          node = &node->tables[parts[i]];
        if (array) {
          node->table_arrays[parts.back()].emplace_back();
          current = &node->table_arrays[parts.back()].back();
        } else {
          current = &node->tables[parts.back()];
        }
        if (!at_eol()) fail("trailing characters after table header");
        consume_eol();
        continue;
      }
      // key = value
      auto parts = dotted_key();
      skip_inline_ws();
      if (pos >= text.size() || text[pos] != '=') fail("expected '='");
      ++pos;
      TomlValue v = value();
      TomlTable* node = current;
      for (std::size_t i = 0; i + 1 < parts.size(); ++i)
        node = &node->tables[parts[i]];
      if (node->values.count(parts.back()))
        fail("duplicate key: " + parts.back());
      node->values[parts.back()] = std::move(v);
      if (!at_eol()) fail("trailing characters after value");
      consume_eol();
    }
    return root;
  }
};

}  // namespace

TomlTable parse_toml(const std::string& text) {
  TomlParser p{text};
  return p.parse();
}

// ---------------------------------------------------------------------------
// Experiment config

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::Sgda: return "sgda";
    case Strategy::Uniform: return "uniform";
    case Strategy::SingleSpec: return "single_spec";
    case Strategy::IndividualProps: return "individual_props";
  }
  return "?";
}

Strategy strategy_from_string(const std::string& s) {
  if (s == "sgda") return Strategy::Sgda;
  if (s == "uniform") return Strategy::Uniform;
  if (s == "single_spec") return Strategy::SingleSpec;
  if (s == "individual_props") return Strategy::IndividualProps;
  throw ConfigError("unknown strategy: " + s);
}

namespace {

double get_double(const TomlTable& t, const std::string& key, double fallback) {
  return t.has(key) ? t.at(key).as_double() : fallback;
}

std::int64_t get_int(const TomlTable& t, const std::string& key,
                     std::int64_t fallback) {
  return t.has(key) ? t.at(key).as_int() : fallback;
}

bool get_bool(const TomlTable& t, const std::string& key, bool fallback) {
  return t.has(key) ? t.at(key).as_bool() : fallback;
}

std::string get_string(const TomlTable& t, const std::string& key,
                       const std::string& fallback) {
  return t.has(key) ? t.at(key).as_string() : fallback;
}

const TomlTable& subtable(const TomlTable& t, const std::string& key) {
  static const TomlTable empty;
  auto it = t.tables.find(key);
  return it == t.tables.end() ? empty : it->second;
}

void require_positive(double v, const std::string& what) {
  if (!(v > 0.0)) throw ConfigError(what + " must be positive");
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  TomlTable root = parse_toml(text);
  ExperimentConfig cfg;
  cfg.source_text = text;

  const TomlTable& run = subtable(root, "run");
  cfg.strategy = strategy_from_string(get_string(run, "strategy", "sgda"));
  cfg.rounds = static_cast<std::size_t>(get_int(run, "rounds", 2));
  cfg.initial_episodes =
      static_cast<std::size_t>(get_int(run, "initial_episodes", 40));
  cfg.samples_per_round =
      static_cast<std::size_t>(get_int(run, "samples_per_round", 40));
  cfg.seed_samples = static_cast<std::size_t>(get_int(run, "seed_samples", 10));
  cfg.selections_per_round =
      static_cast<std::size_t>(get_int(run, "selections_per_round", 20));
  cfg.master_seed = static_cast<std::uint64_t>(get_int(run, "master_seed", 1));
  cfg.jobs = static_cast<unsigned>(get_int(run, "jobs", 0));

  const TomlTable& sc = subtable(root, "scenario");
  auto& g = cfg.geometry;
  g.lane_width = get_double(sc, "lane_width", g.lane_width);
  g.ego_radius = get_double(sc, "ego_radius", g.ego_radius);
  g.ado_radius = get_double(sc, "ado_radius", g.ado_radius);
  g.dt = get_double(sc, "dt", g.dt);
  g.max_steps = static_cast<int>(get_int(sc, "max_steps", g.max_steps));
  g.max_accel = get_double(sc, "max_accel", g.max_accel);
  g.max_decel = get_double(sc, "max_decel", g.max_decel);
  g.ado_accel = get_double(sc, "ado_accel", g.ado_accel);
  g.ego_init_speed = get_double(sc, "ego_init_speed", g.ego_init_speed);
  g.approach_length = get_double(sc, "approach_length", g.approach_length);
  g.exit_length = get_double(sc, "exit_length", g.exit_length);
  g.ego_maneuver =
      sim::maneuver_from_string(get_string(sc, "ego_maneuver", "straight"));
  g.obs_pos_variance = get_double(sc, "obs_pos_variance", g.obs_pos_variance);
  g.obs_speed_variance =
      get_double(sc, "obs_speed_variance", g.obs_speed_variance);
  if (sc.has("occluder")) {
    const auto& arr = sc.at("occluder").array;
    if (arr.size() != 4)
      throw ConfigError("occluder must be [xmin, ymin, xmax, ymax]");
    g.occluder = {arr[0].as_double(), arr[1].as_double(), arr[2].as_double(),
                  arr[3].as_double()};
    if (g.occluder.xmin >= g.occluder.xmax || g.occluder.ymin >= g.occluder.ymax)
      throw ConfigError("occluder box is inverted");
  }
  sim::validate_geometry(g);

  const TomlTable& ranges = subtable(root, "ranges");
  auto& r = cfg.ranges;
  auto read_range = [&](const std::string& key, double* lo, double* hi) {
    if (!ranges.has(key)) return;
    const auto& arr = ranges.at(key).array;
    if (arr.size() != 2) throw ConfigError(key + " must be [min, max]");
    *lo = arr[0].as_double();
    *hi = arr[1].as_double();
    if (!(*lo < *hi)) throw ConfigError(key + " range is empty");
  };
  read_range("ego_init_distance", &r.ego_init_distance_min, &r.ego_init_distance_max);
  read_range("ado_init_distance", &r.ado_init_distance_min, &r.ado_init_distance_max);
  read_range("ado_speed", &r.ado_speed_min, &r.ado_speed_max);
  if (r.ego_init_distance_max >= g.approach_length ||
      r.ado_init_distance_max >= g.approach_length)
    throw ConfigError("spawn distance range exceeds approach_length");

  const TomlTable& ex = subtable(root, "expert");
  auto& e = cfg.expert;
  e.target_speed = get_double(ex, "target_speed", e.target_speed);
  e.cruise_gain = get_double(ex, "cruise_gain", e.cruise_gain);
  e.time_margin = get_double(ex, "time_margin", e.time_margin);
  e.conflict_radius = get_double(ex, "conflict_radius", e.conflict_radius);
  e.stop_buffer = get_double(ex, "stop_buffer", e.stop_buffer);
  e.brake_gain = get_double(ex, "brake_gain", e.brake_gain);
  e.decel_capacity = get_double(ex, "decel_capacity", e.decel_capacity);
  e.crawl_speed = get_double(ex, "crawl_speed", e.crawl_speed);
  e.hold_brake = get_double(ex, "hold_brake", e.hold_brake);
  e.reaction_steps = static_cast<int>(get_int(ex, "reaction_steps", e.reaction_steps));
  require_positive(e.target_speed, "expert.target_speed");
  require_positive(e.time_margin, "expert.time_margin");
  require_positive(e.decel_capacity, "expert.decel_capacity");

  auto props_it = root.table_arrays.find("properties");
  if (props_it == root.table_arrays.end() || props_it->second.empty())
    throw ConfigError("config declares no [[properties]]");
  for (const auto& pt : props_it->second) {
    stp::Property p;
    p.name = get_string(pt, "name", "");
    if (p.name.empty()) throw ConfigError("property without a name");
    std::string formula = get_string(pt, "formula", "");
    if (formula.empty()) throw ConfigError("property without a formula: " + p.name);
    try {
      p.formula = stl::parse_formula(formula);
    } catch (const ParseError& err) {
      throw ConfigError("property " + p.name + ": " + err.what());
    }
    p.weight = get_double(pt, "weight", 0.5);
    cfg.properties.push_back(std::move(p));
  }
  if (cfg.properties.size() > stp::kMaxProperties)
    throw ConfigError("too many properties (cap " +
                      std::to_string(stp::kMaxProperties) + ")");
  for (const auto& p : cfg.properties)
    if (!(p.weight > 0.0 && p.weight < 1.0))
      throw ConfigError("property weight outside (0,1): " + p.name);

  const TomlTable& tr = subtable(root, "training");
  auto& t = cfg.training;
  t.hidden_size = static_cast<int>(get_int(tr, "hidden_size", t.hidden_size));
  t.hidden_layers = static_cast<int>(get_int(tr, "hidden_layers", t.hidden_layers));
  t.epochs = static_cast<int>(get_int(tr, "epochs", t.epochs));
  t.batch_size = static_cast<int>(get_int(tr, "batch_size", t.batch_size));
  t.learning_rate = get_double(tr, "learning_rate", t.learning_rate);
  t.adam_beta1 = get_double(tr, "adam_beta1", t.adam_beta1);
  t.adam_beta2 = get_double(tr, "adam_beta2", t.adam_beta2);
  t.adam_eps = get_double(tr, "adam_eps", t.adam_eps);
  if (t.hidden_size <= 0 || t.hidden_layers <= 0 || t.epochs <= 0 ||
      t.batch_size <= 0)
    throw ConfigError("training sizes must be positive");
  require_positive(t.learning_rate, "training.learning_rate");

  const TomlTable& bo_t = subtable(root, "bayesopt");
  auto& s = cfg.sampler;
  s.kappa = get_double(bo_t, "kappa", s.kappa);
  s.bonus_coeff = get_double(bo_t, "exploration_bonus", s.bonus_coeff);
  s.dtw_cap = get_double(bo_t, "dtw_cap", s.dtw_cap);
  s.n_min = static_cast<int>(get_int(bo_t, "n_min", s.n_min));
  s.refit_interval = static_cast<int>(get_int(bo_t, "refit_interval", s.refit_interval));
  s.initial_hyper.noise_var =
      get_double(bo_t, "noise_variance", s.initial_hyper.noise_var);
  s.candidates = static_cast<int>(get_int(bo_t, "candidates", s.candidates));
  s.local_candidates =
      static_cast<int>(get_int(bo_t, "local_candidates", s.local_candidates));
  if (s.n_min < 1 || s.candidates < 1 || s.local_candidates < 0)
    throw ConfigError("bayesopt candidate counts must be positive");
  require_positive(s.initial_hyper.noise_var, "bayesopt.noise_variance");

  const TomlTable& ucb = subtable(root, "ucb");
  cfg.ucb_c = get_double(ucb, "c", cfg.ucb_c);
  cfg.use_property_weights =
      get_bool(ucb, "use_property_weights", cfg.use_property_weights);

  const TomlTable& ev = subtable(root, "evaluation");
  auto& v = cfg.evaluation;
  v.test_size = static_cast<std::size_t>(get_int(ev, "test_size", v.test_size));
  v.floor_frac = get_double(ev, "floor_frac", v.floor_frac);
  v.rejection_cap =
      static_cast<std::size_t>(get_int(ev, "rejection_cap", v.rejection_cap));
  if (ev.has("brake_thresholds")) {
    v.brake_thresholds.clear();
    for (const auto& th : ev.at("brake_thresholds").array)
      v.brake_thresholds.push_back(th.as_double());
  }
  if (v.test_size == 0) throw ConfigError("evaluation.test_size must be > 0");
  if (v.floor_frac < 0.0 ||
      v.floor_frac * std::pow(2.0, static_cast<double>(cfg.properties.size())) > 1.0)
    throw ConfigError("evaluation.floor_frac infeasible for the property count");

  if (cfg.rounds > 0) {
    if (cfg.selections_per_round > cfg.samples_per_round)
      throw ConfigError("selections_per_round exceeds samples_per_round");
    if (cfg.strategy != Strategy::Uniform &&
        cfg.seed_samples > cfg.samples_per_round)
      throw ConfigError("seed_samples exceeds samples_per_round");
  }
  if (cfg.initial_episodes == 0)
    throw ConfigError("initial_episodes must be > 0");
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  return parse_config(io::read_text(path));
}

}  // namespace sgda::config
