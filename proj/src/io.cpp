#include "sgda/io.hpp"

#include <fstream>

#include "sgda/errors.hpp"
#include "sgda/util.hpp"

namespace sgda::io {

using nlohmann::json;

json env_to_json(const sim::EnvCondition& e) {
  return json{{"ego_init_distance", e.ego_init_distance},
              {"ado_side", sim::to_string(e.ado_side)},
              {"ado_maneuver", sim::to_string(e.ado_maneuver)},
              {"ado_init_distance", e.ado_init_distance},
              {"ado_min_speed", e.ado_min_speed},
              {"ado_max_speed", e.ado_max_speed}};
}

sim::EnvCondition env_from_json(const json& j) {
  sim::EnvCondition e;
  e.ego_init_distance = j.at("ego_init_distance").get<double>();
  e.ado_side = sim::ado_side_from_string(j.at("ado_side").get<std::string>());
  e.ado_maneuver = sim::maneuver_from_string(j.at("ado_maneuver").get<std::string>());
  e.ado_init_distance = j.at("ado_init_distance").get<double>();
  e.ado_min_speed = j.at("ado_min_speed").get<double>();
  e.ado_max_speed = j.at("ado_max_speed").get<double>();
  return e;
}

json step_to_json(const sim::Step& step) {
  const auto& st = step.state;
  json j{{"t", st.t},
         {"ego", {st.ego.x, st.ego.y, st.ego.heading, st.ego.speed}},
         {"ego_accel", st.ego_accel},
         {"ado", {st.ado.x, st.ado.y, st.ado.heading, st.ado.speed}},
         {"visible", st.ado_visible},
         {"sight_age", st.sight_age},
         {"action", step.action.longitudinal}};
  if (st.ado_obs)
    j["obs"] = {st.ado_obs->x, st.ado_obs->y, st.ado_obs->speed};
  else
    j["obs"] = nullptr;
  return j;
}

sim::Step step_from_json(const json& j) {
  sim::Step step;
  auto& st = step.state;
  st.t = j.at("t").get<double>();
  const auto& ego = j.at("ego");
  st.ego = {ego[0].get<double>(), ego[1].get<double>(), ego[2].get<double>(),
            ego[3].get<double>()};
  st.ego_accel = j.at("ego_accel").get<double>();
  const auto& ado = j.at("ado");
  st.ado = {ado[0].get<double>(), ado[1].get<double>(), ado[2].get<double>(),
            ado[3].get<double>()};
  st.ado_visible = j.at("visible").get<bool>();
  st.sight_age = j.at("sight_age").get<int>();
  if (!j.at("obs").is_null()) {
    const auto& obs = j.at("obs");
    st.ado_obs = sim::AdoObservation{obs[0].get<double>(), obs[1].get<double>(),
                                     obs[2].get<double>()};
  }
  step.action.longitudinal = j.at("action").get<double>();
  return step;
}

json trajectory_to_json(const sim::Trajectory& traj) {
  json steps = json::array();
  for (const auto& s : traj.steps) steps.push_back(step_to_json(s));
  return json{{"termination", sim::to_string(traj.termination)},
              {"steps", std::move(steps)}};
}

sim::Trajectory trajectory_from_json(const json& j) {
  sim::Trajectory traj;
  traj.termination =
      sim::termination_from_string(j.at("termination").get<std::string>());
  for (const auto& s : j.at("steps")) traj.steps.push_back(step_from_json(s));
  return traj;
}

void write_episodes_jsonl(const std::filesystem::path& path,
                          const std::vector<Episode>& episodes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  for (const auto& ep : episodes) {
    json header{{"type", "header"},
                {"e", env_to_json(ep.e)},
                {"seed", ep.seed},
                {"termination", sim::to_string(ep.traj.termination)},
                {"steps", ep.traj.steps.size()}};
    out << header.dump() << "\n";
    for (const auto& step : ep.traj.steps) out << step_to_json(step).dump() << "\n";
  }
}

std::vector<Episode> read_episodes_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path.string());
  std::vector<Episode> episodes;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    if (j.value("type", "") == "header") {
      Episode ep;
      ep.e = env_from_json(j.at("e"));
      ep.seed = j.at("seed").get<std::uint64_t>();
      ep.traj.termination =
          sim::termination_from_string(j.at("termination").get<std::string>());
      episodes.push_back(std::move(ep));
    } else {
      if (episodes.empty()) throw InputError("step line before header in " + path.string());
      episodes.back().traj.steps.push_back(step_from_json(j));
    }
  }
  return episodes;
}

Csv::Csv(std::vector<std::string> header) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) text_ += ",";
    text_ += header[i];
  }
  text_ += "\n";
}

Csv& Csv::cell(const std::string& v) {
  if (row_open_) text_ += ",";
  text_ += v;
  row_open_ = true;
  return *this;
}

Csv& Csv::cell(double v) { return cell(format_double(v)); }
Csv& Csv::cell(std::size_t v) { return cell(std::to_string(v)); }

Csv& Csv::end_row() {
  text_ += "\n";
  row_open_ = false;
  return *this;
}

void Csv::write(const std::filesystem::path& path) const { write_text(path, text_); }

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path.string());
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

}  // namespace sgda::io
