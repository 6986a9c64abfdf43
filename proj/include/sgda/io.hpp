#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sgda/simenv.hpp"

namespace sgda::io {

nlohmann::json env_to_json(const sim::EnvCondition& e);
sim::EnvCondition env_from_json(const nlohmann::json& j);

nlohmann::json step_to_json(const sim::Step& step);
sim::Step step_from_json(const nlohmann::json& j);

nlohmann::json trajectory_to_json(const sim::Trajectory& traj);
sim::Trajectory trajectory_from_json(const nlohmann::json& j);

// Episode stream: per episode one header line {"type":"header",...} followed
// by one line per step.
struct Episode {
  sim::EnvCondition e;
  std::uint64_t seed = 0;
  sim::Trajectory traj;
};

void write_episodes_jsonl(const std::filesystem::path& path,
                          const std::vector<Episode>& episodes);
std::vector<Episode> read_episodes_jsonl(const std::filesystem::path& path);

// Small append-style CSV builder; doubles are written in shortest
// round-trip form.
class Csv {
 public:
  explicit Csv(std::vector<std::string> header);
  Csv& cell(const std::string& v);
  Csv& cell(double v);
  Csv& cell(std::size_t v);
  Csv& end_row();
  const std::string& str() const { return text_; }
  void write(const std::filesystem::path& path) const;

 private:
  std::string text_;
  bool row_open_ = false;
};

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace sgda::io
