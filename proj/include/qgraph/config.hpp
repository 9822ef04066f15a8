#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "qgraph/evolution.hpp"

namespace qgraph {

// Run-config JSON. Numbers may be given as strings with a pi factor
// ("2pi") and an optional trailing square ("(5pi)^2"). Malformed or unknown
// fields throw Error(InvalidConfig) naming the field.
double parse_config_number(const nlohmann::json& j, const std::string& field);

nlohmann::json goal_to_json(const Goal& goal);
Goal goal_from_json(const nlohmann::json& j, const std::string& field = "goal");

nlohmann::json policy_to_json(const MovePolicy& policy);
MovePolicy policy_from_json(const nlohmann::json& j, const std::string& field = "policy");

nlohmann::json roots_to_json(const RootConfig& roots);
RootConfig roots_from_json(const nlohmann::json& j, const std::string& field = "roots");

nlohmann::json config_to_json(const RunConfig& config);
RunConfig config_from_json(const nlohmann::json& j);
RunConfig read_config_file(const std::filesystem::path& path);

// Run log as JSON Lines: a "run" header with the config echo and initial
// state, one "step" line per step, and an "abort" line if the run stopped
// early. Contains no timing, so replays are byte-identical.
nlohmann::json run_header_json(const RunLog& log);
nlohmann::json step_to_json(const EvolutionStep& step);
std::string log_jsonl(const RunLog& log);

// "step,phase,score,k1..k8"; row 0 is the initial graph.
std::string k_trajectory_csv(const RunLog& log);
// "step,seconds"
std::string timing_csv(const RunLog& log);

// Writes log.jsonl, k_trajectory.csv, timing.csv, final_graph.json and
// config.json into a directory. The log is appended and flushed step by
// step so an aborted run leaves complete lines behind.
class RunWriter {
 public:
  RunWriter(std::filesystem::path dir, const RunLog& start);

  void append(const EvolutionStep& step);
  void finish(const RunLog& log);

 private:
  std::filesystem::path dir_;
  std::ofstream jsonl_;
};

}  // namespace qgraph
