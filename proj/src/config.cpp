#include "qgraph/config.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include "qgraph/error.hpp"
#include "qgraph/text.hpp"

namespace qgraph {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& field, const std::string& what) {
  throw Error(ErrorKind::InvalidConfig, "field '" + field + "': " + what);
}

void only_keys(const json& j, const std::string& field, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) bad(field, "expected an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items()) {
    if (!ok.count(key)) bad(field + "." + key, "unknown field");
  }
}

bool get_bool(const json& j, const std::string& key, const std::string& field, bool fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_boolean()) bad(field + "." + key, "expected a boolean");
  return j[key].get<bool>();
}

int get_int(const json& j, const std::string& field) {
  if (!j.is_number_integer()) bad(field, "expected an integer");
  return j.get<int>();
}

std::string get_string(const json& j, const std::string& field) {
  if (!j.is_string()) bad(field, "expected a string");
  return j.get<std::string>();
}

const char* comparator_text(Comparator c) {
  switch (c) {
    case Comparator::Less: return "<";
    case Comparator::LessEqual: return "<=";
    case Comparator::Greater: return ">";
    case Comparator::GreaterEqual: return ">=";
  }
  return ">=";
}

Comparator comparator_from(const std::string& s, const std::string& field) {
  if (s == "<") return Comparator::Less;
  if (s == "<=") return Comparator::LessEqual;
  if (s == ">") return Comparator::Greater;
  if (s == ">=") return Comparator::GreaterEqual;
  bad(field, "expected one of <, <=, >, >=");
}

json optional_number(const std::optional<double>& x) { return x ? json(*x) : json(nullptr); }

}  // namespace

double parse_config_number(const json& j, const std::string& field) {
  if (j.is_number()) return j.get<double>();
  if (!j.is_string()) bad(field, "expected a number");
  std::string text = j.get<std::string>();
  bool square = false;
  if (text.size() > 2 && text.compare(text.size() - 2, 2, "^2") == 0) {
    square = true;
    text.resize(text.size() - 2);
    if (text.size() >= 2 && text.front() == '(' && text.back() == ')') text = text.substr(1, text.size() - 2);
  }
  double x = 0.0;
  try {
    x = parse_real(text);
  } catch (const Error& e) {
    bad(field, e.what());
  }
  return square ? x * x : x;
}

// ------------------------------------------------------------------- goals

json goal_to_json(const Goal& goal) {
  if (const auto* t = std::get_if<MinimizeDistance>(&goal)) {
    return {{"type", "target"},
            {"space", t->target.space == DistanceSpace::K ? "k" : "lambda"},
            {"values", t->target.values}};
  }
  if (std::holds_alternative<MaximizeLambda1>(goal)) return {{"type", "max_lambda1"}};
  if (std::holds_alternative<MinimizeLambda1>(goal)) return {{"type", "min_lambda1"}};
  if (std::holds_alternative<MaximizeRatio>(goal)) return {{"type", "max_ratio"}};
  json phases = json::array();
  for (const auto& phase : std::get<Program>(goal).phases) {
    json p = {{"goal", goal_to_json(phase.goal)}};
    if (const auto* t = std::get_if<EigenvalueThreshold>(&phase.stop)) {
      p["until"] = {{"eigenvalue", t->index}, {"op", comparator_text(t->op)}, {"value", t->threshold}};
    } else {
      p["until"] = {{"steps", std::get<StepBudget>(phase.stop).steps}};
    }
    if (phase.policy) p["policy"] = policy_to_json(*phase.policy);
    phases.push_back(std::move(p));
  }
  return {{"type", "program"}, {"phases", phases}};
}

Goal goal_from_json(const json& j, const std::string& field) {
  if (!j.is_object() || !j.contains("type")) bad(field + ".type", "missing");
  const std::string type = get_string(j["type"], field + ".type");
  if (type == "max_lambda1" || type == "min_lambda1" || type == "max_ratio") {
    only_keys(j, field, {"type"});
    if (type == "max_lambda1") return MaximizeLambda1{};
    if (type == "min_lambda1") return MinimizeLambda1{};
    return MaximizeRatio{};
  }
  if (type == "target") {
    only_keys(j, field, {"type", "space", "values", "k_values"});
    TargetSpectrum t;
    if (j.contains("space")) {
      const std::string space = get_string(j["space"], field + ".space");
      if (space == "k") {
        t.space = DistanceSpace::K;
      } else if (space != "lambda") {
        bad(field + ".space", "expected \"lambda\" or \"k\"");
      }
    }
    const bool by_lambda = j.contains("values");
    if (by_lambda == j.contains("k_values")) bad(field, "give exactly one of values, k_values");
    const std::string key = by_lambda ? "values" : "k_values";
    const json& arr = j[key];
    if (!arr.is_array()) bad(field + "." + key, "expected an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const double x = parse_config_number(arr[i], field + "." + key + "[" + std::to_string(i) + "]");
      t.values.push_back(by_lambda ? x : x * x);
    }
    try {
      t.check();
    } catch (const Error& e) {
      bad(field + "." + key, e.what());
    }
    return MinimizeDistance{std::move(t)};
  }
  if (type == "program") {
    only_keys(j, field, {"type", "phases"});
    if (!j.contains("phases") || !j["phases"].is_array() || j["phases"].empty()) {
      bad(field + ".phases", "expected a nonempty array");
    }
    Program prog;
    for (std::size_t i = 0; i < j["phases"].size(); ++i) {
      const std::string at = field + ".phases[" + std::to_string(i) + "]";
      const json& p = j["phases"][i];
      only_keys(p, at, {"goal", "until", "policy"});
      if (!p.contains("goal")) bad(at + ".goal", "missing");
      ProgramPhase phase;
      phase.goal = goal_from_json(p["goal"], at + ".goal");
      if (std::holds_alternative<Program>(phase.goal)) bad(at + ".goal", "programs cannot be nested");
      if (p.contains("until")) {
        const json& u = p["until"];
        const std::string ua = at + ".until";
        if (u.is_object() && u.contains("steps")) {
          only_keys(u, ua, {"steps"});
          const int steps = get_int(u["steps"], ua + ".steps");
          if (steps < 1) bad(ua + ".steps", "must be at least 1");
          phase.stop = StepBudget{steps};
        } else {
          only_keys(u, ua, {"eigenvalue", "op", "value"});
          EigenvalueThreshold t;
          if (u.contains("eigenvalue")) t.index = get_int(u["eigenvalue"], ua + ".eigenvalue");
          if (t.index < 0) bad(ua + ".eigenvalue", "must be nonnegative");
          if (u.contains("op")) t.op = comparator_from(get_string(u["op"], ua + ".op"), ua + ".op");
          if (!u.contains("value")) bad(ua + ".value", "missing");
          t.threshold = parse_config_number(u["value"], ua + ".value");
          phase.stop = t;
        }
      } else if (i + 1 < j["phases"].size()) {
        bad(at + ".until", "missing (only the last phase may omit it)");
      }
      if (p.contains("policy")) phase.policy = policy_from_json(p["policy"], at + ".policy");
      prog.phases.push_back(std::move(phase));
    }
    return prog;
  }
  bad(field + ".type", "unknown goal type '" + type + "'");
}

// ------------------------------------------------------------------ policy

json policy_to_json(const MovePolicy& p) {
  json moves = json::array();
  if (p.add_pendant) moves.push_back("pendant");
  if (p.add_between) moves.push_back("between");
  if (p.delete_edge) moves.push_back("delete");
  json j = {{"moves", moves},
            {"trees_only", p.trees_only},
            {"alternate", p.alternate},
            {"alternate_starts_with", p.alternate_starts_with_delete ? "delete" : "add"},
            {"allow_loops", p.allow_loops},
            {"allow_parallel", p.allow_parallel},
            {"new_edge_length", p.new_edge == NewEdgeRule::ParentEdgeCount ? "parent" : "child"},
            {"seed", p.seed}};
  j["candidate_cap"] = p.candidate_cap ? json(*p.candidate_cap) : json(nullptr);
  return j;
}

MovePolicy policy_from_json(const json& j, const std::string& field) {
  only_keys(j, field,
            {"moves", "trees_only", "alternate", "alternate_starts_with", "allow_loops", "allow_parallel",
             "new_edge_length", "candidate_cap", "seed"});
  MovePolicy p;
  if (j.contains("moves")) {
    const json& moves = j["moves"];
    if (!moves.is_array()) bad(field + ".moves", "expected an array");
    p.add_pendant = p.add_between = p.delete_edge = false;
    for (std::size_t i = 0; i < moves.size(); ++i) {
      const std::string at = field + ".moves[" + std::to_string(i) + "]";
      const std::string m = get_string(moves[i], at);
      if (m == "pendant") {
        p.add_pendant = true;
      } else if (m == "between") {
        p.add_between = true;
      } else if (m == "delete") {
        p.delete_edge = true;
      } else {
        bad(at, "expected pendant, between or delete");
      }
    }
  }
  p.trees_only = get_bool(j, "trees_only", field, false);
  p.alternate = get_bool(j, "alternate", field, false);
  p.allow_loops = get_bool(j, "allow_loops", field, false);
  p.allow_parallel = get_bool(j, "allow_parallel", field, true);
  if (j.contains("alternate_starts_with")) {
    const std::string s = get_string(j["alternate_starts_with"], field + ".alternate_starts_with");
    if (s != "add" && s != "delete") bad(field + ".alternate_starts_with", "expected \"add\" or \"delete\"");
    p.alternate_starts_with_delete = s == "delete";
  }
  if (j.contains("new_edge_length")) {
    const std::string s = get_string(j["new_edge_length"], field + ".new_edge_length");
    if (s != "parent" && s != "child") bad(field + ".new_edge_length", "expected \"parent\" or \"child\"");
    p.new_edge = s == "parent" ? NewEdgeRule::ParentEdgeCount : NewEdgeRule::ChildEdgeCount;
  }
  if (j.contains("candidate_cap") && !j["candidate_cap"].is_null()) {
    p.candidate_cap = get_int(j["candidate_cap"], field + ".candidate_cap");
  }
  if (j.contains("seed")) {
    const json& seed = j["seed"];
    if (!seed.is_number_integer() || (!seed.is_number_unsigned() && seed.get<std::int64_t>() < 0)) {
      bad(field + ".seed", "expected a nonnegative integer");
    }
    p.seed = j["seed"].get<std::uint64_t>();
  }
  try {
    p.check();
  } catch (const Error& e) {
    bad(field, e.what());
  }
  return p;
}

// ------------------------------------------------------------------- roots

json roots_to_json(const RootConfig& r) {
  json j = {{"k_max_auto", r.k_max_auto},
            {"k_max", r.search.k_max},
            {"zero_threshold", r.search.zero_threshold},
            {"multiplicity_tol", r.search.multiplicity_tol}};
  j["scan_step"] = optional_number(r.search.scan_step);
  return j;
}

RootConfig roots_from_json(const json& j, const std::string& field) {
  only_keys(j, field, {"k_max_auto", "k_max", "zero_threshold", "multiplicity_tol", "scan_step"});
  RootConfig r;
  r.k_max_auto = get_bool(j, "k_max_auto", field, true);
  auto positive = [&](const char* key) {
    const double x = parse_config_number(j[key], field + "." + key);
    if (!(x > 0.0) || !std::isfinite(x)) bad(field + "." + key, "must be positive");
    return x;
  };
  if (j.contains("k_max")) r.search.k_max = positive("k_max");
  if (j.contains("zero_threshold")) r.search.zero_threshold = positive("zero_threshold");
  if (j.contains("multiplicity_tol")) r.search.multiplicity_tol = positive("multiplicity_tol");
  if (j.contains("scan_step") && !j["scan_step"].is_null()) r.search.scan_step = positive("scan_step");
  return r;
}

// ------------------------------------------------------------------ config

json config_to_json(const RunConfig& c) {
  return {{"name", c.name},
          {"initial_graph", graph_to_json(c.initial)},
          {"goal", goal_to_json(c.goal)},
          {"policy", policy_to_json(c.policy)},
          {"steps", c.steps},
          {"roots", roots_to_json(c.roots)}};
}

RunConfig config_from_json(const json& j) {
  only_keys(j, "<root>", {"name", "description", "initial_graph", "goal", "policy", "steps", "roots"});
  RunConfig c;
  if (j.contains("name")) c.name = get_string(j["name"], "name");
  if (!j.contains("initial_graph")) bad("initial_graph", "missing");
  try {
    c.initial = graph_from_json(j["initial_graph"]);
  } catch (const Error& e) {
    bad("initial_graph", e.what());
  }
  if (!j.contains("goal")) bad("goal", "missing");
  c.goal = goal_from_json(j["goal"]);
  if (j.contains("policy")) c.policy = policy_from_json(j["policy"]);
  if (!j.contains("steps")) bad("steps", "missing");
  c.steps = get_int(j["steps"], "steps");
  if (c.steps < 1) bad("steps", "must be at least 1");
  if (j.contains("roots")) c.roots = roots_from_json(j["roots"]);
  c.check();
  return c;
}

RunConfig read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::InvalidConfig, "cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::InvalidConfig, path.string() + ": malformed JSON at byte " + std::to_string(e.byte));
  }
  RunConfig c = config_from_json(j);
  if (c.name.empty()) c.name = path.stem().string();
  return c;
}

// --------------------------------------------------------------------- log

namespace {

json state_to_json(const GraphState& s) {
  return {{"graph", graph_to_json(s.graph)},
          {"score", optional_number(s.score)},
          {"lambda", s.eigenvalues},
          {"k", s.k_prefix}};
}

}  // namespace

json run_header_json(const RunLog& log) {
  return {{"type", "run"}, {"config", config_to_json(log.config)}, {"initial", state_to_json(log.initial)}};
}

json step_to_json(const EvolutionStep& s) {
  json scores = json::array();
  for (const auto& x : s.scores) scores.push_back(optional_number(x));
  json move = {{"kind", to_string(s.move)}, {"a", s.move_a}};
  if (s.move == MoveKind::Between) move["b"] = s.move_b;
  json j = {{"type", "step"},
            {"step", s.index},
            {"phase", s.phase},
            {"goal", s.goal},
            {"moves", s.moves},
            {"parent", graph_to_json(s.parent)},
            {"child", graph_to_json(s.child)},
            {"move", move},
            {"candidates", s.candidate_count},
            {"scores", scores},
            {"chosen", s.chosen},
            {"score", s.score},
            {"ties", s.ties},
            {"lambda", s.eigenvalues},
            {"k", s.k_prefix},
            {"warnings", s.warnings}};
  if (s.phase_start) j["phase_start"] = *s.phase_start;
  return j;
}

std::string log_jsonl(const RunLog& log) {
  std::string out = run_header_json(log).dump() + '\n';
  for (const auto& s : log.steps) out += step_to_json(s).dump() + '\n';
  if (log.aborted) out += json{{"type", "abort"}, {"message", *log.aborted}}.dump() + '\n';
  return out;
}

std::string k_trajectory_csv(const RunLog& log) {
  std::ostringstream out;
  out << "step,phase,score";
  for (int j = 1; j <= kPrefixLength; ++j) out << ",k" << j;
  out << '\n';
  auto row = [&](int step, int phase, const std::optional<double>& score, const std::vector<double>& k) {
    out << step << ',' << phase << ',' << (score ? format_double(*score) : "");
    for (double x : k) out << ',' << format_double(x);
    out << '\n';
  };
  row(0, 0, log.initial.score, log.initial.k_prefix);
  for (const auto& s : log.steps) row(s.index + 1, s.phase, s.score, s.k_prefix);
  return out.str();
}

std::string timing_csv(const RunLog& log) {
  std::ostringstream out;
  out << "step,seconds\n";
  for (std::size_t i = 0; i < log.seconds.size(); ++i) out << i << ',' << format_double(log.seconds[i]) << '\n';
  return out.str();
}

RunWriter::RunWriter(std::filesystem::path dir, const RunLog& start) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
  std::ofstream(dir_ / "config.json") << config_to_json(start.config).dump(2) << '\n';
  jsonl_.open(dir_ / "log.jsonl", std::ios::trunc);
  if (!jsonl_) throw Error(ErrorKind::InvalidConfig, "cannot write to " + dir_.string());
  jsonl_ << run_header_json(start).dump() << '\n' << std::flush;
}

void RunWriter::append(const EvolutionStep& step) { jsonl_ << step_to_json(step).dump() << '\n' << std::flush; }

void RunWriter::finish(const RunLog& log) {
  if (log.aborted) jsonl_ << json{{"type", "abort"}, {"message", *log.aborted}}.dump() << '\n';
  jsonl_.flush();
  const MetricGraph& last = log.steps.empty() ? log.initial.graph : log.steps.back().child;
  write_graph_file((dir_ / "final_graph.json").string(), last);
  std::ofstream(dir_ / "k_trajectory.csv") << k_trajectory_csv(log);
  std::ofstream(dir_ / "timing.csv") << timing_csv(log);
}

}  // namespace qgraph
