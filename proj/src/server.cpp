#include "qgraph/server.hpp"

#include <httplib.h>

#include "qgraph/commands.hpp"
#include "qgraph/config.hpp"
#include "qgraph/error.hpp"
#include "qgraph/text.hpp"

namespace qgraph {

using nlohmann::json;

std::string to_string(RunState s) {
  switch (s) {
    case RunState::Idle: return "idle";
    case RunState::Running: return "running";
    case RunState::Paused: return "paused";
    case RunState::Done: return "done";
  }
  return "?";
}

Session::Session(MetricGraph graph) : graph_(std::move(graph)) {
  worker_ = std::jthread([this](std::stop_token stop) { worker_loop(stop); });
}

Session::~Session() {
  worker_.request_stop();
  changed_.notify_all();
}

MetricGraph Session::graph() const {
  std::scoped_lock lock(graph_mutex_);
  return graph_;
}

void Session::set_graph(MetricGraph g) {
  std::scoped_lock lock(graph_mutex_);
  graph_ = std::move(g);
}

RunState Session::state() const {
  std::scoped_lock lock(mutex_);
  return state_;
}

json Session::run_state(int since) const {
  std::scoped_lock lock(mutex_);
  json steps = json::array();
  const int n = static_cast<int>(lines_.size());
  for (int i = std::clamp(since, 0, n); i < n; ++i) steps.push_back(lines_[static_cast<std::size_t>(i)]);
  json j = {{"state", to_string(state_)}, {"cursor", n}, {"steps", steps}, {"phase", phase_}, {"goal", goal_}};
  if (!header_.is_null()) {
    j["config"] = header_["config"];
    j["initial"] = header_["initial"];
    j["steps_total"] = header_["config"]["steps"];
  }
  j["error"] = error_ ? json(*error_) : json(nullptr);
  return j;
}

void Session::record(const EvolutionStep& step) {
  // Caller holds mutex_.
  lines_.push_back(step_to_json(step));
  phase_ = step.phase;
  goal_ = step.goal;
}

void Session::start(const RunConfig& config, bool paused) {
  {
    std::scoped_lock lock(mutex_);
    if (state_ == RunState::Running || state_ == RunState::Paused) {
      throw StateConflict("a run is already " + to_string(state_));
    }
  }
  auto run = std::make_unique<EvolutionRun>(config);
  std::scoped_lock locks(step_mutex_, mutex_);
  if (state_ == RunState::Running || state_ == RunState::Paused) {
    throw StateConflict("a run is already " + to_string(state_));
  }
  run_ = std::move(run);
  header_ = run_header_json(run_->log());
  lines_.clear();
  error_.reset();
  phase_ = 0;
  goal_ = describe(run_->active_goal());
  state_ = paused ? RunState::Paused : RunState::Running;
  changed_.notify_all();
}

void Session::pause() {
  std::scoped_lock lock(mutex_);
  if (state_ != RunState::Running) throw StateConflict("cannot pause a run that is " + to_string(state_));
  state_ = RunState::Paused;
  changed_.notify_all();
}

void Session::resume() {
  std::scoped_lock lock(mutex_);
  if (state_ != RunState::Paused) throw StateConflict("cannot resume a run that is " + to_string(state_));
  state_ = RunState::Running;
  changed_.notify_all();
}

void Session::stop() {
  std::scoped_lock lock(mutex_);
  if (state_ != RunState::Running && state_ != RunState::Paused) {
    throw StateConflict("cannot stop a run that is " + to_string(state_));
  }
  state_ = RunState::Done;
  changed_.notify_all();
}

void Session::replace_goal(const Goal& goal) {
  std::scoped_lock locks(step_mutex_, mutex_);
  if (state_ != RunState::Running && state_ != RunState::Paused) {
    throw StateConflict("cannot change the goal of a run that is " + to_string(state_));
  }
  run_->replace_goal(goal);
  phase_ = run_->phase();
  goal_ = describe(run_->active_goal());
}

json Session::step_once() {
  std::scoped_lock step_lock(step_mutex_);
  {
    std::scoped_lock lock(mutex_);
    if (state_ != RunState::Paused) throw StateConflict("manual steps need a paused run, not " + to_string(state_));
  }
  try {
    const EvolutionStep& st = run_->advance();
    std::scoped_lock lock(mutex_);
    record(st);
    if (run_->done()) state_ = RunState::Done;
    changed_.notify_all();
    return lines_.back();
  } catch (const Error& e) {
    std::scoped_lock lock(mutex_);
    error_ = e.what();
    state_ = RunState::Done;
    changed_.notify_all();
    throw;
  }
}

void Session::wait_idle() {
  std::unique_lock lock(mutex_);
  changed_.wait(lock, [&] { return state_ != RunState::Running; });
}

void Session::worker_loop(std::stop_token stop) {
  for (;;) {
    {
      std::unique_lock lock(mutex_);
      if (!changed_.wait(lock, stop, [&] { return state_ == RunState::Running; })) return;
    }
    std::scoped_lock step_lock(step_mutex_);
    {
      std::scoped_lock lock(mutex_);
      if (state_ != RunState::Running) continue;
    }
    try {
      const EvolutionStep& st = run_->advance();
      std::scoped_lock lock(mutex_);
      record(st);
      if (run_->done()) state_ = RunState::Done;
    } catch (const Error& e) {
      std::scoped_lock lock(mutex_);
      error_ = e.what();
      state_ = RunState::Done;
    }
    changed_.notify_all();
  }
}

// ------------------------------------------------------------------ routes

namespace {

void send_json(httplib::Response& res, const json& j, int status = 200) {
  res.status = status;
  res.set_content(j.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
  send_json(res, {{"error", message}}, status);
}

int status_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidGraph:
    case ErrorKind::UnboundParameter:
    case ErrorKind::ParseError:
    case ErrorKind::InvalidConfig:
    case ErrorKind::InsufficientRange:
      return 400;
    default:
      return 422;
  }
}

// Runs a handler body and maps library errors to HTTP statuses.
template <class F>
httplib::Server::Handler guarded(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const Session::StateConflict& e) {
      send_error(res, 409, e.what());
    } catch (const Error& e) {
      send_error(res, status_for(e.kind()), std::string(to_string(e.kind())) + ": " + e.what());
    } catch (const json::exception& e) {
      send_error(res, 400, e.what());
    } catch (const std::logic_error& e) {  // std::stoi on a bad query value
      send_error(res, 400, e.what());
    }
  };
}

json body_json(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    return json::parse(req.body);
  } catch (const json::parse_error&) {
    throw Error(ErrorKind::ParseError, "request body is not valid JSON");
  }
}

ParameterBinding binding_from(const std::string& text) {
  return text.empty() ? ParameterBinding{} : ParameterBinding::parse(text);
}

bool flag(const httplib::Request& req, const std::string& key, bool fallback) {
  if (!req.has_param(key)) return fallback;
  const std::string v = req.get_param_value(key);
  return v == "1" || v == "true";
}

}  // namespace

void Session::install(httplib::Server& server) {
  server.Get("/api/graph", guarded([this](const httplib::Request&, httplib::Response& res) {
               send_json(res, graph_to_json(graph()));
             }));

  server.Put("/api/graph", guarded([this](const httplib::Request& req, httplib::Response& res) {
               MetricGraph g = graph_from_json(body_json(req));
               const auto violations = validate(g);
               if (!violations.empty()) {
                 json list = json::array();
                 for (const auto& v : violations) list.push_back({{"kind", to_string(v.kind)}, {"detail", v.detail}});
                 send_json(res, {{"error", to_string(violations.front().kind) + ": " + violations.front().detail},
                                 {"violations", list}},
                           400);
                 return;
               }
               set_graph(g);
               send_json(res, graph_to_json(g));
             }));

  server.Get("/api/dk", guarded([this](const httplib::Request& req, httplib::Response& res) {
               const ParameterBinding b = binding_from(req.get_param_value("bind"));
               KRange range;
               range.k0 = req.has_param("k0") ? parse_real(req.get_param_value("k0")) : 0.0;
               range.k1 = req.has_param("k1") ? parse_real(req.get_param_value("k1")) : 4.0 * 3.14159265358979323846;
               range.n = req.has_param("n") ? static_cast<int>(parse_real(req.get_param_value("n"))) : 1000;
               const auto samples = plot_dk(prepare_graph(graph(), b, flag(req, "normalize", true)), range);
               if (req.get_param_value("format") == "csv") {
                 res.set_content(secular_csv(samples), "text/csv");
               } else {
                 send_json(res, dk_to_json(samples));
               }
             }));

  server.Post("/api/spectrum", guarded([this](const httplib::Request& req, httplib::Response& res) {
                const json body = body_json(req);
                const MetricGraph g = body.contains("graph") ? graph_from_json(body["graph"]) : graph();
                const ParameterBinding b = binding_from(body.value("bind", std::string()));
                const double k_max = body.contains("k_max") ? parse_config_number(body["k_max"], "k_max")
                                                            : RootSearchOptions{}.k_max;
                const ModeRequest mode = parse_mode(body.value("mode", std::string("auto")));
                const auto r = spectrum_of(prepare_graph(g, b, body.value("normalize", true)), k_max, mode);
                json j = spectrum_to_json(r.spectrum);
                j["warnings"] = r.warnings;
                send_json(res, j);
              }));

  server.Post("/api/run", guarded([this](const httplib::Request& req, httplib::Response& res) {
                json body = body_json(req);
                bool paused = false;
                if (body.contains("paused")) {
                  paused = body["paused"].get<bool>();
                  body.erase("paused");
                }
                start(config_from_json(body), paused);
                send_json(res, run_state(), 201);
              }));

  server.Get("/api/run/state", guarded([this](const httplib::Request& req, httplib::Response& res) {
               const int since = req.has_param("since") ? std::stoi(req.get_param_value("since")) : 0;
               send_json(res, run_state(since));
             }));

  server.Get("/api/run/log", guarded([this](const httplib::Request&, httplib::Response& res) {
               const json s = run_state();
               std::string out;
               if (s.contains("config")) {
                 out = json{{"type", "run"}, {"config", s["config"]}, {"initial", s["initial"]}}.dump() + '\n';
               }
               for (const auto& line : s["steps"]) out += line.dump() + '\n';
               res.set_content(out, "application/x-ndjson");
             }));

  server.Put("/api/run/goal", guarded([this](const httplib::Request& req, httplib::Response& res) {
               json body = body_json(req);
               const json& goal = body.contains("goal") ? body["goal"] : body;
               replace_goal(goal_from_json(goal));
               send_json(res, run_state());
             }));

  server.Post("/api/run/step", guarded([this](const httplib::Request&, httplib::Response& res) {
                send_json(res, step_once());
              }));

  server.Post("/api/run/pause", guarded([this](const httplib::Request&, httplib::Response& res) {
                pause();
                send_json(res, run_state());
              }));

  server.Post("/api/run/resume", guarded([this](const httplib::Request&, httplib::Response& res) {
                resume();
                send_json(res, run_state());
              }));

  server.Post("/api/run/stop", guarded([this](const httplib::Request&, httplib::Response& res) {
                stop();
                send_json(res, run_state());
              }));
}

int serve(const ServeOptions& opts, MetricGraph initial) {
  httplib::Server server;
  Session session(std::move(initial));
  session.install(server);
  if (opts.static_dir && !server.set_mount_point("/", opts.static_dir->string())) {
    return 1;
  }
  return server.listen(opts.host, opts.port) ? 0 : 1;
}

}  // namespace qgraph
