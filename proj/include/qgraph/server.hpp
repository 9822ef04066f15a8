#pragma once

#include <condition_variable>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "qgraph/evolution.hpp"
#include "qgraph/graph.hpp"

namespace httplib {
class Server;
}

namespace qgraph {

enum class RunState { Idle, Running, Paused, Done };

std::string to_string(RunState s);

// Session state behind the HTTP API: one graph and at most one run.
// Handlers are thread-safe. A background worker advances the run while it
// is Running; goal changes and manual steps wait for the step boundary.
class Session {
 public:
  explicit Session(MetricGraph graph);
  ~Session();

  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  // Registers every /api route on `server`.
  void install(httplib::Server& server);

  MetricGraph graph() const;
  void set_graph(MetricGraph g);

  RunState state() const;
  // Completed steps of the current run, from `since` on, plus the header.
  nlohmann::json run_state(int since = 0) const;

  // Throws Error(InvalidConfig) for bad configs and StateConflict for
  // transitions the current state does not allow.
  void start(const RunConfig& config, bool paused = false);
  void pause();
  void resume();
  void stop();
  void replace_goal(const Goal& goal);
  nlohmann::json step_once();  // Paused only; returns the step record

  // Blocks until the run leaves Running (tests and shutdown).
  void wait_idle();

  struct StateConflict : std::runtime_error {
    using std::runtime_error::runtime_error;
  };

 private:
  void worker_loop(std::stop_token stop);
  void record(const EvolutionStep& step);

  mutable std::mutex graph_mutex_;
  MetricGraph graph_;

  // Guards state_, run_, lines_ and error_. The run itself is only advanced
  // while step_mutex_ is held, so goal edits land between steps.
  mutable std::mutex mutex_;
  std::condition_variable_any changed_;
  std::mutex step_mutex_;
  RunState state_ = RunState::Idle;
  std::unique_ptr<EvolutionRun> run_;
  nlohmann::json header_;
  std::vector<nlohmann::json> lines_;
  std::optional<std::string> error_;
  int phase_ = 0;
  std::string goal_;
  std::jthread worker_;
};

struct ServeOptions {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::optional<std::filesystem::path> static_dir;  // web UI assets
};

// Blocks serving until the process is terminated. Returns nonzero if the
// port cannot be bound.
int serve(const ServeOptions& opts, MetricGraph initial);

}  // namespace qgraph
