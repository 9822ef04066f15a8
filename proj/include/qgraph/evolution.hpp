#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qgraph/goals.hpp"
#include "qgraph/graph.hpp"
#include "qgraph/policy.hpp"
#include "qgraph/spectrum.hpp"

namespace qgraph {

// A child graph plus the move that produced it. For pendant moves `a` is the
// anchor vertex; for between moves (a, b) is the vertex pair; for deletions
// `a` is the parent edge index.
struct Candidate {
  MetricGraph graph;
  MoveKind move = MoveKind::Pendant;
  int a = 0;
  int b = -1;
};

std::string to_string(MoveKind kind);
std::string describe(const MoveSet& moves);

// Enumerates children in canonical order: pendant moves by vertex, then
// between moves by vertex pair (u <= v), then deletions by edge. Children are
// normalized to total length one and canonicalized. Throws NoLegalMove.
std::vector<Candidate> candidates(const MetricGraph& parent, const MoveSet& moves, const MovePolicy& policy);
std::vector<Candidate> candidates(const MetricGraph& parent, const MovePolicy& policy, int step = 0);

// How spectra are obtained while evolving.
struct RootConfig {
  bool k_max_auto = true;  // smallest window holding the needed eigenvalues
  RootSearchOptions search;
};

// Leading `count` eigenvalues, multiplicity-expanded, starting with 0.
std::vector<double> leading_eigenvalues(const MetricGraph& g, int count, const RootConfig& roots);

inline constexpr int kPrefixLength = 8;

struct EvolutionStep {
  int index = 0;  // zero-based
  int phase = 0;
  std::string goal;   // describe() of the goal in force
  std::string moves;  // describe() of the move set in force
  MetricGraph parent;
  MetricGraph child;
  MoveKind move = MoveKind::Pendant;
  int move_a = 0;
  int move_b = -1;
  int candidate_count = 0;
  std::vector<std::optional<double>> scores;  // nullopt for failed candidates
  int chosen = 0;
  double score = 0.0;
  int ties = 1;  // candidates within the tie tolerance of the minimum
  std::vector<double> eigenvalues;  // leading lambdas of the child
  std::vector<double> k_prefix;     // first nonzero k-values of the child
  std::vector<std::string> warnings;
  // Set on the first step of every phase after the first.
  std::optional<std::string> phase_start;  // "stop_condition" or "goal_replaced"
};

// Index of the minimum score; anything within the tie tolerance of the
// minimum counts as tied and the first one wins. Returns nullopt if every
// score is missing.
std::optional<int> select_minimum(const std::vector<std::optional<double>>& scores, int* ties = nullptr);

inline constexpr double kTieTolerance = 1e-9;

// One greedy step: score every candidate, keep the best.
EvolutionStep step(const MetricGraph& parent, const Goal& goal, const MovePolicy& policy,
                   const RootConfig& roots, int step_index = 0);

struct RunConfig {
  std::string name;
  MetricGraph initial;
  Goal goal = MaximizeLambda1{};
  MovePolicy policy;
  int steps = 1;
  RootConfig roots;

  void check() const;  // throws InvalidConfig
};

struct GraphState {
  MetricGraph graph;
  std::optional<double> score;
  std::vector<double> eigenvalues;
  std::vector<double> k_prefix;
};

struct RunLog {
  RunConfig config;
  GraphState initial;
  std::vector<EvolutionStep> steps;
  std::vector<double> seconds;  // wall-clock per step; not part of the replay record
  std::optional<std::string> aborted;
};

// Step-granular driver shared by run() and the HTTP service.
class EvolutionRun {
 public:
  explicit EvolutionRun(RunConfig config);

  const RunConfig& config() const { return log_.config; }
  const RunLog& log() const { return log_; }
  const MetricGraph& current() const { return current_.graph; }
  int phase() const { return phase_; }
  const Goal& active_goal() const { return phases_.at(static_cast<std::size_t>(phase_)).goal; }
  bool done() const;

  // Executes one step. Throws StepFailure when every candidate fails or no
  // move is legal; the log keeps all completed steps.
  const EvolutionStep& advance();

  // Replaces the goal from the next step on. Programs are expanded into their
  // phases. Recorded as a phase start on the next step.
  void replace_goal(const Goal& goal);

  // Extends the step budget (used by the service when resuming).
  void set_steps(int steps);

 private:
  void maybe_switch_phase();
  int eigen_count() const;
  MovePolicy policy_for_phase() const;

  RunLog log_;
  std::vector<ProgramPhase> phases_;
  int phase_ = 0;
  int phase_begin_ = 0;  // step index where the current phase began
  std::optional<std::string> pending_start_;
  GraphState current_;
};

// Runs to completion. An unrecoverable step stops the run and sets `aborted`.
RunLog run(const RunConfig& config);

// Chosen-graph sequence cycle: smallest start, then smallest period <= horizon,
// such that every chosen graph from start on is isomorphic to the one a
// period later with an identical score, and at least one full repeat exists.
struct Cycle {
  int start = 0;  // step index
  int period = 0;
};

std::optional<Cycle> detect_cycle(const RunLog& log, int horizon = 16);

// Isomorphism of metric multigraphs with lengths rounded to 1e-9.
bool isomorphic(const MetricGraph& a, const MetricGraph& b);

// Worker count for candidate scoring: QG_THREADS if set, else hardware threads.
int worker_threads();

}  // namespace qgraph
