#include "qgraph/evolution.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <climits>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iterator>
#include <map>
#include <numeric>
#include <random>
#include <thread>
#include <utility>

#include "qgraph/error.hpp"

namespace qgraph {

// ------------------------------------------------------------------ policy

void MovePolicy::check() const {
  if (!alternate && !add_pendant && !add_between) {
    throw Error(ErrorKind::InvalidConfig, "policy enables no additive move");
  }
  if (candidate_cap && *candidate_cap < 1) {
    throw Error(ErrorKind::InvalidConfig, "candidate_cap must be at least 1");
  }
}

MoveSet moves_for_step(const MovePolicy& policy, int step) {
  MoveSet m;
  if (policy.alternate) {
    const bool delete_turn = (step % 2 == 0) == policy.alternate_starts_with_delete;
    if (delete_turn) {
      m.remove = true;
    } else {
      m.pendant = policy.add_pendant;
      m.between = policy.add_between;
    }
  } else {
    m.pendant = policy.add_pendant;
    m.between = policy.add_between;
    m.remove = policy.delete_edge;
  }
  if (policy.trees_only) m.between = false;
  return m;
}

std::string to_string(MoveKind kind) {
  switch (kind) {
    case MoveKind::Pendant: return "pendant";
    case MoveKind::Between: return "between";
    case MoveKind::Delete: return "delete";
  }
  return "?";
}

std::string describe(const MoveSet& moves) {
  std::string s;
  auto add = [&](bool on, const char* name) {
    if (!on) return;
    if (!s.empty()) s += '+';
    s += name;
  };
  add(moves.pendant, "pendant");
  add(moves.between, "between");
  add(moves.remove, "delete");
  return s.empty() ? "none" : s;
}

// -------------------------------------------------------------- candidates

namespace {

Candidate make_child(const MetricGraph& parent, std::vector<Edge> edges, int vertices, MoveKind kind, int a,
                     int b, bool loops) {
  MetricGraph child(vertices, std::move(edges), loops || parent.allow_loops());
  return {canonical(normalize(child)), kind, a, b};
}

// Removes edge `e`, drops vertices left isolated and renumbers the rest.
std::optional<MetricGraph> delete_edge(const MetricGraph& g, int e) {
  std::vector<Edge> edges;
  edges.reserve(static_cast<std::size_t>(g.edge_count() - 1));
  for (int n = 0; n < g.edge_count(); ++n) {
    if (n != e) edges.push_back(g.edge(n));
  }
  if (edges.empty()) return std::nullopt;
  std::vector<int> deg(static_cast<std::size_t>(g.vertex_count()), 0);
  for (const Edge& x : edges) {
    ++deg[static_cast<std::size_t>(x.u)];
    ++deg[static_cast<std::size_t>(x.v)];
  }
  std::vector<int> remap(deg.size(), -1);
  int next = 0;
  for (std::size_t v = 0; v < deg.size(); ++v) {
    if (deg[v] > 0) remap[v] = next++;
  }
  for (Edge& x : edges) {
    x.u = remap[static_cast<std::size_t>(x.u)];
    x.v = remap[static_cast<std::size_t>(x.v)];
  }
  MetricGraph out(next, std::move(edges), g.allow_loops());
  if (!is_connected(out)) return std::nullopt;
  return out;
}

}  // namespace

std::vector<Candidate> candidates(const MetricGraph& parent, const MoveSet& requested, const MovePolicy& policy) {
  MoveSet moves = requested;
  if (policy.trees_only) moves.between = false;

  const int m = parent.vertex_count();
  const int n = parent.edge_count();
  const double total = total_length(parent);
  const double new_length = total / (policy.new_edge == NewEdgeRule::ParentEdgeCount ? n : n + 1);
  const LengthExpr len = LengthExpr::concrete(new_length);

  std::vector<Candidate> out;
  if (moves.pendant) {
    for (int v = 0; v < m; ++v) {
      std::vector<Edge> edges = parent.edges();
      edges.push_back({v, m, len});
      out.push_back(make_child(parent, std::move(edges), m + 1, MoveKind::Pendant, v, -1, false));
    }
  }
  if (moves.between) {
    std::vector<int> adjacent(static_cast<std::size_t>(m) * static_cast<std::size_t>(m), 0);
    for (const Edge& e : parent.edges()) {
      adjacent[static_cast<std::size_t>(e.u * m + e.v)] = 1;
      adjacent[static_cast<std::size_t>(e.v * m + e.u)] = 1;
    }
    for (int u = 0; u < m; ++u) {
      for (int v = policy.allow_loops ? u : u + 1; v < m; ++v) {
        if (!policy.allow_parallel && adjacent[static_cast<std::size_t>(u * m + v)]) continue;
        std::vector<Edge> edges = parent.edges();
        edges.push_back({u, v, len});
        out.push_back(make_child(parent, std::move(edges), m, MoveKind::Between, u, v, u == v));
      }
    }
  }
  if (moves.remove) {
    for (int e = 0; e < n; ++e) {
      auto child = delete_edge(parent, e);
      if (!child) continue;
      if (policy.trees_only && !is_tree(*child)) continue;
      out.push_back({canonical(normalize(*child)), MoveKind::Delete, e, -1});
    }
  }
  if (out.empty()) {
    throw Error(ErrorKind::NoLegalMove, "no legal move (" + describe(moves) + ") from a graph with " +
                                            std::to_string(n) + " edges");
  }
  return out;
}

std::vector<Candidate> candidates(const MetricGraph& parent, const MovePolicy& policy, int step) {
  return candidates(parent, moves_for_step(policy, step), policy);
}

// ----------------------------------------------------------------- scoring

std::vector<double> leading_eigenvalues(const MetricGraph& g, int count, const RootConfig& roots) {
  if (roots.k_max_auto) {
    const SecularEvaluator ev(g);
    return eigenvalues(leading_spectrum(ev, count, roots.search), count);
  }
  return eigenvalues(compute_spectrum(g, roots.search), count);
}

int worker_threads() {
  if (const char* env = std::getenv("QG_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::optional<int> select_minimum(const std::vector<std::optional<double>>& scores, int* ties) {
  std::optional<double> best;
  for (const auto& s : scores) {
    if (s && (!best || *s < *best)) best = *s;
  }
  if (!best) return std::nullopt;
  const double tol = kTieTolerance * std::max(1.0, std::abs(*best));
  std::optional<int> chosen;
  int tied = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i] && *scores[i] <= *best + tol) {
      if (!chosen) chosen = static_cast<int>(i);
      ++tied;
    }
  }
  if (ties) *ties = tied;
  return chosen;
}

namespace {

// Applies fn(i) for i in [0, n) on up to worker_threads() threads.
void parallel_for(int n, const std::function<void(int)>& fn) {
  const int workers = std::min(n, worker_threads());
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) fn(i);
    });
  }
}

EvolutionStep step_impl(const MetricGraph& parent, const Goal& goal, const MovePolicy& policy,
                        const RootConfig& roots, int step_index, int eigen_count) {
  if (std::holds_alternative<Program>(goal)) {
    throw Error(ErrorKind::InvalidConfig, "step() needs a single goal; use EvolutionRun for programs");
  }
  const MoveSet moves = moves_for_step(policy, step_index);
  std::vector<Candidate> pool = candidates(parent, moves, policy);

  if (policy.candidate_cap && static_cast<int>(pool.size()) > *policy.candidate_cap) {
    std::mt19937_64 rng(policy.seed + static_cast<std::uint64_t>(step_index));
    std::vector<Candidate> kept;
    std::sample(pool.begin(), pool.end(), std::back_inserter(kept), *policy.candidate_cap, rng);
    pool = std::move(kept);
  }

  const int n = static_cast<int>(pool.size());
  const int need = required_eigenvalues(goal);
  std::vector<std::optional<double>> scores(static_cast<std::size_t>(n));
  std::vector<std::string> errors(static_cast<std::size_t>(n));
  parallel_for(n, [&](int i) {
    const auto idx = static_cast<std::size_t>(i);
    try {
      scores[idx] = score_eigenvalues(goal, leading_eigenvalues(pool[idx].graph, need, roots)).value;
    } catch (const Error& e) {
      errors[idx] = e.what();
    }
  });

  EvolutionStep st;
  st.index = step_index;
  st.goal = describe(goal);
  st.moves = describe(moves);
  st.parent = parent;
  st.candidate_count = n;
  for (int i = 0; i < n; ++i) {
    const auto& err = errors[static_cast<std::size_t>(i)];
    if (!err.empty()) st.warnings.push_back("candidate " + std::to_string(i) + " excluded: " + err);
  }
  const auto chosen = select_minimum(scores, &st.ties);
  if (!chosen) {
    throw Error(ErrorKind::StepFailure, "step " + std::to_string(step_index) + ": every candidate failed");
  }
  const Candidate& best = pool[static_cast<std::size_t>(*chosen)];
  st.chosen = *chosen;
  st.score = *scores[static_cast<std::size_t>(*chosen)];
  st.scores = std::move(scores);
  st.child = best.graph;
  st.move = best.move;
  st.move_a = best.a;
  st.move_b = best.b;

  const int count = std::max({eigen_count, need, kPrefixLength + 1});
  st.eigenvalues = leading_eigenvalues(st.child, count, roots);
  for (int j = 1; j <= kPrefixLength; ++j) {
    st.k_prefix.push_back(std::sqrt(std::max(0.0, st.eigenvalues[static_cast<std::size_t>(j)])));
  }
  return st;
}

std::vector<ProgramPhase> expand(const Goal& goal) {
  if (const auto* p = std::get_if<Program>(&goal)) return p->phases;
  return {ProgramPhase{goal, StepBudget{INT_MAX}, std::nullopt}};
}

void check_goal(const Goal& goal, bool nested) {
  if (const auto* t = std::get_if<MinimizeDistance>(&goal)) t->target.check();
  if (const auto* p = std::get_if<Program>(&goal)) {
    if (nested) throw Error(ErrorKind::InvalidConfig, "programs cannot be nested");
    if (p->phases.empty()) throw Error(ErrorKind::InvalidConfig, "program has no phases");
    for (const auto& phase : p->phases) {
      check_goal(phase.goal, true);
      if (const auto* b = std::get_if<StepBudget>(&phase.stop); b && b->steps < 1) {
        throw Error(ErrorKind::InvalidConfig, "phase step budget must be at least 1");
      }
      if (const auto* t = std::get_if<EigenvalueThreshold>(&phase.stop); t && t->index < 0) {
        throw Error(ErrorKind::InvalidConfig, "stop condition eigenvalue index must be nonnegative");
      }
      if (phase.policy) phase.policy->check();
    }
  }
}

}  // namespace

EvolutionStep step(const MetricGraph& parent, const Goal& goal, const MovePolicy& policy, const RootConfig& roots,
                   int step_index) {
  return step_impl(parent, goal, policy, roots, step_index, 0);
}

// --------------------------------------------------------------------- run

void RunConfig::check() const {
  if (steps < 1) throw Error(ErrorKind::InvalidConfig, "steps must be at least 1");
  if (!initial.is_concrete()) throw Error(ErrorKind::InvalidConfig, "initial graph must have concrete lengths");
  const auto violations = validate(initial);
  if (!violations.empty()) {
    throw Error(ErrorKind::InvalidConfig, "initial graph: " + to_string(violations.front().kind) + ": " +
                                              violations.front().detail);
  }
  policy.check();
  check_goal(goal, false);
}

EvolutionRun::EvolutionRun(RunConfig config) {
  config.check();
  log_.config = std::move(config);
  phases_ = expand(log_.config.goal);
  current_.graph = log_.config.initial;
  current_.eigenvalues = leading_eigenvalues(current_.graph, eigen_count(), log_.config.roots);
  for (int j = 1; j <= kPrefixLength; ++j) {
    current_.k_prefix.push_back(std::sqrt(std::max(0.0, current_.eigenvalues[static_cast<std::size_t>(j)])));
  }
  try {
    current_.score = score_eigenvalues(active_goal(), current_.eigenvalues).value;
  } catch (const Error&) {
    current_.score.reset();  // e.g. a ratio goal on a degenerate start
  }
  log_.initial = current_;
}

bool EvolutionRun::done() const {
  return log_.aborted.has_value() || static_cast<int>(log_.steps.size()) >= log_.config.steps;
}

int EvolutionRun::eigen_count() const {
  int n = kPrefixLength + 1;
  for (const auto& phase : phases_) {
    n = std::max({n, required_eigenvalues(phase.goal), required_eigenvalues(phase.stop)});
  }
  return n;
}

MovePolicy EvolutionRun::policy_for_phase() const {
  const auto& phase = phases_.at(static_cast<std::size_t>(phase_));
  return phase.policy ? *phase.policy : log_.config.policy;
}

void EvolutionRun::maybe_switch_phase() {
  const int done_steps = static_cast<int>(log_.steps.size());
  while (phase_ + 1 < static_cast<int>(phases_.size()) &&
         stop_reached(phases_[static_cast<std::size_t>(phase_)].stop, current_.eigenvalues, done_steps - phase_begin_)) {
    ++phase_;
    phase_begin_ = done_steps;
    pending_start_ = "stop_condition";
  }
}

const EvolutionStep& EvolutionRun::advance() {
  if (done()) throw Error(ErrorKind::StepFailure, "run is complete");
  maybe_switch_phase();
  const int index = static_cast<int>(log_.steps.size());
  const auto t0 = std::chrono::steady_clock::now();
  EvolutionStep st;
  try {
    st = step_impl(current_.graph, active_goal(), policy_for_phase(), log_.config.roots, index, eigen_count());
  } catch (const Error& e) {
    log_.aborted = "step " + std::to_string(index) + ": " + e.what();
    throw Error(ErrorKind::StepFailure, *log_.aborted);
  }
  const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
  st.phase = phase_;
  st.phase_start = std::exchange(pending_start_, std::nullopt);
  current_ = {st.child, st.score, st.eigenvalues, st.k_prefix};
  log_.steps.push_back(std::move(st));
  log_.seconds.push_back(dt.count());
  return log_.steps.back();
}

void EvolutionRun::replace_goal(const Goal& goal) {
  check_goal(goal, false);
  phases_.resize(static_cast<std::size_t>(phase_ + 1));
  for (auto& phase : expand(goal)) phases_.push_back(std::move(phase));
  ++phase_;
  phase_begin_ = static_cast<int>(log_.steps.size());
  pending_start_ = "goal_replaced";
}

void EvolutionRun::set_steps(int steps) {
  if (steps < 1) throw Error(ErrorKind::InvalidConfig, "steps must be at least 1");
  log_.config.steps = steps;
}

RunLog run(const RunConfig& config) {
  EvolutionRun r(config);
  while (!r.done()) {
    try {
      r.advance();
    } catch (const Error&) {
      break;  // recorded in log().aborted
    }
  }
  return r.log();
}

// ------------------------------------------------------------- isomorphism

namespace {

using RoundedLength = long long;

RoundedLength rounded(double x) { return std::llround(x * 1e9); }

struct Shape {
  int n = 0;
  std::vector<std::vector<std::pair<int, RoundedLength>>> incident;  // (neighbour, length)
  std::map<std::pair<int, int>, std::vector<RoundedLength>> between;

  explicit Shape(const MetricGraph& g) : n(g.vertex_count()), incident(static_cast<std::size_t>(n)) {
    for (const Edge& e : g.edges()) {
      const RoundedLength l = rounded(e.length.value());
      incident[static_cast<std::size_t>(e.u)].emplace_back(e.v, l);
      incident[static_cast<std::size_t>(e.v)].emplace_back(e.u, l);
      between[std::minmax(e.u, e.v)].push_back(l);
    }
    for (auto& [key, lens] : between) std::sort(lens.begin(), lens.end());
  }

  const std::vector<RoundedLength>& lengths(int u, int v) const {
    static const std::vector<RoundedLength> none;
    auto it = between.find(std::minmax(u, v));
    return it == between.end() ? none : it->second;
  }
};

// Joint colour refinement so colours are comparable across both graphs.
void refine(const Shape& a, const Shape& b, std::vector<int>& ca, std::vector<int>& cb) {
  ca.assign(static_cast<std::size_t>(a.n), 0);
  cb.assign(static_cast<std::size_t>(b.n), 0);
  std::size_t classes = 1;
  for (;;) {
    using Signature = std::pair<int, std::vector<std::pair<int, RoundedLength>>>;
    std::map<Signature, int> palette;
    auto signature = [](const Shape& s, const std::vector<int>& c, int v) {
      Signature sig{c[static_cast<std::size_t>(v)], {}};
      for (auto [w, l] : s.incident[static_cast<std::size_t>(v)]) {
        sig.second.emplace_back(c[static_cast<std::size_t>(w)], l);
      }
      std::sort(sig.second.begin(), sig.second.end());
      return sig;
    };
    std::vector<Signature> sa, sb;
    for (int v = 0; v < a.n; ++v) palette.emplace(sa.emplace_back(signature(a, ca, v)), 0);
    for (int v = 0; v < b.n; ++v) palette.emplace(sb.emplace_back(signature(b, cb, v)), 0);
    int next = 0;
    for (auto& [sig, colour] : palette) colour = next++;
    for (int v = 0; v < a.n; ++v) ca[static_cast<std::size_t>(v)] = palette[sa[static_cast<std::size_t>(v)]];
    for (int v = 0; v < b.n; ++v) cb[static_cast<std::size_t>(v)] = palette[sb[static_cast<std::size_t>(v)]];
    if (palette.size() == classes) return;
    classes = palette.size();
  }
}

bool extend(const Shape& a, const Shape& b, const std::vector<int>& ca, const std::vector<int>& cb,
            std::vector<int>& map, std::vector<char>& used, int v) {
  if (v == a.n) return true;
  for (int w = 0; w < b.n; ++w) {
    if (used[static_cast<std::size_t>(w)] || cb[static_cast<std::size_t>(w)] != ca[static_cast<std::size_t>(v)]) {
      continue;
    }
    bool ok = a.lengths(v, v) == b.lengths(w, w);
    for (int x = 0; ok && x < v; ++x) {
      ok = a.lengths(v, x) == b.lengths(w, map[static_cast<std::size_t>(x)]);
    }
    if (!ok) continue;
    map[static_cast<std::size_t>(v)] = w;
    used[static_cast<std::size_t>(w)] = 1;
    if (extend(a, b, ca, cb, map, used, v + 1)) return true;
    used[static_cast<std::size_t>(w)] = 0;
  }
  return false;
}

}  // namespace

bool isomorphic(const MetricGraph& ga, const MetricGraph& gb) {
  if (ga.vertex_count() != gb.vertex_count() || ga.edge_count() != gb.edge_count()) return false;
  const Shape a(ga), b(gb);
  std::vector<int> ca, cb;
  refine(a, b, ca, cb);
  std::vector<int> ha = ca, hb = cb;
  std::sort(ha.begin(), ha.end());
  std::sort(hb.begin(), hb.end());
  if (ha != hb) return false;
  std::vector<int> map(static_cast<std::size_t>(a.n), -1);
  std::vector<char> used(static_cast<std::size_t>(b.n), 0);
  return extend(a, b, ca, cb, map, used, 0);
}

std::optional<Cycle> detect_cycle(const RunLog& log, int horizon) {
  const int n = static_cast<int>(log.steps.size());
  auto same = [&](int i, int j) {
    const auto& x = log.steps[static_cast<std::size_t>(i)];
    const auto& y = log.steps[static_cast<std::size_t>(j)];
    const double tol = kTieTolerance * std::max(1.0, std::abs(x.score));
    return std::abs(x.score - y.score) <= tol && isomorphic(x.child, y.child);
  };
  for (int start = 0; start < n; ++start) {
    for (int period = 1; period <= horizon && start + 2 * period <= n; ++period) {
      bool periodic = true;
      for (int i = start; periodic && i + period < n; ++i) periodic = same(i, i + period);
      if (periodic) return Cycle{start, period};
    }
  }
  return std::nullopt;
}

}  // namespace qgraph
