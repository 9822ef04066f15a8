#include <doctest.h>

#include <cstdlib>
#include <random>

#include "qgraph/config.hpp"
#include "qgraph/error.hpp"
#include "qgraph/evolution.hpp"
#include "support.hpp"

using namespace qgraph;
using namespace qgraph::testing;

namespace {

bool is_path(const MetricGraph& g) {
  if (!is_tree(g)) return false;
  for (int d : degrees(g)) {
    if (d > 2) return false;
  }
  return true;
}

MovePolicy moves(bool pendant, bool between, bool remove = false) {
  MovePolicy p;
  p.add_pendant = pendant;
  p.add_between = between;
  p.delete_edge = remove;
  return p;
}

RunConfig small_config(Goal goal, MovePolicy policy, int steps, MetricGraph start = normalize(families::path(3))) {
  RunConfig c;
  c.name = "test";
  c.initial = std::move(start);
  c.goal = std::move(goal);
  c.policy = policy;
  c.steps = steps;
  return c;
}

Goal path_target() { return MinimizeDistance{{{0, pi * pi, 4 * pi * pi}, DistanceSpace::Lambda}}; }

// A log whose chosen graphs follow `pattern` (indices into `graphs`) with
// matching scores.
RunLog synthetic_log(const std::vector<MetricGraph>& graphs, const std::vector<int>& pattern) {
  RunLog log;
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    EvolutionStep st;
    st.index = static_cast<int>(i);
    st.child = graphs[static_cast<std::size_t>(pattern[i])];
    st.score = -static_cast<double>(pattern[i]);
    log.steps.push_back(st);
  }
  return log;
}

}  // namespace

TEST_CASE("candidate enumeration") {
  const MetricGraph p3 = normalize(families::path(3));
  const auto all = candidates(p3, moves(true, true));
  REQUIRE(all.size() == 6);
  for (int i = 0; i < 3; ++i) {
    CHECK(all[static_cast<std::size_t>(i)].move == MoveKind::Pendant);
    CHECK(all[static_cast<std::size_t>(i)].a == i);
    CHECK(all[static_cast<std::size_t>(i) + 3].move == MoveKind::Between);
  }
  // New raw length is 1/N = 1/2, so after renormalizing every edge is 1/3.
  for (const auto& c : all) {
    CHECK(c.graph.edge_count() == 3);
    for (const auto& e : c.graph.edges()) CHECK(e.length.value() == doctest::Approx(1.0 / 3).epsilon(1e-15));
    CHECK(std::abs(total_length(c.graph) - 1.0) <= 1e-12);
  }

  MovePolicy del;
  del.add_pendant = del.add_between = false;
  del.alternate = true;
  del.alternate_starts_with_delete = true;
  const auto cut = candidates(load_fixture("triangle"), del, 0);
  REQUIRE(cut.size() == 3);
  for (const auto& c : cut) {
    CHECK(c.move == MoveKind::Delete);
    CHECK(is_path(c.graph));
    CHECK(c.graph.vertex_count() == 3);
  }

  MovePolicy trees;
  trees.trees_only = true;
  const auto t = candidates(p3, trees);
  CHECK(t.size() == 3);
  for (const auto& c : t) CHECK(c.move == MoveKind::Pendant);

  MovePolicy no_parallel = moves(false, true);
  no_parallel.allow_parallel = false;
  CHECK(candidates(p3, no_parallel).size() == 1);

  MovePolicy loops = moves(false, true);
  loops.allow_loops = true;
  CHECK(candidates(p3, loops).size() == 6);

  // Deleting the only edge leaves nothing.
  try {
    candidates(families::path(2), MoveSet{false, false, true}, MovePolicy{});
    FAIL("expected NoLegalMove");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NoLegalMove);
  }
}

TEST_CASE("child edge rule") {
  MovePolicy child = moves(true, false);
  child.new_edge = NewEdgeRule::ChildEdgeCount;
  const auto c = candidates(normalize(families::path(3)), child);
  // Raw new length 1/3 on total 1, renormalized by 4/3.
  auto lengths = c.front().graph.lengths();
  std::sort(lengths.begin(), lengths.end());
  CHECK(lengths[0] == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(lengths[1] == doctest::Approx(0.375).epsilon(1e-14));
}

TEST_CASE("move policy validation and alternation") {
  CHECK_THROWS_AS(moves(false, false).check(), Error);
  MovePolicy capped;
  capped.candidate_cap = 0;
  CHECK_THROWS_AS(capped.check(), Error);

  MovePolicy alt;
  alt.alternate = true;
  CHECK(moves_for_step(alt, 0).pendant);
  CHECK(moves_for_step(alt, 1).remove);
  CHECK_FALSE(moves_for_step(alt, 1).pendant);
  alt.alternate_starts_with_delete = true;
  CHECK(moves_for_step(alt, 0).remove);

  MovePolicy tree;
  tree.trees_only = true;
  CHECK_FALSE(moves_for_step(tree, 0).between);
}

TEST_CASE("a single step") {
  const EvolutionStep st = step(normalize(families::path(3)), path_target(), moves(true, true), RootConfig{});
  CHECK(st.candidate_count == 6);
  CHECK(is_path(st.child));
  CHECK(st.child.vertex_count() == 4);
  CHECK(st.score <= 1e-9);
  CHECK(st.eigenvalues.size() >= 9);
  CHECK(st.k_prefix.size() == static_cast<std::size_t>(kPrefixLength));
  CHECK(st.k_prefix[0] == doctest::Approx(pi).epsilon(1e-9));

  MovePolicy alt;
  alt.alternate = true;
  alt.alternate_starts_with_delete = true;
  const MetricGraph k4 = load_fixture("k4");
  const EvolutionStep cut = step(k4, MaximizeLambda1{}, alt, RootConfig{}, 0);
  CHECK(cut.child.edge_count() == k4.edge_count() - 1);
  CHECK(cut.move == MoveKind::Delete);

  CHECK_THROWS_AS(step(k4, Program{}, alt, RootConfig{}), Error);
}

TEST_CASE("minimum selection") {
  int ties = 0;
  CHECK(select_minimum({3.0, 1.0, 2.0}, &ties) == 1);
  CHECK(ties == 1);
  CHECK(select_minimum({std::nullopt, 2.0, 2.0 + 1e-12, 5.0}, &ties) == 1);
  CHECK(ties == 2);
  CHECK_FALSE(select_minimum({std::nullopt, std::nullopt}));

  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(0, 100);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<std::optional<double>> s;
    const int n = 1 + static_cast<int>(rng() % 12);
    for (int i = 0; i < n; ++i) s.push_back(rng() % 7 == 0 ? std::nullopt : std::optional<double>(u(rng)));
    const auto base = select_minimum(s);
    const double shift = u(rng) - 50, factor = std::uniform_real_distribution<double>(0.1, 10)(rng);
    auto moved = s;
    for (auto& x : moved) {
      if (x) *x = *x * factor + shift;
    }
    CHECK(select_minimum(moved) == base);
  }
}

TEST_CASE("path target run stays on paths") {
  const RunLog log = run(small_config(path_target(), moves(true, true), 4, families::path(3)));
  REQUIRE(log.steps.size() == 4);
  CHECK_FALSE(log.aborted);
  for (const auto& st : log.steps) CHECK(is_path(st.child));
  CHECK(log.steps.back().score < *log.initial.score);
  CHECK_FALSE(detect_cycle(log));
}

TEST_CASE("run invariants") {
  MovePolicy trees;
  trees.trees_only = true;
  const Goal tree_goal = MinimizeDistance{{{0, 4 * pi * pi, 9 * pi * pi, 9 * pi * pi}, DistanceSpace::Lambda}};
  const RunLog t = run(small_config(tree_goal, trees, 5));
  for (const auto& st : t.steps) {
    CHECK(is_tree(st.child));
    CHECK(st.child.edge_count() == st.child.vertex_count() - 1);
    CHECK(std::abs(total_length(st.child) - 1.0) <= 1e-12);
    CHECK(is_connected(st.child));
    // Per-step optimality for distance goals.
    for (const auto& s : st.scores) {
      if (s) CHECK(st.score <= *s + kTieTolerance * std::max(1.0, std::abs(st.score)));
    }
    CHECK(st.scores[static_cast<std::size_t>(st.chosen)] == st.score);
  }

  MovePolicy alt;
  alt.alternate = true;
  const RunLog a = run(small_config(MaximizeLambda1{}, alt, 6, load_fixture("k4")));
  for (std::size_t i = 0; i < a.steps.size(); ++i) {
    const auto& st = a.steps[i];
    CHECK(std::abs(total_length(st.child) - 1.0) <= 1e-12);
    CHECK(is_connected(st.child));
    CHECK(st.child.edge_count() == st.parent.edge_count() + (i % 2 == 0 ? 1 : -1));
  }
}

TEST_CASE("determinism across repeats and thread counts") {
  const RunConfig c = small_config(MaximizeRatio{}, moves(true, true), 4, normalize(families::path(4)));
  const std::string first = log_jsonl(run(c));
  CHECK(log_jsonl(run(c)) == first);
  ::setenv("QG_THREADS", "1", 1);
  CHECK(worker_threads() == 1);
  CHECK(log_jsonl(run(c)) == first);
  ::unsetenv("QG_THREADS");
}

TEST_CASE("candidate subsampling is seeded") {
  MovePolicy p = moves(true, true);
  p.candidate_cap = 3;
  p.seed = 99;
  const MetricGraph k4 = load_fixture("k4");
  const EvolutionStep a = step(k4, MaximizeLambda1{}, p, RootConfig{});
  const EvolutionStep b = step(k4, MaximizeLambda1{}, p, RootConfig{});
  CHECK(a.candidate_count == 3);
  CHECK(a.child == b.child);
}

TEST_CASE("config validation") {
  RunConfig c = small_config(MaximizeLambda1{}, MovePolicy{}, 0);
  CHECK_THROWS_AS(c.check(), Error);
  c.steps = 1;
  c.check();
  c.initial = MetricGraph(4, {{0, 1, LengthExpr::concrete(1.0)}, {2, 3, LengthExpr::concrete(1.0)}});
  try {
    c.check();
    FAIL("expected InvalidConfig");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InvalidConfig);
    CHECK(std::string(e.what()).find("Disconnected") != std::string::npos);
  }
  c.initial = load_fixture("tadpole");
  CHECK_THROWS_AS(c.check(), Error);

  Program nested;
  nested.phases.push_back({Program{}, StepBudget{1}, {}});
  CHECK_THROWS_AS(small_config(nested, MovePolicy{}, 2).check(), Error);
}

TEST_CASE("programs switch phase on their stop condition") {
  Program p;
  MovePolicy between = moves(false, true);
  between.allow_parallel = false;
  p.phases.push_back({MaximizeLambda1{}, StepBudget{2}, between});
  p.phases.push_back({path_target(), StepBudget{1}, moves(true, false)});
  EvolutionRun r(small_config(p, moves(true, true), 4, normalize(families::path(4))));
  CHECK(r.phase() == 0);
  r.advance();
  r.advance();
  const EvolutionStep& third = r.advance();
  CHECK(third.phase == 1);
  CHECK(third.phase_start == "stop_condition");
  CHECK(third.move == MoveKind::Pendant);
  CHECK(third.goal.rfind("target(", 0) == 0);
  CHECK_FALSE(r.advance().phase_start);
  CHECK(r.done());
  CHECK_THROWS_AS(r.advance(), Error);

  const RunLog log = r.log();
  CHECK(log.steps[0].move == MoveKind::Between);
  CHECK(log.steps[1].move == MoveKind::Between);
  CHECK_FALSE(log.steps[0].phase_start);

  // The threshold form: the triangle already has lambda_1 = 4 pi^2 >= 30.
  Program t;
  t.phases.push_back({MaximizeLambda1{}, EigenvalueThreshold{1, Comparator::GreaterEqual, 30.0}, {}});
  t.phases.push_back({MinimizeLambda1{}, StepBudget{1}, {}});
  EvolutionRun tr(small_config(t, moves(true, true), 1, load_fixture("triangle")));
  CHECK(tr.advance().phase == 1);
}

TEST_CASE("goal replacement marks a phase boundary") {
  EvolutionRun r(small_config(MaximizeLambda1{}, moves(true, true), 3));
  r.advance();
  r.replace_goal(path_target());
  const EvolutionStep& st = r.advance();
  CHECK(st.phase == 1);
  CHECK(st.phase_start == "goal_replaced");
  CHECK(st.goal.rfind("target(", 0) == 0);
  // The step is scored under the new goal.
  const auto l = st.eigenvalues;
  CHECK(st.score == doctest::Approx(spectral_distance(l, {{0, pi * pi, 4 * pi * pi}, DistanceSpace::Lambda})));
  r.set_steps(5);
  CHECK_FALSE(r.done());
  CHECK_THROWS_AS(r.set_steps(0), Error);
}

TEST_CASE("isomorphism") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const MetricGraph g = random_graph(rng, 6, 10);
    CHECK(isomorphic(g, relabeled(g, rng)));
  }
  CHECK(isomorphic(load_fixture("k4"), normalize(families::complete(4))));
  CHECK_FALSE(isomorphic(load_fixture("star3"), normalize(families::path(4))));
  CHECK_FALSE(isomorphic(normalize(families::cycle(4)), normalize(families::path(5))));
  // Same shape, different lengths.
  CHECK_FALSE(isomorphic(load_fixture("path_thirds"), normalize(families::path(3))));
}

TEST_CASE("cycle detection") {
  const std::vector<MetricGraph> g = {normalize(families::complete(4)), normalize(families::cycle(4)),
                                      normalize(families::path(4)), load_fixture("star3")};
  CHECK_FALSE(detect_cycle(synthetic_log(g, {0, 1, 2, 3})));

  const auto two = detect_cycle(synthetic_log(g, {2, 3, 0, 1, 0, 1, 0, 1}));
  REQUIRE(two);
  CHECK(two->start == 2);
  CHECK(two->period == 2);

  const auto three = detect_cycle(synthetic_log(g, {0, 1, 2, 0, 1, 2}));
  REQUIRE(three);
  CHECK(three->period == 3);
  CHECK(three->period <= 16);
  CHECK_FALSE(detect_cycle(synthetic_log(g, {0, 1, 2, 0, 1, 2}), 2));

  // Fixed point.
  const auto one = detect_cycle(synthetic_log(g, {3, 1, 1}));
  REQUIRE(one);
  CHECK(one->period == 1);

  // A relabeled copy counts as the same graph.
  std::mt19937_64 rng(1);
  auto log = synthetic_log(g, {0, 1, 0, 1});
  log.steps[2].child = relabeled(log.steps[2].child, rng);
  CHECK(detect_cycle(log));
  // A different score breaks the repeat.
  log.steps[3].score += 1;
  CHECK_FALSE(detect_cycle(log));
}
