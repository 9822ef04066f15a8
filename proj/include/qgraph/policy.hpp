#pragma once

#include <cstdint>
#include <optional>

namespace qgraph {

enum class NewEdgeRule {
  ParentEdgeCount,  // new raw length = total / N_parent
  ChildEdgeCount,   // new raw length = total / (N_parent + 1)
};

enum class MoveKind { Pendant, Between, Delete };

// Which children the evolution considers at each step.
struct MovePolicy {
  bool add_pendant = true;
  bool add_between = true;
  bool delete_edge = false;
  // Alternate between additive steps and deletion steps.
  bool alternate = false;
  bool alternate_starts_with_delete = false;
  bool trees_only = false;
  bool allow_loops = false;
  bool allow_parallel = true;
  NewEdgeRule new_edge = NewEdgeRule::ParentEdgeCount;
  // Optional seeded subsampling of large candidate sets; off by default.
  std::optional<int> candidate_cap;
  std::uint64_t seed = 0;

  void check() const;  // throws InvalidConfig
};

struct MoveSet {
  bool pendant = false;
  bool between = false;
  bool remove = false;
};

// Moves active at a given step index (alternation included).
MoveSet moves_for_step(const MovePolicy& policy, int step);

}  // namespace qgraph
