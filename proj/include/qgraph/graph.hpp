#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace qgraph {

inline constexpr int kParameterSlots = 4;  // c1..c4

// An edge length: either a concrete positive real or scale * c_i.
class LengthExpr {
 public:
  LengthExpr() = default;
  static LengthExpr concrete(double value);
  static LengthExpr parameter(int slot, double scale = 1.0);

  bool is_concrete() const { return slot_ < 0; }
  double value() const;  // throws if symbolic
  int slot() const { return slot_; }
  double scale() const { return scale_; }
  std::string label() const;  // "0.25" or "c1" / "2*c1"

  friend bool operator==(const LengthExpr&, const LengthExpr&) = default;

 private:
  double value_ = 1.0;  // concrete length, or scale for a parameter
  double scale_ = 1.0;
  int slot_ = -1;
};

std::string parameter_name(int slot);
std::optional<int> parameter_slot(const std::string& name);

struct Edge {
  int u = 0;
  int v = 0;
  LengthExpr length;

  friend bool operator==(const Edge&, const Edge&) = default;
};

// Compact metric multigraph. Immutable after construction; structural
// problems are reported by validate() rather than thrown.
class MetricGraph {
 public:
  MetricGraph() = default;
  MetricGraph(int vertex_count, std::vector<Edge> edges, bool allow_loops = false);

  int vertex_count() const { return vertex_count_; }
  int edge_count() const { return static_cast<int>(edges_.size()); }
  const std::vector<Edge>& edges() const { return edges_; }
  const Edge& edge(int n) const { return edges_.at(static_cast<std::size_t>(n)); }
  bool allow_loops() const { return allow_loops_; }

  bool is_concrete() const;
  std::vector<double> lengths() const;  // throws UnboundParameter if symbolic
  std::vector<int> parameters_used() const;

  friend bool operator==(const MetricGraph&, const MetricGraph&) = default;

 private:
  int vertex_count_ = 0;
  std::vector<Edge> edges_;
  bool allow_loops_ = false;
};

// Values for c1..c4. Zero is accepted only by bind(..., contract_zero=true).
class ParameterBinding {
 public:
  void set(int slot, double value);
  std::optional<double> get(int slot) const;
  bool empty() const;

  // Parses "c1=3.14,c2=2pi". Throws ParseError.
  static ParameterBinding parse(const std::string& text);

 private:
  std::array<std::optional<double>, kParameterSlots> values_{};
};

enum class ViolationKind {
  Empty,
  EndpointOutOfRange,
  NonPositiveLength,
  SelfLoop,
  Disconnected,
};

struct Violation {
  ViolationKind kind;
  std::string detail;
};

std::string to_string(ViolationKind kind);

std::vector<Violation> validate(const MetricGraph& g);
// Throws InvalidGraph naming the first violation.
void require_valid(const MetricGraph& g);

int degree(const MetricGraph& g, int vertex);
std::vector<int> degrees(const MetricGraph& g);
double total_length(const MetricGraph& g);
bool is_connected(const MetricGraph& g);
bool is_tree(const MetricGraph& g);

// Substitutes every parameter. With contract_zero, zero-valued edges are
// contracted (their endpoints merged) instead of rejected.
MetricGraph bind(const MetricGraph& g, const ParameterBinding& b, bool contract_zero = false);

// Scales all concrete lengths so the total is one.
MetricGraph normalize(const MetricGraph& g);
MetricGraph normalize(const MetricGraph& g, const ParameterBinding& b);

MetricGraph scaled(const MetricGraph& g, double factor);

// Orients edges u <= v and sorts by (u, v, length).
MetricGraph canonical(const MetricGraph& g);

// Directed bonds: edge n yields bond 2n (u->v, anchored at u) and
// bond 2n+1 (v->u, anchored at v). Bond b is the half-edge that leaves
// its origin vertex; reverse(b) = b ^ 1.
struct BondBasis {
  std::vector<int> origin;
  std::vector<int> terminus;
  std::vector<double> length;              // empty for symbolic graphs
  std::vector<std::vector<int>> outgoing;  // per vertex, ascending
  std::vector<std::vector<int>> incoming;

  int size() const { return static_cast<int>(origin.size()); }
  static int reverse(int bond) { return bond ^ 1; }
  static int edge_of(int bond) { return bond / 2; }
};

BondBasis bonds(const MetricGraph& g);

// Lengths l_n = p_n * base with gcd(p) = 1. The spectrum in k is periodic
// with period 2*pi/base.
struct RationalStructure {
  double base = 0.0;
  std::vector<std::int64_t> multiples;

  double period() const;
  std::int64_t multiple_sum() const;
};

inline constexpr int kDefaultDenominatorCap = 64;

std::optional<RationalStructure> rational_structure(const MetricGraph& g, double tol = 1e-9,
                                                    int denominator_cap = kDefaultDenominatorCap);

// JSON graph file: {"vertices": M, "edges": [{"u","v","len"}], "allow_loops": bool}
nlohmann::json graph_to_json(const MetricGraph& g);
MetricGraph graph_from_json(const nlohmann::json& j);  // throws ParseError naming the field
std::string serialize(const MetricGraph& g);
MetricGraph deserialize(const std::string& text);  // throws ParseError with line/column
MetricGraph read_graph_file(const std::string& path);
void write_graph_file(const std::string& path, const MetricGraph& g);

// Small graph families used throughout tests and experiment configs.
namespace families {
MetricGraph path(int vertices, double edge_length = 1.0);
MetricGraph cycle(int vertices, double edge_length = 1.0);
MetricGraph star(int leaves, double edge_length = 1.0);
MetricGraph complete(int vertices, double edge_length = 1.0);
MetricGraph grid(int rows, int cols, double edge_length = 1.0);
// Two copies of K_m joined by one edge; all edges share one length.
MetricGraph dumbbell(int m, double edge_length = 1.0);
}  // namespace families

}  // namespace qgraph
