#include "qgraph/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>
#include <tuple>

#include "qgraph/error.hpp"
#include "qgraph/text.hpp"

namespace qgraph {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidGraph: return "InvalidGraph";
    case ErrorKind::UnboundParameter: return "UnboundParameter";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::RefinementFailure: return "RefinementFailure";
    case ErrorKind::DegenerateLeadingCoefficient: return "DegenerateLeadingCoefficient";
    case ErrorKind::RationalRootLoss: return "RationalRootLoss";
    case ErrorKind::InsufficientRange: return "InsufficientRange";
    case ErrorKind::ZeroGap: return "ZeroGap";
    case ErrorKind::NoLegalMove: return "NoLegalMove";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::StepFailure: return "StepFailure";
  }
  return "Unknown";
}

// ---------------------------------------------------------------- lengths

LengthExpr LengthExpr::concrete(double value) {
  LengthExpr e;
  e.value_ = value;
  return e;
}

LengthExpr LengthExpr::parameter(int slot, double scale) {
  if (slot < 0 || slot >= kParameterSlots) {
    throw Error(ErrorKind::InvalidGraph, "parameter slot out of range");
  }
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw Error(ErrorKind::InvalidGraph, "parameter scale must be positive");
  }
  LengthExpr e;
  e.slot_ = slot;
  e.scale_ = scale;
  e.value_ = 0.0;
  return e;
}

double LengthExpr::value() const {
  if (!is_concrete()) {
    throw Error(ErrorKind::UnboundParameter, "unbound parameter " + parameter_name(slot_));
  }
  return value_;
}

std::string LengthExpr::label() const {
  if (is_concrete()) return format_double(value_);
  if (scale_ == 1.0) return parameter_name(slot_);
  return format_double(scale_) + "*" + parameter_name(slot_);
}

std::string parameter_name(int slot) { return "c" + std::to_string(slot + 1); }

std::optional<int> parameter_slot(const std::string& name) {
  if (name.size() == 2 && name[0] == 'c' && name[1] >= '1' && name[1] <= '4') {
    return name[1] - '1';
  }
  return std::nullopt;
}

// ------------------------------------------------------------------ graph

MetricGraph::MetricGraph(int vertex_count, std::vector<Edge> edges, bool allow_loops)
    : vertex_count_(vertex_count), edges_(std::move(edges)), allow_loops_(allow_loops) {}

bool MetricGraph::is_concrete() const {
  return std::all_of(edges_.begin(), edges_.end(),
                     [](const Edge& e) { return e.length.is_concrete(); });
}

std::vector<double> MetricGraph::lengths() const {
  std::vector<double> out;
  out.reserve(edges_.size());
  for (const Edge& e : edges_) out.push_back(e.length.value());
  return out;
}

std::vector<int> MetricGraph::parameters_used() const {
  std::vector<int> out;
  for (const Edge& e : edges_) {
    if (!e.length.is_concrete()) out.push_back(e.length.slot());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// ---------------------------------------------------------------- binding

void ParameterBinding::set(int slot, double value) {
  if (slot < 0 || slot >= kParameterSlots) {
    throw Error(ErrorKind::InvalidConfig, "parameter slot out of range");
  }
  if (!(value >= 0.0) || !std::isfinite(value)) {
    throw Error(ErrorKind::InvalidConfig,
                "parameter " + parameter_name(slot) + " must be a finite nonnegative number");
  }
  values_[static_cast<std::size_t>(slot)] = value;
}

std::optional<double> ParameterBinding::get(int slot) const {
  if (slot < 0 || slot >= kParameterSlots) return std::nullopt;
  return values_[static_cast<std::size_t>(slot)];
}

bool ParameterBinding::empty() const {
  return std::none_of(values_.begin(), values_.end(), [](const auto& v) { return v.has_value(); });
}

ParameterBinding ParameterBinding::parse(const std::string& text) {
  ParameterBinding b;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    auto eq = item.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::ParseError, "binding '" + item + "' is not of the form cN=value");
    }
    std::string name = item.substr(0, eq);
    name.erase(std::remove(name.begin(), name.end(), ' '), name.end());
    auto slot = parameter_slot(name);
    if (!slot) throw Error(ErrorKind::ParseError, "unknown parameter '" + name + "'");
    double value = parse_real(item.substr(eq + 1));
    try {
      b.set(*slot, value);
    } catch (const Error& e) {
      throw Error(ErrorKind::ParseError, e.what());
    }
  }
  return b;
}

// ------------------------------------------------------------- validation

std::string to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::Empty: return "Empty";
    case ViolationKind::EndpointOutOfRange: return "EndpointOutOfRange";
    case ViolationKind::NonPositiveLength: return "NonPositiveLength";
    case ViolationKind::SelfLoop: return "SelfLoop";
    case ViolationKind::Disconnected: return "Disconnected";
  }
  return "Unknown";
}

namespace {

bool endpoints_ok(const MetricGraph& g) {
  return std::all_of(g.edges().begin(), g.edges().end(), [&](const Edge& e) {
    return e.u >= 0 && e.v >= 0 && e.u < g.vertex_count() && e.v < g.vertex_count();
  });
}

int find_root(std::vector<int>& parent, int x) {
  while (parent[static_cast<std::size_t>(x)] != x) {
    auto& p = parent[static_cast<std::size_t>(x)];
    p = parent[static_cast<std::size_t>(p)];
    x = p;
  }
  return x;
}

int component_count(const MetricGraph& g) {
  std::vector<int> parent(static_cast<std::size_t>(g.vertex_count()));
  std::iota(parent.begin(), parent.end(), 0);
  int components = g.vertex_count();
  for (const Edge& e : g.edges()) {
    int a = find_root(parent, e.u);
    int b = find_root(parent, e.v);
    if (a != b) {
      parent[static_cast<std::size_t>(a)] = b;
      --components;
    }
  }
  return components;
}

}  // namespace

std::vector<Violation> validate(const MetricGraph& g) {
  std::vector<Violation> out;
  if (g.vertex_count() <= 0 || g.edge_count() == 0) {
    out.push_back({ViolationKind::Empty, "graph has no edges"});
    return out;
  }
  bool endpoints_valid = true;
  for (int n = 0; n < g.edge_count(); ++n) {
    const Edge& e = g.edge(n);
    std::string where = "edge " + std::to_string(n);
    if (e.u < 0 || e.v < 0 || e.u >= g.vertex_count() || e.v >= g.vertex_count()) {
      out.push_back({ViolationKind::EndpointOutOfRange, where + " has an endpoint outside 0.." +
                                                           std::to_string(g.vertex_count() - 1)});
      endpoints_valid = false;
    }
    if (e.length.is_concrete() && !(e.length.value() > 0.0 && std::isfinite(e.length.value()))) {
      out.push_back({ViolationKind::NonPositiveLength,
                     where + " has length " + format_double(e.length.value())});
    }
    if (e.u == e.v && !g.allow_loops()) {
      out.push_back({ViolationKind::SelfLoop, where + " is a self-loop"});
    }
  }
  if (endpoints_valid && component_count(g) != 1) {
    out.push_back({ViolationKind::Disconnected, "graph has " + std::to_string(component_count(g)) +
                                                    " connected components"});
  }
  return out;
}

void require_valid(const MetricGraph& g) {
  auto v = validate(g);
  if (!v.empty()) {
    throw Error(ErrorKind::InvalidGraph, to_string(v.front().kind) + ": " + v.front().detail);
  }
}

int degree(const MetricGraph& g, int vertex) {
  int d = 0;
  for (const Edge& e : g.edges()) {
    d += (e.u == vertex) + (e.v == vertex);
  }
  return d;
}

std::vector<int> degrees(const MetricGraph& g) {
  std::vector<int> d(static_cast<std::size_t>(std::max(g.vertex_count(), 0)), 0);
  for (const Edge& e : g.edges()) {
    ++d.at(static_cast<std::size_t>(e.u));
    ++d.at(static_cast<std::size_t>(e.v));
  }
  return d;
}

double total_length(const MetricGraph& g) {
  double sum = 0.0;
  for (const Edge& e : g.edges()) sum += e.length.value();
  return sum;
}

bool is_connected(const MetricGraph& g) {
  return g.vertex_count() > 0 && endpoints_ok(g) && component_count(g) == 1;
}

bool is_tree(const MetricGraph& g) {
  return is_connected(g) && g.edge_count() == g.vertex_count() - 1;
}

// ------------------------------------------------------ bind / normalize

MetricGraph bind(const MetricGraph& g, const ParameterBinding& b, bool contract_zero) {
  std::vector<Edge> edges;
  std::vector<std::pair<int, int>> contracted;
  for (const Edge& e : g.edges()) {
    if (e.length.is_concrete()) {
      edges.push_back(e);
      continue;
    }
    auto value = b.get(e.length.slot());
    if (!value) {
      throw Error(ErrorKind::UnboundParameter,
                  "unbound parameter " + parameter_name(e.length.slot()));
    }
    double len = *value * e.length.scale();
    if (len == 0.0) {
      if (!contract_zero) {
        throw Error(ErrorKind::InvalidGraph,
                    "parameter " + parameter_name(e.length.slot()) + " binds an edge to length 0");
      }
      contracted.emplace_back(e.u, e.v);
      continue;
    }
    edges.push_back({e.u, e.v, LengthExpr::concrete(len)});
  }
  if (contracted.empty()) return MetricGraph(g.vertex_count(), std::move(edges), g.allow_loops());

  std::vector<int> parent(static_cast<std::size_t>(g.vertex_count()));
  std::iota(parent.begin(), parent.end(), 0);
  for (auto [u, v] : contracted) {
    int a = find_root(parent, u);
    int c = find_root(parent, v);
    if (a != c) parent[static_cast<std::size_t>(std::max(a, c))] = std::min(a, c);
  }
  std::vector<int> relabel(static_cast<std::size_t>(g.vertex_count()), -1);
  int next = 0;
  for (int x = 0; x < g.vertex_count(); ++x) {
    int r = find_root(parent, x);
    if (relabel[static_cast<std::size_t>(r)] < 0) relabel[static_cast<std::size_t>(r)] = next++;
  }
  bool loops = g.allow_loops();
  for (Edge& e : edges) {
    e.u = relabel[static_cast<std::size_t>(find_root(parent, e.u))];
    e.v = relabel[static_cast<std::size_t>(find_root(parent, e.v))];
    loops = loops || e.u == e.v;
  }
  return MetricGraph(next, std::move(edges), loops);
}

MetricGraph scaled(const MetricGraph& g, double factor) {
  std::vector<Edge> edges = g.edges();
  for (Edge& e : edges) e.length = LengthExpr::concrete(e.length.value() * factor);
  return MetricGraph(g.vertex_count(), std::move(edges), g.allow_loops());
}

MetricGraph normalize(const MetricGraph& g) {
  double total = total_length(g);
  if (!(total > 0.0)) throw Error(ErrorKind::InvalidGraph, "total length must be positive");
  // Already normalized up to summation rounding: rescaling again would only
  // perturb the last bits, so normalize stays exactly idempotent.
  const double slack = 4.0 * std::numeric_limits<double>::epsilon() * g.edge_count();
  if (std::abs(total - 1.0) <= slack) return g;
  std::vector<Edge> edges = g.edges();
  for (Edge& e : edges) e.length = LengthExpr::concrete(e.length.value() / total);
  return MetricGraph(g.vertex_count(), std::move(edges), g.allow_loops());
}

MetricGraph normalize(const MetricGraph& g, const ParameterBinding& b) {
  return normalize(bind(g, b));
}

MetricGraph canonical(const MetricGraph& g) {
  std::vector<Edge> edges = g.edges();
  for (Edge& e : edges) {
    if (e.u > e.v) std::swap(e.u, e.v);
  }
  auto key = [](const Edge& e) {
    const LengthExpr& l = e.length;
    return std::make_tuple(e.u, e.v, l.slot(), l.is_concrete() ? l.value() : l.scale());
  };
  std::stable_sort(edges.begin(), edges.end(),
                   [&](const Edge& a, const Edge& b) { return key(a) < key(b); });
  return MetricGraph(g.vertex_count(), std::move(edges), g.allow_loops());
}

// ------------------------------------------------------------------ bonds

BondBasis bonds(const MetricGraph& g) {
  BondBasis b;
  const auto n_bonds = static_cast<std::size_t>(2 * g.edge_count());
  b.origin.resize(n_bonds);
  b.terminus.resize(n_bonds);
  b.outgoing.assign(static_cast<std::size_t>(g.vertex_count()), {});
  b.incoming.assign(static_cast<std::size_t>(g.vertex_count()), {});
  const bool concrete = g.is_concrete();
  if (concrete) b.length.resize(n_bonds);
  for (int n = 0; n < g.edge_count(); ++n) {
    const Edge& e = g.edge(n);
    const auto fwd = static_cast<std::size_t>(2 * n);
    b.origin[fwd] = e.u;
    b.terminus[fwd] = e.v;
    b.origin[fwd + 1] = e.v;
    b.terminus[fwd + 1] = e.u;
    if (concrete) b.length[fwd] = b.length[fwd + 1] = e.length.value();
  }
  for (int bond = 0; bond < b.size(); ++bond) {
    b.outgoing.at(static_cast<std::size_t>(b.origin[static_cast<std::size_t>(bond)])).push_back(bond);
    b.incoming.at(static_cast<std::size_t>(b.terminus[static_cast<std::size_t>(bond)])).push_back(bond);
  }
  return b;
}

// ------------------------------------------------------------- rationality

double RationalStructure::period() const { return 2.0 * std::numbers::pi / base; }

std::int64_t RationalStructure::multiple_sum() const {
  return std::accumulate(multiples.begin(), multiples.end(), std::int64_t{0});
}

namespace {

struct Fraction {
  std::int64_t num;
  std::int64_t den;
};

// First continued-fraction convergent of x with denominator <= cap that lies
// within rel_tol of x.
std::optional<Fraction> approximate(double x, double rel_tol, int cap) {
  // (h, k) is the latest convergent, (h_prev, k_prev) the one before.
  std::int64_t h_prev = 0, h = 1;
  std::int64_t k_prev = 1, k = 0;
  double r = x;
  for (int iter = 0; iter < 64; ++iter) {
    double a_real = std::floor(r);
    if (a_real > 1e15) break;
    auto a = static_cast<std::int64_t>(a_real);
    std::int64_t h_next = a * h + h_prev;
    std::int64_t k_next = a * k + k_prev;
    if (k_next > cap) break;
    h_prev = h;
    h = h_next;
    k_prev = k;
    k = k_next;
    double approx = static_cast<double>(h) / static_cast<double>(k);
    if (std::abs(approx - x) <= rel_tol * std::abs(x)) return Fraction{h, k};
    double frac = r - a_real;
    if (frac <= 0.0) break;
    r = 1.0 / frac;
  }
  return std::nullopt;
}

}  // namespace

std::optional<RationalStructure> rational_structure(const MetricGraph& g, double tol,
                                                    int denominator_cap) {
  if (g.edge_count() == 0) return std::nullopt;
  const std::vector<double> len = g.lengths();
  const double ref = *std::min_element(len.begin(), len.end());
  if (!(ref > 0.0)) return std::nullopt;

  std::vector<Fraction> ratios;
  std::int64_t common_den = 1;
  for (double l : len) {
    auto f = approximate(l / ref, tol, denominator_cap);
    if (!f) return std::nullopt;
    ratios.push_back(*f);
    common_den = std::lcm(common_den, f->den);
    if (common_den > std::int64_t{1} << 40) return std::nullopt;
  }
  RationalStructure rs;
  std::int64_t g_all = 0;
  for (const Fraction& f : ratios) {
    rs.multiples.push_back(f.num * (common_den / f.den));
    g_all = std::gcd(g_all, rs.multiples.back());
  }
  for (auto& p : rs.multiples) p /= g_all;

  // Pairwise ratios p_i / p_j must themselves have small denominators.
  for (std::size_t i = 0; i < rs.multiples.size(); ++i) {
    for (std::size_t j = 0; j < rs.multiples.size(); ++j) {
      std::int64_t d = rs.multiples[j] / std::gcd(rs.multiples[i], rs.multiples[j]);
      if (d > denominator_cap) return std::nullopt;
    }
  }

  const double total = std::accumulate(len.begin(), len.end(), 0.0);
  rs.base = total / static_cast<double>(rs.multiple_sum());
  for (std::size_t n = 0; n < len.size(); ++n) {
    if (std::abs(static_cast<double>(rs.multiples[n]) * rs.base - len[n]) > tol * len[n]) {
      return std::nullopt;
    }
  }
  return rs;
}

// -------------------------------------------------------------------- JSON

nlohmann::json graph_to_json(const MetricGraph& g) {
  nlohmann::json edges = nlohmann::json::array();
  for (const Edge& e : g.edges()) {
    nlohmann::json len;
    if (e.length.is_concrete()) {
      len = e.length.value();
    } else {
      len = {{"param", parameter_name(e.length.slot())}, {"scale", e.length.scale()}};
    }
    edges.push_back({{"u", e.u}, {"v", e.v}, {"len", len}});
  }
  return {{"vertices", g.vertex_count()}, {"edges", edges}, {"allow_loops", g.allow_loops()}};
}

namespace {

[[noreturn]] void field_error(const std::string& field, const std::string& what) {
  throw Error(ErrorKind::ParseError, "field '" + field + "': " + what);
}

int require_int(const nlohmann::json& j, const std::string& field) {
  if (!j.is_number_integer()) field_error(field, "expected an integer");
  return j.get<int>();
}

}  // namespace

MetricGraph graph_from_json(const nlohmann::json& j) {
  if (!j.is_object()) field_error("<root>", "expected an object");
  if (!j.contains("vertices")) field_error("vertices", "missing");
  if (!j.contains("edges")) field_error("edges", "missing");
  int m = require_int(j["vertices"], "vertices");
  if (m < 0) field_error("vertices", "must be nonnegative");
  bool loops = false;
  if (j.contains("allow_loops")) {
    if (!j["allow_loops"].is_boolean()) field_error("allow_loops", "expected a boolean");
    loops = j["allow_loops"].get<bool>();
  }
  const auto& arr = j["edges"];
  if (!arr.is_array()) field_error("edges", "expected an array");
  std::vector<Edge> edges;
  for (std::size_t n = 0; n < arr.size(); ++n) {
    const std::string at = "edges[" + std::to_string(n) + "]";
    const auto& e = arr[n];
    if (!e.is_object()) field_error(at, "expected an object");
    for (const char* key : {"u", "v", "len"}) {
      if (!e.contains(key)) field_error(at + "." + key, "missing");
    }
    Edge edge;
    edge.u = require_int(e["u"], at + ".u");
    edge.v = require_int(e["v"], at + ".v");
    const auto& len = e["len"];
    if (len.is_number()) {
      edge.length = LengthExpr::concrete(len.get<double>());
    } else if (len.is_object()) {
      if (!len.contains("param") || !len["param"].is_string()) {
        field_error(at + ".len.param", "expected one of c1, c2, c3, c4");
      }
      auto slot = parameter_slot(len["param"].get<std::string>());
      if (!slot) field_error(at + ".len.param", "expected one of c1, c2, c3, c4");
      double scale = 1.0;
      if (len.contains("scale")) {
        if (!len["scale"].is_number()) field_error(at + ".len.scale", "expected a number");
        scale = len["scale"].get<double>();
        if (!(scale > 0.0)) field_error(at + ".len.scale", "must be positive");
      }
      edge.length = LengthExpr::parameter(*slot, scale);
    } else {
      field_error(at + ".len", "expected a number or {\"param\": ...}");
    }
    edges.push_back(edge);
  }
  return MetricGraph(m, std::move(edges), loops);
}

std::string serialize(const MetricGraph& g) { return graph_to_json(canonical(g)).dump(); }

MetricGraph deserialize(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw Error(ErrorKind::ParseError, "line " + std::to_string(line) + ", column " +
                                           std::to_string(col) + ": malformed JSON");
  }
  return graph_from_json(j);
}

MetricGraph read_graph_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::ParseError, "cannot open graph file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return deserialize(ss.str());
}

void write_graph_file(const std::string& path, const MetricGraph& g) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::InvalidConfig, "cannot write " + path);
  out << graph_to_json(g).dump(2) << '\n';
}

// --------------------------------------------------------------- families

namespace families {

MetricGraph path(int vertices, double edge_length) {
  std::vector<Edge> edges;
  for (int i = 0; i + 1 < vertices; ++i) edges.push_back({i, i + 1, LengthExpr::concrete(edge_length)});
  return MetricGraph(vertices, std::move(edges));
}

MetricGraph cycle(int vertices, double edge_length) {
  std::vector<Edge> edges;
  for (int i = 0; i < vertices; ++i) {
    edges.push_back({i, (i + 1) % vertices, LengthExpr::concrete(edge_length)});
  }
  return canonical(MetricGraph(vertices, std::move(edges)));
}

MetricGraph star(int leaves, double edge_length) {
  std::vector<Edge> edges;
  for (int i = 1; i <= leaves; ++i) edges.push_back({0, i, LengthExpr::concrete(edge_length)});
  return MetricGraph(leaves + 1, std::move(edges));
}

MetricGraph complete(int vertices, double edge_length) {
  std::vector<Edge> edges;
  for (int i = 0; i < vertices; ++i) {
    for (int j = i + 1; j < vertices; ++j) edges.push_back({i, j, LengthExpr::concrete(edge_length)});
  }
  return MetricGraph(vertices, std::move(edges));
}

MetricGraph grid(int rows, int cols, double edge_length) {
  std::vector<Edge> edges;
  auto id = [cols](int r, int c) { return r * cols + c; };
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (c + 1 < cols) edges.push_back({id(r, c), id(r, c + 1), LengthExpr::concrete(edge_length)});
      if (r + 1 < rows) edges.push_back({id(r, c), id(r + 1, c), LengthExpr::concrete(edge_length)});
    }
  }
  return canonical(MetricGraph(rows * cols, std::move(edges)));
}

MetricGraph dumbbell(int m, double edge_length) {
  std::vector<Edge> edges;
  for (int side = 0; side < 2; ++side) {
    int off = side * m;
    for (int i = 0; i < m; ++i) {
      for (int j = i + 1; j < m; ++j) {
        edges.push_back({off + i, off + j, LengthExpr::concrete(edge_length)});
      }
    }
  }
  edges.push_back({m - 1, m, LengthExpr::concrete(edge_length)});
  return canonical(MetricGraph(2 * m, std::move(edges)));
}

}  // namespace families

}  // namespace qgraph
