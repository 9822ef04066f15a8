#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "qgraph/graph.hpp"
#include "qgraph/secular.hpp"
#include "qgraph/spectrum.hpp"

namespace qgraph {

// Operations shared verbatim by the CLI and the HTTP service, so both emit
// the same numbers for the same inputs.

// Binds parameters (zero-valued ones contract their edge), optionally
// rescales to total length one, and validates. Throws UnboundParameter or
// InvalidGraph.
MetricGraph prepare_graph(const MetricGraph& g, const ParameterBinding& b, bool normalize_lengths = true);

struct KRange {
  double k0 = 0.0;
  double k1 = 0.0;
  int n = 0;
};

// "a:b:n" with pi-aware bounds, e.g. "0:4pi:1000". Throws ParseError.
KRange parse_k_range(const std::string& text);

std::vector<SecularSample> plot_dk(const MetricGraph& prepared, const KRange& range);
nlohmann::json dk_to_json(const std::vector<SecularSample>& samples);

ModeRequest parse_mode(const std::string& text);  // auto | scan | rational

struct SpectrumResult {
  Spectrum spectrum;
  std::vector<std::string> warnings;
};

SpectrumResult spectrum_of(const MetricGraph& prepared, double k_max, ModeRequest mode);

}  // namespace qgraph
