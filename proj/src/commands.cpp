#include "qgraph/commands.hpp"

#include <cmath>

#include "qgraph/error.hpp"
#include "qgraph/text.hpp"

namespace qgraph {

MetricGraph prepare_graph(const MetricGraph& g, const ParameterBinding& b, bool normalize_lengths) {
  MetricGraph out = bind(g, b, /*contract_zero=*/true);
  if (normalize_lengths && out.edge_count() > 0) out = normalize(out);
  require_valid(out);
  return out;
}

KRange parse_k_range(const std::string& text) {
  const auto first = text.find(':');
  const auto second = first == std::string::npos ? std::string::npos : text.find(':', first + 1);
  if (second == std::string::npos) throw Error(ErrorKind::ParseError, "k-range must look like a:b:n");
  KRange r;
  r.k0 = parse_real(text.substr(0, first));
  r.k1 = parse_real(text.substr(first + 1, second - first - 1));
  const double n = parse_real(text.substr(second + 1));
  if (n != std::floor(n) || n < 2 || n > 1e7) {
    throw Error(ErrorKind::ParseError, "k-range sample count must be an integer >= 2");
  }
  r.n = static_cast<int>(n);
  if (!(r.k1 > r.k0)) throw Error(ErrorKind::ParseError, "k-range needs a < b");
  return r;
}

std::vector<SecularSample> plot_dk(const MetricGraph& prepared, const KRange& range) {
  const SecularEvaluator ev(prepared);
  return sample_secular(ev, range.k0, range.k1, range.n);
}

nlohmann::json dk_to_json(const std::vector<SecularSample>& samples) {
  nlohmann::json k = nlohmann::json::array(), sigma = nlohmann::json::array(), re = nlohmann::json::array(),
                 im = nlohmann::json::array();
  for (const auto& s : samples) {
    k.push_back(s.k);
    sigma.push_back(s.sigma_min);
    re.push_back(s.det.real());
    im.push_back(s.det.imag());
  }
  return {{"k", k}, {"sigma_min", sigma}, {"re_det", re}, {"im_det", im}};
}

ModeRequest parse_mode(const std::string& text) {
  if (text == "auto") return ModeRequest::Auto;
  if (text == "scan") return ModeRequest::Scan;
  if (text == "rational") return ModeRequest::Rational;
  throw Error(ErrorKind::ParseError, "mode must be auto, scan or rational");
}

SpectrumResult spectrum_of(const MetricGraph& prepared, double k_max, ModeRequest mode) {
  if (!(k_max > 0.0) || !std::isfinite(k_max)) throw Error(ErrorKind::ParseError, "k-max must be positive");
  RootSearchOptions opts;
  opts.k_max = k_max;
  SpectrumResult r;
  r.spectrum = compute_spectrum(prepared, opts, mode, &r.warnings);
  return r;
}

}  // namespace qgraph
