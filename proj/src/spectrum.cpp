#include "qgraph/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>

#include "qgraph/error.hpp"
#include "qgraph/text.hpp"

namespace qgraph {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInvPhi = 0.6180339887498949;  // 1 / golden ratio
// Eigenphases within this distance below 2*pi are treated as having crossed.
constexpr double kWrapTol = 1e-9;
// A refined minimum above this level is a clean non-root.
constexpr double kSeparationLevel = 1e-4;

struct Minimum {
  double k;
  double value;
};

template <class F>
Minimum golden_section(F&& f, double a, double b, int max_iter) {
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = f(c);
  double fd = f(d);
  for (int it = 0; it < max_iter; ++it) {
    if (b - a <= 1e-14 * std::max(1.0, std::abs(b))) break;
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = f(d);
    }
  }
  return fc <= fd ? Minimum{c, fc} : Minimum{d, fd};
}

double phase_sum(const Eigen::VectorXcd& eig) {
  double sum = 0.0;
  for (const cplx& z : eig) {
    double phi = std::arg(z);
    if (phi < -kWrapTol) phi += 2.0 * kPi;
    sum += phi;
  }
  return sum;
}

// Signed phase of the eigenvalue of U closest to 1; increases through zero
// at a root.
double nearest_phase(const Eigen::VectorXcd& eig) {
  double best = std::numeric_limits<double>::infinity();
  double phase = 0.0;
  for (const cplx& z : eig) {
    const double d = std::abs(z - 1.0);
    if (d < best) {
      best = d;
      phase = std::arg(z);
    }
  }
  return phase;
}

int null_count(const Eigen::VectorXcd& eig, double rel_tol) {
  double norm = 0.0;
  for (const cplx& z : eig) norm = std::max(norm, std::abs(z - 1.0));
  int count = 0;
  for (const cplx& z : eig) count += std::abs(z - 1.0) < rel_tol * norm;
  return count;
}

std::string range_text(double a, double b) {
  return "[" + format_double(a) + ", " + format_double(b) + "]";
}

void sort_and_merge(std::vector<SpectralRoot>& roots, double tol) {
  std::sort(roots.begin(), roots.end(),
            [](const SpectralRoot& a, const SpectralRoot& b) { return a.k < b.k; });
  std::vector<SpectralRoot> merged;
  for (const auto& r : roots) {
    if (!merged.empty() && r.k - merged.back().k <= tol * std::max(1.0, r.k)) {
      merged.back().multiplicity = std::max(merged.back().multiplicity, r.multiplicity);
      continue;
    }
    merged.push_back(r);
  }
  roots = std::move(merged);
}

class PhaseCounter {
 public:
  explicit PhaseCounter(const SecularEvaluator& ev)
      : ev_(ev), base_sum_(phase_sum(ev.unitary_eigenvalues(0.0))) {}

  int operator()(double k) const {
    const double winding = 2.0 * ev_.total_length() * k + base_sum_ -
                           phase_sum(ev_.unitary_eigenvalues(k));
    return static_cast<int>(std::lround(winding / (2.0 * kPi)));
  }

 private:
  const SecularEvaluator& ev_;
  double base_sum_;
};

// Locates all roots in (a, b] by bisection on the counting function.
void bisect_roots(const PhaseCounter& count, double a, double b, int na, int nb,
                  std::vector<SpectralRoot>& out, int depth = 0) {
  if (nb <= na) return;
  if (b - a <= 1e-12 * std::max(1.0, b) || depth > 80) {
    out.push_back({0.5 * (a + b), nb - na});
    return;
  }
  const double m = 0.5 * (a + b);
  const int nm = std::clamp(count(m), na, nb);
  bisect_roots(count, a, m, na, nm, out, depth + 1);
  bisect_roots(count, m, b, nm, nb, out, depth + 1);
}

// Golden-section narrowing of the bracket around a sigma_min minimum, then
// Illinois regula falsi on the signed nearest eigenphase once it changes
// sign across the bracket.
Minimum refine_scan_minimum(const SecularEvaluator& ev, double a, double b, int max_iter) {
  auto sigma = [&ev](double k) { return sigma_min_from_eigenvalues(ev.unitary_eigenvalues(k)); };
  const double coarse = 1e-3 * (b - a);
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = sigma(c);
  double fd = sigma(d);
  int it = 0;
  for (; it < max_iter && b - a > coarse; ++it) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = sigma(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = sigma(d);
    }
  }
  double ga = nearest_phase(ev.unitary_eigenvalues(a));
  double gb = nearest_phase(ev.unitary_eigenvalues(b));
  if (ga < 0.0 && gb > 0.0) {
    int side = 0;
    double x = a;
    for (; it < max_iter; ++it) {
      x = (a * gb - b * ga) / (gb - ga);
      if (!(x > a && x < b)) x = 0.5 * (a + b);
      const double gx = nearest_phase(ev.unitary_eigenvalues(x));
      if (gx == 0.0 || b - a <= 1e-14 * std::max(1.0, b)) break;
      if (gx < 0.0) {
        a = x;
        ga = gx;
        if (side == -1) gb *= 0.5;
        side = -1;
      } else {
        b = x;
        gb = gx;
        if (side == 1) ga *= 0.5;
        side = 1;
      }
      if (std::abs(gx) < 1e-15) break;
    }
    return {x, sigma(x)};
  }
  return golden_section(sigma, a, b, max_iter - it);
}

}  // namespace

std::string to_string(SpectrumMode mode) {
  switch (mode) {
    case SpectrumMode::Scan: return "scan";
    case SpectrumMode::Rational: return "rational";
    case SpectrumMode::Oracle: return "oracle";
  }
  return "unknown";
}

int Spectrum::counted_roots() const {
  int n = 0;
  for (const auto& r : roots) n += r.multiplicity;
  return n;
}

double default_scan_step(const MetricGraph& g) {
  const auto len = g.lengths();
  return kPi * *std::min_element(len.begin(), len.end()) / 20.0;
}

int counting_function(const SecularEvaluator& ev, double k) { return PhaseCounter(ev)(k); }

// ------------------------------------------------------------------- scan

Spectrum find_roots_scan(const SecularEvaluator& ev, const RootSearchOptions& opts) {
  const double h = opts.scan_step.value_or(default_scan_step(ev.graph()));
  if (!(h > 0.0)) throw Error(ErrorKind::InvalidConfig, "scan step must be positive");
  if (!(opts.k_max > 0.0)) throw Error(ErrorKind::InvalidConfig, "k_max must be positive");
  const double lmax = ev.max_length();
  const double k_end = opts.k_max + 2.0 * h;
  auto sigma = [&ev](double k) { return sigma_min_from_eigenvalues(ev.unitary_eigenvalues(k)); };

  std::vector<double> ks{0.0};
  std::vector<double> sig{sigma(0.0)};
  while (ks.back() < k_end) {
    const double step = std::max(h, 0.5 * sig.back() / lmax);
    const double k = std::min(ks.back() + step, k_end);
    ks.push_back(k);
    sig.push_back(sigma(k));
  }

  std::vector<SpectralRoot> found;
  for (std::size_t i = 1; i + 1 < ks.size(); ++i) {
    if (!(sig[i - 1] > sig[i] && sig[i] <= sig[i + 1])) continue;
    const Minimum m = refine_scan_minimum(ev, ks[i - 1], ks[i + 1], opts.refine_iterations);
    if (m.value < opts.zero_threshold) {
      found.push_back({m.k, null_count(ev.unitary_eigenvalues(m.k), opts.multiplicity_tol)});
    } else if (m.value < kSeparationLevel) {
      throw Error(ErrorKind::RefinementFailure,
                  "sigma_min minimum " + format_double(m.value) + " near k=" + format_double(m.k) +
                      " in " + range_text(ks[i - 1], ks[i + 1]) +
                      " neither reaches the zero threshold nor separates from it");
    }
  }
  sort_and_merge(found, 1e-9);

  if (opts.verify_count) {
    // Every interval between midpoints of consecutive roots must hold exactly
    // as many roots as the counting function says; otherwise bisect it.
    const PhaseCounter count(ev);
    std::vector<double> bounds{0.0};
    for (std::size_t i = 0; i + 1 < found.size(); ++i) {
      bounds.push_back(0.5 * (found[i].k + found[i + 1].k));
    }
    bounds.push_back(k_end);
    std::vector<int> n_at(bounds.size(), 0);
    for (std::size_t i = 1; i < bounds.size(); ++i) n_at[i] = count(bounds[i]);

    std::vector<SpectralRoot> verified;
    for (std::size_t i = 1; i < bounds.size(); ++i) {
      const int expected = n_at[i] - n_at[i - 1];
      const bool has_root = i - 1 < found.size();
      const int got = has_root ? found[i - 1].multiplicity : 0;
      if (expected == got) {
        if (has_root) verified.push_back(found[i - 1]);
        continue;
      }
      std::vector<SpectralRoot> repaired;
      bisect_roots(count, bounds[i - 1], bounds[i], n_at[i - 1], n_at[i], repaired);
      for (auto& r : repaired) {
        // Prefer the golden-section location when the repair lands on it.
        if (has_root && std::abs(r.k - found[i - 1].k) < 1e-9 * std::max(1.0, r.k)) {
          r.k = found[i - 1].k;
        }
        verified.push_back(r);
      }
    }
    found = std::move(verified);
    sort_and_merge(found, 1e-9);
  }

  Spectrum spec;
  spec.mode = SpectrumMode::Scan;
  spec.k_max = opts.k_max;
  spec.roots.push_back({0.0, 1});
  for (const auto& r : found) {
    if (r.k > 0.0 && r.k <= opts.k_max + 1e-9 * std::max(1.0, opts.k_max)) spec.roots.push_back(r);
  }
  return spec;
}

// --------------------------------------------------------------- rational

std::vector<cplx> secular_polynomial(const MetricGraph& g, const RationalStructure& rs) {
  const BondBasis basis = bonds(g);
  const Eigen::MatrixXd sv = assemble_vertex_scattering(g);
  const int n = basis.size();
  Eigen::MatrixXcd swapped(n, n);
  for (int r = 0; r < n; ++r) swapped.row(r) = sv.row(BondBasis::reverse(r)).cast<cplx>();

  const std::int64_t degree = 2 * rs.multiple_sum();
  const std::int64_t samples = degree + 1;
  std::vector<cplx> values(static_cast<std::size_t>(samples));
  Eigen::VectorXcd phase(n);
  for (std::int64_t j = 0; j < samples; ++j) {
    for (int b = 0; b < n; ++b) {
      const std::int64_t p = rs.multiples[static_cast<std::size_t>(BondBasis::edge_of(b))];
      const double angle = 2.0 * kPi * static_cast<double>((j * p) % samples) / static_cast<double>(samples);
      phase(b) = std::polar(1.0, angle);
    }
    Eigen::MatrixXcd a = phase.asDiagonal() * swapped;
    a.diagonal().array() -= 1.0;
    values[static_cast<std::size_t>(j)] = a.partialPivLu().determinant();
  }
  std::vector<cplx> coeffs(static_cast<std::size_t>(samples));
  for (std::int64_t m = 0; m < samples; ++m) {
    cplx acc = 0.0;
    for (std::int64_t j = 0; j < samples; ++j) {
      const double angle = -2.0 * kPi * static_cast<double>((j * m) % samples) / static_cast<double>(samples);
      acc += values[static_cast<std::size_t>(j)] * std::polar(1.0, angle);
    }
    coeffs[static_cast<std::size_t>(m)] = acc / static_cast<double>(samples);
  }
  return coeffs;
}

namespace {

cplx horner(const std::vector<cplx>& c, cplx z, cplx* derivative) {
  cplx p = 0.0, dp = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) {
    dp = dp * z + p;
    p = p * z + *it;
  }
  if (derivative) *derivative = dp;
  return p;
}

struct Cluster {
  cplx center;
  int multiplicity;
};

}  // namespace

Spectrum find_roots_rational(const MetricGraph& g, const RationalStructure& rs, int n_periods,
                             const RootSearchOptions& opts) {
  if (n_periods < 1) throw Error(ErrorKind::InvalidConfig, "n_periods must be at least 1");
  if (rs.multiples.size() != static_cast<std::size_t>(g.edge_count())) {
    throw Error(ErrorKind::InvalidConfig, "rational structure does not match the graph");
  }
  std::vector<cplx> coeffs = secular_polynomial(g, rs);
  const int degree = static_cast<int>(coeffs.size()) - 1;

  double max_coeff = 0.0;
  for (const cplx& c : coeffs) max_coeff = std::max(max_coeff, std::abs(c));
  if (degree < 1 || std::abs(coeffs.back()) < 1e-10 * max_coeff) {
    throw Error(ErrorKind::DegenerateLeadingCoefficient,
                "secular polynomial of nominal degree " + std::to_string(degree) +
                    " has a vanishing leading coefficient");
  }

  Eigen::MatrixXcd companion = Eigen::MatrixXcd::Zero(degree, degree);
  for (int i = 1; i < degree; ++i) companion(i, i - 1) = 1.0;
  for (int i = 0; i < degree; ++i) {
    companion(i, degree - 1) = -coeffs[static_cast<std::size_t>(i)] / coeffs.back();
  }
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(companion, false);
  std::vector<cplx> z(solver.eigenvalues().begin(), solver.eigenvalues().end());

  // Circular angle order, starting after the widest gap so that a cluster
  // straddling z = 1 stays contiguous.
  auto angle = [](cplx w) {
    double a = std::arg(w);
    return a < 0.0 ? a + 2.0 * kPi : a;
  };
  std::sort(z.begin(), z.end(), [&](cplx a, cplx b) { return angle(a) < angle(b); });
  std::size_t start = 0;
  double widest = -1.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double next = i + 1 < z.size() ? angle(z[i + 1]) : angle(z[0]) + 2.0 * kPi;
    if (next - angle(z[i]) > widest) {
      widest = next - angle(z[i]);
      start = (i + 1) % z.size();
    }
  }
  std::rotate(z.begin(), z.begin() + static_cast<std::ptrdiff_t>(start), z.end());

  // Greedy clustering, largest multiplicity first. An m-fold root splits
  // into a near-regular m-gon whose centroid stays on the unit circle, while
  // distinct roots on the circle have a centroid strictly inside it.
  std::vector<Cluster> clusters;
  std::size_t i = 0;
  while (i < z.size()) {
    int accepted = 1;
    cplx center = z[i];
    const int max_m = static_cast<int>(std::min<std::size_t>(z.size() - i, 64));
    for (int m = max_m; m >= 2; --m) {
      const cplx last = z[i + static_cast<std::size_t>(m) - 1];
      if (std::abs(last - z[i]) > 0.5) continue;
      cplx c = 0.0;
      for (int t = 0; t < m; ++t) c += z[i + static_cast<std::size_t>(t)];
      c /= static_cast<double>(m);
      double spread = 0.0;
      for (int t = 0; t < m; ++t) spread = std::max(spread, std::abs(z[i + static_cast<std::size_t>(t)] - c));
      // Spread bound: the m-th root of the coefficient noise, floored at the
      // configured cluster radius.
      const double allowed = std::max(opts.cluster_radius, std::pow(1e-13, 1.0 / m) * 4.0);
      if (spread <= allowed && std::abs(std::abs(c) - 1.0) < opts.unit_circle_tol) {
        accepted = m;
        center = c;
        break;
      }
    }
    if (accepted == 1) {
      // Polish a simple root with Newton on the interpolated polynomial.
      for (int it = 0; it < 3; ++it) {
        cplx dp;
        const cplx p = horner(coeffs, center, &dp);
        if (std::abs(dp) == 0.0) break;
        center -= p / dp;
      }
    }
    clusters.push_back({center, accepted});
    i += static_cast<std::size_t>(accepted);
  }

  const double period = rs.period();
  std::vector<SpectralRoot> base;
  int kept = 0;
  int zero_multiplicity = 0;
  for (const Cluster& c : clusters) {
    if (std::abs(std::abs(c.center) - 1.0) >= opts.unit_circle_tol) continue;
    kept += c.multiplicity;
    double k = angle(c.center) / rs.base;
    if (k > period * (1.0 - 1e-10) || k < period * 1e-10) {
      zero_multiplicity += c.multiplicity;
      continue;
    }
    base.push_back({k, c.multiplicity});
  }
  if (kept != degree) {
    throw Error(ErrorKind::RationalRootLoss,
                std::to_string(degree - kept) + " of " + std::to_string(degree) +
                    " polynomial roots could not be placed on the unit circle");
  }

  Spectrum spec;
  spec.mode = SpectrumMode::Rational;
  spec.k_max = period * n_periods;
  spec.roots.push_back({0.0, 1});
  for (int j = 0; j < n_periods; ++j) {
    for (const auto& r : base) spec.roots.push_back({r.k + period * j, r.multiplicity});
    if (zero_multiplicity > 0) spec.roots.push_back({period * (j + 1), zero_multiplicity});
  }
  std::sort(spec.roots.begin(), spec.roots.end(),
            [](const SpectralRoot& a, const SpectralRoot& b) { return a.k < b.k; });
  return spec;
}

// ----------------------------------------------------------------- oracle

Eigen::MatrixXd oracle_matrix(const MetricGraph& g, double k) {
  const int n = g.edge_count();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  // Endpoint incidence per vertex: (edge, end) with end 0 at x = 0 (vertex u)
  // and end 1 at x = l (vertex v).
  std::vector<std::vector<std::pair<int, int>>> ends(static_cast<std::size_t>(g.vertex_count()));
  for (int e = 0; e < n; ++e) {
    ends[static_cast<std::size_t>(g.edge(e).u)].emplace_back(e, 0);
    ends[static_cast<std::size_t>(g.edge(e).v)].emplace_back(e, 1);
  }
  const auto len = g.lengths();
  // Value and (derivative into the edge) / k at an endpoint, as coefficients
  // of (A_e, B_e).
  auto value = [&](int e, int end) -> std::pair<double, double> {
    if (end == 0) return {1.0, 0.0};
    const double kl = k * len[static_cast<std::size_t>(e)];
    return {std::cos(kl), std::sin(kl)};
  };
  auto slope = [&](int e, int end) -> std::pair<double, double> {
    if (end == 0) return {0.0, 1.0};
    const double kl = k * len[static_cast<std::size_t>(e)];
    return {std::sin(kl), -std::cos(kl)};
  };
  int row = 0;
  for (const auto& at : ends) {
    if (at.empty()) continue;
    const auto [e0, end0] = at.front();
    const auto v0 = value(e0, end0);
    for (std::size_t t = 1; t < at.size(); ++t) {
      const auto [e, end] = at[t];
      const auto v = value(e, end);
      a(row, 2 * e0) += v0.first;
      a(row, 2 * e0 + 1) += v0.second;
      a(row, 2 * e) -= v.first;
      a(row, 2 * e + 1) -= v.second;
      ++row;
    }
    for (const auto& [e, end] : at) {
      const auto s = slope(e, end);
      a(row, 2 * e) += s.first;
      a(row, 2 * e + 1) += s.second;
    }
    ++row;
  }
  return a;
}

Spectrum oracle_roots(const MetricGraph& g, double k_max, const RootSearchOptions& opts) {
  if (!g.is_concrete()) throw Error(ErrorKind::UnboundParameter, "oracle needs concrete lengths");
  const double h = opts.scan_step.value_or(default_scan_step(g));
  auto svals = [&g](double k) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(oracle_matrix(g, k));
    return Eigen::VectorXd(svd.singularValues());  // descending
  };
  auto sigma = [&](double k) {
    const Eigen::VectorXd s = svals(k);
    return s(s.size() - 1);
  };
  const int n = static_cast<int>(std::ceil((k_max + 2.0 * h) / h));
  std::vector<double> ks, sig;
  for (int i = 1; i <= n; ++i) {
    ks.push_back(h * i);
    sig.push_back(sigma(ks.back()));
  }
  std::vector<SpectralRoot> found;
  for (std::size_t i = 1; i + 1 < ks.size(); ++i) {
    if (!(sig[i - 1] > sig[i] && sig[i] <= sig[i + 1])) continue;
    const Minimum m = golden_section(sigma, ks[i - 1], ks[i + 1], opts.refine_iterations);
    if (m.value < opts.zero_threshold) {
      const Eigen::VectorXd s = svals(m.k);
      int mult = 0;
      for (Eigen::Index t = 0; t < s.size(); ++t) mult += s(t) < opts.multiplicity_tol * s(0);
      found.push_back({m.k, std::max(mult, 1)});
    } else if (m.value < kSeparationLevel) {
      throw Error(ErrorKind::RefinementFailure,
                  "oracle minimum " + format_double(m.value) + " near k=" + format_double(m.k) +
                      " in " + range_text(ks[i - 1], ks[i + 1]) + " is ambiguous");
    }
  }
  sort_and_merge(found, 1e-9);
  Spectrum spec;
  spec.mode = SpectrumMode::Oracle;
  spec.k_max = k_max;
  spec.roots.push_back({0.0, 1});
  for (const auto& r : found) {
    if (r.k <= k_max + 1e-9 * std::max(1.0, k_max)) spec.roots.push_back(r);
  }
  return spec;
}

// ---------------------------------------------------------------- queries

std::vector<double> k_values(const Spectrum& spec, int count) {
  std::vector<double> out;
  for (const auto& r : spec.roots) {
    for (int m = 0; m < r.multiplicity && static_cast<int>(out.size()) < count; ++m) out.push_back(r.k);
  }
  if (static_cast<int>(out.size()) < count) {
    throw Error(ErrorKind::InsufficientRange,
                "spectrum up to k_max=" + format_double(spec.k_max) + " holds " +
                    std::to_string(out.size()) + " eigenvalues, " + std::to_string(count) +
                    " requested; increase k_max");
  }
  return out;
}

std::vector<double> eigenvalues(const Spectrum& spec, int count) {
  std::vector<double> out = k_values(spec, count);
  for (double& k : out) k *= k;
  return out;
}

Spectrum compute_spectrum(const MetricGraph& g, const RootSearchOptions& opts, ModeRequest mode,
                          std::vector<std::string>* warnings) {
  require_valid(g);
  if (mode != ModeRequest::Scan) {
    auto rs = rational_structure(g);
    if (!rs) {
      if (mode == ModeRequest::Rational) {
        throw Error(ErrorKind::InvalidGraph, "edge lengths are not rationally dependent");
      }
    } else if (2 * rs->multiple_sum() > 2048) {
      if (mode == ModeRequest::Rational) {
        throw Error(ErrorKind::InvalidGraph, "rational structure too fine for polynomial mode (degree " +
                                                 std::to_string(2 * rs->multiple_sum()) + ")");
      }
    } else {
      try {
        const int periods = std::max(1, static_cast<int>(std::ceil(opts.k_max / rs->period())));
        Spectrum spec = find_roots_rational(g, *rs, periods, opts);
        std::erase_if(spec.roots, [&](const SpectralRoot& r) {
          return r.k > opts.k_max + 1e-9 * std::max(1.0, opts.k_max);
        });
        spec.k_max = opts.k_max;
        return spec;
      } catch (const Error& e) {
        if (mode == ModeRequest::Rational) throw;
        if (warnings) warnings->push_back(std::string("rational mode failed, scanning instead: ") + e.what());
      }
    }
  }
  return find_roots_scan(SecularEvaluator(g), opts);
}

Spectrum leading_spectrum(const SecularEvaluator& ev, int count, RootSearchOptions opts) {
  if (count < 1) throw Error(ErrorKind::InvalidConfig, "eigenvalue count must be positive");
  const PhaseCounter n_roots(ev);
  double k = 1.2 * kPi * count / ev.total_length();
  for (int attempt = 0; attempt < 40 && n_roots(k) < count - 1; ++attempt) k *= 2.0;
  opts.k_max = k * 1.2;
  for (int attempt = 0; attempt < 8; ++attempt) {
    Spectrum spec = find_roots_scan(ev, opts);
    if (spec.counted_roots() >= count) return spec;
    opts.k_max *= 2.0;
  }
  throw Error(ErrorKind::InsufficientRange,
              "could not collect " + std::to_string(count) + " eigenvalues up to k=" + format_double(opts.k_max));
}

WeylCheck weyl_check(const Spectrum& spec, double K) {
  WeylCheck w;
  for (const auto& r : spec.roots) {
    if (r.k > 0.0 && r.k <= K * (1.0 + 1e-12) + 1e-9) w.count += r.multiplicity;
  }
  w.expected = K / kPi;
  w.deviation = w.count - w.expected;
  return w;
}

std::string spectrum_csv(const Spectrum& spec) {
  std::ostringstream out;
  out << "k,multiplicity,lambda\n";
  for (const auto& r : spec.roots) {
    out << format_double(r.k) << ',' << r.multiplicity << ',' << format_double(r.k * r.k) << '\n';
  }
  return out.str();
}

nlohmann::json spectrum_to_json(const Spectrum& spec) {
  nlohmann::json roots = nlohmann::json::array();
  for (const auto& r : spec.roots) {
    roots.push_back({{"k", r.k}, {"multiplicity", r.multiplicity}, {"lambda", r.k * r.k}});
  }
  return {{"mode", to_string(spec.mode)}, {"k_max", spec.k_max}, {"roots", roots}};
}

}  // namespace qgraph
