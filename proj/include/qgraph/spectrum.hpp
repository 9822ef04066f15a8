#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qgraph/graph.hpp"
#include "qgraph/secular.hpp"

namespace qgraph {

enum class SpectrumMode { Scan, Rational, Oracle };

std::string to_string(SpectrumMode mode);

struct SpectralRoot {
  double k = 0.0;
  int multiplicity = 1;
};

// Roots k >= 0 of the secular function, strictly increasing, valid on
// [0, k_max]. The k = 0 entry carries the number of connected components.
struct Spectrum {
  std::vector<SpectralRoot> roots;
  double k_max = 0.0;
  SpectrumMode mode = SpectrumMode::Scan;

  int counted_roots() const;  // sum of multiplicities, including k = 0
};

struct RootSearchOptions {
  double k_max = 12.0 * 3.14159265358979323846;
  std::optional<double> scan_step;  // default: pi * min_length / 20
  double zero_threshold = 1e-8;     // sigma_min at an accepted root
  double multiplicity_tol = 1e-6;   // relative to ||U - I||_2
  int refine_iterations = 200;
  double cluster_radius = 1e-6;     // rational mode, z-plane
  double unit_circle_tol = 1e-8;    // rational mode, ||z| - 1|
  bool verify_count = true;         // cross-check against the counting function
};

double default_scan_step(const MetricGraph& g);

// Samples sigma_min(k) = min_j |e^{i theta_j(k)} - 1| over (0, k_max],
// golden-section refines each local minimum, and counts multiplicities from
// the eigenvalues of U(k) near 1. Sample spacing never exceeds the safe step
// sigma / l_max (sigma_min is l_max-Lipschitz in k) and never drops below
// the scan step.
Spectrum find_roots_scan(const SecularEvaluator& ev, const RootSearchOptions& opts = {});

// Number of roots in (0, k] counted with multiplicity, from the winding of
// det U(k) = const * exp(2 i L k): N(k) = (2 L k + sum phi_j(0) - sum phi_j(k)) / 2 pi.
int counting_function(const SecularEvaluator& ev, double k);

// Per-period enumeration for rationally dependent lengths: with
// z = exp(i k base), D is a polynomial in z of degree 2 * sum(p). Its
// coefficients come from samples at roots of unity and an inverse DFT, and
// its roots from the companion matrix. Roots are replicated over n_periods.
Spectrum find_roots_rational(const MetricGraph& g, const RationalStructure& rs, int n_periods,
                             const RootSearchOptions& opts = {});

// Polynomial coefficients (ascending powers of z) of D for a rational graph.
std::vector<cplx> secular_polynomial(const MetricGraph& g, const RationalStructure& rs);

// Independent formulation: f_n(x) = A_n cos(kx) + B_n sin(kx) on every edge,
// continuity and zero derivative sum at each vertex, roots where the smallest
// singular value of the 2N x 2N system vanishes.
Spectrum oracle_roots(const MetricGraph& g, double k_max, const RootSearchOptions& opts = {});
Eigen::MatrixXd oracle_matrix(const MetricGraph& g, double k);

// First `count` eigenvalues lambda = k^2, multiplicity-expanded, starting at 0.
std::vector<double> eigenvalues(const Spectrum& spec, int count);
// First `count` k-values, multiplicity-expanded, starting at 0.
std::vector<double> k_values(const Spectrum& spec, int count);

enum class ModeRequest { Auto, Scan, Rational };

// Computes the spectrum of a concrete graph up to k_max. Auto prefers the
// rational mode when a rational structure exists and falls back to scanning
// if the rational mode fails.
Spectrum compute_spectrum(const MetricGraph& g, const RootSearchOptions& opts,
                          ModeRequest mode = ModeRequest::Auto,
                          std::vector<std::string>* warnings = nullptr);

// Scans with the smallest range that yields `count` eigenvalues plus a 20%
// margin, doubling the range on shortfall.
Spectrum leading_spectrum(const SecularEvaluator& ev, int count, RootSearchOptions opts = {});

struct WeylCheck {
  int count = 0;        // roots in (0, K] with multiplicity
  double expected = 0;  // K / pi for a graph of total length one
  double deviation = 0;
};

WeylCheck weyl_check(const Spectrum& spec, double K);

std::string spectrum_csv(const Spectrum& spec);  // "k,multiplicity,lambda"
nlohmann::json spectrum_to_json(const Spectrum& spec);

}  // namespace qgraph
