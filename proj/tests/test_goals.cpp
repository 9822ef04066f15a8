#include <doctest.h>

#include <random>

#include "qgraph/error.hpp"
#include "qgraph/goals.hpp"
#include "support.hpp"

using namespace qgraph;
using namespace qgraph::testing;

namespace {

Spectrum spectrum_of(const MetricGraph& g, double k_max = 30) {
  RootSearchOptions o;
  o.k_max = k_max;
  return compute_spectrum(g, o);
}

TargetSpectrum target(std::vector<double> v, DistanceSpace space = DistanceSpace::Lambda) {
  return {std::move(v), space};
}

ErrorKind error_kind(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an Error");
  return ErrorKind::StepFailure;
}

// Random nondecreasing list starting at 0.
std::vector<double> random_spectrum(std::mt19937_64& rng, int n) {
  std::vector<double> v{0.0};
  std::exponential_distribution<double> gap(0.05);
  for (int i = 1; i < n; ++i) v.push_back(v.back() + (rng() % 4 == 0 ? 0.0 : gap(rng)));
  return v;
}

}  // namespace

TEST_CASE("spectral distance") {
  const std::vector<double> l = {0, pi * pi, 4 * pi * pi};
  CHECK(spectral_distance(l, target(l)) == 0.0);
  CHECK(spectral_distance(l, target({0, 0, 0})) == doctest::Approx(pi * pi * std::sqrt(17.0)).epsilon(1e-14));

  const Spectrum interval = spectrum_of(families::path(2));
  CHECK(spectral_distance(interval, target({0, pi * pi, 4 * pi * pi})) <= 1e-9);

  // k space compares square roots.
  CHECK(spectral_distance(l, target({0, 4 * pi * pi, 9 * pi * pi}, DistanceSpace::K)) ==
        doctest::Approx(std::sqrt(2.0) * pi).epsilon(1e-14));

  // Repeated target values compare against the multiplicity-expanded list.
  const Spectrum tri = spectrum_of(load_fixture("triangle"));
  CHECK(spectral_distance(tri, target({0, 4 * pi * pi, 4 * pi * pi})) <= 1e-9);

  CHECK(error_kind([&] { spectral_distance(l, target({0, 1, 2, 3})); }) == ErrorKind::InsufficientRange);
  CHECK(error_kind([] { target({1, 2}).check(); }) == ErrorKind::InvalidConfig);
  CHECK(error_kind([] { target({0, 2, 1}).check(); }) == ErrorKind::InvalidConfig);
  CHECK(error_kind([] { target({}).check(); }) == ErrorKind::InvalidConfig);
}

TEST_CASE("goal scores") {
  const Spectrum interval = spectrum_of(families::path(2));
  CHECK(score(MaximizeLambda1{}, interval).value == doctest::Approx(-pi * pi).epsilon(1e-12));
  CHECK(score(MinimizeLambda1{}, interval).value == doctest::Approx(pi * pi).epsilon(1e-12));

  const Spectrum tri = spectrum_of(load_fixture("triangle"));
  CHECK(score(MaximizeRatio{}, tri).value == doctest::Approx(-1.0).epsilon(1e-12));

  const Goal match = MinimizeDistance{target({0, pi * pi, 4 * pi * pi})};
  CHECK(std::abs(score(match, interval).value) <= 1e-9);
  CHECK(score(match, interval).eigenvalues.size() == 3);

  CHECK(error_kind([] { score_eigenvalues(MaximizeRatio{}, {0, 0, 1}); }) == ErrorKind::ZeroGap);
  CHECK(error_kind([] { score_eigenvalues(MaximizeRatio{}, {0, 1}); }) == ErrorKind::InsufficientRange);
  CHECK(error_kind([] { score_eigenvalues(Program{}, {0, 1, 2}); }) == ErrorKind::InvalidConfig);
}

TEST_CASE("required eigenvalue counts") {
  CHECK(required_eigenvalues(Goal{MaximizeLambda1{}}) == 2);
  CHECK(required_eigenvalues(Goal{MaximizeRatio{}}) == 3);
  CHECK(required_eigenvalues(Goal{MinimizeDistance{target({0, 1, 1, 4})}}) == 4);
  CHECK(required_eigenvalues(StopCondition{EigenvalueThreshold{3, Comparator::GreaterEqual, 1}}) == 4);

  Program p;
  p.phases.push_back({MaximizeLambda1{}, EigenvalueThreshold{4, Comparator::Greater, 10}, {}});
  p.phases.push_back({MinimizeDistance{target({0, 1, 2})}, StepBudget{2}, {}});
  CHECK(required_eigenvalues(Goal{p}) == 5);
}

TEST_CASE("stop conditions") {
  const std::vector<double> l = {0, 10, 20};
  CHECK(stop_reached(EigenvalueThreshold{1, Comparator::GreaterEqual, 10}, l, 0));
  CHECK_FALSE(stop_reached(EigenvalueThreshold{1, Comparator::Greater, 10}, l, 0));
  CHECK(stop_reached(EigenvalueThreshold{2, Comparator::Less, 21}, l, 0));
  CHECK_FALSE(stop_reached(EigenvalueThreshold{2, Comparator::LessEqual, 19}, l, 0));
  CHECK_FALSE(stop_reached(StepBudget{3}, l, 2));
  CHECK(stop_reached(StepBudget{3}, l, 3));
}

TEST_CASE("descriptions") {
  CHECK(describe(Goal{MaximizeLambda1{}}) == "max_lambda1");
  CHECK(describe(Goal{MinimizeLambda1{}}) == "min_lambda1");
  CHECK(describe(Goal{MaximizeRatio{}}) == "max_ratio");
  CHECK(describe(Goal{MinimizeDistance{target({0, 1})}}).rfind("target(", 0) == 0);
}

TEST_CASE("distance is a metric on truncated spectra") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 8);
    const auto a = random_spectrum(rng, n), b = random_spectrum(rng, n), c = random_spectrum(rng, n);
    for (DistanceSpace space : {DistanceSpace::Lambda, DistanceSpace::K}) {
      const double ab = spectral_distance(a, target(b, space));
      const double ba = spectral_distance(b, target(a, space));
      const double bc = spectral_distance(b, target(c, space));
      const double ac = spectral_distance(a, target(c, space));
      CHECK(ab == doctest::Approx(ba).epsilon(1e-14));
      CHECK(ac <= ab + bc + 1e-9);
      CHECK(spectral_distance(a, target(a, space)) == 0.0);
      if (a != b) CHECK(ab > 0.0);
    }
  }
}

TEST_CASE("scores are monotone in their defining quantity") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const auto a = random_spectrum(rng, 4);
    if (a[1] <= 0) continue;
    auto b = a;
    const double bump = std::uniform_real_distribution<double>(0.1, 5)(rng);
    b[1] += bump;
    b[2] = std::max(b[2], b[1]);
    b[3] = std::max(b[3], b[2]);
    CHECK(score_eigenvalues(MaximizeLambda1{}, b).value < score_eigenvalues(MaximizeLambda1{}, a).value);
    CHECK(score_eigenvalues(MinimizeLambda1{}, b).value > score_eigenvalues(MinimizeLambda1{}, a).value);

    const double ratio = -score_eigenvalues(MaximizeRatio{}, a).value;
    CHECK(ratio >= 1.0);
    auto flat = a;
    flat[2] = flat[1];
    CHECK(score_eigenvalues(MaximizeRatio{}, flat).value == -1.0);
  }
}
