#include "qgraph/goals.hpp"

#include <cmath>
#include <sstream>

#include "qgraph/error.hpp"
#include "qgraph/text.hpp"

namespace qgraph {

void TargetSpectrum::check() const {
  if (values.empty()) throw Error(ErrorKind::InvalidConfig, "target spectrum is empty");
  if (values.front() != 0.0) throw Error(ErrorKind::InvalidConfig, "target spectrum must start with 0");
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (!(values[i] >= values[i - 1]) || !std::isfinite(values[i])) {
      throw Error(ErrorKind::InvalidConfig, "target spectrum must be finite and nondecreasing");
    }
  }
}

double spectral_distance(const std::vector<double>& lambdas, const TargetSpectrum& t) {
  if (lambdas.size() < t.values.size()) {
    throw Error(ErrorKind::InsufficientRange, "spectrum has fewer eigenvalues than the target");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < t.values.size(); ++i) {
    double a = lambdas[i];
    double b = t.values[i];
    if (t.space == DistanceSpace::K) {
      a = std::sqrt(std::max(a, 0.0));
      b = std::sqrt(b);
    }
    sum += (a - b) * (a - b);
  }
  return std::sqrt(sum);
}

double spectral_distance(const Spectrum& spec, const TargetSpectrum& t) {
  return spectral_distance(eigenvalues(spec, static_cast<int>(t.values.size())), t);
}

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

int required_eigenvalues(const Goal& goal) {
  return std::visit(overloaded{
                        [](const MinimizeDistance& g) { return static_cast<int>(g.target.values.size()); },
                        [](const MaximizeLambda1&) { return 2; },
                        [](const MinimizeLambda1&) { return 2; },
                        [](const MaximizeRatio&) { return 3; },
                        [](const Program& p) {
                          int n = 1;
                          for (const auto& phase : p.phases) {
                            n = std::max({n, required_eigenvalues(phase.goal), required_eigenvalues(phase.stop)});
                          }
                          return n;
                        },
                    },
                    goal);
}

int required_eigenvalues(const StopCondition& stop) {
  if (const auto* t = std::get_if<EigenvalueThreshold>(&stop)) return t->index + 1;
  return 1;
}

Score score_eigenvalues(const Goal& goal, const std::vector<double>& lambdas) {
  const int need = required_eigenvalues(goal);
  if (static_cast<int>(lambdas.size()) < need) {
    throw Error(ErrorKind::InsufficientRange, "goal needs " + std::to_string(need) + " eigenvalues");
  }
  Score s;
  s.eigenvalues.assign(lambdas.begin(), lambdas.begin() + need);
  s.value = std::visit(overloaded{
                           [&](const MinimizeDistance& g) { return spectral_distance(lambdas, g.target); },
                           [&](const MaximizeLambda1&) { return -lambdas[1]; },
                           [&](const MinimizeLambda1&) { return lambdas[1]; },
                           [&](const MaximizeRatio&) {
                             if (lambdas[1] < 1e-12) {
                               throw Error(ErrorKind::ZeroGap, "lambda_1 vanishes; ratio undefined");
                             }
                             return -lambdas[2] / lambdas[1];
                           },
                           [](const Program&) -> double {
                             throw Error(ErrorKind::InvalidConfig, "a program must be resolved to a phase before scoring");
                           },
                       },
                       goal);
  return s;
}

Score score(const Goal& goal, const Spectrum& spec) {
  if (std::holds_alternative<Program>(goal)) return score_eigenvalues(goal, {});
  return score_eigenvalues(goal, eigenvalues(spec, required_eigenvalues(goal)));
}

bool stop_reached(const StopCondition& stop, const std::vector<double>& lambdas, int steps_in_phase) {
  if (const auto* b = std::get_if<StepBudget>(&stop)) return steps_in_phase >= b->steps;
  const auto& t = std::get<EigenvalueThreshold>(stop);
  if (t.index < 0 || static_cast<std::size_t>(t.index) >= lambdas.size()) {
    throw Error(ErrorKind::InsufficientRange, "stop condition refers to eigenvalue " + std::to_string(t.index));
  }
  const double x = lambdas[static_cast<std::size_t>(t.index)];
  switch (t.op) {
    case Comparator::Less: return x < t.threshold;
    case Comparator::LessEqual: return x <= t.threshold;
    case Comparator::Greater: return x > t.threshold;
    case Comparator::GreaterEqual: return x >= t.threshold;
  }
  return false;
}

std::string describe(const Goal& goal) {
  return std::visit(overloaded{
                        [](const MinimizeDistance& g) {
                          std::ostringstream out;
                          out << "target(" << (g.target.space == DistanceSpace::K ? "k" : "lambda") << ":";
                          for (std::size_t i = 0; i < g.target.values.size(); ++i) {
                            out << (i ? "," : "") << format_double(g.target.values[i]);
                          }
                          out << ")";
                          return out.str();
                        },
                        [](const MaximizeLambda1&) { return std::string("max_lambda1"); },
                        [](const MinimizeLambda1&) { return std::string("min_lambda1"); },
                        [](const MaximizeRatio&) { return std::string("max_ratio"); },
                        [](const Program& p) {
                          std::string s = "program[";
                          for (std::size_t i = 0; i < p.phases.size(); ++i) {
                            s += (i ? "; " : "") + describe(p.phases[i].goal);
                          }
                          return s + "]";
                        },
                    },
                    goal);
}

}  // namespace qgraph
