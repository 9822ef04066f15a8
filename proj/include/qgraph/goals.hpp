#pragma once

#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "qgraph/policy.hpp"
#include "qgraph/spectrum.hpp"

namespace qgraph {

enum class DistanceSpace { Lambda, K };

// Target eigenvalues mu_0 = 0 <= mu_1 <= ... (repeats encode multiplicity).
// Values are always eigenvalues; the space selects whether distances are
// taken on lambda or on k = sqrt(lambda).
struct TargetSpectrum {
  std::vector<double> values;
  DistanceSpace space = DistanceSpace::Lambda;

  void check() const;  // throws InvalidConfig
};

struct MinimizeDistance {
  TargetSpectrum target;
};
struct MaximizeLambda1 {};
struct MinimizeLambda1 {};
struct MaximizeRatio {};  // lambda_2 / lambda_1

enum class Comparator { Less, LessEqual, Greater, GreaterEqual };

// Phase ends once eigenvalue[index] compares true against threshold.
struct EigenvalueThreshold {
  int index = 1;
  Comparator op = Comparator::GreaterEqual;
  double threshold = 0.0;
};
// Phase ends after this many steps.
struct StepBudget {
  int steps = 1;
};
using StopCondition = std::variant<EigenvalueThreshold, StepBudget>;

struct ProgramPhase;

struct Program {
  std::vector<ProgramPhase> phases;
};

using Goal = std::variant<MinimizeDistance, MaximizeLambda1, MinimizeLambda1, MaximizeRatio, Program>;

// One stage of a programmed run. The last phase's stop condition is ignored.
struct ProgramPhase {
  Goal goal;
  StopCondition stop = StepBudget{1};
  std::optional<MovePolicy> policy;  // overrides the run policy when set
};

struct Score {
  double value = 0.0;  // lower is better
  std::vector<double> eigenvalues;
};

double spectral_distance(const std::vector<double>& lambdas, const TargetSpectrum& t);
double spectral_distance(const Spectrum& spec, const TargetSpectrum& t);

// Number of leading eigenvalues (including lambda_0) a goal needs.
int required_eigenvalues(const Goal& goal);
int required_eigenvalues(const StopCondition& stop);

// Scores a non-program goal. Programs are resolved to their active phase by
// the evolution engine; passing one here throws InvalidConfig.
Score score(const Goal& goal, const Spectrum& spec);
Score score_eigenvalues(const Goal& goal, const std::vector<double>& lambdas);

bool stop_reached(const StopCondition& stop, const std::vector<double>& lambdas, int steps_in_phase);

std::string describe(const Goal& goal);

}  // namespace qgraph
