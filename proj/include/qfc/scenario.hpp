#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "qfc/errors.hpp"

namespace qfc {

enum class ScenarioKind {
  SmeVsLindblad,
  FilterEquivalence,
  RapidPurification,
  Dolinar,
  ResonatorCooling,
  AtomCooling,
  GammaScan,
};

// Closed registry, in a fixed order.
const std::vector<std::string>& scenarioNames();
ScenarioKind scenarioKind(const std::string& name);  // throws UnknownScenario

struct RunConfig {
  std::string scenario;
  ScenarioKind kind = ScenarioKind::SmeVsLindblad;
  nlohmann::json parameters;  // validated, defaults filled in
  std::uint64_t seed = 0;
  std::string outputDir;      // may be empty
};

RunConfig parseConfig(const std::string& path);
RunConfig parseConfigText(const std::string& text);

struct Scalar {
  double value = 0.0;
  std::optional<double> stderr_;
  std::optional<double> tolerance;
};

struct Curve {
  std::string axis = "time";
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> err;
};

struct ScenarioResult {
  nlohmann::json metadata;
  std::map<std::string, Curve> curves;
  std::map<std::string, Scalar> scalars;
  std::map<std::string, std::vector<double>> perTrajectory;

  const Scalar& scalar(const std::string& name) const;
};

// Execution knobs that are not part of the experiment definition. Worker count
// never changes results; the rest are recorded in the metadata.
struct RuntimeOptions {
  std::optional<std::size_t> trajectories;
  std::optional<std::uint64_t> seed;
  unsigned workers = 1;
  int dtDivisor = 1;        // dt -> dt / dtDivisor
  int pathSubdivision = 1;  // Brownian sub-steps per step
  int refinement = 1;       // discretization refinement for non-stochastic knobs
};

ScenarioResult runScenario(const RunConfig& cfg, const RuntimeOptions& runtime = {});

// summary.json plus one <curve>.csv per curve and trajectories.csv when
// per-trajectory data exist. Overwrites in place.
void writeResults(const ScenarioResult& result, const std::string& dir);

std::string formatNumber(double v);

struct DriftCheck {
  std::string scenario;
  std::string observable;
  double coarse = 0.0;
  double fine = 0.0;
  double drift = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

// Runs the scenario at its configured step and at half of it (pathwise
// coupled for Wiener-driven scenarios) and compares the designated observable.
DriftCheck dtHalvingCheck(const RunConfig& cfg, const RuntimeOptions& runtime = {});

extern const char* const kVersion;

}  // namespace qfc
