#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "qfc/filters.hpp"
#include "qfc/stochastic.hpp"

namespace qfc {

// ---------------------------------------------------------------------------
// Qubit purification

struct QubitFeedbackPolicy {
  enum class Kind { Fixed, RapidPurification };

  Kind kind = Kind::Fixed;
  double feedbackRate = std::numeric_limits<double>::infinity();

  static QubitFeedbackPolicy fixed() { return {}; }
  static QubitFeedbackPolicy rapid(double rate = std::numeric_limits<double>::infinity()) {
    return {Kind::RapidPurification, rate};
  }
  bool infiniteRate() const { return feedbackRate == std::numeric_limits<double>::infinity(); }
  void validate() const;
};

struct BlochVector {
  double x = 0.0, y = 0.0, z = 0.0;
  double length() const;
};

BlochVector blochVector(const DensityMatrix& rho);
DensityMatrix qubitFromBloch(const BlochVector& r);

// Rotation about sigma_y taking (x, z) to (sqrt(x^2 + z^2), 0); no-op at x = z = 0.
DensityMatrix rotateIntoEquator(const DensityMatrix& rho);

// Measurement along sigma_z with the policy's feedback applied.
DensityMatrix rapidPurifyStep(const DensityMatrix& rho, const QubitFeedbackPolicy& policy, double gamma,
                              double dW, double dt, const PhysicalConstants& constants = {});

struct PurificationStats {
  std::vector<double> times;
  std::vector<double> avgEntropy, entropyStderr, entropyVariance;
  std::vector<double> avgImpurity, impurityStderr;  // impurity = 1 - Tr[rho^2]
  std::vector<double> avgLogImpurity;               // ln of the ensemble-average impurity
  std::vector<double> hittingTimes;                 // NaN where the target was missed
  std::vector<double> finalEntropy;                 // per trajectory
  double entropyExponent = 0.0;   // -d ln<S>/dt over the fit window
  double entropyExponentStderr = 0.0;
  double impurityExponent = 0.0;  // -d ln<1 - P>/dt, same window
  double impurityExponentStderr = 0.0;
  std::size_t missed = 0;
};

struct PurificationOptions {
  std::optional<double> targetPurity;
  bool requireTarget = true;  // throw TargetNotReached on misses
  // Exponent fit window [from, to]; defaults to the final half of the run.
  std::optional<std::pair<double, double>> fitWindow;
  EnsembleOptions ensemble;
};

PurificationStats purificationExperiment(const QubitFeedbackPolicy& policy, double gamma,
                                         const TrajectoryConfig& config,
                                         const PurificationOptions& options = {},
                                         const PhysicalConstants& constants = {});

struct DecayFit {
  double exponent = 0.0;
  double stderr_ = 0.0;  // regression standard error of the slope
};

// Least-squares slope of ln(values) against time over [tFrom, tTo], negated.
DecayFit fitDecay(const std::vector<double>& times, const std::vector<double>& values, double tFrom,
                  double tTo);
double decayExponent(const std::vector<double>& times, const std::vector<double>& values, double tFrom,
                     double tTo);

// ---------------------------------------------------------------------------
// Two-state discrimination

// Minimal error of discriminating rho0 (prior 1 - p1) from rho1 (prior p1).
double helstromBound(const DensityMatrix& rho0, const DensityMatrix& rho1, double p1);

struct DolinarConfig {
  double alpha = 1.0;  // real coherent amplitude of the pulse-present hypothesis
  double pulseDuration = 1.0;
  int nSegments = 400;
  double prior = 0.5;  // probability of pulse present

  void validate() const;
};

struct ErrorEstimate {
  double errorRate = 0.0;
  double stderr_ = 0.0;
  std::size_t trials = 0;
};

// Photon counting on the displaced field with the local oscillator updated
// after every detection from the running posterior.
ErrorEstimate dolinarSimulate(const DolinarConfig& cfg, std::uint64_t seed, std::size_t trials,
                              unsigned workers = 1);

// Local-oscillator amplitude for hypothesis log-odds ln(P1/P0) with `remaining`
// time left in the current segment.
double dolinarAmplitude(const DolinarConfig& cfg, double logOdds, double remaining);

// Constant local oscillator b (in units of sqrt(photon number)) with
// maximum-likelihood decision on the total count.
double staticReceiverError(const DolinarConfig& cfg, double b);

struct StaticReceiver {
  double b = 0.0;
  double error = 0.0;
};

StaticReceiver optimalStaticReceiver(const DolinarConfig& cfg);
ErrorEstimate staticReceiverSimulate(const DolinarConfig& cfg, double b, std::uint64_t seed,
                                     std::size_t trials, unsigned workers = 1);

}  // namespace qfc
