#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qfc/lqg.hpp"
#include "qfc/stochastic.hpp"

namespace qfc {

// ---------------------------------------------------------------------------
// Resonator under LQG feedback

struct ResonatorScenario {
  FockBasis oscillator{30, 1.0, 1.0};
  double gamma = 1.0;
  QuadraticCost cost;
  bool feedbackEnabled = true;
  std::optional<double> bathOccupation;  // thermal n-bar
  double bathCoupling = 0.01;            // kappa: D_th = 2 kappa m hbar omega n-bar

  void validate() const;
  double thermalDiffusion(const PhysicalConstants& constants = {}) const;
  LinearMeasuredModel model(const PhysicalConstants& constants = {}) const;
};

struct ResonatorOptions {
  double burnIn = 0.0;  // time averages cover [burnIn, tFinal]
  Eigen::Vector2d initialMean = Eigen::Vector2d::Zero();
  EnsembleOptions ensemble;
};

struct ResonatorOutcome {
  std::vector<double> times;
  CurveStats energy;       // <H>
  CurveStats cost;         // <H> + R u^2
  CurveStats groundPop;    // Fock |0>
  CurveStats excitedPop;   // Fock |1>
  CurveStats meanX;
  std::vector<double> trajectoryEnergy;  // per-trajectory time averages
  std::vector<double> trajectoryCost;
  SampleStats steadyEnergy;
  SampleStats steadyCost;
  std::vector<double> maxLeak;  // per trajectory
  std::optional<ControlLaw> law;
  Eigen::Matrix2d initialCov;
  // Second-moment prediction for <H>(t) (uncontrolled runs).
  std::vector<double> predictedEnergyCurve;
};

ResonatorOutcome runResonatorCooling(const ResonatorScenario& s, const TrajectoryConfig& config,
                                     const ResonatorOptions& options = {},
                                     const PhysicalConstants& constants = {});

// E[x^T Q x](t) for dS/dt = A S + S A^T + D, S(0) = cov0 + mean0 mean0^T.
std::vector<double> uncontrolledEnergy(const LinearMeasuredModel& model, const Eigen::Matrix2d& Q,
                                       const Eigen::Matrix2d& cov0, const Eigen::Vector2d& mean0,
                                       const std::vector<double>& times);

// ---------------------------------------------------------------------------
// Atom in a switched lattice

enum class LatticeLevel { Low, High };
enum class OutcomeLabel { Ground, FirstExcited, Other };

std::string labelName(OutcomeLabel label);

struct AtomLatticeScenario {
  double vLow = 20.0;
  double vHigh = 40.0;
  double k = 1.0;
  GridBasis grid;
  double gamma = 16.0;
  double switchHysteresis = 0.05;  // deadband on d<Vop>/dt, inverse time units
  int levels = 32;                 // retained eigenstates of the low-depth Hamiltonian

  void validate() const;
};

// g = d<Vop>/dt = (i / hbar) Tr(rho [H, Vop]).
double potentialRate(const DensityMatrix& rho, const ObservableOperator& H, const ObservableOperator& Vop,
                     const PhysicalConstants& constants = {});

LatticeLevel switchRule(double g, LatticeLevel current, double hysteresis);

// Raise the lattice while the atom climbs (g > h), lower it while it falls
// (g < -h), otherwise hold.
LatticeLevel bangBangDecision(const DensityMatrix& rho, const ObservableOperator& H,
                              const ObservableOperator& Vop, double vLow, double vHigh,
                              LatticeLevel current, double hysteresis,
                              const PhysicalConstants& constants = {});

struct AtomInitialState {
  enum class Kind { Superposition, Ground, Mixture };
  Kind kind = Kind::Superposition;
  int count = 4;  // levels 0..count-1, equal weights
};

struct AtomOptions {
  AtomInitialState initial;
  bool switching = true;
  EnsembleOptions ensemble;
};

struct CoolingOutcome {
  std::vector<double> times;
  CurveStats energy;      // <H_low>
  CurveStats groundPop;   // overlap with the low-depth ground state
  CurveStats excitedPop;  // overlap with the low-depth first excited state
  CurveStats parityCurve;
  CurveStats purityCurve;
  std::vector<OutcomeLabel> labels;
  std::vector<double> finalPurity;
  std::vector<double> switches;
  std::vector<double> minDwellSteps;      // NaN if fewer than two switches
  std::vector<double> maxIndicatorStep;   // max |g(t + dt) - g(t)|
  std::vector<double> maxLeak;
  double groundFraction = 0.0, excitedFraction = 0.0, otherFraction = 0.0;
  double initialParity = 0.0;
  RVector levelEnergies;
  std::vector<int> levelParity;
};

CoolingOutcome runAtomCooling(const AtomLatticeScenario& s, const TrajectoryConfig& config,
                              const AtomOptions& options = {},
                              const PhysicalConstants& constants = {});

}  // namespace qfc
