#include <algorithm>
#include <cmath>

#include "qfc/cooling.hpp"

namespace qfc {
namespace {

struct ResonatorTrajectory {
  CMatrix rhoW;
  GaussianBelief belief;
  double u = 0.0;
  double sumEnergy = 0.0;
  double sumCost = 0.0;
  std::size_t count = 0;
  double maxLeak = 0.0;
};

double traceProduct(const CMatrix& rho, const CMatrix& op) {
  return rho.cwiseProduct(op.transpose()).sum().real();
}

}  // namespace

void ResonatorScenario::validate() const {
  validateBasis(oscillator);
  if (!(gamma > 0.0)) throw Error(ErrorCode::NonPositiveGamma, "resonator gamma must be positive");
  cost.validate();
  if (bathOccupation && !(*bathOccupation >= 0.0)) {
    throw Error(ErrorCode::InvalidValue, "bath occupation must be >= 0");
  }
  if (!(bathCoupling >= 0.0)) throw Error(ErrorCode::InvalidValue, "bath coupling must be >= 0");
}

double ResonatorScenario::thermalDiffusion(const PhysicalConstants& constants) const {
  if (!bathOccupation) return 0.0;
  return 2.0 * bathCoupling * oscillator.m * constants.hbar * oscillator.omega * *bathOccupation;
}

LinearMeasuredModel ResonatorScenario::model(const PhysicalConstants& constants) const {
  return oscillatorModel(oscillator.m, oscillator.omega, gamma, constants, thermalDiffusion(constants));
}

std::vector<double> uncontrolledEnergy(const LinearMeasuredModel& model, const Eigen::Matrix2d& Q,
                                       const Eigen::Matrix2d& cov0, const Eigen::Vector2d& mean0,
                                       const std::vector<double>& times) {
  auto rate = [&](const Eigen::Matrix2d& s) {
    return Eigen::Matrix2d(model.A * s + s * model.A.transpose() + model.diffusion);
  };
  Eigen::Matrix2d s = cov0 + mean0 * mean0.transpose();
  std::vector<double> out;
  double t = 0.0;
  const double h = 1e-3;
  for (double target : times) {
    while (t < target - 1e-12) {
      const double step = std::min(h, target - t);
      const Eigen::Matrix2d k1 = rate(s);
      const Eigen::Matrix2d k2 = rate(s + 0.5 * step * k1);
      const Eigen::Matrix2d k3 = rate(s + 0.5 * step * k2);
      const Eigen::Matrix2d k4 = rate(s + step * k3);
      s += (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      t += step;
    }
    out.push_back((Q * s).trace());
  }
  return out;
}

ResonatorOutcome runResonatorCooling(const ResonatorScenario& s, const TrajectoryConfig& config,
                                     const ResonatorOptions& options, const PhysicalConstants& constants) {
  s.validate();
  config.validate();
  constants.validate();
  const LinearMeasuredModel model = s.model(constants);
  const OscillatorOperators ops = buildOscillator(s.oscillator, constants);

  ResonatorOutcome out;
  if (s.feedbackEnabled) out.law = synthesizeLQG(model, s.cost);
  // Start from the Gaussian the filter would hold in steady state.
  out.initialCov = s.feedbackEnabled ? out.law->predictedSteadyCov : steadyFilterCovariance(model);
  const DensityMatrix rho0 = gaussianState(s.oscillator, options.initialMean, out.initialCov, constants);

  const SmeIntegrator sme(ops.X, {ops.H.matrix()}, s.gamma, config.dt, constants,
                          s.thermalDiffusion(constants), /*leakCheck=*/true);
  const KalmanBucyFilter filter(model, config.dt);
  const CMatrix rhoW0 = sme.toWorking(rho0.matrix());
  const CMatrix hW = sme.operatorToWorking(ops.H.matrix());
  const Eigen::RowVector2d gain =
      s.feedbackEnabled ? out.law->gain : Eigen::RowVector2d(Eigen::RowVector2d::Zero());
  const double R = s.cost.R;
  const std::size_t burnStep = static_cast<std::size_t>(std::ceil(options.burnIn / config.dt - 1e-9));

  EnsembleSpec<ResonatorTrajectory> spec;
  spec.initial = [&](std::size_t) {
    ResonatorTrajectory tr;
    tr.rhoW = rhoW0;
    tr.belief.mean = options.initialMean;
    tr.belief.cov = out.initialCov;
    tr.u = -gain.dot(tr.belief.mean);
    return tr;
  };
  spec.step = [&](ResonatorTrajectory& tr, double dW, double t) {
    const std::size_t k = static_cast<std::size_t>(std::llround(t / config.dt));
    if (k >= burnStep) {
      const double e = traceProduct(tr.rhoW, hW);
      tr.sumEnergy += e;
      tr.sumCost += e + R * tr.u * tr.u;
      ++tr.count;
    }
    // Force u on the particle: H = H0 - u X.
    sme.step(tr.rhoW, dW, 0, -tr.u);
    tr.belief = filter.stepInnovation(tr.belief, dW, tr.u);
    tr.u = -gain.dot(tr.belief.mean);
    tr.maxLeak = std::max(tr.maxLeak, sme.leak(tr.rhoW));
  };
  spec.observables = {
      {"energy", [&](const ResonatorTrajectory& tr) { return traceProduct(tr.rhoW, hW); }},
      {"cost", [&](const ResonatorTrajectory& tr) { return traceProduct(tr.rhoW, hW) + R * tr.u * tr.u; }},
      {"ground", [&](const ResonatorTrajectory& tr) { return sme.basisPopulation(tr.rhoW, 0); }},
      {"excited", [&](const ResonatorTrajectory& tr) { return sme.basisPopulation(tr.rhoW, 1); }},
      {"meanX", [&](const ResonatorTrajectory& tr) { return sme.meanX(tr.rhoW); }},
  };
  spec.finals = {
      {"energy", [](const ResonatorTrajectory& tr) { return tr.count ? tr.sumEnergy / tr.count : std::nan(""); }},
      {"cost", [](const ResonatorTrajectory& tr) { return tr.count ? tr.sumCost / tr.count : std::nan(""); }},
      {"leak", [](const ResonatorTrajectory& tr) { return tr.maxLeak; }},
  };

  const EnsembleResult r = runEnsemble(spec, config, options.ensemble);
  out.times = r.times;
  out.energy = r.curve("energy");
  out.cost = r.curve("cost");
  out.groundPop = r.curve("ground");
  out.excitedPop = r.curve("excited");
  out.meanX = r.curve("meanX");
  out.trajectoryEnergy = r.final("energy");
  out.trajectoryCost = r.final("cost");
  out.maxLeak = r.final("leak");
  out.steadyEnergy = sampleStats(out.trajectoryEnergy);
  out.steadyCost = sampleStats(out.trajectoryCost);
  if (!s.feedbackEnabled) {
    const Eigen::Matrix2d energyWeights = energyCost(s.oscillator.m, s.oscillator.omega, 1.0).Q;
    out.predictedEnergyCurve =
        uncontrolledEnergy(model, energyWeights, out.initialCov, options.initialMean, out.times);
  }
  return out;
}

}  // namespace qfc
