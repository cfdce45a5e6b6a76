#include <algorithm>
#include <cmath>
#include <limits>

#include "qfc/cooling.hpp"

namespace qfc {
namespace {

struct AtomTrajectory {
  CMatrix rhoW;
  LatticeLevel level = LatticeLevel::Low;
  double g = 0.0;
  long sinceSwitch = 0;
  bool switchedOnce = false;
  double minDwell = std::numeric_limits<double>::quiet_NaN();
  double switches = 0.0;
  double maxJump = 0.0;
  double maxLeak = 0.0;
};

double traceProduct(const CMatrix& rho, const CMatrix& op) {
  return rho.cwiseProduct(op.transpose()).sum().real();
}

}  // namespace

std::string labelName(OutcomeLabel label) {
  switch (label) {
    case OutcomeLabel::Ground: return "ground";
    case OutcomeLabel::FirstExcited: return "firstExcited";
    case OutcomeLabel::Other: return "other";
  }
  return "other";
}

void AtomLatticeScenario::validate() const {
  if (!(vLow > 0.0 && vHigh > vLow)) throw Error(ErrorCode::InvalidValue, "need 0 < vLow < vHigh");
  if (!(k > 0.0)) throw Error(ErrorCode::InvalidValue, "lattice wavenumber must be positive");
  validateBasis(grid);
  if (std::abs(grid.xMin + grid.xMax) > 1e-12 * (grid.xMax - grid.xMin)) {
    throw Error(ErrorCode::AsymmetricGrid, "atom lattice grid must be symmetric about zero");
  }
  if (!(gamma >= 0.0)) throw Error(ErrorCode::NonPositiveGamma, "gamma must be >= 0");
  if (!(switchHysteresis >= 0.0)) throw Error(ErrorCode::InvalidValue, "hysteresis must be >= 0");
  if (levels < 4 || levels > grid.nPoints) throw Error(ErrorCode::InvalidValue, "level count out of range");
}

double potentialRate(const DensityMatrix& rho, const ObservableOperator& H, const ObservableOperator& Vop,
                     const PhysicalConstants& constants) {
  if (rho.dim() != H.dim() || rho.dim() != Vop.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "potentialRate: dimensions differ");
  }
  const CMatrix c = Complex(0.0, 1.0 / constants.hbar) * (H.matrix() * Vop.matrix() - Vop.matrix() * H.matrix());
  return traceProduct(rho.matrix(), c);
}

LatticeLevel switchRule(double g, LatticeLevel current, double hysteresis) {
  if (g > hysteresis) return LatticeLevel::High;
  if (g < -hysteresis) return LatticeLevel::Low;
  return current;
}

LatticeLevel bangBangDecision(const DensityMatrix& rho, const ObservableOperator& H, const ObservableOperator& Vop,
                              double vLow, double vHigh, LatticeLevel current, double hysteresis,
                              const PhysicalConstants& constants) {
  if (!(vLow > 0.0 && vHigh > vLow)) throw Error(ErrorCode::InvalidValue, "need 0 < vLow < vHigh");
  return switchRule(potentialRate(rho, H, Vop, constants), current, hysteresis);
}

CoolingOutcome runAtomCooling(const AtomLatticeScenario& s, const TrajectoryConfig& config,
                              const AtomOptions& options, const PhysicalConstants& constants) {
  s.validate();
  config.validate();
  constants.validate();
  const LatticeOperators low = buildLattice(s.vLow, s.k, s.grid, constants);
  const ParitySpectrum spectrum = parityAdaptedEigensystem(low.H, s.grid);
  const int m = s.levels;
  const RMatrix basis = spectrum.vectors.leftCols(m);

  // Everything below lives in the span of the lowest m low-depth levels.
  const RMatrix vopLevels = basis.transpose() * low.Vop.matrix().real() * basis;
  CMatrix hLow = CMatrix::Zero(m, m);
  for (int i = 0; i < m; ++i) hLow(i, i) = spectrum.energies(i);
  const CMatrix vop = vopLevels.cast<Complex>();
  const CMatrix hHigh = hLow + (s.vHigh - s.vLow) * vop;
  const ObservableOperator vopOp(vop, "Vop");

  const SmeIntegrator sme(vopOp, {hLow, hHigh}, s.gamma, config.dt, constants, 0.0, /*leakCheck=*/true);
  const CMatrix hLowW = sme.operatorToWorking(hLow);
  CMatrix rateW[2];
  for (int l = 0; l < 2; ++l) {
    const CMatrix& h = l == 0 ? hLow : hHigh;
    rateW[l] = sme.operatorToWorking(Complex(0.0, 1.0 / constants.hbar) * (h * vop - vop * h));
  }
  CMatrix parityLevels = CMatrix::Zero(m, m);
  for (int i = 0; i < m; ++i) parityLevels(i, i) = spectrum.parity[i];
  const CMatrix parityW = sme.operatorToWorking(parityLevels);

  CMatrix rho0 = CMatrix::Zero(m, m);
  switch (options.initial.kind) {
    case AtomInitialState::Kind::Ground:
      rho0(0, 0) = 1.0;
      break;
    case AtomInitialState::Kind::Superposition: {
      const int n = std::clamp(options.initial.count, 1, m - 2);
      CVector psi = CVector::Zero(m);
      psi.head(n).setConstant(1.0 / std::sqrt(static_cast<double>(n)));
      rho0 = psi * psi.adjoint();
      break;
    }
    case AtomInitialState::Kind::Mixture: {
      const int n = std::clamp(options.initial.count, 1, m - 2);
      for (int i = 0; i < n; ++i) rho0(i, i) = 1.0 / n;
      break;
    }
  }
  const CMatrix rhoW0 = sme.toWorking(rho0);

  auto levelIndex = [](LatticeLevel l) { return l == LatticeLevel::Low ? 0 : 1; };
  const double h = s.switchHysteresis;
  const bool switching = options.switching;

  EnsembleSpec<AtomTrajectory> spec;
  spec.initial = [&](std::size_t) {
    AtomTrajectory tr;
    tr.rhoW = rhoW0;
    tr.g = traceProduct(tr.rhoW, rateW[0]);
    if (switching) tr.level = switchRule(tr.g, LatticeLevel::Low, h);
    return tr;
  };
  spec.step = [&](AtomTrajectory& tr, double dW, double) {
    sme.step(tr.rhoW, dW, levelIndex(tr.level));
    tr.maxLeak = std::max(tr.maxLeak, sme.leak(tr.rhoW));
    ++tr.sinceSwitch;
    const double g = traceProduct(tr.rhoW, rateW[levelIndex(tr.level)]);
    tr.maxJump = std::max(tr.maxJump, std::abs(g - tr.g));
    tr.g = g;
    if (!switching) return;
    const LatticeLevel next = switchRule(g, tr.level, h);
    if (next != tr.level) {
      if (tr.switchedOnce) {
        const double dwell = static_cast<double>(tr.sinceSwitch);
        tr.minDwell = std::isnan(tr.minDwell) ? dwell : std::min(tr.minDwell, dwell);
      }
      tr.switchedOnce = true;
      tr.sinceSwitch = 0;
      tr.switches += 1.0;
      tr.level = next;
      // The indicator is evaluated with the Hamiltonian now in force.
      tr.g = traceProduct(tr.rhoW, rateW[levelIndex(tr.level)]);
    }
  };
  auto pop = [&sme](int n) {
    return [&sme, n](const AtomTrajectory& tr) { return sme.basisPopulation(tr.rhoW, n); };
  };
  spec.observables = {
      {"energy", [&](const AtomTrajectory& tr) { return traceProduct(tr.rhoW, hLowW); }},
      {"ground", pop(0)},
      {"excited", pop(1)},
      {"parity", [&](const AtomTrajectory& tr) { return traceProduct(tr.rhoW, parityW); }},
      {"purity", [](const AtomTrajectory& tr) { return tr.rhoW.squaredNorm(); }},
  };
  spec.finals = {
      {"ground", pop(0)},
      {"excited", pop(1)},
      {"purity", [](const AtomTrajectory& tr) { return tr.rhoW.squaredNorm(); }},
      {"switches", [](const AtomTrajectory& tr) { return tr.switches; }},
      {"minDwell", [](const AtomTrajectory& tr) { return tr.minDwell; }},
      {"maxJump", [](const AtomTrajectory& tr) { return tr.maxJump; }},
      {"leak", [](const AtomTrajectory& tr) { return tr.maxLeak; }},
  };

  const EnsembleResult r = runEnsemble(spec, config, options.ensemble);
  CoolingOutcome out;
  out.times = r.times;
  out.energy = r.curve("energy");
  out.groundPop = r.curve("ground");
  out.excitedPop = r.curve("excited");
  out.parityCurve = r.curve("parity");
  out.purityCurve = r.curve("purity");
  out.finalPurity = r.final("purity");
  out.switches = r.final("switches");
  out.minDwellSteps = r.final("minDwell");
  out.maxIndicatorStep = r.final("maxJump");
  out.maxLeak = r.final("leak");
  out.initialParity = traceProduct(rhoW0, parityW);
  out.levelEnergies = spectrum.energies.head(m);
  out.levelParity.assign(spectrum.parity.begin(), spectrum.parity.begin() + m);
  const auto& g = r.final("ground");
  const auto& e = r.final("excited");
  std::size_t counts[3] = {0, 0, 0};
  for (std::size_t i = 0; i < g.size(); ++i) {
    OutcomeLabel l = OutcomeLabel::Other;
    if (g[i] > 0.9) {
      l = OutcomeLabel::Ground;
    } else if (e[i] > 0.9) {
      l = OutcomeLabel::FirstExcited;
    }
    ++counts[static_cast<int>(l)];
    out.labels.push_back(l);
  }
  const double n = static_cast<double>(g.size());
  out.groundFraction = counts[0] / n;
  out.excitedFraction = counts[1] / n;
  out.otherFraction = counts[2] / n;
  return out;
}

}  // namespace qfc
