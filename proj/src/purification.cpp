#include <algorithm>
#include <cmath>

#include "qfc/adaptive.hpp"

namespace qfc {
namespace {

const ObservableOperator& sigmaZ() {
  static const ObservableOperator z = pauliZ();
  return z;
}

const ObservableOperator& zeroQubit() {
  static const ObservableOperator h(CMatrix::Zero(2, 2), "0");
  return h;
}

struct QubitTrajectory {
  DensityMatrix rho;
  double previousPurity;
  double hit;
};

}  // namespace

void QubitFeedbackPolicy::validate() const {
  if (kind == Kind::RapidPurification && !(feedbackRate > 0.0)) {
    throw Error(ErrorCode::InvalidValue, "feedback rate must be positive or infinite");
  }
}

double BlochVector::length() const { return std::sqrt(x * x + y * y + z * z); }

BlochVector blochVector(const DensityMatrix& rho) {
  if (rho.dim() != 2) throw Error(ErrorCode::DimensionMismatch, "Bloch vector needs a qubit");
  const CMatrix& m = rho.matrix();
  return {2.0 * m(0, 1).real(), -2.0 * m(0, 1).imag(), (m(0, 0) - m(1, 1)).real()};
}

DensityMatrix qubitFromBloch(const BlochVector& r) {
  CMatrix m(2, 2);
  m << 0.5 * (1.0 + r.z), 0.5 * Complex(r.x, -r.y), 0.5 * Complex(r.x, r.y), 0.5 * (1.0 - r.z);
  return DensityMatrix(std::move(m));
}

DensityMatrix rotateIntoEquator(const DensityMatrix& rho) {
  const BlochVector b = blochVector(rho);
  if (b.x == 0.0 && b.z == 0.0) return rho;
  // R_y(phi): (x, z) -> (x cos + z sin, z cos - x sin); phi = atan2(z, x) zeroes z.
  const double phi = std::atan2(b.z, b.x);
  CMatrix u(2, 2);
  const double c = std::cos(0.5 * phi), s = std::sin(0.5 * phi);
  u << c, -s, s, c;
  CMatrix out = u * rho.matrix() * u.adjoint();
  out = 0.5 * (out + out.adjoint()).eval();
  return DensityMatrix::unchecked(std::move(out));
}

DensityMatrix rapidPurifyStep(const DensityMatrix& rho, const QubitFeedbackPolicy& policy, double gamma,
                              double dW, double dt, const PhysicalConstants& constants) {
  policy.validate();
  if (rho.dim() != 2) throw Error(ErrorCode::DimensionMismatch, "purification acts on a qubit");
  if (policy.kind == QubitFeedbackPolicy::Kind::Fixed) {
    return smeStep(rho, zeroQubit(), sigmaZ(), gamma, dW, dt, constants).rho;
  }
  if (policy.infiniteRate()) {
    return rotateIntoEquator(smeStep(rho, zeroQubit(), sigmaZ(), gamma, dW, dt, constants).rho);
  }
  // Finite rate: H = hbar u sigma_y / 2 with u the rate that would close the
  // angle to the equator in one step, clamped.
  const BlochVector b = blochVector(rho);
  double u = 0.0;
  if (b.x != 0.0 || b.z != 0.0) {
    u = std::clamp(std::atan2(b.z, b.x) / dt, -policy.feedbackRate, policy.feedbackRate);
  }
  const ObservableOperator h(0.5 * constants.hbar * u * pauliY().matrix(), "H_fb");
  return smeStep(rho, h, sigmaZ(), gamma, dW, dt, constants).rho;
}

DecayFit fitDecay(const std::vector<double>& times, const std::vector<double>& values, double tFrom,
                  double tTo) {
  std::vector<double> t, y;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < tFrom - 1e-12 || times[i] > tTo + 1e-12) continue;
    if (!(values[i] > 0.0)) throw Error(ErrorCode::InvalidValue, "log fit needs positive values");
    t.push_back(times[i]);
    y.push_back(std::log(values[i]));
  }
  const double n = static_cast<double>(t.size());
  if (t.size() < 3) throw Error(ErrorCode::InvalidValue, "log fit needs at least three points");
  double tm = 0.0, ym = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    tm += t[i] / n;
    ym += y[i] / n;
  }
  double stt = 0.0, sty = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    stt += (t[i] - tm) * (t[i] - tm);
    sty += (t[i] - tm) * (y[i] - ym);
  }
  const double slope = sty / stt;
  double rss = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double r = y[i] - ym - slope * (t[i] - tm);
    rss += r * r;
  }
  return {-slope, std::sqrt(rss / (n - 2.0) / stt)};
}

double decayExponent(const std::vector<double>& times, const std::vector<double>& values, double tFrom,
                     double tTo) {
  return fitDecay(times, values, tFrom, tTo).exponent;
}

PurificationStats purificationExperiment(const QubitFeedbackPolicy& policy, double gamma,
                                         const TrajectoryConfig& config,
                                         const PurificationOptions& options,
                                         const PhysicalConstants& constants) {
  policy.validate();
  config.validate();
  if (!(gamma > 0.0)) throw Error(ErrorCode::NonPositiveGamma, "gamma must be positive");
  const double target = options.targetPurity.value_or(2.0);
  if (options.targetPurity && !(target > 0.5 && target < 1.0)) {
    throw Error(ErrorCode::InvalidValue, "target purity must lie in (0.5, 1)");
  }
  const double dt = config.dt;

  EnsembleSpec<QubitTrajectory> spec;
  spec.initial = [](std::size_t) {
    return QubitTrajectory{DensityMatrix::maximallyMixed(2), 0.5, std::nan("")};
  };
  spec.step = [&](QubitTrajectory& s, double dW, double t) {
    s.rho = rapidPurifyStep(s.rho, policy, gamma, dW, dt, constants);
    const double p = purity(s.rho);
    if (std::isnan(s.hit) && p >= target) {
      const double f = (target - s.previousPurity) / (p - s.previousPurity);
      s.hit = t + dt * std::clamp(f, 0.0, 1.0);
    }
    s.previousPurity = p;
  };
  spec.observables = {
      {"entropy", [](const QubitTrajectory& s) { return vonNeumannEntropy(s.rho); }},
      {"impurity", [](const QubitTrajectory& s) { return 1.0 - purity(s.rho); }},
  };
  spec.finals = {
      {"hit", [](const QubitTrajectory& s) { return s.hit; }},
      {"entropy", [](const QubitTrajectory& s) { return vonNeumannEntropy(s.rho); }},
  };

  const EnsembleResult r = runEnsemble(spec, config, options.ensemble);
  PurificationStats out;
  out.times = r.times;
  const CurveStats& s = r.curve("entropy");
  const CurveStats& im = r.curve("impurity");
  out.avgEntropy = s.mean;
  out.entropyStderr = s.stderr_;
  out.entropyVariance = s.variance;
  out.avgImpurity = im.mean;
  out.impurityStderr = im.stderr_;
  for (double v : im.mean) out.avgLogImpurity.push_back(std::log(v));
  const double tEnd = out.times.back();
  const auto [from, to] = options.fitWindow.value_or(std::pair{0.5 * tEnd, tEnd});
  if (!(from >= 0.0 && to > from && to <= tEnd + 1e-9)) {
    throw Error(ErrorCode::InvalidValue, "fit window must lie inside the run");
  }
  const DecayFit fe = fitDecay(out.times, out.avgEntropy, from, to);
  const DecayFit fi = fitDecay(out.times, out.avgImpurity, from, to);
  out.entropyExponent = fe.exponent;
  out.entropyExponentStderr = fe.stderr_;
  out.impurityExponent = fi.exponent;
  out.impurityExponentStderr = fi.stderr_;
  out.finalEntropy = r.final("entropy");
  if (options.targetPurity) {
    out.hittingTimes = r.final("hit");
    out.missed = static_cast<std::size_t>(
        std::count_if(out.hittingTimes.begin(), out.hittingTimes.end(), [](double h) { return std::isnan(h); }));
    if (out.missed > 0 && options.requireTarget) {
      throw TargetNotReachedError(out.missed, out.hittingTimes.size());
    }
  }
  return out;
}

}  // namespace qfc
