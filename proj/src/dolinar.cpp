#include <algorithm>
#include <cmath>
#include <limits>

#include "qfc/adaptive.hpp"

namespace qfc {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Posterior probability of hypothesis 1 from log-odds ln(P1/P0).
double posterior(double logOdds) {
  if (logOdds == kInf) return 1.0;
  if (logOdds == -kInf) return 0.0;
  return 1.0 / (1.0 + std::exp(-logOdds));
}

int decide(double logOdds, double prior) {
  if (logOdds > 0.0) return 1;
  if (logOdds < 0.0) return 0;
  return prior > 0.5 ? 1 : 0;
}

double logPoisson(int n, double mu) {
  if (mu == 0.0) return n == 0 ? 0.0 : -kInf;
  return n * std::log(mu) - mu - std::lgamma(n + 1.0);
}

ErrorEstimate summarize(const std::vector<char>& wrong) {
  ErrorEstimate e;
  e.trials = wrong.size();
  std::size_t k = 0;
  for (char w : wrong) k += static_cast<std::size_t>(w);
  e.errorRate = static_cast<double>(k) / static_cast<double>(e.trials);
  e.stderr_ = std::sqrt(e.errorRate * (1.0 - e.errorRate) / static_cast<double>(e.trials));
  return e;
}

}  // namespace

double helstromBound(const DensityMatrix& rho0, const DensityMatrix& rho1, double p1) {
  if (rho0.dim() != rho1.dim()) throw Error(ErrorCode::DimensionMismatch, "helstromBound: dimensions differ");
  if (!(p1 > 0.0 && p1 < 1.0)) throw Error(ErrorCode::InvalidValue, "prior must lie in (0, 1)");
  const CMatrix gamma = p1 * rho1.matrix() - (1.0 - p1) * rho0.matrix();
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (gamma + gamma.adjoint()), Eigen::EigenvaluesOnly);
  return 0.5 * (1.0 - es.eigenvalues().cwiseAbs().sum());
}

void DolinarConfig::validate() const {
  if (nSegments < 1) throw Error(ErrorCode::InvalidValue, "nSegments must be >= 1");
  if (!(prior > 0.0 && prior < 1.0)) throw Error(ErrorCode::InvalidValue, "prior must lie in (0, 1)");
  if (!(pulseDuration > 0.0)) throw Error(ErrorCode::InvalidValue, "pulse duration must be positive");
  if (!std::isfinite(alpha)) throw Error(ErrorCode::InvalidValue, "alpha must be finite");
}

double dolinarAmplitude(const DolinarConfig& cfg, double logOdds, double remaining) {
  const double s1 = cfg.alpha / std::sqrt(cfg.pulseDuration);
  const double s[2] = {0.0, s1};
  const double rate = s1 * s1;  // (s1 - s0)^2
  const int fav = decide(logOdds, cfg.prior);
  const double p = posterior(logOdds);
  // Under this feedback q = p(1 - p) decays as exp(-rate t) and detections
  // only swap the favoured hypothesis; evaluate at the interval midpoint.
  const double q = p * (1.0 - p) * std::exp(-0.5 * rate * remaining);
  const double e = 0.5 * (1.0 - std::sqrt(std::max(0.0, 1.0 - 4.0 * q)));
  const double ratio = e / (1.0 - e);  // unfavoured / favoured odds
  if (ratio >= 1.0) return -s[fav];     // only reachable when rate * remaining == 0
  return -s[fav] + (s[1 - fav] - s[fav]) * ratio / (1.0 - ratio);
}

ErrorEstimate dolinarSimulate(const DolinarConfig& cfg, std::uint64_t seed, std::size_t trials,
                              unsigned workers) {
  cfg.validate();
  if (trials < 1) throw Error(ErrorCode::InvalidValue, "need at least one trial");
  if (cfg.alpha * cfg.alpha / cfg.nSegments > 0.1) {
    throw Error(ErrorCode::SegmentTooCoarse, "mean photon number per segment exceeds 0.1");
  }
  const double s1 = cfg.alpha / std::sqrt(cfg.pulseDuration);
  const double tau = cfg.pulseDuration / cfg.nSegments;
  const double priorLogOdds = std::log(cfg.prior / (1.0 - cfg.prior));

  const std::vector<char> wrong = parallelMap<char>(trials, workers, [&](std::size_t i) -> char {
    CounterRng rng(deriveSeed(seed, i));
    const int truth = rng.uniform() <= cfg.prior ? 1 : 0;
    const double s[2] = {0.0, s1};
    double l = priorLogOdds;
    for (int seg = 0; seg < cfg.nSegments; ++seg) {
      double remaining = tau;
      while (remaining > 0.0) {
        const double beta = dolinarAmplitude(cfg, l, remaining);
        const double l0 = (s[0] + beta) * (s[0] + beta);
        const double l1 = (s[1] + beta) * (s[1] + beta);
        const double lt = truth ? l1 : l0;
        const double wait = lt > 0.0 ? -std::log(rng.uniform()) / lt : kInf;
        const double elapsed = std::min(wait, remaining);
        if (std::isfinite(l)) l -= (l1 - l0) * elapsed;
        remaining -= elapsed;
        if (wait < kInf && elapsed == wait && remaining > 0.0) {
          // Detection.
          if (l0 == 0.0) {
            l = kInf;
          } else if (l1 == 0.0) {
            l = -kInf;
          } else if (std::isfinite(l)) {
            l += std::log(l1 / l0);
          }
        } else {
          remaining = 0.0;
        }
      }
    }
    return static_cast<char>(decide(l, cfg.prior) != truth);
  });
  return summarize(wrong);
}

double staticReceiverError(const DolinarConfig& cfg, double b) {
  cfg.validate();
  const double mu0 = b * b;
  const double mu1 = (cfg.alpha + b) * (cfg.alpha + b);
  const double p1 = cfg.prior, p0 = 1.0 - p1;
  const double muMax = std::max(mu0, mu1);
  const int nMax = static_cast<int>(muMax + 12.0 * std::sqrt(muMax + 1.0) + 30.0);
  double err = 0.0;
  for (int n = 0; n <= nMax; ++n) {
    const double a0 = p0 * std::exp(logPoisson(n, mu0));
    const double a1 = p1 * std::exp(logPoisson(n, mu1));
    err += std::min(a0, a1);
  }
  return err;
}

StaticReceiver optimalStaticReceiver(const DolinarConfig& cfg) {
  cfg.validate();
  const double a = std::abs(cfg.alpha);
  const double lo = -a - 3.0, hi = 3.0;
  StaticReceiver best{lo, staticReceiverError(cfg, lo)};
  const int n = 4000;
  for (int i = 1; i <= n; ++i) {
    const double b = lo + (hi - lo) * i / n;
    const double e = staticReceiverError(cfg, b);
    if (e < best.error) best = {b, e};
  }
  // The objective is piecewise smooth; refine locally by golden section.
  const double h = (hi - lo) / n;
  const double invPhi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x0 = best.b - h, x1 = best.b + h;
  for (int it = 0; it < 80; ++it) {
    const double c = x1 - invPhi * (x1 - x0), d = x0 + invPhi * (x1 - x0);
    if (staticReceiverError(cfg, c) < staticReceiverError(cfg, d)) {
      x1 = d;
    } else {
      x0 = c;
    }
  }
  const double mid = 0.5 * (x0 + x1);
  const double e = staticReceiverError(cfg, mid);
  if (e < best.error) best = {mid, e};
  return best;
}

ErrorEstimate staticReceiverSimulate(const DolinarConfig& cfg, double b, std::uint64_t seed,
                                     std::size_t trials, unsigned workers) {
  cfg.validate();
  const double mu[2] = {b * b, (cfg.alpha + b) * (cfg.alpha + b)};
  const double p1 = cfg.prior;
  const std::vector<char> wrong = parallelMap<char>(trials, workers, [&](std::size_t i) -> char {
    CounterRng rng(deriveSeed(seed, i));
    const int truth = rng.uniform() <= p1 ? 1 : 0;
    // Poisson count by inversion.
    const double u = rng.uniform();
    int n = 0;
    double pn = std::exp(-mu[truth]), cdf = pn;
    while (u > cdf && n < 100000) {
      ++n;
      pn *= mu[truth] / n;
      cdf += pn;
    }
    const double w1 = std::log(p1) + logPoisson(n, mu[1]);
    const double w0 = std::log(1.0 - p1) + logPoisson(n, mu[0]);
    const int guess = w1 > w0 ? 1 : 0;
    return static_cast<char>(guess != truth);
  });
  return summarize(wrong);
}

}  // namespace qfc
