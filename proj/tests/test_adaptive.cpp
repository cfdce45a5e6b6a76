#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "qfc/adaptive.hpp"

using namespace qfc;

using oracle::coherentVector;

TEST(Helstrom, TrivialCases) {
  const DensityMatrix a = qubitFromBloch({0.3, 0.1, 0.2});
  EXPECT_NEAR(helstromBound(a, a, 0.5), 0.5, 1e-14);
  EXPECT_NEAR(helstromBound(a, a, 0.2), 0.2, 1e-14);
  const DensityMatrix up = qubitFromBloch({0, 0, 1}), down = qubitFromBloch({0, 0, -1});
  EXPECT_NEAR(helstromBound(up, down, 0.5), 0.0, 1e-14);
  EXPECT_NEAR(helstromBound(up, down, 0.9), 0.0, 1e-14);
  EXPECT_THROW(helstromBound(up, down, 1.0), Error);
}

TEST(Helstrom, VacuumVersusCoherentMatchesMeasurementSweep) {
  const int dim = 40;
  for (double p1 : {0.5, 0.3}) {
    for (double n : {1.0, 0.2}) {
      const CVector vac = coherentVector(dim, 0.0), coh = coherentVector(dim, std::sqrt(n));
      const double bound = helstromBound(DensityMatrix::pure(vac), DensityMatrix::pure(coh), p1);
      EXPECT_NEAR(bound, oracle::bruteForceDiscriminationError(vac, coh, p1), 1e-6) << "n = " << n << " p1 = " << p1;
    }
  }
}

TEST(Dolinar, AmplitudeFavoursTheLikelierHypothesis) {
  DolinarConfig cfg;
  cfg.alpha = 1.0;
  for (double l : {-2.0, -0.3, 0.4, 3.0}) {
    const double beta = dolinarAmplitude(cfg, l, 0.5);
    ASSERT_TRUE(std::isfinite(beta));
    const double rate0 = beta * beta, rate1 = (cfg.alpha + beta) * (cfg.alpha + beta);
    // The favoured hypothesis sees the dimmer field, so a click is news.
    if (l > 0.0) EXPECT_LT(rate1, rate0); else EXPECT_LT(rate0, rate1);
  }
}

TEST(Dolinar, NoPulseGivesCoinFlip) {
  DolinarConfig cfg;
  cfg.alpha = 0.0;
  const ErrorEstimate e = dolinarSimulate(cfg, 31, 20000);
  EXPECT_NEAR(e.errorRate, 0.5, 3.0 * std::sqrt(0.25 / 20000));
}

TEST(Dolinar, SegmentTooCoarse) {
  DolinarConfig cfg;
  cfg.alpha = 4.0;
  cfg.nSegments = 100;
  try {
    dolinarSimulate(cfg, 1, 10);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SegmentTooCoarse);
  }
}

TEST(Dolinar, ReachesHelstromAtModerateTrials) {
  DolinarConfig cfg;
  cfg.alpha = std::sqrt(0.5);
  const ErrorEstimate e = dolinarSimulate(cfg, 8, 20000);
  const double bound = helstromBound(DensityMatrix::pure(coherentVector(30, 0.0)),
                                     DensityMatrix::pure(coherentVector(30, cfg.alpha)), 0.5);
  // Two pure states: (1 - sqrt(1 - 4 p0 p1 |<a|b>|^2)) / 2 with |<a|b>|^2 = e^{-n}.
  EXPECT_NEAR(bound, 0.5 * (1.0 - std::sqrt(1.0 - std::exp(-0.5))), 1e-12);
  EXPECT_NEAR(e.errorRate, bound, 3.0 * e.stderr_);
}

TEST(Dolinar, WorkerCountDoesNotChangeResult) {
  DolinarConfig cfg;
  cfg.alpha = 1.0;
  cfg.nSegments = 50;
  const ErrorEstimate a = dolinarSimulate(cfg, 3, 3000, 1), b = dolinarSimulate(cfg, 3, 3000, 4);
  EXPECT_EQ(a.errorRate, b.errorRate);
}

TEST(StaticReceiver, DirectDetectionAndOptimum) {
  DolinarConfig cfg;
  cfg.alpha = std::sqrt(0.5);
  // b = 0: any click means "pulse"; errors only when the pulse yields no click.
  EXPECT_NEAR(staticReceiverError(cfg, 0.0), 0.5 * std::exp(-0.5), 1e-12);
  const StaticReceiver best = optimalStaticReceiver(cfg);
  EXPECT_LE(best.error, staticReceiverError(cfg, 0.0));
  EXPECT_LE(best.error, staticReceiverError(cfg, best.b + 1e-3) + 1e-12);
  EXPECT_LE(best.error, staticReceiverError(cfg, best.b - 1e-3) + 1e-12);
  const double bound = 0.5 * (1.0 - std::sqrt(1.0 - std::exp(-0.5)));
  EXPECT_GT(best.error, bound);
  const ErrorEstimate sim = staticReceiverSimulate(cfg, best.b, 12, 40000);
  EXPECT_NEAR(sim.errorRate, best.error, 3.0 * sim.stderr_);
}

TEST(Qubit, RotateIntoEquator) {
  const DensityMatrix mixed = DensityMatrix::maximallyMixed(2);
  EXPECT_LE((rotateIntoEquator(mixed).matrix() - mixed.matrix()).cwiseAbs().maxCoeff(), 1e-15);
  const BlochVector r = blochVector(rotateIntoEquator(qubitFromBloch({0.3, 0.2, 0.4})));
  EXPECT_NEAR(r.x, 0.5, 1e-14);
  EXPECT_NEAR(r.y, 0.2, 1e-14);
  EXPECT_NEAR(r.z, 0.0, 1e-14);
}

TEST(Qubit, FitDecayRecoversExponent) {
  std::vector<double> t, v;
  for (int i = 0; i <= 100; ++i) {
    t.push_back(0.1 * i);
    v.push_back(3.0 * std::exp(-0.7 * t.back()));
  }
  const DecayFit f = fitDecay(t, v, 2.0, 8.0);
  EXPECT_NEAR(f.exponent, 0.7, 1e-12);
  EXPECT_LE(f.stderr_, 1e-10);
  EXPECT_NEAR(decayExponent(t, v, 0.0, 10.0), 0.7, 1e-12);
}

TEST(Purification, FixedPolicyIsUnbiasedFromMixedState) {
  const double dt = 1e-3, gamma = 1.0;
  const std::size_t n = 2000;
  std::vector<double> z(n);
  for (std::size_t i = 0; i < n; ++i) {
    NoiseStream noise(deriveSeed(40, i), dt);
    DensityMatrix rho = DensityMatrix::maximallyMixed(2);
    for (int k = 0; k < 1000; ++k) rho = rapidPurifyStep(rho, QubitFeedbackPolicy::fixed(), gamma, noise.next(), dt);
    z[i] = blochVector(rho).z;
  }
  const SampleStats s = sampleStats(z);
  EXPECT_LE(std::abs(s.mean), 3.0 * s.stderr_);
  EXPECT_GT(s.variance, 0.1);  // it does move
}

TEST(Purification, InfiniteRateEntropyIsDeterministic) {
  // The residual spread under the adaptive policy is O(dt).
  auto ratios = [](double dt) {
    PurificationOptions o;
    o.requireTarget = false;
    o.ensemble.sampleEvery = static_cast<std::size_t>(std::lround(0.1 / dt));
    const TrajectoryConfig c{dt, 2.0, 9, 300};
    const PurificationStats fixed = purificationExperiment(QubitFeedbackPolicy::fixed(), 1.0, c, o);
    const PurificationStats rapid = purificationExperiment(QubitFeedbackPolicy::rapid(), 1.0, c, o);
    EXPECT_LT(rapid.avgEntropy.back(), fixed.avgEntropy.back());
    std::vector<double> r;
    for (std::size_t s = 1; s < fixed.times.size(); ++s) {
      r.push_back(rapid.entropyVariance[s] / fixed.entropyVariance[s]);
    }
    return r;
  };
  const std::vector<double> coarse = ratios(1e-3), fine = ratios(2.5e-4);
  for (std::size_t s = 0; s < fine.size(); ++s) {
    EXPECT_LE(fine[s], 0.01) << "sample " << s;
    EXPECT_LT(fine[s], 0.5 * coarse[s]) << "sample " << s;
  }
}

TEST(Purification, CurvesCollapseUnderGammaRescaling) {
  PurificationOptions o;
  o.requireTarget = false;
  o.ensemble.sampleEvery = 50;
  // gamma dt and gamma T are the same, so the same seed gives the same
  // dimensionless paths.
  const PurificationStats a =
      purificationExperiment(QubitFeedbackPolicy::rapid(), 1.0, TrajectoryConfig{2e-3, 4.0, 5, 200}, o);
  const PurificationStats b =
      purificationExperiment(QubitFeedbackPolicy::rapid(), 2.5, TrajectoryConfig{8e-4, 1.6, 5, 200}, o);
  ASSERT_EQ(a.times.size(), b.times.size());
  double worst = 0.0;
  for (std::size_t s = 0; s < a.times.size(); ++s) {
    EXPECT_NEAR(a.times[s], 2.5 * b.times[s], 1e-9);
    worst = std::max(worst, std::abs(a.avgEntropy[s] - b.avgEntropy[s]) / a.avgEntropy[s]);
  }
  EXPECT_LE(worst, 0.02);
}

TEST(Purification, TargetPurityMissesAreReported) {
  PurificationOptions o;
  o.targetPurity = 0.999999;
  try {
    purificationExperiment(QubitFeedbackPolicy::fixed(), 1.0, TrajectoryConfig{1e-2, 0.5, 2, 20}, o);
    FAIL();
  } catch (const TargetNotReachedError& e) {
    EXPECT_EQ(e.code(), ErrorCode::TargetNotReached);
    EXPECT_GT(e.missed(), 0u);
  }
}
