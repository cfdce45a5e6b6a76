#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "oracles.hpp"
#include "qfc/adaptive.hpp"
#include "qfc/stochastic.hpp"

using namespace qfc;

using oracle::correlation;
using oracle::Moments;
using oracle::moments;

TEST(SplitMix, ReferenceOutputs) {
  // First outputs of the reference SplitMix64 sequence seeded with 0 and 1234567.
  EXPECT_EQ(splitmix64(0), 0xE220A8397B1DCDAFULL);
  EXPECT_EQ(splitmix64(1234567), 0x599ED017FB08FC85ULL);
}

TEST(CounterRng, CounterAddressable) {
  CounterRng a(42);
  std::vector<double> first;
  for (int i = 0; i < 10; ++i) first.push_back(a.normal());
  CounterRng b(42, 7);
  EXPECT_EQ(b.normal(), first[7]);
  EXPECT_EQ(b.normal(), first[8]);
  CounterRng c(42, 4);
  EXPECT_EQ(c.normal(), first[4]);
  CounterRng u(9);
  for (int i = 0; i < 100000; ++i) {
    const double x = u.uniform();
    ASSERT_GT(x, 0.0);
    ASSERT_LE(x, 1.0);
  }
}

TEST(NoiseStream, MeanAndVarianceAtOneMillion) {
  const double dt = 1e-3;
  const std::size_t n = 1000000;
  NoiseStream s(2024, dt);
  const Moments m = moments(wienerIncrements(s, n));
  EXPECT_LE(std::abs(m.mean), 4.0 * std::sqrt(dt / n));
  EXPECT_LE(std::abs(m.var / dt - 1.0), 0.02);
}

TEST(NoiseStream, NeighbouringSeedsAreUncorrelated) {
  const std::size_t n = 1000000;
  NoiseStream a(77, 1e-3), b(78, 1e-3);
  EXPECT_LE(std::abs(correlation(wienerIncrements(a, n), wienerIncrements(b, n))), 0.01);
  NoiseStream c(deriveSeed(5, 0), 1e-3), d(deriveSeed(5, 1), 1e-3);
  EXPECT_LE(std::abs(correlation(wienerIncrements(c, n), wienerIncrements(d, n))), 0.01);
}

TEST(NoiseStream, SerialIndependenceAndGaussianTails) {
  const std::size_t n = 1000000;
  NoiseStream s(3, 1.0);
  const auto v = wienerIncrements(s, n);
  std::vector<double> lead(v.begin() + 1, v.end()), lag(v.begin(), v.end() - 1);
  EXPECT_LE(std::abs(correlation(lead, lag)), 0.01);
  double k4 = 0.0;
  std::size_t beyond2 = 0;
  for (double x : v) {
    k4 += x * x * x * x;
    if (std::abs(x) > 2.0) ++beyond2;
  }
  EXPECT_NEAR(k4 / n, 3.0, 0.05);
  // P(|Z| > 2) = 0.0455
  EXPECT_NEAR(static_cast<double>(beyond2) / n, 0.04550026, 5.0 * std::sqrt(0.0455 / n));
}

TEST(NoiseStream, SameSeedSameSequence) {
  NoiseStream a(11, 0.01), b(11, 0.01);
  EXPECT_EQ(wienerIncrements(a, 1000), wienerIncrements(b, 1000));
}

TEST(NoiseStream, SubdivisionSamplesTheFinerPath) {
  const double dt = 0.01;
  NoiseStream coarse(99, dt, 2), fine(99, dt / 2, 1);
  for (int i = 0; i < 1000; ++i) {
    const double a = coarse.next();
    const double b = fine.next() + fine.next();
    ASSERT_NEAR(a, b, 1e-15);
  }
}

TEST(Record, Synthesis) {
  EXPECT_EQ(synthesizeRecord(0.0, 1.0, 0.0, 0.1), 0.0);
  EXPECT_NEAR(synthesizeRecord(1.0, 4.0, 0.0, 0.01), 0.01, 1e-16);
  try {
    synthesizeRecord(0.0, 0.0, 0.1, 0.1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonPositiveGamma);
  }
  const double dt = 0.01, gamma = 4.0;
  NoiseStream s(5, dt);
  std::vector<double> dr;
  for (int i = 0; i < 100000; ++i) dr.push_back(synthesizeRecord(0.3, gamma, s.next(), dt));
  EXPECT_NEAR(moments(dr).var / (dt / gamma), 1.0, 0.02);
}

TEST(TrajectoryConfig, Validation) {
  EXPECT_THROW((TrajectoryConfig{0.0, 1.0, 1, 1}.validate()), Error);
  EXPECT_THROW((TrajectoryConfig{0.1, 0.05, 1, 1}.validate()), Error);
  EXPECT_THROW((TrajectoryConfig{0.1, 1.0, 1, 0}.validate()), Error);
  EXPECT_EQ((TrajectoryConfig{0.1, 1.0, 1, 1}.steps()), 10u);
}

namespace {

// Brownian motion: W(t) has mean 0 and variance t.
EnsembleSpec<double> brownian() {
  EnsembleSpec<double> spec;
  spec.initial = [](std::size_t) { return 0.0; };
  spec.step = [](double& w, double dW, double) { w += dW; };
  spec.observables = {{"w", [](const double& w) { return w; }}, {"w2", [](const double& w) { return w * w; }}};
  spec.finals = {{"w", [](const double& w) { return w; }}};
  return spec;
}

}  // namespace

TEST(Ensemble, SingleTrajectoryIsADirectLoop) {
  const TrajectoryConfig c{0.01, 1.0, 8, 1};
  const EnsembleResult r = runEnsemble(brownian(), c);
  NoiseStream s(deriveSeed(8, 0), 0.01);
  double w = 0.0;
  for (int k = 0; k < 100; ++k) w += s.next();
  EXPECT_EQ(r.final("w")[0], w);
  EXPECT_EQ(r.curve("w").mean.back(), w);
  EXPECT_EQ(r.times.size(), 101u);
}

TEST(Ensemble, BrownianVarianceAndWorkerInvariance) {
  const TrajectoryConfig c{0.01, 2.0, 3, 4000};
  EnsembleOptions one, many;
  one.sampleEvery = many.sampleEvery = 20;
  many.workers = 4;
  many.batchSize = 333;
  const EnsembleResult a = runEnsemble(brownian(), c, one);
  const EnsembleResult b = runEnsemble(brownian(), c, many);
  EXPECT_EQ(a.curve("w").mean, b.curve("w").mean);
  EXPECT_EQ(a.curve("w").variance, b.curve("w").variance);
  EXPECT_EQ(a.final("w"), b.final("w"));
  for (std::size_t s = 1; s < a.times.size(); ++s) {
    const double t = a.times[s];
    EXPECT_LE(std::abs(a.curve("w").mean[s]), 4.0 * a.curve("w").stderr_[s]);
    // Var of W^2 is 2 t^2.
    EXPECT_NEAR(a.curve("w2").mean[s], t, 4.0 * std::sqrt(2.0 * t * t / c.nTrajectories));
  }
  EXPECT_EQ(a.times.back(), 2.0);
}

TEST(Ensemble, FailureCarriesLowestIndex) {
  EnsembleSpec<double> spec = brownian();
  spec.initial = [](std::size_t i) { return static_cast<double>(i); };
  spec.step = [](double& w, double, double) {
    if (w == 7.0 || w == 300.0) throw Error(ErrorCode::TruncationLeak, "boom");
  };
  EnsembleOptions o;
  o.workers = 3;
  o.batchSize = 64;
  try {
    runEnsemble(spec, TrajectoryConfig{0.1, 1.0, 1, 500}, o);
    FAIL();
  } catch (const TrajectoryError& e) {
    EXPECT_EQ(e.trajectory(), 7u);
    EXPECT_EQ(e.innerCode(), ErrorCode::TruncationLeak);
    EXPECT_EQ(e.code(), ErrorCode::TrajectoryFailure);
  }
}

TEST(Ensemble, ConditionedMeanIsAMartingale) {
  // <sigma_z> under sigma_z measurement with no Hamiltonian.
  const double gamma = 1.0, dt = 1e-3;
  EnsembleSpec<DensityMatrix> spec;
  const DensityMatrix rho0 = qubitFromBloch({0.3, 0.0, 0.4});
  const ObservableOperator zero(CMatrix::Zero(2, 2), "0");
  spec.initial = [&](std::size_t) { return rho0; };
  spec.step = [&](DensityMatrix& r, double dW, double) { r = smeStep(r, zero, pauliZ(), gamma, dW, dt).rho; };
  spec.observables = {{"z", [](const DensityMatrix& r) { return blochVector(r).z; }}};
  EnsembleOptions o;
  o.sampleEvery = 100;
  const EnsembleResult res = runEnsemble(spec, TrajectoryConfig{dt, 2.0, 17, 2000}, o);
  for (std::size_t s = 1; s < res.times.size(); ++s) {
    EXPECT_LE(std::abs(res.curve("z").mean[s] - 0.4), 3.0 * res.curve("z").stderr_[s] + 1e-12);
  }
}

TEST(Ensemble, ParallelMapOrdered) {
  const auto v = parallelMap<int>(100, 4, [](std::size_t i) { return static_cast<int>(i * i); });
  for (int i = 0; i < 100; ++i) EXPECT_EQ(v[i], i * i);
}

TEST(SampleStats, MatchesDirectFormula) {
  const std::vector<double> v = {1.0, 2.0, 4.0, 7.0};
  const SampleStats s = sampleStats(v);
  EXPECT_NEAR(s.mean, 3.5, 1e-15);
  EXPECT_NEAR(s.variance, 7.0, 1e-14);  // (6.25 + 2.25 + 0.25 + 12.25) / 3
  EXPECT_NEAR(s.stderr_, std::sqrt(7.0 / 4.0), 1e-14);
}
