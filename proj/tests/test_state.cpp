#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "qfc/state.hpp"

using namespace qfc;

namespace {

template <class F>
ErrorCode codeOf(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::TrajectoryFailure;
}

double tr(const CMatrix& rho, const CMatrix& op) { return (rho * op).trace().real(); }

}  // namespace

TEST(DensityMatrix, RejectsInvalidEntries) {
  CMatrix m(2, 2);
  m << 0.5, 0.1, 0.2, 0.5;
  EXPECT_EQ(codeOf([&] { DensityMatrix d(m); }), ErrorCode::InvalidState);
  m << 0.6, 0.0, 0.0, 0.6;
  EXPECT_EQ(codeOf([&] { DensityMatrix d(m); }), ErrorCode::InvalidState);
  m << 1.1, 0.0, 0.0, -0.1;
  EXPECT_EQ(codeOf([&] { DensityMatrix d(m); }), ErrorCode::InvalidState);
  // Tiny negative eigenvalue inside the positivity tolerance is accepted.
  m << 1.0 + 5e-9, 0.0, 0.0, -5e-9;
  EXPECT_NO_THROW(DensityMatrix d(m));
}

TEST(DensityMatrix, PureAndMixedConstructors) {
  CVector psi(3);
  psi << 1.0, Complex(0.0, 2.0), 2.0;
  const DensityMatrix p = DensityMatrix::pure(psi);
  EXPECT_NEAR(p.matrix().trace().real(), 1.0, 1e-15);
  EXPECT_NEAR(purity(p), 1.0, 1e-14);
  EXPECT_NEAR(purity(DensityMatrix::maximallyMixed(4)), 0.25, 1e-15);
}

TEST(Expectation, FlagsComplexValues) {
  CMatrix m(2, 2);
  m << 0.5, Complex(0.0, 0.3), Complex(0.0, 0.3), 0.5;  // non-Hermitian coherence
  const DensityMatrix bad = DensityMatrix::unchecked(m);
  EXPECT_EQ(codeOf([&] { expectation(bad, pauliX()); }), ErrorCode::NonNegligibleImaginaryPart);
  EXPECT_NEAR(expectation(DensityMatrix::maximallyMixed(2), pauliZ()), 0.0, 1e-15);
}

TEST(Entropy, MatchesEigenvalueFormula) {
  for (double r : {0.0, 0.3, 0.9, 1.0 - 1e-9}) {
    const double th = 0.7, ph = 1.9;
    CMatrix m(2, 2);
    const double x = r * std::sin(th) * std::cos(ph), y = r * std::sin(th) * std::sin(ph), z = r * std::cos(th);
    m << 0.5 * (1 + z), 0.5 * Complex(x, -y), 0.5 * Complex(x, y), 0.5 * (1 - z);
    const double a = 0.5 * (1 + r), b = 0.5 * (1 - r);
    double expect = -a * std::log(a);
    if (b > 0) expect -= b * std::log(b);
    EXPECT_NEAR(vonNeumannEntropy(DensityMatrix(m)), expect, 1e-12) << "r = " << r;
  }
  CMatrix d = CMatrix::Zero(3, 3);
  d(0, 0) = 0.5;
  d(1, 1) = 0.3;
  d(2, 2) = 0.2;
  const double s = -(0.5 * std::log(0.5) + 0.3 * std::log(0.3) + 0.2 * std::log(0.2));
  EXPECT_NEAR(vonNeumannEntropy(DensityMatrix(d)), s, 1e-13);
  EXPECT_NEAR(vonNeumannEntropy(DensityMatrix::maximallyMixed(5)), std::log(5.0), 1e-13);
}

TEST(Entropy, QubitNearPurityKeepsRelativePrecision) {
  // Smallest eigenvalue 1e-12: closed form must not cancel to zero.
  const double l = 1e-12;
  CMatrix m(2, 2);
  // Rotated diag(1 - l, l): coherences carry the information.
  m << 0.5, 0.5 - l, 0.5 - l, 0.5;
  const double expect = -(1 - l) * std::log(1 - l) - l * std::log(l);
  EXPECT_NEAR(vonNeumannEntropy(DensityMatrix(m)) / expect, 1.0, 1e-3);
}

TEST(Entropy, UnitarilyInvariantAndConsistentWithPurity) {
  CMatrix g = CMatrix::Random(4, 4);
  const CMatrix U = Eigen::HouseholderQR<CMatrix>(g).householderQ();
  CMatrix d = CMatrix::Zero(4, 4);
  d.diagonal() << 0.4, 0.3, 0.2, 0.1;
  const DensityMatrix rho(d), rotated(U * d * U.adjoint());
  EXPECT_NEAR(vonNeumannEntropy(rotated), vonNeumannEntropy(rho), 1e-9);
  CVector psi = CVector::Random(4);
  const DensityMatrix pure = DensityMatrix::pure(psi);
  EXPECT_NEAR(purity(pure), 1.0, 1e-12);
  EXPECT_LE(vonNeumannEntropy(pure), 1e-8);
  EXPECT_LT(purity(rho), 1.0 - 1e-3);
  EXPECT_GT(vonNeumannEntropy(rho), 1e-8);
}

TEST(TraceDistance, QubitIsHalfBlochDistance) {
  auto q = [](double x, double y, double z) {
    CMatrix m(2, 2);
    m << 0.5 * (1 + z), 0.5 * Complex(x, -y), 0.5 * Complex(x, y), 0.5 * (1 - z);
    return m;
  };
  EXPECT_NEAR(traceDistance(q(0.3, 0.1, -0.2), q(-0.1, 0.4, 0.5)),
              0.5 * std::sqrt(0.16 + 0.09 + 0.49), 1e-13);
  EXPECT_NEAR(traceDistance(q(0, 0, 1), q(0, 0, -1)), 1.0, 1e-14);
}

TEST(Oscillator, CanonicalCommutatorAwayFromTruncation) {
  const FockBasis b{40, 2.0, 3.0};
  PhysicalConstants c;
  c.hbar = 0.7;
  const OscillatorOperators ops = buildOscillator(b, c);
  const CMatrix comm = ops.X.matrix() * ops.P.matrix() - ops.P.matrix() * ops.X.matrix();
  const int k = b.nMax - 2;
  const CMatrix expect = Complex(0, c.hbar) * CMatrix::Identity(k, k);
  EXPECT_LE((comm.topLeftCorner(k, k) - expect).cwiseAbs().maxCoeff(), 1e-9);
  // Ladder spectrum below the truncation edge.
  for (int n = 0; n < k; ++n) {
    EXPECT_NEAR(ops.H.matrix()(n, n).real(), c.hbar * b.omega * (n + 0.5), 1e-9);
  }
}

TEST(Oscillator, CoherentAndThermalMoments) {
  const FockBasis b{60, 1.0, 1.0};
  const auto ops = buildOscillator(b);
  const Complex alpha(1.2, -0.5);
  const DensityMatrix coh = coherentState(b, alpha);
  EXPECT_NEAR(expectation(coh, ops.X), std::sqrt(2.0) * alpha.real(), 1e-10);
  EXPECT_NEAR(expectation(coh, ops.P), std::sqrt(2.0) * alpha.imag(), 1e-10);
  for (double nbar : {1.5, 2.0}) {
    // Boltzmann weights p_n = nbar^n / (1 + nbar)^(n + 1), summed directly.
    double direct = 0.0;
    for (int n = 0; n < b.nMax; ++n) direct += n * std::pow(nbar, n) / std::pow(1.0 + nbar, n + 1);
    const DensityMatrix th = thermalState(b, nbar);
    EXPECT_NEAR(expectation(th, numberOperator(b)), nbar, 1e-6);
    EXPECT_NEAR(expectation(th, numberOperator(b)), direct, 1e-6);
  }
}

TEST(Oscillator, GaussianStateReproducesMoments) {
  const FockBasis b{50, 1.3, 0.8};
  const auto ops = buildOscillator(b);
  const Eigen::Vector2d mean(0.7, -0.4);
  // Squeezed, rotated, mixed: det well above hbar^2 / 4.
  Eigen::Matrix2d cov;
  cov << 0.9, 0.25, 0.25, 0.6;
  const DensityMatrix rho = gaussianState(b, mean, cov);
  const CMatrix& X = ops.X.matrix();
  const CMatrix& P = ops.P.matrix();
  const double mx = tr(rho.matrix(), X), mp = tr(rho.matrix(), P);
  EXPECT_NEAR(mx, mean(0), 1e-8);
  EXPECT_NEAR(mp, mean(1), 1e-8);
  EXPECT_NEAR(tr(rho.matrix(), X * X) - mx * mx, cov(0, 0), 1e-7);
  EXPECT_NEAR(tr(rho.matrix(), P * P) - mp * mp, cov(1, 1), 1e-7);
  EXPECT_NEAR(tr(rho.matrix(), 0.5 * (X * P + P * X)) - mx * mp, cov(0, 1), 1e-7);
  // Pure Gaussian: purity 1 / (2 sqrt(det) / hbar).
  EXPECT_NEAR(purity(rho), 0.5 / std::sqrt(cov.determinant()), 1e-7);

  Eigen::Matrix2d bad;
  bad << 0.1, 0.0, 0.0, 0.1;
  EXPECT_EQ(codeOf([&] { gaussianState(b, mean, bad); }), ErrorCode::InvalidState);
}

TEST(Grid, ParityOperatorAndSymmetry) {
  const GridBasis g{-2.0, 2.0, 32, 1.0};
  const ObservableOperator pi = parityOperator(g);
  EXPECT_LE((pi.matrix() * pi.matrix() - CMatrix::Identity(32, 32)).cwiseAbs().maxCoeff(), 1e-15);
  const RVector x = g.points();
  CVector even(32), odd(32);
  for (int j = 0; j < 32; ++j) {
    even(j) = std::exp(-4.0 * x(j) * x(j));
    odd(j) = x(j) * std::exp(-4.0 * x(j) * x(j));
  }
  EXPECT_NEAR(parityExpectation(DensityMatrix::pure(even), g), 1.0, 1e-12);
  // x_0 = -2 is its own mirror image on the periodic grid; the profile vanishes there.
  EXPECT_NEAR(parityExpectation(DensityMatrix::pure(odd), g), -1.0, 1e-12);
  const GridBasis off{-1.0, 3.0, 32, 1.0};
  EXPECT_EQ(codeOf([&] { parityOperator(off); }), ErrorCode::AsymmetricGrid);
}

TEST(Grid, KineticActsOnPlaneWaves) {
  const GridBasis g{-3.0, 3.0, 64, 1.7};
  const ObservableOperator t = gridKinetic(g);
  const RVector x = g.points();
  const double L = 6.0;
  for (int n : {1, 5, 20}) {
    const double kn = 2.0 * M_PI * n / L;
    CVector v(64);
    for (int j = 0; j < 64; ++j) v(j) = std::polar(1.0, kn * x(j));
    const CVector tv = t.matrix() * v;
    EXPECT_LE((tv - (kn * kn / (2.0 * g.m)) * v).cwiseAbs().maxCoeff(), 1e-9) << n;
  }
}

TEST(Lattice, ValidatesGrid) {
  EXPECT_EQ(codeOf([] { buildLattice(10.0, 1.0, GridBasis{-M_PI, M_PI, 16, 1.0}); }), ErrorCode::GridTooCoarse);
  EXPECT_EQ(codeOf([] { buildLattice(10.0, 1.0, GridBasis{-1.0, 1.0, 32, 1.0}); }), ErrorCode::InvalidValue);
  EXPECT_NO_THROW(buildLattice(10.0, 1.0, GridBasis{-M_PI / 2, M_PI / 2, 16, 1.0}));
}

TEST(Lattice, CommutesWithParityAndFreeLimit) {
  const GridBasis g{-M_PI, M_PI, 64, 1.3};
  const CMatrix pi = parityOperator(g).matrix();
  const CMatrix h = buildLattice(15.0, 1.0, g).H.matrix();
  EXPECT_LE((h * pi - pi * h).norm(), 1e-8);
  // V0 = 0: eigenvalues are (2 pi n / L)^2 / 2m for the grid momenta n = -N/2 .. N/2 - 1.
  Eigen::SelfAdjointEigenSolver<CMatrix> es(buildLattice(0.0, 1.0, g).H.matrix(), Eigen::EigenvaluesOnly);
  std::vector<double> expect;
  for (int n = -32; n < 32; ++n) {
    const double p = 2.0 * M_PI * n / (g.xMax - g.xMin);
    expect.push_back(p * p / (2.0 * g.m));
  }
  std::sort(expect.begin(), expect.end());
  for (int i = 0; i < 64; ++i) EXPECT_NEAR(es.eigenvalues()(i), expect[i], 1e-9 * (1.0 + expect[i])) << i;
}

TEST(Lattice, ParityAdaptedSpectrumMatchesDenseSolver) {
  const GridBasis g{-M_PI / 2, M_PI / 2, 64, 1.0};
  const LatticeOperators L = buildLattice(20.0, 1.0, g);
  const ParitySpectrum s = parityAdaptedEigensystem(L.H, g);
  Eigen::SelfAdjointEigenSolver<CMatrix> es(L.H.matrix());
  const CMatrix pi = parityOperator(g).matrix();
  for (int n = 0; n < 20; ++n) {
    EXPECT_NEAR(s.energies(n), es.eigenvalues()(n), 1e-9);
    const CVector v = s.vectors.col(n).cast<Complex>();
    EXPECT_LE((L.H.matrix() * v - s.energies(n) * v).norm(), 1e-8);
    EXPECT_LE((pi * v - static_cast<double>(s.parity[n]) * v).norm(), 1e-10);
  }
  EXPECT_EQ(s.parity[0], 1);
  EXPECT_EQ(s.parity[1], -1);
}

TEST(Lattice, DeepWellApproachesHarmonicSpacing) {
  // Well at x = +-pi/2k: V ~ V0 k^2 d^2, so w = k sqrt(2 V0 / m); the
  // leading anharmonic correction lowers E1 - E0 by the recoil E_r.
  const double k = 1.0, m = 1.0, er = k * k / (2.0 * m);
  double previous = 1.0;
  for (double depth : {50.0, 100.0, 200.0}) {
    const double v0 = depth * er;
    const GridBasis g{-M_PI / 2, M_PI / 2, 128, m};
    const ParitySpectrum s = parityAdaptedEigensystem(buildLattice(v0, k, g).H, g);
    const double w = k * std::sqrt(2.0 * v0 / m);
    const double gap = s.energies(1) - s.energies(0);
    const double rel = std::abs(gap - w) / w;
    EXPECT_LT(rel, previous);
    previous = rel;
    EXPECT_NEAR(gap, w - er, 0.02 * w) << "depth " << depth;
  }
  EXPECT_LE(previous, 0.05);
}

TEST(Propagator, QubitPrecession) {
  const CMatrix H = 0.5 * 2.0 * pauliZ().matrix();
  const CMatrix U = unitaryPropagator(H, 0.3);
  EXPECT_NEAR(std::abs(U(0, 0) - std::polar(1.0, -0.3)), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(U(1, 1) - std::polar(1.0, 0.3)), 0.0, 1e-14);
}

TEST(Truncation, TopLevelPopulation) {
  CMatrix m = CMatrix::Zero(5, 5);
  m(0, 0) = 0.7;
  m(3, 3) = 0.2;
  m(4, 4) = 0.1;
  EXPECT_NEAR(topLevelPopulation(m), 0.3, 1e-15);
}
