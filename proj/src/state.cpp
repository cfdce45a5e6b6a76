#include "qfc/state.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace qfc {
namespace {

constexpr double kPi = 3.14159265358979323846;

double hermitianDefect(const CMatrix& m) {
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

CMatrix annihilation(int n) {
  CMatrix a = CMatrix::Zero(n, n);
  for (int k = 1; k < n; ++k) a(k - 1, k) = std::sqrt(static_cast<double>(k));
  return a;
}

void requireSameDim(int a, int b, const char* what) {
  if (a != b) {
    throw Error(ErrorCode::DimensionMismatch,
                std::string(what) + ": dimensions " + std::to_string(a) + " and " +
                    std::to_string(b) + " differ");
  }
}

void requireSymmetricGrid(const GridBasis& grid) {
  if (std::abs(grid.xMin + grid.xMax) > 1e-12 * std::max(1.0, grid.xMax - grid.xMin)) {
    throw Error(ErrorCode::AsymmetricGrid, "parity requires a grid symmetric about x = 0");
  }
}

int parityPartner(int j, int n) { return (n - j) % n; }

}  // namespace

void PhysicalConstants::validate() const {
  if (!(hbar > 0.0) || !std::isfinite(hbar)) {
    throw Error(ErrorCode::InvalidValue, "hbar must be positive");
  }
}

RVector GridBasis::points() const {
  RVector x(nPoints);
  const double dx = spacing();
  for (int j = 0; j < nPoints; ++j) x(j) = xMin + j * dx;
  return x;
}

void validateBasis(const BasisSpec& basis) {
  if (const auto* f = std::get_if<FockBasis>(&basis)) {
    if (f->nMax < 2) throw Error(ErrorCode::InvalidValue, "Fock basis needs nMax >= 2");
    if (!(f->m > 0.0) || !(f->omega > 0.0)) {
      throw Error(ErrorCode::InvalidValue, "Fock basis needs m > 0 and omega > 0");
    }
  } else if (const auto* g = std::get_if<GridBasis>(&basis)) {
    const int n = g->nPoints;
    if (n < 16 || (n & (n - 1)) != 0) {
      throw Error(ErrorCode::InvalidValue, "grid size must be a power of two >= 16");
    }
    if (!(g->xMax > g->xMin)) throw Error(ErrorCode::InvalidValue, "grid needs xMax > xMin");
    if (!(g->m > 0.0)) throw Error(ErrorCode::InvalidValue, "grid mass must be positive");
  }
}

int basisDimension(const BasisSpec& basis) {
  validateBasis(basis);
  if (std::holds_alternative<QubitBasis>(basis)) return 2;
  if (const auto* f = std::get_if<FockBasis>(&basis)) return f->nMax;
  return std::get<GridBasis>(basis).nPoints;
}

DensityMatrix::DensityMatrix(CMatrix entries) : rho_(std::move(entries)) {
  if (rho_.rows() == 0 || rho_.rows() != rho_.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "density matrix must be square and non-empty");
  }
  if (!rho_.allFinite()) throw Error(ErrorCode::InvalidState, "density matrix has non-finite entries");
  if (hermitianDefect(rho_) > kHermitianTol) {
    throw Error(ErrorCode::InvalidState, "density matrix is not Hermitian");
  }
  if (std::abs(rho_.trace() - Complex(1.0)) > kTraceTol) {
    throw Error(ErrorCode::InvalidState, "density matrix trace differs from 1");
  }
  Eigen::SelfAdjointEigenSolver<CMatrix> es(rho_, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -kPositivityTol) {
    throw Error(ErrorCode::InvalidState, "density matrix has a negative eigenvalue");
  }
}

DensityMatrix DensityMatrix::unchecked(CMatrix entries) {
  return DensityMatrix(std::move(entries), NoCheck{});
}

DensityMatrix DensityMatrix::pure(const CVector& psi) {
  const double n = psi.norm();
  if (!(n > 0.0)) throw Error(ErrorCode::InvalidState, "zero state vector");
  const CVector v = psi / n;
  CMatrix rho = v * v.adjoint();
  rho = 0.5 * (rho + rho.adjoint()).eval();
  return DensityMatrix(std::move(rho), NoCheck{});
}

DensityMatrix DensityMatrix::maximallyMixed(int dim) {
  if (dim < 1) throw Error(ErrorCode::DimensionMismatch, "dimension must be positive");
  return DensityMatrix(CMatrix::Identity(dim, dim) / static_cast<double>(dim), NoCheck{});
}

ObservableOperator::ObservableOperator(CMatrix entries, std::string label)
    : op_(std::move(entries)), label_(std::move(label)) {
  if (op_.rows() == 0 || op_.rows() != op_.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "operator must be square and non-empty");
  }
  if (hermitianDefect(op_) > 1e-10 * std::max(1.0, op_.cwiseAbs().maxCoeff())) {
    throw Error(ErrorCode::InvalidValue, "observable " + label_ + " is not Hermitian");
  }
}

double expectation(const DensityMatrix& rho, const ObservableOperator& a) {
  requireSameDim(rho.dim(), a.dim(), "expectation");
  // Tr[rho A] = sum_ij rho_ij A_ji
  const Complex v = rho.matrix().cwiseProduct(a.matrix().transpose()).sum();
  if (std::abs(v.imag()) > 1e-8) {
    throw Error(ErrorCode::NonNegligibleImaginaryPart,
                "Tr[rho " + a.label() + "] has imaginary part " + std::to_string(v.imag()));
  }
  return v.real();
}

double vonNeumannEntropy(const DensityMatrix& rho) {
  if (rho.dim() == 2) {
    const CMatrix& m = rho.matrix();
    const double a = m(0, 0).real(), d = m(1, 1).real();
    const double disc = std::sqrt((a - d) * (a - d) + 4.0 * std::norm(m(0, 1)));
    // Smaller eigenvalue from the determinant: no cancellation near purity.
    const double hi = 0.5 * (a + d + disc);
    const double lo = hi > 0.0 ? (a * d - std::norm(m(0, 1))) / hi : 0.0;
    double s = 0.0;
    for (double l : {hi, lo}) {
      if (l > 0.0) s -= l * std::log(l);
    }
    return std::max(0.0, s);
  }
  Eigen::SelfAdjointEigenSolver<CMatrix> es(rho.matrix(), Eigen::EigenvaluesOnly);
  double s = 0.0;
  for (double l : es.eigenvalues()) {
    if (l > 0.0) s -= l * std::log(l);
  }
  return std::max(0.0, s);
}

double purity(const DensityMatrix& rho) {
  // Tr[rho^2] = sum |rho_ij|^2 for Hermitian rho
  return rho.matrix().squaredNorm();
}

ObservableOperator parityOperator(const GridBasis& grid) {
  validateBasis(grid);
  requireSymmetricGrid(grid);
  const int n = grid.nPoints;
  CMatrix pi = CMatrix::Zero(n, n);
  for (int j = 0; j < n; ++j) pi(parityPartner(j, n), j) = 1.0;
  return ObservableOperator(std::move(pi), "Pi");
}

double parityExpectation(const DensityMatrix& rho, const GridBasis& grid) {
  validateBasis(grid);
  requireSymmetricGrid(grid);
  requireSameDim(rho.dim(), grid.nPoints, "parityExpectation");
  const int n = grid.nPoints;
  Complex v = 0.0;
  for (int j = 0; j < n; ++j) v += rho.matrix()(j, parityPartner(j, n));
  return v.real();
}

double traceDistance(const CMatrix& a, const CMatrix& b) {
  requireSameDim(static_cast<int>(a.rows()), static_cast<int>(b.rows()), "traceDistance");
  const CMatrix d = a - b;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (d + d.adjoint()), Eigen::EigenvaluesOnly);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

ObservableOperator pauliX() {
  CMatrix s(2, 2);
  s << 0, 1, 1, 0;
  return ObservableOperator(s, "sigma_x");
}

ObservableOperator pauliY() {
  CMatrix s(2, 2);
  s << 0, Complex(0, -1), Complex(0, 1), 0;
  return ObservableOperator(s, "sigma_y");
}

ObservableOperator pauliZ() {
  CMatrix s(2, 2);
  s << 1, 0, 0, -1;
  return ObservableOperator(s, "sigma_z");
}

OscillatorOperators buildOscillator(const FockBasis& basis, const PhysicalConstants& constants) {
  validateBasis(basis);
  constants.validate();
  const double hbar = constants.hbar;
  const CMatrix a = annihilation(basis.nMax);
  const CMatrix ad = a.adjoint();
  const double xs = std::sqrt(hbar / (2.0 * basis.m * basis.omega));
  const double ps = std::sqrt(hbar * basis.m * basis.omega / 2.0);
  CMatrix x = xs * (a + ad);
  CMatrix p = Complex(0.0, ps) * (ad - a);
  CMatrix h = (p * p) / (2.0 * basis.m) +
              0.5 * basis.m * basis.omega * basis.omega * (x * x);
  h = 0.5 * (h + h.adjoint()).eval();
  return {ObservableOperator(std::move(h), "H"), ObservableOperator(std::move(x), "X"),
          ObservableOperator(std::move(p), "P")};
}

ObservableOperator numberOperator(const FockBasis& basis) {
  validateBasis(basis);
  CMatrix n = CMatrix::Zero(basis.nMax, basis.nMax);
  for (int k = 0; k < basis.nMax; ++k) n(k, k) = k;
  return ObservableOperator(std::move(n), "N");
}

ObservableOperator gridKinetic(const GridBasis& grid, const PhysicalConstants& constants) {
  validateBasis(grid);
  constants.validate();
  const int n = grid.nPoints;
  const double length = grid.xMax - grid.xMin;
  // Spectral kinetic matrix: T_jl = (1/N) sum_q E_q cos(k_q (x_j - x_l)).
  // Depends on j - l only, so tabulate one row.
  RVector row = RVector::Zero(n);
  for (int q = 0; q < n; ++q) {
    const int qs = q < n / 2 ? q : q - n;
    const double kq = 2.0 * kPi * qs / length;
    const double eq = constants.hbar * constants.hbar * kq * kq / (2.0 * grid.m);
    for (int d = 0; d < n; ++d) row(d) += eq * std::cos(2.0 * kPi * qs * d / n);
  }
  row /= n;
  CMatrix t(n, n);
  for (int j = 0; j < n; ++j) {
    for (int l = 0; l < n; ++l) t(j, l) = row((j - l + n) % n);
  }
  return ObservableOperator(std::move(t), "T");
}

LatticeOperators buildLattice(double V0, double k, const GridBasis& grid,
                              const PhysicalConstants& constants) {
  validateBasis(grid);
  if (!(k > 0.0)) throw Error(ErrorCode::InvalidValue, "lattice wavenumber must be positive");
  const double period = kPi / k;
  const double length = grid.xMax - grid.xMin;
  const double periods = length / period;
  if (periods < 1.0 - 1e-9 || std::abs(periods - std::round(periods)) > 1e-9) {
    throw Error(ErrorCode::InvalidValue,
                "periodic lattice grid must span a whole number of potential periods");
  }
  if (grid.nPoints / periods < 16.0 - 1e-9) {
    throw Error(ErrorCode::GridTooCoarse, "fewer than 16 grid points per potential period");
  }
  const RVector x = grid.points();
  CMatrix vop = CMatrix::Zero(grid.nPoints, grid.nPoints);
  for (int j = 0; j < grid.nPoints; ++j) {
    const double c = std::cos(k * x(j));
    vop(j, j) = c * c;
  }
  CMatrix h = gridKinetic(grid, constants).matrix() + V0 * vop;
  return {ObservableOperator(std::move(h), "H"), ObservableOperator(std::move(vop), "Vop")};
}

ParitySpectrum parityAdaptedEigensystem(const ObservableOperator& H, const GridBasis& grid) {
  validateBasis(grid);
  requireSymmetricGrid(grid);
  const int n = grid.nPoints;
  requireSameDim(H.dim(), n, "parityAdaptedEigensystem");
  if (H.matrix().imag().cwiseAbs().maxCoeff() > 1e-12) {
    throw Error(ErrorCode::InvalidValue, "parity-adapted solver expects a real Hamiltonian");
  }
  const RMatrix h = H.matrix().real();
  const int half = n / 2;
  // Symmetry-adapted bases: fixed points j = 0 and j = N/2 are even only.
  RMatrix even = RMatrix::Zero(n, half + 1);
  RMatrix odd = RMatrix::Zero(n, half - 1);
  const double r = 1.0 / std::sqrt(2.0);
  even(0, 0) = 1.0;
  even(half, half) = 1.0;
  for (int j = 1; j < half; ++j) {
    even(j, j) = r;
    even(n - j, j) = r;
    odd(j, j - 1) = r;
    odd(n - j, j - 1) = -r;
  }
  RMatrix pi = RMatrix::Zero(n, n);
  for (int j = 0; j < n; ++j) pi(parityPartner(j, n), j) = 1.0;
  if ((h * pi - pi * h).cwiseAbs().maxCoeff() > 1e-8 * std::max(1.0, h.cwiseAbs().maxCoeff())) {
    throw Error(ErrorCode::InvalidValue, "Hamiltonian does not commute with parity");
  }
  Eigen::SelfAdjointEigenSolver<RMatrix> se(even.transpose() * h * even);
  Eigen::SelfAdjointEigenSolver<RMatrix> so(odd.transpose() * h * odd);

  std::vector<std::pair<double, int>> order;  // (energy, signed column id)
  for (int i = 0; i < se.eigenvalues().size(); ++i) order.emplace_back(se.eigenvalues()(i), i);
  for (int i = 0; i < so.eigenvalues().size(); ++i) order.emplace_back(so.eigenvalues()(i), -1 - i);
  std::stable_sort(order.begin(), order.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });

  ParitySpectrum out;
  out.energies.resize(n);
  out.vectors.resize(n, n);
  out.parity.resize(n);
  for (int i = 0; i < n; ++i) {
    const int id = order[i].second;
    out.energies(i) = order[i].first;
    if (id >= 0) {
      out.vectors.col(i) = even * se.eigenvectors().col(id);
      out.parity[i] = 1;
    } else {
      out.vectors.col(i) = odd * so.eigenvectors().col(-1 - id);
      out.parity[i] = -1;
    }
    // Fix the sign convention: largest-magnitude component positive.
    Eigen::Index imax = 0;
    out.vectors.col(i).cwiseAbs().maxCoeff(&imax);
    if (out.vectors(imax, i) < 0.0) out.vectors.col(i) *= -1.0;
  }
  return out;
}

DensityMatrix thermalState(const FockBasis& basis, double nbar) {
  validateBasis(basis);
  if (!(nbar >= 0.0)) throw Error(ErrorCode::InvalidValue, "thermal occupation must be >= 0");
  CMatrix rho = CMatrix::Zero(basis.nMax, basis.nMax);
  if (nbar == 0.0) {
    rho(0, 0) = 1.0;
    return DensityMatrix::unchecked(std::move(rho));
  }
  const double q = nbar / (nbar + 1.0);
  double w = 1.0, z = 0.0;
  for (int k = 0; k < basis.nMax; ++k) {
    rho(k, k) = w;
    z += w;
    w *= q;
  }
  rho /= z;
  return DensityMatrix::unchecked(std::move(rho));
}

DensityMatrix coherentState(const FockBasis& basis, Complex alpha) {
  validateBasis(basis);
  CVector psi(basis.nMax);
  Complex amp = std::exp(-0.5 * std::norm(alpha));
  for (int k = 0; k < basis.nMax; ++k) {
    psi(k) = amp;
    amp *= alpha / std::sqrt(static_cast<double>(k + 1));
  }
  return DensityMatrix::pure(psi);
}

CMatrix unitaryPropagator(const CMatrix& H, double tau) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (H + H.adjoint()));
  const RVector& e = es.eigenvalues();
  CVector phase(e.size());
  for (Eigen::Index i = 0; i < e.size(); ++i) phase(i) = std::polar(1.0, -e(i) * tau);
  return es.eigenvectors() * phase.asDiagonal() * es.eigenvectors().adjoint();
}

DensityMatrix gaussianState(const FockBasis& basis, const Eigen::Vector2d& mean,
                            const Eigen::Matrix2d& cov, const PhysicalConstants& constants) {
  validateBasis(basis);
  constants.validate();
  const double hbar = constants.hbar;
  const double sx = std::sqrt(basis.m * basis.omega / hbar);
  const double sp = 1.0 / std::sqrt(hbar * basis.m * basis.omega);
  Eigen::Matrix2d c = cov;
  c(0, 0) *= sx * sx;
  c(1, 1) *= sp * sp;
  c(0, 1) *= sx * sp;
  c(1, 0) *= sx * sp;
  if (std::abs(c(0, 1) - c(1, 0)) > 1e-12 * c.cwiseAbs().maxCoeff()) {
    throw Error(ErrorCode::InvalidState, "covariance must be symmetric");
  }
  const double det = c.determinant();
  if (!(c(0, 0) > 0.0) || !(det > 0.0)) {
    throw Error(ErrorCode::InvalidState, "covariance must be positive definite");
  }
  const double nu = 2.0 * std::sqrt(det);
  if (nu < 1.0 - 1e-9) {
    throw Error(ErrorCode::InvalidState, "covariance violates the uncertainty principle");
  }
  const double nbar = std::max(0.0, 0.5 * (nu - 1.0));
  const Eigen::Matrix2d t = 2.0 * c / nu;
  const double ch = std::max(1.0, 0.5 * t.trace());
  const double r = 0.5 * std::acosh(ch);
  const double theta = std::atan2(-t(0, 1), 0.5 * (t(1, 1) - t(0, 0)));
  const Complex xi = std::polar(r, theta);
  const Complex alpha(mean(0) * sx / std::sqrt(2.0), mean(1) * sp / std::sqrt(2.0));

  // Padding keeps the top of the working space empty so the truncated
  // exponentials act as on the infinite ladder.
  const int np = std::max(2 * basis.nMax, basis.nMax + 60);
  const CMatrix a = annihilation(np);
  const CMatrix ad = a.adjoint();
  // S = exp(G_s), D = exp(G_d) with G anti-Hermitian; exp(G) = exp(-i (iG)).
  const CMatrix gs = 0.5 * (std::conj(xi) * (a * a) - xi * (ad * ad));
  const CMatrix gd = alpha * ad - std::conj(alpha) * a;
  const CMatrix s = unitaryPropagator(Complex(0, 1) * gs, 1.0);
  const CMatrix d = unitaryPropagator(Complex(0, 1) * gd, 1.0);
  CMatrix th = CMatrix::Zero(np, np);
  const double q = nbar / (nbar + 1.0);
  double w = 1.0, z = 0.0;
  for (int k = 0; k < np; ++k) {
    th(k, k) = w;
    z += w;
    w *= q;
  }
  th /= z;
  const CMatrix u = d * s;
  CMatrix full = u * th * u.adjoint();
  CMatrix rho = full.topLeftCorner(basis.nMax, basis.nMax);
  rho = 0.5 * (rho + rho.adjoint()).eval();
  rho /= rho.trace().real();
  return DensityMatrix(std::move(rho));
}

double topLevelPopulation(const CMatrix& rho) {
  const Eigen::Index n = rho.rows();
  if (n < 2) return 0.0;
  return rho(n - 1, n - 1).real() + rho(n - 2, n - 2).real();
}

}  // namespace qfc
