#pragma once

#include <complex>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "qfc/errors.hpp"

namespace qfc {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

struct PhysicalConstants {
  double hbar = 1.0;

  void validate() const;
};

struct QubitBasis {};

struct FockBasis {
  int nMax = 2;  // number of retained levels
  double m = 1.0;
  double omega = 1.0;
};

// Uniform periodic grid: nPoints samples x_j = xMin + j (xMax - xMin) / nPoints;
// xMax is identified with xMin.
struct GridBasis {
  double xMin = -1.0;
  double xMax = 1.0;
  int nPoints = 16;
  double m = 1.0;

  double spacing() const { return (xMax - xMin) / nPoints; }
  RVector points() const;
};

using BasisSpec = std::variant<QubitBasis, FockBasis, GridBasis>;

void validateBasis(const BasisSpec& basis);
int basisDimension(const BasisSpec& basis);

// Hermitian, unit-trace, positive semidefinite. The checked constructor
// enforces all three; unchecked() is for steppers that maintain them by
// construction.
class DensityMatrix {
 public:
  static constexpr double kHermitianTol = 1e-10;
  static constexpr double kTraceTol = 1e-10;
  static constexpr double kPositivityTol = 1e-8;

  explicit DensityMatrix(CMatrix entries);

  static DensityMatrix unchecked(CMatrix entries);
  static DensityMatrix pure(const CVector& psi);
  static DensityMatrix maximallyMixed(int dim);

  int dim() const { return static_cast<int>(rho_.rows()); }
  const CMatrix& matrix() const { return rho_; }

 private:
  struct NoCheck {};
  DensityMatrix(CMatrix entries, NoCheck) : rho_(std::move(entries)) {}

  CMatrix rho_;
};

class ObservableOperator {
 public:
  ObservableOperator(CMatrix entries, std::string label);

  int dim() const { return static_cast<int>(op_.rows()); }
  const CMatrix& matrix() const { return op_; }
  const std::string& label() const { return label_; }

 private:
  CMatrix op_;
  std::string label_;
};

double expectation(const DensityMatrix& rho, const ObservableOperator& a);
double vonNeumannEntropy(const DensityMatrix& rho);
double purity(const DensityMatrix& rho);

// Tr[rho Pi] with Pi: x -> -x. Requires xMin = -xMax.
double parityExpectation(const DensityMatrix& rho, const GridBasis& grid);
ObservableOperator parityOperator(const GridBasis& grid);

// 0.5 * ||a - b||_1
double traceDistance(const CMatrix& a, const CMatrix& b);

ObservableOperator pauliX();
ObservableOperator pauliY();
ObservableOperator pauliZ();

struct OscillatorOperators {
  ObservableOperator H;
  ObservableOperator X;
  ObservableOperator P;
};

OscillatorOperators buildOscillator(const FockBasis& basis,
                                    const PhysicalConstants& constants = {});
ObservableOperator numberOperator(const FockBasis& basis);

struct LatticeOperators {
  ObservableOperator H;
  ObservableOperator Vop;  // cos^2(kX)
};

LatticeOperators buildLattice(double V0, double k, const GridBasis& grid,
                              const PhysicalConstants& constants = {});
ObservableOperator gridKinetic(const GridBasis& grid,
                               const PhysicalConstants& constants = {});

// Eigenpairs of a parity-symmetric grid Hamiltonian, diagonalized separately in
// the even and odd sectors so that near-degenerate levels keep definite parity.
struct ParitySpectrum {
  RVector energies;        // ascending
  RMatrix vectors;         // columns, grid basis, real
  std::vector<int> parity;  // +1 / -1 per level
};

ParitySpectrum parityAdaptedEigensystem(const ObservableOperator& H,
                                        const GridBasis& grid);

DensityMatrix thermalState(const FockBasis& basis, double nbar);
DensityMatrix coherentState(const FockBasis& basis, Complex alpha);

// Gaussian state with mean (x, p) and symmetrized covariance cov, built as
// D(alpha) S(xi) rho_th S^dag D^dag in a padded Fock space and then truncated.
DensityMatrix gaussianState(const FockBasis& basis, const Eigen::Vector2d& mean,
                            const Eigen::Matrix2d& cov,
                            const PhysicalConstants& constants = {});

// exp(-i H tau) for Hermitian H.
CMatrix unitaryPropagator(const CMatrix& H, double tau);

// Population in the top two levels (Fock truncation diagnostic).
double topLevelPopulation(const CMatrix& rho);

}  // namespace qfc
