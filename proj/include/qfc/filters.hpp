#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "qfc/state.hpp"

namespace qfc {

// ---------------------------------------------------------------------------
// Quantum filter

enum class SmeScheme {
  // Kraus measurement update followed by the exact unitary; positive by
  // construction.
  Kraus,
  // Plain explicit step with trace renormalization and eigenvalue clipping.
  EulerMaruyama,
};

struct SmeOptions {
  SmeScheme scheme = SmeScheme::Kraus;
  // Unobserved momentum diffusion D: adds -(D / 2 hbar^2) [X, [X, rho]].
  double unobservedDiffusion = 0.0;
  bool leakCheck = false;  // top-two basis-level population
  double leakTolerance = 1e-4;
};

struct SmeResult {
  DensityMatrix rho;
  double meanX;  // Tr[rho X] before the step
};

// One step of the measured-state equation with measurement operator
// c = (sqrt(gamma) / 2) X and record increment sqrt(gamma) <X> dt + dW.
SmeResult smeStep(const DensityMatrix& rho, const ObservableOperator& H,
                  const ObservableOperator& X, double gamma, double dW, double dt,
                  const PhysicalConstants& constants = {}, const SmeOptions& options = {});

// Repeated-step form of the Kraus scheme for a fixed X, dt and a small set of
// Hamiltonians. States live in the eigenbasis of X, where the measurement
// operator and the unobserved dephasing are diagonal, and propagators are
// precomputed. Optional drive: H = H_k + lambda X (Strang split).
class SmeIntegrator {
 public:
  SmeIntegrator(const ObservableOperator& X, const std::vector<CMatrix>& hamiltonians,
                double gamma, double dt, const PhysicalConstants& constants = {},
                double unobservedDiffusion = 0.0, bool leakCheck = false,
                double leakTolerance = 1e-4);

  CMatrix toWorking(const CMatrix& rho) const;    // basis -> X eigenbasis
  CMatrix fromWorking(const CMatrix& rhoW) const;  // X eigenbasis -> basis
  CMatrix operatorToWorking(const CMatrix& op) const;

  // Advances rhoW in place; returns <X> before the step.
  double step(CMatrix& rhoW, double dW, std::size_t hamiltonian = 0, double lambda = 0.0) const;

  double meanX(const CMatrix& rhoW) const;
  // Populations of the original basis states (e.g. Fock levels) n.
  double basisPopulation(const CMatrix& rhoW, int n) const;
  double leak(const CMatrix& rhoW) const;

  int dim() const { return static_cast<int>(x_.size()); }
  const RVector& eigenvalues() const { return x_; }
  double dt() const { return dt_; }

 private:
  RVector x_;
  CMatrix v_;  // columns: X eigenvectors in the original basis
  std::vector<CMatrix> u0_;
  RMatrix dephase_;
  double gamma_;
  double dt_;
  double hbar_;
  bool leakCheck_;
  double leakTolerance_;
};

// ---------------------------------------------------------------------------
// Kalman-Bucy filter

struct GaussianBelief {
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  Eigen::Matrix2d cov = Eigen::Matrix2d::Identity();

  void validate() const;
};

struct LinearMeasuredModel {
  Eigen::Matrix2d A = Eigen::Matrix2d::Zero();
  Eigen::Vector2d B = Eigen::Vector2d::Zero();
  Eigen::RowVector2d c = Eigen::RowVector2d::Zero();
  double gamma = 1.0;
  Eigen::Matrix2d diffusion = Eigen::Matrix2d::Zero();

  void validate() const;
};

// Measured harmonic oscillator: A = [[0, 1/m], [-m w^2, 0]], B = (0, 1),
// c = (1, 0), diffusion = diag(0, hbar^2 gamma / 4 + extra).
LinearMeasuredModel oscillatorModel(double m, double omega, double gamma,
                                    const PhysicalConstants& constants = {},
                                    double extraMomentumDiffusion = 0.0,
                                    bool backAction = true);

// Riccati right-hand side A S + S A^T + D - gamma S c^T c S.
Eigen::Matrix2d riccatiRate(const LinearMeasuredModel& model, const Eigen::Matrix2d& cov);

class KalmanBucyFilter {
 public:
  KalmanBucyFilter(LinearMeasuredModel model, double dt, double covarianceBound = 1e8);

  // Co-simulation: innovation supplied directly.
  GaussianBelief stepInnovation(const GaussianBelief& b, double dW, double u = 0.0) const;
  // Record-driven: dW = sqrt(gamma) (dr - c mean dt).
  GaussianBelief stepRecord(const GaussianBelief& b, double dr, double u = 0.0) const;

  const LinearMeasuredModel& model() const { return model_; }
  double dt() const { return dt_; }

 private:
  LinearMeasuredModel model_;
  double dt_;
  double bound_;
  Eigen::Matrix2d phi_;
  Eigen::Vector2d gammaB_;
};

GaussianBelief kalmanBucyStep(const GaussianBelief& b, const LinearMeasuredModel& model,
                              double dr, double dt, double u = 0.0,
                              double covarianceBound = 1e8);

// ---------------------------------------------------------------------------
// Classical phase-space filter

struct PhaseSpaceGrid {
  double xMin = -1.0, xMax = 1.0;
  int nx = 64;
  double pMin = -1.0, pMax = 1.0;
  int np = 64;

  double dx() const { return (xMax - xMin) / nx; }
  double dp() const { return (pMax - pMin) / np; }
  double x(int i) const { return xMin + (i + 0.5) * dx(); }  // cell centres
  double p(int j) const { return pMin + (j + 0.5) * dp(); }
};

struct GridMoments {
  Eigen::Vector2d mean;
  Eigen::Matrix2d cov;
};

struct GridBelief {
  PhaseSpaceGrid grid;
  RMatrix density;  // nx x np
  // Relative mass change of the advection stage of the last step.
  double advectionMassDefect = 0.0;

  void validate() const;
  double mass() const;
  GridMoments moments() const;

  static GridBelief gaussian(const PhaseSpaceGrid& grid, const Eigen::Vector2d& mean,
                             const Eigen::Matrix2d& cov);
};

using ForceField = std::function<double(double x, double t)>;

GridBelief ksGridStep(const GridBelief& b, const ForceField& force, double m, double gamma,
                      double dW, double dt, double t = 0.0);

// exp(M) for a small real matrix (scaling and squaring).
RMatrix expmReal(const RMatrix& m);

}  // namespace qfc
