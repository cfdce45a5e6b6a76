#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "qfc/filters.hpp"

namespace qfc {

struct QuadraticCost {
  Eigen::Matrix2d Q = Eigen::Matrix2d::Identity();
  double R = 1.0;

  void validate() const;
};

// Energy weights: x^T Q x = m w^2 x^2 / 2 + p^2 / 2m.
QuadraticCost energyCost(double m, double omega, double R);

struct ControlLaw {
  Eigen::RowVector2d gain;              // u = -gain * mean
  double predictedSteadyCost = 0.0;     // E[x^T Q x + R u^2], long-run average
  Eigen::Matrix2d predictedSteadyCov;   // conditional (filter) covariance
  Eigen::Matrix2d estimateCov;          // covariance of the estimate itself
  double predictedStateCost = 0.0;      // E[x^T Q x] part of the cost
  Eigen::Vector2d filterGain;           // sqrt(gamma) S c^T, multiplies dW
  Eigen::Matrix2d P;                    // control Riccati solution
};

// Stabilizing solution of A^T P + P A - P B R^{-1} B^T P + Q = 0.
Eigen::MatrixXd solveCARE(const Eigen::Ref<const Eigen::MatrixXd>& A,
                          const Eigen::Ref<const Eigen::MatrixXd>& B,
                          const Eigen::Ref<const Eigen::MatrixXd>& Q,
                          const Eigen::Ref<const Eigen::MatrixXd>& R);

double careResidual(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Eigen::MatrixXd& Q,
                    const Eigen::MatrixXd& R, const Eigen::MatrixXd& P);

// X with A X + X A^T + C = 0 (A Hurwitz).
Eigen::MatrixXd solveLyapunov(const Eigen::MatrixXd& A, const Eigen::MatrixXd& C);

// Steady conditional covariance: A S + S A^T + D - gamma S c^T c S = 0.
Eigen::Matrix2d steadyFilterCovariance(const LinearMeasuredModel& model);

ControlLaw synthesizeLQG(const LinearMeasuredModel& model, const QuadraticCost& cost);

struct StrengthScan {
  double gammaStar = 0.0;
  double costStar = 0.0;
  std::vector<double> gammas;
  std::vector<double> costs;
};

using ModelFamily = std::function<LinearMeasuredModel(double gamma)>;

// Log-grid bracket followed by golden-section refinement in log gamma.
StrengthScan optimizeMeasurementStrength(const ModelFamily& family, const QuadraticCost& cost,
                                         double gammaMin, double gammaMax, int nGrid);

}  // namespace qfc
