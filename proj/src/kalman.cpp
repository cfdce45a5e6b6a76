#include <cmath>

#include "qfc/filters.hpp"

namespace qfc {

RMatrix expmReal(const RMatrix& m) {
  const double norm = m.cwiseAbs().rowwise().sum().maxCoeff();
  int squarings = 0;
  if (norm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
  const RMatrix a = m / std::ldexp(1.0, squarings);
  RMatrix term = RMatrix::Identity(m.rows(), m.cols());
  RMatrix sum = term;
  for (int k = 1; k <= 20; ++k) {
    term = (term * a / static_cast<double>(k)).eval();
    sum += term;
  }
  for (int s = 0; s < squarings; ++s) sum = (sum * sum).eval();
  return sum;
}

void GaussianBelief::validate() const {
  if (!mean.allFinite() || !cov.allFinite()) {
    throw Error(ErrorCode::InvalidState, "belief holds non-finite values");
  }
  if (std::abs(cov(0, 1) - cov(1, 0)) > 1e-12 * std::max(1.0, cov.cwiseAbs().maxCoeff())) {
    throw Error(ErrorCode::InvalidState, "belief covariance is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(cov, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-10) {
    throw Error(ErrorCode::InvalidState, "belief covariance is not positive semidefinite");
  }
}

void LinearMeasuredModel::validate() const {
  if (!(gamma > 0.0)) throw Error(ErrorCode::NonPositiveGamma, "model gamma must be positive");
  if (!A.allFinite() || !B.allFinite() || !c.allFinite() || !diffusion.allFinite()) {
    throw Error(ErrorCode::InvalidValue, "model holds non-finite values");
  }
  if ((diffusion - diffusion.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw Error(ErrorCode::InvalidValue, "diffusion must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(diffusion, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-12) {
    throw Error(ErrorCode::InvalidValue, "diffusion must be positive semidefinite");
  }
}

LinearMeasuredModel oscillatorModel(double m, double omega, double gamma,
                                    const PhysicalConstants& constants,
                                    double extraMomentumDiffusion, bool backAction) {
  constants.validate();
  LinearMeasuredModel model;
  model.A << 0.0, 1.0 / m, -m * omega * omega, 0.0;
  model.B << 0.0, 1.0;
  model.c << 1.0, 0.0;
  model.gamma = gamma;
  const double hbar = constants.hbar;
  model.diffusion.setZero();
  model.diffusion(1, 1) = (backAction ? hbar * hbar * gamma / 4.0 : 0.0) + extraMomentumDiffusion;
  model.validate();
  return model;
}

Eigen::Matrix2d riccatiRate(const LinearMeasuredModel& model, const Eigen::Matrix2d& s) {
  const Eigen::Vector2d sc = s * model.c.transpose();
  return model.A * s + s * model.A.transpose() + model.diffusion - model.gamma * sc * sc.transpose();
}

KalmanBucyFilter::KalmanBucyFilter(LinearMeasuredModel model, double dt, double covarianceBound)
    : model_(std::move(model)), dt_(dt), bound_(covarianceBound) {
  model_.validate();
  if (!(dt > 0.0)) throw Error(ErrorCode::InvalidValue, "filter dt must be positive");
  // exp([[A, B], [0, 0]] dt) = [[Phi, Gamma], [0, 1]]
  RMatrix aug = RMatrix::Zero(3, 3);
  aug.topLeftCorner(2, 2) = model_.A * dt;
  aug.topRightCorner(2, 1) = model_.B * dt;
  const RMatrix e = expmReal(aug);
  phi_ = e.topLeftCorner(2, 2);
  gammaB_ = e.topRightCorner(2, 1);
}

GaussianBelief KalmanBucyFilter::stepInnovation(const GaussianBelief& b, double dW, double u) const {
  GaussianBelief out;
  // Measurement gain uses the covariance at the start of the step.
  const Eigen::Vector2d gain = std::sqrt(model_.gamma) * (b.cov * model_.c.transpose());
  out.mean = phi_ * (b.mean + gain * dW) + gammaB_ * u;

  const double h = dt_;
  const Eigen::Matrix2d k1 = riccatiRate(model_, b.cov);
  const Eigen::Matrix2d k2 = riccatiRate(model_, b.cov + 0.5 * h * k1);
  const Eigen::Matrix2d k3 = riccatiRate(model_, b.cov + 0.5 * h * k2);
  const Eigen::Matrix2d k4 = riccatiRate(model_, b.cov + h * k3);
  out.cov = b.cov + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  out.cov = 0.5 * (out.cov + out.cov.transpose()).eval();

  if (!out.cov.allFinite() || !out.mean.allFinite() || out.cov.trace() > bound_) {
    throw Error(ErrorCode::CovarianceBlowup,
                "filter covariance trace exceeded " + std::to_string(bound_));
  }
  return out;
}

GaussianBelief KalmanBucyFilter::stepRecord(const GaussianBelief& b, double dr, double u) const {
  const double dW = std::sqrt(model_.gamma) * (dr - model_.c.dot(b.mean) * dt_);
  return stepInnovation(b, dW, u);
}

GaussianBelief kalmanBucyStep(const GaussianBelief& b, const LinearMeasuredModel& model, double dr,
                              double dt, double u, double covarianceBound) {
  return KalmanBucyFilter(model, dt, covarianceBound).stepRecord(b, dr, u);
}

}  // namespace qfc
