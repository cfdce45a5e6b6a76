#include <cmath>

#include "qfc/filters.hpp"

namespace qfc {
namespace {

void checkInputs(const DensityMatrix& rho, const ObservableOperator& H, const ObservableOperator& X,
                 double gamma, double dt) {
  if (rho.dim() != H.dim() || rho.dim() != X.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "smeStep: state and operator dimensions differ");
  }
  if (!(gamma >= 0.0)) throw Error(ErrorCode::NonPositiveGamma, "smeStep: gamma must be >= 0");
  if (!(dt > 0.0)) throw Error(ErrorCode::InvalidValue, "smeStep: dt must be positive");
}

template <class Mat>
Mat doubleCommutator(const Mat& x, const Mat& x2, const Mat& rho) {
  return x2 * rho + rho * x2 - 2.0 * x * rho * x;
}

// Clip eigenvalues in [-tol, 0) and renormalize; more negative is an error.
CMatrix repairPositivity(const CMatrix& rho) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(rho);
  const double lmin = es.eigenvalues().minCoeff();
  if (lmin >= 0.0) return rho;
  if (lmin < -DensityMatrix::kPositivityTol) {
    throw Error(ErrorCode::StatePositivityViolation,
                "state eigenvalue " + std::to_string(lmin) + " below repair threshold");
  }
  RVector l = es.eigenvalues().cwiseMax(0.0);
  l /= l.sum();
  CMatrix out = es.eigenvectors() * l.asDiagonal() * es.eigenvectors().adjoint();
  return 0.5 * (out + out.adjoint());
}

double minEigenvalue2(const Eigen::Matrix2cd& m) {
  const double a = m(0, 0).real(), d = m(1, 1).real();
  return 0.5 * (a + d - std::sqrt((a - d) * (a - d) + 4.0 * std::norm(m(0, 1))));
}

template <class Mat>
Mat krausUpdate(const Mat& rho, const Mat& x, double meanX, double gamma, double dW, double dt) {
  const double sg = std::sqrt(gamma);
  const double dy = sg * meanX * dt + dW;
  const Mat c = 0.5 * sg * x;
  const Mat c2 = c * c;
  Mat m = c * dy + c2 * (0.5 * (dy * dy - dt) - 0.5 * dt);
  m.diagonal().array() += 1.0;
  return m * rho * m.adjoint();
}

template <class Mat>
Mat eulerUpdate(const Mat& rho, const Mat& h, const Mat& x, double meanX, double gamma,
                double kappa, double dW, double dt, double hbar) {
  const Mat x2 = x * x;
  Mat xc = x;
  xc.diagonal().array() -= meanX;
  const std::complex<double> mi(0.0, -1.0 / hbar);
  return rho + (mi * (h * rho - rho * h)) * dt -
         (gamma / 8.0 + kappa) * doubleCommutator<Mat>(x, x2, rho) * dt +
         (0.5 * std::sqrt(gamma) * dW) * (xc * rho + rho * xc);
}

}  // namespace

SmeResult smeStep(const DensityMatrix& rho, const ObservableOperator& H, const ObservableOperator& X,
                  double gamma, double dW, double dt, const PhysicalConstants& constants,
                  const SmeOptions& options) {
  checkInputs(rho, H, X, gamma, dt);
  constants.validate();
  const double hbar = constants.hbar;
  const double kappa = options.unobservedDiffusion / (2.0 * hbar * hbar);
  const double meanX = expectation(rho, X);
  CMatrix out;

  if (rho.dim() == 2) {
    // Fixed-size path: qubit ensembles are large.
    const Eigen::Matrix2cd r = rho.matrix();
    const Eigen::Matrix2cd x = X.matrix();
    const Eigen::Matrix2cd h = H.matrix();
    Eigen::Matrix2cd next;
    if (options.scheme == SmeScheme::Kraus) {
      next = krausUpdate<Eigen::Matrix2cd>(r, x, meanX, gamma, dW, dt);
      if (kappa > 0.0) next -= kappa * dt * doubleCommutator<Eigen::Matrix2cd>(x, x * x, next);
      next /= next.trace().real();
      if (!h.isZero(0.0)) {
        const CMatrix u = unitaryPropagator(h, dt / hbar);
        const Eigen::Matrix2cd u2 = u;
        next = (u2 * next * u2.adjoint()).eval();
      }
    } else {
      next = eulerUpdate<Eigen::Matrix2cd>(r, h, x, meanX, gamma, kappa, dW, dt, hbar);
    }
    next = (0.5 * (next + next.adjoint())).eval();
    next /= next.trace().real();
    if ((options.scheme == SmeScheme::EulerMaruyama || kappa > 0.0) && minEigenvalue2(next) < 0.0) {
      out = repairPositivity(next);
    } else {
      out = next;
    }
  } else {
    const CMatrix& r = rho.matrix();
    const CMatrix& x = X.matrix();
    const CMatrix& h = H.matrix();
    CMatrix next;
    if (options.scheme == SmeScheme::Kraus) {
      next = krausUpdate<CMatrix>(r, x, meanX, gamma, dW, dt);
      if (kappa > 0.0) next -= kappa * dt * doubleCommutator<CMatrix>(x, x * x, next);
      next /= next.trace().real();
      if (!h.isZero(0.0)) {
        const CMatrix u = unitaryPropagator(h, dt / hbar);
        next = (u * next * u.adjoint()).eval();
      }
    } else {
      next = eulerUpdate<CMatrix>(r, h, x, meanX, gamma, kappa, dW, dt, hbar);
    }
    next = (0.5 * (next + next.adjoint())).eval();
    next /= next.trace().real();
    out = (options.scheme == SmeScheme::EulerMaruyama || kappa > 0.0) ? repairPositivity(next)
                                                                        : std::move(next);
  }

  if (!out.allFinite()) throw Error(ErrorCode::StatePositivityViolation, "state became non-finite");
  if (options.leakCheck && topLevelPopulation(out) > options.leakTolerance) {
    throw Error(ErrorCode::TruncationLeak,
                "top-two level population " + std::to_string(topLevelPopulation(out)) +
                    " exceeds " + std::to_string(options.leakTolerance));
  }
  return {DensityMatrix::unchecked(std::move(out)), meanX};
}

SmeIntegrator::SmeIntegrator(const ObservableOperator& X, const std::vector<CMatrix>& hamiltonians,
                             double gamma, double dt, const PhysicalConstants& constants,
                             double unobservedDiffusion, bool leakCheck, double leakTolerance)
    : gamma_(gamma), dt_(dt), hbar_(constants.hbar), leakCheck_(leakCheck),
      leakTolerance_(leakTolerance) {
  constants.validate();
  if (!(gamma >= 0.0)) throw Error(ErrorCode::NonPositiveGamma, "gamma must be >= 0");
  if (!(dt > 0.0)) throw Error(ErrorCode::InvalidValue, "dt must be positive");
  if (hamiltonians.empty()) throw Error(ErrorCode::InvalidValue, "need at least one Hamiltonian");
  Eigen::SelfAdjointEigenSolver<CMatrix> es(X.matrix());
  x_ = es.eigenvalues();
  v_ = es.eigenvectors();
  for (const CMatrix& h : hamiltonians) {
    if (h.rows() != X.dim() || h.cols() != X.dim()) {
      throw Error(ErrorCode::DimensionMismatch, "Hamiltonian and X dimensions differ");
    }
    u0_.push_back(unitaryPropagator(operatorToWorking(h), dt / hbar_));
  }
  const int n = dim();
  const double kappa = unobservedDiffusion / (2.0 * hbar_ * hbar_);
  dephase_.resize(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double d = x_(i) - x_(j);
      dephase_(i, j) = std::exp(-kappa * d * d * dt);
    }
  }
}

CMatrix SmeIntegrator::toWorking(const CMatrix& rho) const { return v_.adjoint() * rho * v_; }

CMatrix SmeIntegrator::fromWorking(const CMatrix& rhoW) const { return v_ * rhoW * v_.adjoint(); }

CMatrix SmeIntegrator::operatorToWorking(const CMatrix& op) const {
  return v_.adjoint() * op * v_;
}

double SmeIntegrator::meanX(const CMatrix& rhoW) const {
  return (rhoW.diagonal().real().array() * x_.array()).sum();
}

double SmeIntegrator::step(CMatrix& rhoW, double dW, std::size_t hamiltonian, double lambda) const {
  const int n = dim();
  const double mx = meanX(rhoW);
  const double sg = std::sqrt(gamma_);
  const double dy = sg * mx * dt_ + dW;
  RVector m(n);
  for (int i = 0; i < n; ++i) {
    const double c = 0.5 * sg * x_(i);
    m(i) = 1.0 - 0.5 * c * c * dt_ + c * dy + 0.5 * c * c * (dy * dy - dt_);
  }
  rhoW.array() *= (m * m.transpose()).array() * dephase_.array();
  rhoW /= rhoW.trace().real();

  const CMatrix& u0 = u0_.at(hamiltonian);
  if (lambda != 0.0) {
    CVector d(n);
    for (int i = 0; i < n; ++i) d(i) = std::polar(1.0, -0.5 * lambda * x_(i) * dt_ / hbar_);
    const CMatrix dd = d * d.adjoint();
    rhoW.array() *= dd.array();
    CMatrix tmp;
    tmp.noalias() = u0 * rhoW;
    rhoW.noalias() = tmp * u0.adjoint();
    rhoW.array() *= dd.array();
  } else {
    CMatrix tmp;
    tmp.noalias() = u0 * rhoW;
    rhoW.noalias() = tmp * u0.adjoint();
  }
  rhoW = (0.5 * (rhoW + rhoW.adjoint())).eval();
  rhoW /= rhoW.trace().real();
  if (!rhoW.allFinite()) throw Error(ErrorCode::StatePositivityViolation, "state became non-finite");
  if (leakCheck_) {
    const double l = leak(rhoW);
    if (l > leakTolerance_) {
      throw Error(ErrorCode::TruncationLeak, "top-two level population " + std::to_string(l) +
                                                 " exceeds " + std::to_string(leakTolerance_));
    }
  }
  return mx;
}

double SmeIntegrator::basisPopulation(const CMatrix& rhoW, int n) const {
  const CVector row = v_.row(n).transpose();
  // (V rhoW V^dag)_nn = row_n rhoW row_n^dag
  return (row.transpose() * rhoW * row.conjugate())(0, 0).real();
}

double SmeIntegrator::leak(const CMatrix& rhoW) const {
  const int n = dim();
  return basisPopulation(rhoW, n - 1) + basisPopulation(rhoW, n - 2);
}

}  // namespace qfc
