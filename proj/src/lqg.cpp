#include "qfc/lqg.hpp"

#include <cmath>
#include <complex>

namespace qfc {
namespace {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;

void checkShapes(const MatrixXd& A, const MatrixXd& B, const MatrixXd& Q, const MatrixXd& R) {
  const auto n = A.rows();
  if (A.cols() != n || B.rows() != n || Q.rows() != n || Q.cols() != n || R.rows() != B.cols() ||
      R.cols() != B.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "CARE: inconsistent matrix shapes");
  }
  if ((Q - Q.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, Q.cwiseAbs().maxCoeff())) {
    throw Error(ErrorCode::InvalidValue, "CARE: Q must be symmetric");
  }
  Eigen::LLT<MatrixXd> llt(0.5 * (R + R.transpose()));
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::InvalidValue, "CARE: R must be positive definite");
}

// PBH test: rank [A - lambda I, B] = n for every eigenvalue with Re >= 0.
bool stabilizable(const MatrixXd& A, const MatrixXd& B) {
  const auto n = A.rows();
  Eigen::EigenSolver<MatrixXd> es(A, false);
  const double scale = std::max(1.0, A.norm() + B.norm());
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::complex<double> l = es.eigenvalues()(i);
    if (l.real() < -1e-12 * scale) continue;
    MatrixXcd m(n, n + B.cols());
    m.leftCols(n) = A.cast<std::complex<double>>() - l * MatrixXcd::Identity(n, n);
    m.rightCols(B.cols()) = B.cast<std::complex<double>>();
    Eigen::JacobiSVD<MatrixXcd> svd(m);
    if (svd.singularValues()(n - 1) < 1e-10 * scale) return false;
  }
  return true;
}

bool hurwitz(const MatrixXd& A) {
  Eigen::EigenSolver<MatrixXd> es(A, false);
  return es.eigenvalues().real().maxCoeff() < 0.0;
}

// Newton-Kleinman iterations from a stabilizing P; keeps the best residual.
MatrixXd polish(const MatrixXd& A, const MatrixXd& B, const MatrixXd& Q, const MatrixXd& R,
                MatrixXd P, int iterations) {
  const MatrixXd rinv = R.inverse();
  double best = careResidual(A, B, Q, R, P);
  for (int it = 0; it < iterations && best > 0.0; ++it) {
    const MatrixXd K = rinv * B.transpose() * P;
    const MatrixXd Ak = A - B * K;
    if (!hurwitz(Ak)) break;
    MatrixXd next = solveLyapunov(Ak.transpose(), Q + K.transpose() * R * K);
    const double res = careResidual(A, B, Q, R, next);
    if (!(res < best)) break;
    best = res;
    P = next;
  }
  return P;
}

}  // namespace

void QuadraticCost::validate() const {
  if (!(R > 0.0)) throw Error(ErrorCode::InvalidValue, "control cost R must be positive");
  if (std::abs(Q(0, 1) - Q(1, 0)) > 1e-12) throw Error(ErrorCode::InvalidValue, "Q must be symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(Q, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-12) {
    throw Error(ErrorCode::InvalidValue, "Q must be positive semidefinite");
  }
}

QuadraticCost energyCost(double m, double omega, double R) {
  QuadraticCost c;
  c.Q << 0.5 * m * omega * omega, 0.0, 0.0, 0.5 / m;
  c.R = R;
  c.validate();
  return c;
}

double careResidual(const MatrixXd& A, const MatrixXd& B, const MatrixXd& Q, const MatrixXd& R,
                    const MatrixXd& P) {
  const MatrixXd res =
      A.transpose() * P + P * A - P * B * R.llt().solve(B.transpose() * P) + Q;
  return res.norm();
}

MatrixXd solveLyapunov(const MatrixXd& A, const MatrixXd& C) {
  const auto n = A.rows();
  if (A.cols() != n || C.rows() != n || C.cols() != n) {
    throw Error(ErrorCode::DimensionMismatch, "Lyapunov: inconsistent shapes");
  }
  // (I kron A + A kron I) vec(X) = -vec(C), column-major vec.
  MatrixXd k(n * n, n * n);
  const MatrixXd I = MatrixXd::Identity(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = 0; b < n; ++b) {
      k.block(a * n, b * n, n, n) = I(a, b) * A + A(a, b) * I;
    }
  }
  const Eigen::Map<const Eigen::VectorXd> c(C.data(), n * n);
  Eigen::FullPivLU<MatrixXd> lu(k);
  if (!lu.isInvertible()) throw Error(ErrorCode::NoConvergence, "Lyapunov operator is singular");
  Eigen::VectorXd x = lu.solve(-c);
  MatrixXd X = Eigen::Map<MatrixXd>(x.data(), n, n);
  return 0.5 * (X + X.transpose());
}

MatrixXd solveCARE(const Eigen::Ref<const MatrixXd>& Ain, const Eigen::Ref<const MatrixXd>& Bin,
                   const Eigen::Ref<const MatrixXd>& Qin, const Eigen::Ref<const MatrixXd>& Rin) {
  const MatrixXd A = Ain, B = Bin, Q = 0.5 * (Qin + Qin.transpose()), R = 0.5 * (Rin + Rin.transpose());
  checkShapes(A, B, Qin, Rin);
  if (!stabilizable(A, B)) throw Error(ErrorCode::NotStabilizable, "CARE: (A, B) is not stabilizable");
  const auto n = A.rows();
  const double scale = std::max({1.0, A.norm(), Q.norm(), B.norm() * B.norm() / R.norm()});

  // Stable invariant subspace of the Hamiltonian matrix.
  MatrixXd Z(2 * n, 2 * n);
  Z << A, -B * R.llt().solve(B.transpose()), -Q, -A.transpose();
  Eigen::EigenSolver<MatrixXd> es(Z);
  MatrixXd P;
  bool ok = es.info() == Eigen::Success;
  if (ok) {
    MatrixXcd U(2 * n, n);
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < 2 * n; ++i) {
      const double re = es.eigenvalues()(i).real();
      if (std::abs(re) <= 1e-10 * scale) {
        throw Error(ErrorCode::NoConvergence,
                    "CARE: Hamiltonian matrix has eigenvalues on the imaginary axis");
      }
      if (re < 0.0 && k < n) U.col(k++) = es.eigenvectors().col(i);
    }
    ok = k == n;
    if (ok) {
      Eigen::FullPivLU<MatrixXcd> lu(U.topRows(n));
      lu.setThreshold(1e-12);
      ok = lu.isInvertible();
      if (ok) {
        const MatrixXcd Pc = U.bottomRows(n) * lu.inverse();
        ok = Pc.imag().cwiseAbs().maxCoeff() <= 1e-6 * std::max(1.0, Pc.real().cwiseAbs().maxCoeff());
        P = Pc.real();
        P = 0.5 * (P + P.transpose()).eval();
      }
    }
  }
  if (!ok) {
    // Defective eigenvectors: fall back on Newton-Kleinman from K = 0.
    if (!hurwitz(A)) throw Error(ErrorCode::NoConvergence, "CARE: invariant subspace is ill-conditioned");
    P = solveLyapunov(A.transpose(), Q);
    P = polish(A, B, Q, R, P, 60);
  } else {
    P = polish(A, B, Q, R, P, 8);
  }
  const double res = careResidual(A, B, Q, R, P);
  if (!(res <= 1e-8 * scale)) {
    throw Error(ErrorCode::NoConvergence, "CARE residual " + std::to_string(res) + " too large");
  }
  return P;
}

Eigen::Matrix2d steadyFilterCovariance(const LinearMeasuredModel& model) {
  model.validate();
  Eigen::MatrixXd r(1, 1);
  r(0, 0) = 1.0 / model.gamma;
  const Eigen::MatrixXd s =
      solveCARE(model.A.transpose(), model.c.transpose(), model.diffusion, r);
  return s;
}

ControlLaw synthesizeLQG(const LinearMeasuredModel& model, const QuadraticCost& cost) {
  model.validate();
  cost.validate();
  Eigen::MatrixXd r(1, 1);
  r(0, 0) = cost.R;
  const Eigen::Matrix2d P = solveCARE(model.A, model.B, cost.Q, r);
  ControlLaw law;
  law.P = P;
  law.gain = (model.B.transpose() * P) / cost.R;
  const Eigen::Matrix2d acl = model.A - model.B * law.gain;
  if (!hurwitz(acl)) throw Error(ErrorCode::NotStabilizable, "closed loop is not Hurwitz");
  const Eigen::Matrix2d S = steadyFilterCovariance(model);
  law.predictedSteadyCov = S;
  law.filterGain = std::sqrt(model.gamma) * S * model.c.transpose();
  const Eigen::Matrix2d llt = law.filterGain * law.filterGain.transpose();
  law.estimateCov = solveLyapunov(acl, llt);
  const double filterPart = (cost.Q * S).trace();
  law.predictedStateCost = filterPart + (cost.Q * law.estimateCov).trace();
  law.predictedSteadyCost =
      filterPart +
      ((cost.Q + law.gain.transpose() * cost.R * law.gain) * law.estimateCov).trace();
  return law;
}

StrengthScan optimizeMeasurementStrength(const ModelFamily& family, const QuadraticCost& cost,
                                         double gammaMin, double gammaMax, int nGrid) {
  if (!(gammaMin > 0.0) || !(gammaMax > gammaMin)) {
    throw Error(ErrorCode::InvalidValue, "gamma range must satisfy 0 < min < max");
  }
  if (nGrid < 3) throw Error(ErrorCode::InvalidValue, "gamma grid needs at least 3 points");
  auto evaluate = [&](double g) { return synthesizeLQG(family(g), cost).predictedSteadyCost; };

  StrengthScan scan;
  const double l0 = std::log(gammaMin), l1 = std::log(gammaMax);
  for (int i = 0; i < nGrid; ++i) {
    const double g = std::exp(l0 + (l1 - l0) * i / (nGrid - 1));
    scan.gammas.push_back(g);
    scan.costs.push_back(evaluate(g));
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < scan.costs.size(); ++i) {
    if (scan.costs[i] < scan.costs[best]) best = i;
  }
  if (best == 0) throw MinimumOnBoundaryError(BoundaryEdge::Lower, scan.gammas.front());
  if (best + 1 == scan.costs.size()) throw MinimumOnBoundaryError(BoundaryEdge::Upper, scan.gammas.back());

  // Golden section on log gamma over the bracketing cells.
  const double invPhi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = std::log(scan.gammas[best - 1]), b = std::log(scan.gammas[best + 1]);
  double c = b - invPhi * (b - a), d = a + invPhi * (b - a);
  double fc = evaluate(std::exp(c)), fd = evaluate(std::exp(d));
  while (b - a > 1e-7) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invPhi * (b - a);
      fc = evaluate(std::exp(c));
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invPhi * (b - a);
      fd = evaluate(std::exp(d));
    }
  }
  scan.gammaStar = std::exp(0.5 * (a + b));
  scan.costStar = evaluate(scan.gammaStar);
  return scan;
}

}  // namespace qfc
