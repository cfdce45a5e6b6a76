#include <cmath>
#include <vector>

#include "qfc/filters.hpp"

namespace qfc {
namespace {

double vanLeer(double r) { return (r + std::abs(r)) / (1.0 + std::abs(r)); }

// One flux-limited upwind step of u_t + v u_s = 0 along a line with zero
// inflow. `courant` = v dt / h, |courant| <= 1.
void advectLine(std::vector<double>& u, double courant, std::vector<double>& flux) {
  const int n = static_cast<int>(u.size());
  if (courant == 0.0) return;
  auto at = [&](int i) { return (i < 0 || i >= n) ? 0.0 : u[i]; };
  flux.assign(n + 1, 0.0);  // flux[i] at interface i - 1/2, in units of h/dt
  const double a = std::abs(courant);
  for (int f = 0; f <= n; ++f) {
    // Interface between cells f-1 and f.
    const int up = courant > 0.0 ? f - 1 : f;
    const int down = courant > 0.0 ? f : f - 1;
    const int upup = courant > 0.0 ? f - 2 : f + 1;
    const double du = at(down) - at(up);
    const double dPrev = at(up) - at(upup);
    double phi = 0.0;
    if (du != 0.0) phi = vanLeer(dPrev / du);
    flux[f] = courant * (at(up) + 0.5 * (1.0 - a) * phi * du);
  }
  for (int i = 0; i < n; ++i) u[i] -= flux[i + 1] - flux[i];
}

void advectX(RMatrix& d, const PhaseSpaceGrid& g, double m, double dt) {
  std::vector<double> line(g.nx), flux;
  for (int j = 0; j < g.np; ++j) {
    const double c = g.p(j) / m * dt / g.dx();
    for (int i = 0; i < g.nx; ++i) line[i] = d(i, j);
    advectLine(line, c, flux);
    for (int i = 0; i < g.nx; ++i) d(i, j) = line[i];
  }
}

void advectP(RMatrix& d, const PhaseSpaceGrid& g, const ForceField& force, double t, double dt) {
  std::vector<double> line(g.np), flux;
  for (int i = 0; i < g.nx; ++i) {
    const double c = force(g.x(i), t) * dt / g.dp();
    for (int j = 0; j < g.np; ++j) line[j] = d(i, j);
    advectLine(line, c, flux);
    for (int j = 0; j < g.np; ++j) d(i, j) = line[j];
  }
}

}  // namespace

void GridBelief::validate() const {
  if (grid.nx < 2 || grid.np < 2 || !(grid.xMax > grid.xMin) || !(grid.pMax > grid.pMin)) {
    throw Error(ErrorCode::InvalidValue, "invalid phase-space grid");
  }
  if (density.rows() != grid.nx || density.cols() != grid.np) {
    throw Error(ErrorCode::DimensionMismatch, "density shape does not match the grid");
  }
  if (density.minCoeff() < 0.0) throw Error(ErrorCode::NegativeDensity, "density is negative");
  if (std::abs(mass() - 1.0) > 1e-6) throw Error(ErrorCode::InvalidState, "density is not normalized");
}

double GridBelief::mass() const { return density.sum() * grid.dx() * grid.dp(); }

GridMoments GridBelief::moments() const {
  double w = 0.0, sx = 0.0, sp = 0.0, sxx = 0.0, spp = 0.0, sxp = 0.0;
  for (int i = 0; i < grid.nx; ++i) {
    const double x = grid.x(i);
    for (int j = 0; j < grid.np; ++j) {
      const double p = grid.p(j);
      const double v = density(i, j);
      w += v;
      sx += v * x;
      sp += v * p;
      sxx += v * x * x;
      spp += v * p * p;
      sxp += v * x * p;
    }
  }
  GridMoments out;
  out.mean << sx / w, sp / w;
  out.cov << sxx / w - out.mean(0) * out.mean(0), sxp / w - out.mean(0) * out.mean(1),
      sxp / w - out.mean(0) * out.mean(1), spp / w - out.mean(1) * out.mean(1);
  return out;
}

GridBelief GridBelief::gaussian(const PhaseSpaceGrid& grid, const Eigen::Vector2d& mean,
                                const Eigen::Matrix2d& cov) {
  GridBelief b;
  b.grid = grid;
  b.density.resize(grid.nx, grid.np);
  const Eigen::Matrix2d inv = cov.inverse();
  for (int i = 0; i < grid.nx; ++i) {
    for (int j = 0; j < grid.np; ++j) {
      const Eigen::Vector2d z(grid.x(i) - mean(0), grid.p(j) - mean(1));
      b.density(i, j) = std::exp(-0.5 * z.dot(inv * z));
    }
  }
  b.density /= b.mass();
  return b;
}

GridBelief ksGridStep(const GridBelief& b, const ForceField& force, double m, double gamma,
                      double dW, double dt, double t) {
  if (!(gamma >= 0.0)) throw Error(ErrorCode::NonPositiveGamma, "gamma must be >= 0");
  if (!(dt > 0.0) || !(m > 0.0)) throw Error(ErrorCode::InvalidValue, "need dt > 0 and m > 0");
  const PhaseSpaceGrid& g = b.grid;
  const GridMoments mom = b.moments();
  if (std::sqrt(std::max(0.0, mom.cov(0, 0))) < 8.0 * g.dx() ||
      std::sqrt(std::max(0.0, mom.cov(1, 1))) < 8.0 * g.dp()) {
    throw Error(ErrorCode::GridUnderResolved, "density spans fewer than 8 cells per standard deviation");
  }
  const double vmax = std::max(std::abs(g.pMin), std::abs(g.pMax)) / m;
  double fmax = 0.0;
  for (int i = 0; i < g.nx; ++i) fmax = std::max(fmax, std::abs(force(g.x(i), t + 0.5 * dt)));
  if (vmax * 0.5 * dt > g.dx() || fmax * dt > g.dp()) {
    throw Error(ErrorCode::GridUnderResolved, "time step violates the CFL condition");
  }

  GridBelief out;
  out.grid = g;
  out.density = b.density;
  const double before = out.mass();
  advectX(out.density, g, m, 0.5 * dt);
  advectP(out.density, g, force, t + 0.5 * dt, dt);
  advectX(out.density, g, m, 0.5 * dt);
  out.advectionMassDefect = out.mass() / before - 1.0;

  const double peak = out.density.maxCoeff();
  if (out.density.minCoeff() < -1e-9 * peak) {
    throw Error(ErrorCode::NegativeDensity, "advection produced a negative density");
  }
  out.density = out.density.cwiseMax(0.0);

  if (gamma > 0.0) {
    // Bayes factor of the record increment; exact for a Gaussian likelihood.
    double w = 0.0, sx = 0.0;
    for (int i = 0; i < g.nx; ++i) {
      const double row = out.density.row(i).sum();
      w += row;
      sx += row * g.x(i);
    }
    const double xbar = sx / w;
    const double sg = std::sqrt(gamma);
    for (int i = 0; i < g.nx; ++i) {
      const double d = g.x(i) - xbar;
      out.density.row(i) *= std::exp(sg * d * dW - 0.5 * gamma * d * d * dt);
    }
  }
  out.density /= out.mass();
  return out;
}

}  // namespace qfc
