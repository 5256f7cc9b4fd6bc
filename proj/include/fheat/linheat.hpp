#pragma once

// Linearised heat flow: the linear self-adjoint Laplacian with dual-metric
// coefficients frozen at du (falling back to a fixed covector where du
// vanishes), the identity lin_laplacian(freeze(u), u) = laplacian(u), and the
// L^2-closeness check between the non-linear flow of an indicator and the
// linearised flow driven by a time-reversed coefficient trace.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <vector>

#include "fheat/calculus.hpp"
#include "fheat/grid.hpp"
#include "fheat/heat.hpp"
#include "fheat/norms.hpp"

namespace fheat {

struct FrozenCoefficients {
  int nx = 0, ny = 0;
  std::vector<Mat2> tensors;  // dual metric per cell
  Cov2 fallback{1.0, 0.0};

  const Mat2& at(int i, int j) const { return tensors[static_cast<std::size_t>(j) * nx + i]; }
};

// coefficients g*(du) where du != 0, g*(fallback) elsewhere; the fallback is
// normalized in the dual norm so the frozen field is a unit reference where u
// is critical
inline FrozenCoefficients freeze(const Grid& grid, const FinslerField& F, const ScalarField& u,
                                 Cov2 fallback = {1.0, 0.0}) {
  if (fallback.x == 0.0 && fallback.y == 0.0)
    throw std::invalid_argument("freeze: fallback covector must be nonzero");
  FrozenCoefficients out;
  out.nx = grid.nx;
  out.ny = grid.ny;
  out.tensors.resize(grid.cells());
  const CovectorField du = differential(grid, u);
  std::size_t k = 0;
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i, ++k) {
      const NormSpec& spec = F.at(i, j);
      Cov2 a = du(i, j);
      if (a.x == 0.0 && a.y == 0.0) {
        const double fs = eval_F_star(spec, fallback);
        a = (1.0 / fs) * fallback;
        out.fallback = a;
      }
      out.tensors[k] = metric_tensor_dual(spec, a);
    }
  return out;
}

// div_m(G dh) with the same central differential and adjoint divergence as
// the non-linear calculus; linear in h and self-adjoint in L^2(m)
inline ScalarField lin_laplacian(const Grid& grid, const FrozenCoefficients& coeffs,
                                 const ScalarField& h) {
  const CovectorField dh = differential(grid, h);
  VectorField V(grid.nx, grid.ny);
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i) V(i, j) = coeffs.at(i, j).apply_to_cov(dh(i, j));
  return divergence(grid, V);
}

// Solve d_t h = (1/2) Delta^{grad u_{tau - t}} h over [0, tau] with the same
// monotone stencil as the non-linear stepper. Coefficients are taken from the
// nearest earlier snapshot of u_trace at time tau - t, refreshed whenever the
// active snapshot changes. The step ladder is a function of (tau, bound)
// only, so for time-constant coefficients it reproduces the non-linear run's
// ladder over an interval of the same length exactly.
inline ScalarField evolve_linearised(const Grid& grid, const FinslerField& F,
                                     const HeatTrace& u_trace, const ScalarField& h0, double tau,
                                     double cfl = 0.5, Cov2 fallback = {1.0, 0.0},
                                     long max_steps = 50'000'000) {
  if (!(tau > 0.0)) throw std::invalid_argument("evolve_linearised: tau must be positive");
  if (u_trace.times.empty() || u_trace.times.back() < tau - 1e-12)
    throw std::invalid_argument("evolve_linearised: u_trace does not cover [0, tau]");
  for (double x : h0.v)
    if (x < -1e-12) throw std::invalid_argument("evolve_linearised: h0 must be nonnegative");

  ScalarField h = h0;
  MonoStepper stepper(grid);
  std::size_t active = static_cast<std::size_t>(-1);
  long steps = 0;
  double s = 0.0;
  while (s < tau) {
    const std::size_t snap = u_trace.nearest_earlier(tau - s);
    if (snap != active) {
      const FrozenCoefficients coeffs = freeze(grid, F, u_trace.fields[snap], fallback);
      stepper.set_tensors(coeffs.tensors);
      active = snap;
    }
    const double remaining = tau - s;
    double dt = cfl * stepper.max_dt();
    const bool last = dt >= remaining;
    if (last) dt = remaining;
    if (++steps > max_steps) throw std::runtime_error("evolve_linearised: max_steps exceeded");
    stepper.apply(h, dt);
    s = last ? tau : s + dt;
  }
  return h;
}

// One row of the closeness check between w_t = T_t 1_D and the linearised
// flow h with h_0 = w_sigma and coefficients from the reversed u-trace:
//   lhs = |w_{sigma+tau} - h_tau|_2^2
//   rhs = ((sqrt(S)+sqrt(C))^2/4 - 1) (|w_sigma|_2^2 - |w_{sigma+tau}|_2^2)
struct ClosenessRow {
  double sigma = 0.0, tau = 0.0;
  double lhs = 0.0, rhs = 0.0, slack = 0.0;
};

inline ClosenessRow closeness_check(const Grid& grid, const FinslerField& F, const Region& D,
                                    const Region& B, double sigma, double tau,
                                    const NormConstants& constants, double cfl = 0.5,
                                    double slack_coeff = 10.0) {
  // non-linear flow of 1_D recorded at sigma and sigma + tau
  HeatParams wp;
  wp.t_end = sigma + tau;
  wp.cfl = cfl;
  wp.record_times = {sigma, sigma + tau};
  const HeatTrace wtrace = evolve(grid, F, indicator(D), wp);
  const ScalarField& w_sigma = wtrace.fields[0];
  const ScalarField& w_end = wtrace.fields[1];

  // the float length of the w-run's [sigma, sigma+tau] interval; stepping the
  // linearised flow over exactly this length makes the two step ladders
  // coincide for time-constant coefficients
  const double tau_eff = (sigma + tau) - sigma;

  // coefficient trace: the non-linear flow of 1_B over [0, tau], sampled
  // densely enough that freezing per snapshot tracks the flow
  HeatParams up;
  up.t_end = std::max(tau, tau_eff);
  up.cfl = cfl;
  const int n_snaps = 64;
  for (int k = 0; k <= n_snaps; ++k) up.record_times.push_back(up.t_end * k / n_snaps);
  up.record_times.front() = 0.0;
  up.record_times.back() = up.t_end;
  const HeatTrace utrace = evolve(grid, F, indicator(B), up);

  const ScalarField h_tau = evolve_linearised(grid, F, utrace, w_sigma, tau_eff, cfl);

  ClosenessRow row;
  row.sigma = sigma;
  row.tau = tau;
  ScalarField diff(grid.nx, grid.ny, 0.0);
  for (std::size_t k = 0; k < diff.v.size(); ++k) diff.v[k] = w_end.v[k] - h_tau.v[k];
  row.lhs = l2_norm_sq(grid, diff);
  const double factor =
      0.25 * std::pow(std::sqrt(constants.s_unif) + std::sqrt(constants.c_unif), 2.0) - 1.0;
  const double drop = l2_norm_sq(grid, w_sigma) - l2_norm_sq(grid, w_end);
  row.rhs = factor * drop;
  const bool quadratic = F.is_constant() && F.any().kind() == NormKind::Quadratic;
  const double h2 = std::max(grid.hx, grid.hy) * std::max(grid.hx, grid.hy);
  row.slack = quadratic ? 0.0 : slack_coeff * h2 * l2_norm_sq(grid, w_sigma);
  return row;
}

inline void write_closeness_csv(const std::vector<ClosenessRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_closeness_csv: cannot open " + path);
  out << "sigma,tau,lhs,rhs,slack\n";
  char buf[200];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", r.sigma, r.tau, r.lhs,
                  r.rhs, r.slack);
    out << buf;
  }
}

}  // namespace fheat
