#pragma once

// Non-linear heat semigroup T_t: explicit conservative time stepping of
// d_t u = (1/2) Delta u with Delta = div_m(L*(du)).
//
// Per step the flux is written through the Euler identity
// L*(du) = g*(du) du, the dual tensor field is frozen, Selling-decomposed
// into nonnegative edge conductances, and one explicit step of the resulting
// weighted graph Laplacian is taken. Each step is then an averaging with
// nonnegative weights (a substochastic update), which gives exact mass
// conservation, the discrete maximum principle 0 <= u <= 1 for indicator
// data, and positive 1-homogeneity of the whole flow. The step size obeys
// the exact row-sum stability bound, recomputed every step from the frozen
// conductances.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "fheat/calculus.hpp"
#include "fheat/grid.hpp"
#include "fheat/norms.hpp"
#include "fheat/selling.hpp"

namespace fheat {

struct HeatParams {
  double t_end = 0.0;
  double cfl = 0.5;                  // fraction of the exact stability bound
  long max_steps = 50'000'000;
  std::vector<double> record_times;  // sorted, within [0, t_end]

  void validate() const {
    if (!(t_end > 0.0)) throw std::invalid_argument("HeatParams: t_end must be positive");
    if (!(cfl > 0.0) || cfl > 1.0) throw std::invalid_argument("HeatParams: cfl must be in (0,1]");
    double prev = -1.0;
    for (double t : record_times) {
      if (t < 0.0 || t > t_end || t <= prev)
        throw std::invalid_argument("HeatParams: record_times must be strictly increasing in [0, t_end]");
      prev = t;
    }
  }
};

struct HeatTrace {
  std::vector<double> times;
  std::vector<ScalarField> fields;
  std::vector<double> energies;
  std::vector<double> masses;
  double global_min = 0.0, global_max = 0.0;
  long steps_taken = 0;

  // snapshot index with largest time <= t
  std::size_t nearest_earlier(double t) const {
    std::size_t best = 0;
    for (std::size_t k = 0; k < times.size(); ++k)
      if (times[k] <= t + 1e-15) best = k;
    return best;
  }
};

// per-cell dual tensors g*(du); zero tensor at critical cells of
// non-quadratic norms (matching the gradient convention), constant g^{-1}
// for quadratic norms
inline void dual_tensor_field(const Grid& grid, const FinslerField& F, const ScalarField& u,
                              std::vector<Mat2>& out) {
  out.resize(grid.cells());
  if (F.is_constant() && F.any().kind() == NormKind::Quadratic) {
    std::fill(out.begin(), out.end(), F.any().g_inv());
    return;
  }
  const CovectorField du = differential(grid, u);
  std::size_t k = 0;
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i, ++k) {
      const Cov2 a = du(i, j);
      const NormSpec& spec = F.at(i, j);
      if (a.x == 0.0 && a.y == 0.0) {
        out[k] = (spec.kind() == NormKind::Quadratic) ? spec.g_inv() : Mat2{0.0, 0.0, 0.0};
      } else {
        out[k] = metric_tensor_dual(spec, a);
      }
    }
}

// Explicit monotone step for d_t u = (1/2) div_m(T(x) du) with frozen
// per-cell tensors T.
class MonoStepper {
 public:
  explicit MonoStepper(const Grid& grid) : grid_(&grid), measures_(grid.cells()) {
    std::size_t k = 0;
    for (int j = 0; j < grid.ny; ++j)
      for (int i = 0; i < grid.nx; ++i) measures_[k++] = grid.cell_measure(i, j);
  }

  // freeze tensors (physical units) and rebuild conductances
  void set_tensors(const std::vector<Mat2>& T) {
    const Grid& g = *grid_;
    decomps_.resize(g.cells());
    const double ihx2 = 1.0 / (g.hx * g.hx), ihy2 = 1.0 / (g.hy * g.hy),
                 ihxy = 1.0 / (g.hx * g.hy);
    for (std::size_t c = 0; c < g.cells(); ++c) {
      const Mat2 lat{T[c].xx * ihx2, T[c].xy * ihxy, T[c].yy * ihy2};
      decomps_[c] = selling_decompose(lat);
    }
    rebuild_rowsums();
  }

  // largest dt with all update weights nonnegative
  double max_dt() const { return 4.0 / max_row_; }

  // u <- u + (dt/2) Delta u; caller enforces dt <= cfl * max_dt()
  void apply(ScalarField& u, double dt) const {
    const Grid& g = *grid_;
    incr_.assign(g.cells(), 0.0);
    scatter(u, dt, incr_);
    for (std::size_t c = 0; c < g.cells(); ++c) u.v[c] += incr_[c];
  }

  // the scheme's Laplacian, for diagnostics: Delta u = (2/dt_unit) increments
  ScalarField delta(const ScalarField& u) const {
    ScalarField out(grid_->nx, grid_->ny, 0.0);
    scatter(u, 2.0, out.v);
    return out;
  }

 private:
  void rebuild_rowsums() {
    const Grid& g = *grid_;
    rowsum_.assign(g.cells(), 0.0);
    const int nx = g.nx, ny = g.ny;
    const bool torus = g.topology == Topology::Torus;
    std::size_t c = 0;
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i, ++c) {
        const double mc = measures_[c];
        for (const SellingTerm& t : decomps_[c]) {
          if (t.w == 0.0) continue;
          rowsum_[c] += 2.0 * t.w;
          for (int s = -1; s <= 1; s += 2) {
            int in = i + s * t.ox, jn = j + s * t.oy;
            if (torus) {
              in = ((in % nx) + nx) % nx;
              jn = ((jn % ny) + ny) % ny;
            } else if (!g.inside(in, jn)) {
              continue;
            }
            const std::size_t n = static_cast<std::size_t>(jn) * nx + in;
            rowsum_[n] += mc * t.w / measures_[n];
          }
        }
      }
    max_row_ = 1e-300;
    for (double r : rowsum_) max_row_ = std::max(max_row_, r);
  }

  void scatter(const ScalarField& u, double dt, std::vector<double>& incr) const {
    const Grid& g = *grid_;
    const int nx = g.nx, ny = g.ny;
    const bool torus = g.topology == Topology::Torus;
    std::size_t c = 0;
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i, ++c) {
        const double uc = u.v[c];
        const double mc = measures_[c];
        for (const SellingTerm& t : decomps_[c]) {
          if (t.w == 0.0) continue;
          const double q = 0.25 * dt * t.w;
          for (int s = -1; s <= 1; s += 2) {
            int in = i + s * t.ox, jn = j + s * t.oy;
            if (torus) {
              in = ((in % nx) + nx) % nx;
              jn = ((jn % ny) + ny) % ny;
            } else if (!g.inside(in, jn)) {
              continue;
            }
            const std::size_t n = static_cast<std::size_t>(jn) * nx + in;
            const double d = u.v[n] - uc;
            incr[c] += q * d;
            incr[n] -= q * d * mc / measures_[n];
          }
        }
      }
  }

  const Grid* grid_;
  std::vector<double> measures_;
  std::vector<SellingDecomp> decomps_;
  std::vector<double> rowsum_;
  double max_row_ = 1.0;
  mutable std::vector<double> incr_;
};

// single explicit step; rejects dt above the stability bound
inline ScalarField heat_step(const Grid& grid, const FinslerField& F, const ScalarField& u,
                             double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("heat_step: dt must be positive");
  MonoStepper stepper(grid);
  std::vector<Mat2> tensors;
  dual_tensor_field(grid, F, u, tensors);
  stepper.set_tensors(tensors);
  const double bound = stepper.max_dt();
  if (dt > bound)
    throw std::invalid_argument("heat_step: dt " + std::to_string(dt) +
                                " exceeds stability bound " + std::to_string(bound));
  ScalarField out = u;
  stepper.apply(out, dt);
  return out;
}

// Evolve f over [0, t_end], landing exactly on every record time.  Step sizes
// are chosen from the per-step stability bound; the time accumulator is kept
// local to each record interval so that runs over intervals of equal length
// from equal states take bitwise identical steps (semigroup composition).
inline HeatTrace evolve(const Grid& grid, const FinslerField& F, const ScalarField& f,
                        const HeatParams& params) {
  params.validate();
  HeatTrace trace;
  ScalarField u = f;
  trace.global_min = *std::min_element(u.v.begin(), u.v.end());
  trace.global_max = *std::max_element(u.v.begin(), u.v.end());

  MonoStepper stepper(grid);
  std::vector<Mat2> tensors;
  const bool static_tensors = F.is_constant() && F.any().kind() == NormKind::Quadratic;
  if (static_tensors) {
    dual_tensor_field(grid, F, u, tensors);
    stepper.set_tensors(tensors);
  }

  auto record = [&](double t) {
    trace.times.push_back(t);
    trace.fields.push_back(u);
    trace.masses.push_back(integrate(grid, u));
    trace.energies.push_back(energy(grid, F, u));
  };

  std::vector<double> targets = params.record_times;
  if (targets.empty() || targets.back() < params.t_end) targets.push_back(params.t_end);
  const bool record_last =
      !params.record_times.empty() && params.record_times.back() == targets.back();

  std::size_t next = 0;
  if (!targets.empty() && targets[0] == 0.0) {
    record(0.0);
    ++next;
  }

  double reached = 0.0;
  for (; next < targets.size(); ++next) {
    const double len = targets[next] - reached;
    double s = 0.0;
    while (s < len) {
      if (!static_tensors) {
        dual_tensor_field(grid, F, u, tensors);
        stepper.set_tensors(tensors);
      }
      const double remaining = len - s;
      double dt = params.cfl * stepper.max_dt();
      const bool last = dt >= remaining;
      if (last) dt = remaining;
      if (++trace.steps_taken > params.max_steps)
        throw std::runtime_error("evolve: max_steps exceeded at t = " +
                                 std::to_string(reached + s) + " of " +
                                 std::to_string(params.t_end));
      stepper.apply(u, dt);
      for (double x : u.v) {
        trace.global_min = std::min(trace.global_min, x);
        trace.global_max = std::max(trace.global_max, x);
      }
      s = last ? len : s + dt;
    }
    reached = targets[next];
    if (next + 1 < targets.size() || record_last) record(reached);
  }
  return trace;
}

// P_t(A,B) = int_A T_t 1_B dm for each requested t
inline std::vector<std::pair<double, double>> pt_mass(const Grid& grid, const FinslerField& F,
                                                      const Region& A, const Region& B,
                                                      const std::vector<double>& t_list,
                                                      double cfl = 0.5) {
  measure(grid, A);
  measure(grid, B);
  HeatParams params;
  params.record_times = t_list;
  params.t_end = t_list.empty() ? 0.0 : t_list.back();
  params.cfl = cfl;
  if (!(params.t_end > 0.0)) {
    // all requested times are zero
    std::vector<std::pair<double, double>> out;
    const ScalarField ab = multiply(indicator(A), indicator(B));
    for (double t : t_list) out.emplace_back(t, integrate(grid, ab));
    return out;
  }
  const HeatTrace trace = evolve(grid, F, indicator(B), params);
  const ScalarField ia = indicator(A);
  std::vector<std::pair<double, double>> out;
  for (std::size_t k = 0; k < trace.times.size(); ++k)
    out.emplace_back(trace.times[k], integrate(grid, multiply(ia, trace.fields[k])));
  return out;
}

}  // namespace fheat
