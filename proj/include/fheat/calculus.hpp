#pragma once

// Discrete differential calculus on the grid: the linear differential d
// (central differences, one-sided at box edges), the m-weighted divergence
// defined as the exact negative adjoint of d, the non-linear gradient
// L* o d, the Laplacian div_m o L* o d, and the energy functional.

#include <stdexcept>
#include <string>
#include <vector>

#include "fheat/grid.hpp"
#include "fheat/norms.hpp"

namespace fheat {

// Finsler structure restricted to the grid: constant in space or per cell
class FinslerField {
 public:
  static FinslerField constant(NormSpec spec) {
    FinslerField f;
    f.specs_.push_back(std::move(spec));
    return f;
  }
  static FinslerField per_cell(std::vector<NormSpec> specs, int nx, int ny) {
    if (specs.size() != static_cast<std::size_t>(nx) * ny)
      throw std::invalid_argument("FinslerField: need one spec per cell");
    FinslerField f;
    f.specs_ = std::move(specs);
    f.nx_ = nx;
    return f;
  }

  bool is_constant() const { return specs_.size() == 1; }
  const NormSpec& at(int i, int j) const {
    return is_constant() ? specs_[0] : specs_[static_cast<std::size_t>(j) * nx_ + i];
  }
  const NormSpec& any() const { return specs_[0]; }

 private:
  FinslerField() = default;
  std::vector<NormSpec> specs_;
  int nx_ = 0;
};

namespace detail {

// stencil of the x-derivative at cell (i,j): two (index, coefficient) pairs
struct DiffPair {
  int ia, ib;      // wrapped/clamped column or row indices
  double ca, cb;   // coefficients, units 1/length
};

inline DiffPair diff_stencil(int i, int n, double h, Topology topo) {
  if (topo == Topology::Torus) {
    const int ip = (i + 1) % n, im = (i + n - 1) % n;
    return {ip, im, 0.5 / h, -0.5 / h};
  }
  if (i == 0) return {1, 0, 1.0 / h, -1.0 / h};
  if (i == n - 1) return {n - 1, n - 2, 1.0 / h, -1.0 / h};
  return {i + 1, i - 1, 0.5 / h, -0.5 / h};
}

}  // namespace detail

inline CovectorField differential(const Grid& grid, const ScalarField& u) {
  CovectorField du(grid.nx, grid.ny);
  for (int j = 0; j < grid.ny; ++j) {
    const auto sy = detail::diff_stencil(j, grid.ny, grid.hy, grid.topology);
    for (int i = 0; i < grid.nx; ++i) {
      const auto sx = detail::diff_stencil(i, grid.nx, grid.hx, grid.topology);
      du(i, j) = {sx.ca * u(sx.ia, j) + sx.cb * u(sx.ib, j),
                  sy.ca * u(i, sy.ia) + sy.cb * u(i, sy.ib)};
    }
  }
  return du;
}

// divergence as the negative adjoint of d in L^2(m):
//   sum_c m_c dphi(c)(V(c)) = - sum_q m_q phi(q) divV(q)  for all phi
inline ScalarField divergence(const Grid& grid, const VectorField& V) {
  ScalarField acc(grid.nx, grid.ny, 0.0);
  for (int j = 0; j < grid.ny; ++j) {
    const auto sy = detail::diff_stencil(j, grid.ny, grid.hy, grid.topology);
    for (int i = 0; i < grid.nx; ++i) {
      const auto sx = detail::diff_stencil(i, grid.nx, grid.hx, grid.topology);
      const double m = grid.cell_measure(i, j);
      const Vec2 w = V(i, j);
      acc(sx.ia, j) += m * sx.ca * w.x;
      acc(sx.ib, j) += m * sx.cb * w.x;
      acc(i, sy.ia) += m * sy.ca * w.y;
      acc(i, sy.ib) += m * sy.cb * w.y;
    }
  }
  ScalarField div(grid.nx, grid.ny, 0.0);
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i) div(i, j) = -acc(i, j) / grid.cell_measure(i, j);
  return div;
}

// gradient = L*(du) per cell; zero where du vanishes
inline VectorField gradient(const Grid& grid, const FinslerField& F, const ScalarField& u) {
  const CovectorField du = differential(grid, u);
  VectorField g(grid.nx, grid.ny);
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i) {
      try {
        g(i, j) = legendre_dual_to_primal(F.at(i, j), du(i, j));
      } catch (const LegendreError& e) {
        throw std::runtime_error("gradient: Legendre solve failed at cell (" +
                                 std::to_string(i) + "," + std::to_string(j) +
                                 "): " + e.what());
      }
    }
  return g;
}

inline ScalarField laplacian(const Grid& grid, const FinslerField& F, const ScalarField& u) {
  return divergence(grid, gradient(grid, F, u));
}

// E(u) = (1/2) int F*(du)^2 dm
inline double energy(const Grid& grid, const FinslerField& F, const ScalarField& u) {
  const CovectorField du = differential(grid, u);
  std::vector<double> terms(grid.cells());
  std::size_t k = 0;
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i) {
      const double fs = eval_F_star(F.at(i, j), du(i, j));
      terms[k++] = 0.5 * fs * fs * grid.cell_measure(i, j);
    }
  return pairwise_sum(terms.data(), terms.size());
}

// the same energy through the primal expression (1/2) int F(grad u)^2 dm
inline double energy_via_gradient(const Grid& grid, const FinslerField& F,
                                  const ScalarField& u) {
  const VectorField g = gradient(grid, F, u);
  std::vector<double> terms(grid.cells());
  std::size_t k = 0;
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i) {
      const double f = eval_F(F.at(i, j), g(i, j));
      terms[k++] = 0.5 * f * f * grid.cell_measure(i, j);
    }
  return pairwise_sum(terms.data(), terms.size());
}

// int dphi(V) dm, handy for adjoint checks
inline double pairing_integral(const Grid& grid, const ScalarField& phi, const VectorField& V) {
  const CovectorField dphi = differential(grid, phi);
  std::vector<double> terms(grid.cells());
  std::size_t k = 0;
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i)
      terms[k++] = pair(dphi(i, j), V(i, j)) * grid.cell_measure(i, j);
  return pairwise_sum(terms.data(), terms.size());
}

inline ScalarField multiply(const ScalarField& a, const ScalarField& b) {
  ScalarField out(a.nx, a.ny, 0.0);
  for (std::size_t k = 0; k < a.v.size(); ++k) out.v[k] = a.v[k] * b.v[k];
  return out;
}

inline double l2_norm_sq(const Grid& grid, const ScalarField& f) {
  std::vector<double> terms(grid.cells());
  std::size_t k = 0;
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i) terms[k++] = f(i, j) * f(i, j) * grid.cell_measure(i, j);
  return pairwise_sum(terms.data(), terms.size());
}

}  // namespace fheat
