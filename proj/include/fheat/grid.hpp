#pragma once

// Discretized manifold: a cell-centered 2-D lattice, either a flat torus or a
// Neumann box, carrying the weighted measure m = e^psi dx. Scalar, covector
// and vector fields are stored collocated at cell centers.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fheat/norms.hpp"

namespace fheat {

enum class Topology : std::uint8_t { Torus, Box };

struct ScalarField {
  int nx = 0, ny = 0;
  std::vector<double> v;

  ScalarField() = default;
  ScalarField(int nx_, int ny_, double fill = 0.0)
      : nx(nx_), ny(ny_), v(static_cast<std::size_t>(nx_) * ny_, fill) {}

  double& operator()(int i, int j) { return v[static_cast<std::size_t>(j) * nx + i]; }
  double operator()(int i, int j) const { return v[static_cast<std::size_t>(j) * nx + i]; }
  std::size_t size() const { return v.size(); }
};

struct CovectorField {
  int nx = 0, ny = 0;
  std::vector<Cov2> v;
  CovectorField() = default;
  CovectorField(int nx_, int ny_) : nx(nx_), ny(ny_), v(static_cast<std::size_t>(nx_) * ny_) {}
  Cov2& operator()(int i, int j) { return v[static_cast<std::size_t>(j) * nx + i]; }
  Cov2 operator()(int i, int j) const { return v[static_cast<std::size_t>(j) * nx + i]; }
};

struct VectorField {
  int nx = 0, ny = 0;
  std::vector<Vec2> v;
  VectorField() = default;
  VectorField(int nx_, int ny_) : nx(nx_), ny(ny_), v(static_cast<std::size_t>(nx_) * ny_) {}
  Vec2& operator()(int i, int j) { return v[static_cast<std::size_t>(j) * nx + i]; }
  Vec2 operator()(int i, int j) const { return v[static_cast<std::size_t>(j) * nx + i]; }
};

struct Region {
  int nx = 0, ny = 0;
  std::vector<std::uint8_t> mask;
  Region() = default;
  Region(int nx_, int ny_) : nx(nx_), ny(ny_), mask(static_cast<std::size_t>(nx_) * ny_, 0) {}
  std::uint8_t& operator()(int i, int j) { return mask[static_cast<std::size_t>(j) * nx + i]; }
  std::uint8_t operator()(int i, int j) const { return mask[static_cast<std::size_t>(j) * nx + i]; }
  long count() const {
    long c = 0;
    for (auto m : mask) c += m ? 1 : 0;
    return c;
  }
};

struct Grid {
  int nx = 0, ny = 0;
  double hx = 0.0, hy = 0.0;
  Topology topology = Topology::Torus;
  ScalarField psi;  // log density of m

  Grid() = default;
  Grid(int nx_, int ny_, double hx_, double hy_, Topology topo = Topology::Torus)
      : nx(nx_), ny(ny_), hx(hx_), hy(hy_), topology(topo), psi(nx_, ny_, 0.0) {
    if (nx < 8 || ny < 8) throw std::invalid_argument("Grid: nx, ny must be >= 8");
    if (!(hx > 0.0) || !(hy > 0.0)) throw std::invalid_argument("Grid: spacings must be positive");
  }

  // unit torus / unit box with n x n cells
  static Grid unit(int n, Topology topo = Topology::Torus) {
    return Grid(n, n, 1.0 / n, 1.0 / n, topo);
  }

  std::size_t cells() const { return static_cast<std::size_t>(nx) * ny; }
  double cell_area() const { return hx * hy; }

  bool inside(int i, int j) const { return i >= 0 && i < nx && j >= 0 && j < ny; }

  double cx(int i) const { return (i + 0.5) * hx; }
  double cy(int j) const { return (j + 0.5) * hy; }

  double cell_measure(int i, int j) const { return std::exp(psi(i, j)) * hx * hy; }

  // minimum-image displacement from cell a to cell b
  Vec2 displacement(int ia, int ja, int ib, int jb) const {
    double dx = cx(ib) - cx(ia);
    double dy = cy(jb) - cy(ja);
    if (topology == Topology::Torus) {
      const double Lx = nx * hx, Ly = ny * hy;
      dx -= Lx * std::round(dx / Lx);
      dy -= Ly * std::round(dy / Ly);
    }
    return {dx, dy};
  }
};

// deterministic pairwise summation; keeps reductions run-to-run identical and
// accurate enough for the conservation checks
inline double pairwise_sum(const double* a, std::size_t n) {
  if (n <= 32) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(a, half) + pairwise_sum(a + half, n - half);
}

inline double integrate(const Grid& grid, const ScalarField& f) {
  std::vector<double> terms(grid.cells());
  std::size_t k = 0;
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i) terms[k++] = f(i, j) * grid.cell_measure(i, j);
  return pairwise_sum(terms.data(), terms.size());
}

inline double total_measure(const Grid& grid) {
  ScalarField ones(grid.nx, grid.ny, 1.0);
  return integrate(grid, ones);
}

inline double measure(const Grid& grid, const Region& region) {
  if (region.count() == 0) throw std::domain_error("measure: region is empty");
  std::vector<double> terms;
  terms.reserve(grid.cells());
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i)
      if (region(i, j)) terms.push_back(grid.cell_measure(i, j));
  return pairwise_sum(terms.data(), terms.size());
}

inline ScalarField indicator(const Region& region) {
  ScalarField f(region.nx, region.ny, 0.0);
  for (std::size_t k = 0; k < region.mask.size(); ++k) f.v[k] = region.mask[k] ? 1.0 : 0.0;
  return f;
}

// Euclidean metric ball, minimum-image on the torus
inline Region disk_region(const Grid& grid, double cx, double cy, double radius) {
  if (!(radius >= 2.0 * std::max(grid.hx, grid.hy)))
    throw std::domain_error("disk_region: radius must be at least 2*max(hx,hy)");
  Region r(grid.nx, grid.ny);
  long n = 0;
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i) {
      double dx = grid.cx(i) - cx, dy = grid.cy(j) - cy;
      if (grid.topology == Topology::Torus) {
        const double Lx = grid.nx * grid.hx, Ly = grid.ny * grid.hy;
        dx -= Lx * std::round(dx / Lx);
        dy -= Ly * std::round(dy / Ly);
      }
      if (dx * dx + dy * dy <= radius * radius) {
        r(i, j) = 1;
        ++n;
      }
    }
  if (n == 0) throw std::domain_error("disk_region: empty region");
  return r;
}

inline Region rect_region(const Grid& grid, double x0, double y0, double x1, double y1) {
  Region r(grid.nx, grid.ny);
  long n = 0;
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i)
      if (grid.cx(i) >= x0 && grid.cx(i) <= x1 && grid.cy(j) >= y0 && grid.cy(j) <= y1) {
        r(i, j) = 1;
        ++n;
      }
  if (n == 0) throw std::domain_error("rect_region: empty region");
  return r;
}

inline Region full_region(const Grid& grid) {
  Region r(grid.nx, grid.ny);
  std::fill(r.mask.begin(), r.mask.end(), std::uint8_t{1});
  return r;
}

inline bool finite_entries(const ScalarField& f) {
  for (double x : f.v)
    if (!std::isfinite(x)) return false;
  return true;
}

// CSV dump, header i,j,x,y,value
inline void dump_field_csv(const Grid& grid, const ScalarField& f, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("dump_field_csv: cannot open " + path);
  out << "i,j,x,y,value\n";
  char buf[160];
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i) {
      std::snprintf(buf, sizeof buf, "%d,%d,%.17g,%.17g,%.17g\n", i, j, grid.cx(i), grid.cy(j),
                    f(i, j));
      out << buf;
    }
}

inline void dump_region_csv(const Grid& grid, const Region& r, const std::string& path) {
  dump_field_csv(grid, indicator(r), path);
}

}  // namespace fheat
