#pragma once

// Selling decomposition of a symmetric positive-semidefinite 2x2 matrix over
// integer lattice directions:
//
//   M = sum_k  gamma_k e_k e_k^T,   gamma_k >= 0,  e_k in Z^2,  k < 3.
//
// Obtained from an obtuse superbase (v0, v1, v2), v0+v1+v2 = 0 with
// <v_i, M v_j> <= 0 for i != j; then gamma_{ij} = -<v_i, M v_j> and the
// direction paired with (i,j) is v_k rotated by 90 degrees. The decomposition
// is exact, which is what makes the diffusion stencil built on it both
// consistent and monotone.

#include <array>
#include <cmath>
#include <stdexcept>

#include "fheat/norms.hpp"

namespace fheat {

struct SellingTerm {
  int ox = 0, oy = 0;
  double w = 0.0;
};

using SellingDecomp = std::array<SellingTerm, 3>;

inline SellingDecomp selling_decompose(const Mat2& M) {
  auto mdot = [&M](const std::array<int, 2>& a, const std::array<int, 2>& b) {
    return a[0] * (M.xx * b[0] + M.xy * b[1]) + a[1] * (M.xy * b[0] + M.yy * b[1]);
  };
  std::array<std::array<int, 2>, 3> v = {{{1, 0}, {0, 1}, {-1, -1}}};
  const double tol = 1e-14 * (std::fabs(M.xx) + std::fabs(M.yy) + 1e-300);
  bool obtuse = false;
  for (int iter = 0; iter < 200 && !obtuse; ++iter) {
    obtuse = true;
    for (int i = 0; i < 3 && obtuse; ++i)
      for (int j = i + 1; j < 3 && obtuse; ++j) {
        if (mdot(v[i], v[j]) > tol) {
          const int k = 3 - i - j;
          // superbase flip: (vi, vj, vk) -> (-vi, vj, vi - vj)
          const std::array<int, 2> vi = v[i], vj = v[j];
          v[i] = {-vi[0], -vi[1]};
          v[j] = vj;
          v[k] = {vi[0] - vj[0], vi[1] - vj[1]};
          obtuse = false;
        }
      }
  }
  if (!obtuse) throw std::runtime_error("selling_decompose: reduction did not terminate");
  SellingDecomp out;
  int t = 0;
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j) {
      const int k = 3 - i - j;
      const double w = std::max(0.0, -mdot(v[i], v[j]));
      out[t++] = {-v[k][1], v[k][0], w};  // v_k rotated by 90 degrees
    }
  return out;
}

}  // namespace fheat
