#pragma once

// Minkowski norm families on R^2: a strongly convex, positively 1-homogeneous
// norm F per point, its dual norm F*, the Legendre transform between vectors
// and covectors, the Hessian metrics g_v and g*_alpha, and the global
// reversibility / uniform convexity / smoothness constants.
//
// Supported families:
//   Quadratic(g)        F(v) = sqrt(g(v,v))                (Riemannian)
//   Randers(g, beta)    F(v) = sqrt(g(v,v)) + beta(v)      (irreversible)
//   LpEps(p, eps)       F(v) = sqrt(|v|_p^2 + eps |v|_2^2) (reversible, eps > 0)
//   Table(samples)      F sampled on the unit circle, interpolated
//
// All operations are pure; invalid parameters are rejected at construction.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace fheat {

// ---------------------------------------------------------------------------
// small linear algebra

struct Vec2 {
  double x = 0.0, y = 0.0;
};
struct Cov2 {
  double x = 0.0, y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double c, Vec2 a) { return {c * a.x, c * a.y}; }
inline Vec2 operator-(Vec2 a) { return {-a.x, -a.y}; }
inline Cov2 operator+(Cov2 a, Cov2 b) { return {a.x + b.x, a.y + b.y}; }
inline Cov2 operator-(Cov2 a, Cov2 b) { return {a.x - b.x, a.y - b.y}; }
inline Cov2 operator*(double c, Cov2 a) { return {c * a.x, c * a.y}; }
inline Cov2 operator-(Cov2 a) { return {-a.x, -a.y}; }

// natural pairing alpha(v)
inline double pair(Cov2 a, Vec2 v) { return a.x * v.x + a.y * v.y; }
// hypot avoids spurious under/overflow for extreme components
inline double norm2(Vec2 v) { return std::hypot(v.x, v.y); }
inline double norm2(Cov2 a) { return std::hypot(a.x, a.y); }

// symmetric 2x2 matrix
struct Mat2 {
  double xx = 1.0, xy = 0.0, yy = 1.0;

  Vec2 apply_to_cov(Cov2 a) const { return {xx * a.x + xy * a.y, xy * a.x + yy * a.y}; }
  Cov2 apply_to_vec(Vec2 v) const { return {xx * v.x + xy * v.y, xy * v.x + yy * v.y}; }
  double quad_vec(Vec2 v) const { return xx * v.x * v.x + 2.0 * xy * v.x * v.y + yy * v.y * v.y; }
  double quad_cov(Cov2 a) const { return xx * a.x * a.x + 2.0 * xy * a.x * a.y + yy * a.y * a.y; }
  double det() const { return xx * yy - xy * xy; }
  double trace() const { return xx + yy; }

  Mat2 inverse() const {
    const double d = det();
    if (d == 0.0) throw std::domain_error("Mat2::inverse: singular matrix");
    return {yy / d, -xy / d, xx / d};
  }

  // eigenvalues of a symmetric matrix, ascending
  std::array<double, 2> eigenvalues() const {
    const double m = 0.5 * (xx + yy);
    const double r = std::sqrt(0.25 * (xx - yy) * (xx - yy) + xy * xy);
    return {m - r, m + r};
  }

  bool positive_definite() const {
    return xx > 0.0 && det() > 0.0;
  }

  static Mat2 identity() { return {1.0, 0.0, 1.0}; }
  static Mat2 outer(Cov2 a) { return {a.x * a.x, a.x * a.y, a.y * a.y}; }
  static Mat2 outer(Vec2 v) { return {v.x * v.x, v.x * v.y, v.y * v.y}; }
};

inline Mat2 operator+(Mat2 a, Mat2 b) { return {a.xx + b.xx, a.xy + b.xy, a.yy + b.yy}; }
inline Mat2 operator-(Mat2 a, Mat2 b) { return {a.xx - b.xx, a.xy - b.xy, a.yy - b.yy}; }
inline Mat2 operator*(double c, Mat2 a) { return {c * a.xx, c * a.xy, c * a.yy}; }

// ---------------------------------------------------------------------------
// norm specification

enum class NormKind : std::uint8_t { Quadratic, Randers, LpEps, Table };

struct LegendreError : std::runtime_error {
  Cov2 alpha;
  double residual;
  LegendreError(Cov2 a, double r)
      : std::runtime_error("Legendre solve did not converge (residual " +
                           std::to_string(r) + ")"),
        alpha(a), residual(r) {}
};

class NormSpec {
 public:
  static NormSpec quadratic(Mat2 g) {
    if (!(g.xx > 0.0) || !(g.det() > 0.0) || !std::isfinite(g.trace()))
      throw std::invalid_argument("Quadratic norm: g must be symmetric positive-definite");
    NormSpec s;
    s.kind_ = NormKind::Quadratic;
    s.g_ = g;
    s.g_inv_ = g.inverse();
    return s;
  }

  static NormSpec randers(Mat2 g, Cov2 beta) {
    if (!(g.xx > 0.0) || !(g.det() > 0.0))
      throw std::invalid_argument("Randers norm: g must be symmetric positive-definite");
    const Mat2 gi = g.inverse();
    const double b2 = gi.quad_cov(beta);
    if (!(b2 < 1.0))
      throw std::invalid_argument("Randers norm: requires g^{-1}(beta,beta) < 1");
    NormSpec s;
    s.kind_ = NormKind::Randers;
    s.g_ = g;
    s.g_inv_ = gi;
    s.beta_ = beta;
    // The dual norm is again of Randers type:
    //   F*(a) = sqrt(Q(a,a)) + bd(a),
    //   Q = (sg^{-1} + (g^{-1}b)(g^{-1}b)^T)/s^2,  bd = -g^{-1}b/s,  s = 1 - b2.
    const double sig = 1.0 - b2;
    const Vec2 gib = gi.apply_to_cov(beta);
    s.dual_q_ = {(sig * gi.xx + gib.x * gib.x) / (sig * sig),
                 (sig * gi.xy + gib.x * gib.y) / (sig * sig),
                 (sig * gi.yy + gib.y * gib.y) / (sig * sig)};
    s.dual_drift_ = {-gib.x / sig, -gib.y / sig};
    return s;
  }

  static NormSpec lp(double p, double eps) {
    if (!(p >= 1.0))
      throw std::invalid_argument("LpEps norm: p must lie in [1, inf]");
    if (!(eps > 0.0))
      throw std::invalid_argument("LpEps norm: eps must be positive");
    NormSpec s;
    s.kind_ = NormKind::LpEps;
    s.p_ = p;
    s.eps_ = eps;
    return s;
  }

  static NormSpec lp_inf(double eps) { return lp(std::numeric_limits<double>::infinity(), eps); }

  static NormSpec table(std::vector<double> samples) {
    if (samples.size() < 16)
      throw std::invalid_argument("Table norm: need at least 16 directions");
    for (double v : samples)
      if (!(v > 0.0) || !std::isfinite(v))
        throw std::invalid_argument("Table norm: samples must be positive and finite");
    NormSpec s;
    s.kind_ = NormKind::Table;
    s.table_ = std::move(samples);
    return s;
  }

  // tabulate an existing norm on n uniformly spaced unit directions
  static NormSpec table_from(const NormSpec& src, int n);

  NormKind kind() const { return kind_; }
  const Mat2& g() const { return g_; }
  const Mat2& g_inv() const { return g_inv_; }
  const Mat2& dual_q() const { return dual_q_; }
  Vec2 dual_drift() const { return dual_drift_; }
  Cov2 beta() const { return beta_; }
  double p() const { return p_; }
  double eps() const { return eps_; }
  const std::vector<double>& table() const { return table_; }

  bool reversible() const {
    return kind_ == NormKind::Quadratic || kind_ == NormKind::LpEps;
  }

 private:
  NormSpec() = default;
  NormKind kind_ = NormKind::Quadratic;
  Mat2 g_ = Mat2::identity();
  Mat2 g_inv_ = Mat2::identity();
  Mat2 dual_q_ = Mat2::identity();
  Vec2 dual_drift_{0.0, 0.0};
  Cov2 beta_{0.0, 0.0};
  double p_ = 2.0;
  double eps_ = 1e-2;
  std::vector<double> table_;
};

namespace detail {

constexpr double kLegendreTol = 1e-13;

inline double sgn(double t) { return t < 0.0 ? -1.0 : 1.0; }

// periodic Catmull-Rom interpolation of table samples over [0, 2pi)
inline double table_interp(const std::vector<double>& tab, double theta, double* deriv = nullptr) {
  const int n = static_cast<int>(tab.size());
  const double two_pi = 2.0 * M_PI;
  double t = theta / two_pi * n;
  t -= std::floor(t / n) * n;
  int i1 = static_cast<int>(std::floor(t));
  if (i1 >= n) i1 -= n;
  const double u = t - std::floor(t);
  const int i0 = (i1 + n - 1) % n, i2 = (i1 + 1) % n, i3 = (i1 + 2) % n;
  const double p0 = tab[i0], p1 = tab[i1], p2 = tab[i2], p3 = tab[i3];
  const double a = -0.5 * p0 + 1.5 * p1 - 1.5 * p2 + 0.5 * p3;
  const double b = p0 - 2.5 * p1 + 2.0 * p2 - 0.5 * p3;
  const double c = -0.5 * p0 + 0.5 * p2;
  const double d = p1;
  if (deriv) *deriv = (3.0 * a * u * u + 2.0 * b * u + c) * n / two_pi;
  return ((a * u + b) * u + c) * u + d;
}

// --- LpEps building blocks -------------------------------------------------

inline double lp_norm(double p, double ax, double ay) {
  if (std::isinf(p)) return std::max(ax, ay);
  if (p == 1.0) return ax + ay;
  if (p == 2.0) return std::hypot(ax, ay);
  return std::pow(std::pow(ax, p) + std::pow(ay, p), 1.0 / p);
}

// Legendre transform for F^2 = (|x|+|y|)^2 + eps |v|_2^2, solved per region.
// The unit ball keeps the l1 corners, so the dual metric is singular on the
// open dual regions facing them; the returned tensors are exact one-sided
// values there.
inline Vec2 lp1_dual_to_primal(double e, Cov2 al) {
  const double a = std::fabs(al.x), b = std::fabs(al.y);
  const double sx = sgn(al.x), sy = sgn(al.y);
  if (a == 0.0 && b == 0.0) return {0.0, 0.0};
  const double D = e * (2.0 + e);
  if (a * (1.0 + e) - b > 0.0 && b * (1.0 + e) - a > 0.0) {
    return {sx * (a * (1.0 + e) - b) / D, sy * (b * (1.0 + e) - a) / D};
  }
  if (a >= b) return {sx * a / (1.0 + e), 0.0};
  return {0.0, sy * b / (1.0 + e)};
}

inline Mat2 lp1_dual_tensor(double e, Cov2 al) {
  const double a = std::fabs(al.x), b = std::fabs(al.y);
  const double s = sgn(al.x) * sgn(al.y);
  const double D = e * (2.0 + e);
  if (a * (1.0 + e) - b > 0.0 && b * (1.0 + e) - a > 0.0)
    return {(1.0 + e) / D, -s / D, (1.0 + e) / D};
  if (a >= b) return {1.0 / (1.0 + e), 0.0, 0.0};
  return {0.0, 0.0, 1.0 / (1.0 + e)};
}

inline Cov2 lp1_primal_to_dual(double e, Vec2 v) {
  const double wx = std::fabs(v.x), wy = std::fabs(v.y);
  const double sx = sgn(v.x), sy = sgn(v.y);
  if (wx > 0.0 && wy > 0.0)
    return {sx * ((1.0 + e) * wx + wy), sy * (wx + (1.0 + e) * wy)};
  if (wx > 0.0) return {sx * (1.0 + e) * wx, 0.0};
  return {0.0, sy * (1.0 + e) * wy};
}

inline Mat2 lp1_primal_tensor(double e, Vec2 v) {
  const double s = (v.x * v.y < 0.0) ? -1.0 : 1.0;
  return {1.0 + e, s, 1.0 + e};
}

// Legendre transform for F^2 = max(|x|,|y|)^2 + eps |v|_2^2.
inline Vec2 lpinf_dual_to_primal(double e, Cov2 al) {
  const double a = std::fabs(al.x), b = std::fabs(al.y);
  const double sx = sgn(al.x), sy = sgn(al.y);
  if (a == 0.0 && b == 0.0) return {0.0, 0.0};
  if (a * e > b * (1.0 + e)) return {sx * a / (1.0 + e), sy * b / e};
  if (b * e > a * (1.0 + e)) return {sx * a / e, sy * b / (1.0 + e)};
  const double s = (a + b) / (1.0 + 2.0 * e);
  return {sx * s, sy * s};
}

inline Mat2 lpinf_dual_tensor(double e, Cov2 al) {
  const double a = std::fabs(al.x), b = std::fabs(al.y);
  const double s = sgn(al.x) * sgn(al.y);
  if (a * e > b * (1.0 + e)) return {1.0 / (1.0 + e), 0.0, 1.0 / e};
  if (b * e > a * (1.0 + e)) return {1.0 / e, 0.0, 1.0 / (1.0 + e)};
  const double c = 1.0 / (1.0 + 2.0 * e);
  return {c, s * c, c};
}

inline Cov2 lpinf_primal_to_dual(double e, Vec2 v) {
  const double wx = std::fabs(v.x), wy = std::fabs(v.y);
  const double sx = sgn(v.x), sy = sgn(v.y);
  if (wx > wy) return {sx * (1.0 + e) * wx, sy * e * wy};
  if (wy > wx) return {sx * e * wx, sy * (1.0 + e) * wy};
  return {sx * (0.5 + e) * wx, sy * (0.5 + e) * wy};
}

inline Mat2 lpinf_primal_tensor(double e, Vec2 v) {
  if (std::fabs(v.x) >= std::fabs(v.y)) return {1.0 + e, 0.0, e};
  return {e, 0.0, 1.0 + e};
}

// smoothed |v_i| used by the generic-p path; eta keeps the Hessian bounded
// for 1 < p < 2 without breaking 1-homogeneity
constexpr double kLpEta = 1e-8;

struct LpParts {
  double W;        // lp norm of the smoothed components
  Cov2 dW;         // gradient
  Mat2 d2W;        // Hessian
};

inline LpParts lp_generic_parts(double p, Vec2 v) {
  const double r2 = v.x * v.x + v.y * v.y;
  const double c[2] = {v.x, v.y};
  double s[2], ds[2][2], d2s[2][2][2];
  for (int i = 0; i < 2; ++i) {
    s[i] = std::sqrt(c[i] * c[i] + kLpEta * kLpEta * r2);
    for (int j = 0; j < 2; ++j)
      ds[i][j] = ((i == j ? c[i] : 0.0) + kLpEta * kLpEta * c[j]) / s[i];
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k) {
        const double lin = ((i == j && j == k) ? 1.0 : 0.0) + (j == k ? kLpEta * kLpEta : 0.0);
        d2s[i][j][k] = (lin - ds[i][j] * ds[i][k]) / s[i];
      }
  }
  const double S = std::pow(s[0], p) + std::pow(s[1], p);
  const double W = std::pow(S, 1.0 / p);
  double dS[2] = {0, 0}, d2S[2][2] = {{0, 0}, {0, 0}};
  for (int i = 0; i < 2; ++i) {
    const double f1 = p * std::pow(s[i], p - 1.0);
    const double f2 = p * (p - 1.0) * std::pow(s[i], p - 2.0);
    for (int j = 0; j < 2; ++j) {
      dS[j] += f1 * ds[i][j];
      for (int k = 0; k < 2; ++k)
        d2S[j][k] += f2 * ds[i][j] * ds[i][k] + f1 * d2s[i][j][k];
    }
  }
  LpParts out;
  out.W = W;
  const double q = 1.0 / p;
  const double WS1 = q * std::pow(S, q - 1.0);
  const double WS2 = q * (q - 1.0) * std::pow(S, q - 2.0);
  out.dW = {WS1 * dS[0], WS1 * dS[1]};
  out.d2W = {WS2 * dS[0] * dS[0] + WS1 * d2S[0][0],
             WS2 * dS[0] * dS[1] + WS1 * d2S[0][1],
             WS2 * dS[1] * dS[1] + WS1 * d2S[1][1]};
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// F and its derivatives

inline double eval_F(const NormSpec& spec, Vec2 v) {
  switch (spec.kind()) {
    case NormKind::Quadratic:
      return std::sqrt(std::max(0.0, spec.g().quad_vec(v)));
    case NormKind::Randers:
      return std::sqrt(std::max(0.0, spec.g().quad_vec(v))) + pair(spec.beta(), v);
    case NormKind::LpEps: {
      const double lp = detail::lp_norm(spec.p(), std::fabs(v.x), std::fabs(v.y));
      return std::sqrt(lp * lp + spec.eps() * (v.x * v.x + v.y * v.y));
    }
    case NormKind::Table: {
      const double r = norm2(v);
      if (r == 0.0) return 0.0;
      return r * detail::table_interp(spec.table(), std::atan2(v.y, v.x));
    }
  }
  return 0.0;
}

// primal Hessian metric g_v = (1/2) Hess(F^2) at v != 0.
// For kinds with gradient kinks (LpEps p in {1, inf} on the kink set) the
// value is the one-sided limit of the region containing v.
inline Mat2 metric_tensor_primal(const NormSpec& spec, Vec2 v) {
  if (v.x == 0.0 && v.y == 0.0)
    throw std::domain_error("metric_tensor_primal: v must be nonzero");
  // the tensor is 0-homogeneous; evaluating on the unit sphere keeps the
  // closed forms clear of under/overflow for extreme magnitudes
  v = (1.0 / norm2(v)) * v;
  switch (spec.kind()) {
    case NormKind::Quadratic:
      return spec.g();
    case NormKind::Randers: {
      const double A = std::sqrt(spec.g().quad_vec(v));
      const Cov2 n = (1.0 / A) * spec.g().apply_to_vec(v);
      const Cov2 nb = n + spec.beta();
      const double FA = (A + pair(spec.beta(), v)) / A;
      return Mat2::outer(nb) + FA * (spec.g() - Mat2::outer(n));
    }
    case NormKind::LpEps: {
      const double e = spec.eps();
      if (std::isinf(spec.p())) return detail::lpinf_primal_tensor(e, v);
      if (spec.p() == 1.0) return detail::lp1_primal_tensor(e, v);
      if (spec.p() == 2.0) return (1.0 + e) * Mat2::identity();
      const auto parts = detail::lp_generic_parts(spec.p(), v);
      return Mat2::outer(Cov2{parts.dW.x, parts.dW.y}) + parts.W * parts.d2W +
             e * Mat2::identity();
    }
    case NormKind::Table: {
      // central finite differences of (1/2) F^2
      const double h = 1e-5 * norm2(v);
      auto f = [&](double x, double y) {
        const double F = eval_F(spec, {x, y});
        return 0.5 * F * F;
      };
      const double fxx =
          (f(v.x + h, v.y) - 2.0 * f(v.x, v.y) + f(v.x - h, v.y)) / (h * h);
      const double fyy =
          (f(v.x, v.y + h) - 2.0 * f(v.x, v.y) + f(v.x, v.y - h)) / (h * h);
      const double fxy = (f(v.x + h, v.y + h) - f(v.x + h, v.y - h) -
                          f(v.x - h, v.y + h) + f(v.x - h, v.y - h)) /
                         (4.0 * h * h);
      return {fxx, fxy, fyy};
    }
  }
  return Mat2::identity();
}

// (L*)^{-1}: v -> alpha = (1/2) grad(F^2)(v)
inline Cov2 legendre_primal_to_dual(const NormSpec& spec, Vec2 v) {
  if (v.x == 0.0 && v.y == 0.0)
    throw std::domain_error("legendre_primal_to_dual: v must be nonzero");
  switch (spec.kind()) {
    case NormKind::Quadratic:
      return spec.g().apply_to_vec(v);
    case NormKind::Randers: {
      // 1-homogeneous map, evaluated on the unit sphere and scaled back
      const double s = norm2(v);
      const Vec2 w = (1.0 / s) * v;
      const double A = std::sqrt(spec.g().quad_vec(w));
      const Cov2 n = (1.0 / A) * spec.g().apply_to_vec(w);
      const double F = A + pair(spec.beta(), w);
      return (s * F) * (n + spec.beta());
    }
    case NormKind::LpEps: {
      const double e = spec.eps();
      if (std::isinf(spec.p())) return detail::lpinf_primal_to_dual(e, v);
      if (spec.p() == 1.0) return detail::lp1_primal_to_dual(e, v);
      if (spec.p() == 2.0) return {(1.0 + e) * v.x, (1.0 + e) * v.y};
      const double s = norm2(v);
      const Vec2 w = (1.0 / s) * v;
      const auto parts = detail::lp_generic_parts(spec.p(), w);
      return {s * (parts.W * parts.dW.x + e * w.x), s * (parts.W * parts.dW.y + e * w.y)};
    }
    case NormKind::Table: {
      double dG;
      const double th = std::atan2(v.y, v.x);
      const double G = detail::table_interp(spec.table(), th, &dG);
      const double r = norm2(v);
      const double ct = v.x / r, st = v.y / r;
      // grad F for F = r G(theta)
      const Cov2 dF{G * ct - dG * st, G * st + dG * ct};
      return (r * G) * dF;
    }
  }
  return {v.x, v.y};
}

namespace detail {

// Damped Newton for L*: solves (L*)^{-1}(v) = alpha, the optimality system of
// the strongly convex objective (1/2)F^2(v) - alpha(v). The Jacobian g_v is
// symmetric positive-definite, so the Newton direction is a descent direction
// for the residual norm and a residual-based backtracking search converges.
inline Vec2 legendre_newton_unit(const NormSpec& spec, Cov2 al) {
  const double scale = 1.0 + norm2(al);
  Vec2 v{al.x, al.y};
  if (eval_F(spec, v) == 0.0) v = {norm2(al), 0.0};
  auto residual = [&](Vec2 w) { return norm2(legendre_primal_to_dual(spec, w) - al); };
  for (int it = 0; it < 100; ++it) {
    const Cov2 grad = legendre_primal_to_dual(spec, v) - al;
    const double res = norm2(grad);
    if (res <= kLegendreTol * scale) return v;
    const Mat2 H = metric_tensor_primal(spec, v);
    const Vec2 dir = -1.0 * H.inverse().apply_to_cov(grad);
    double step = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 60; ++ls) {
      const Vec2 cand = v + step * dir;
      if (!(cand.x == 0.0 && cand.y == 0.0)) {
        const double rc = residual(cand);
        if (std::isfinite(rc) && rc < res) {
          v = cand;
          moved = true;
          break;
        }
      }
      step *= 0.5;
    }
    if (!moved) {
      // residual at its floating-point floor
      if (res <= 1e-10 * scale) return v;
      throw LegendreError(al, res);
    }
  }
  const double res = residual(v);
  if (res <= 1e-10 * scale) return v;
  throw LegendreError(al, res);
}

// by 1-homogeneity of L*, solve at the normalized covector; this keeps the
// iteration away from under/overflow for extreme magnitudes
inline Vec2 legendre_newton(const NormSpec& spec, Cov2 al) {
  const double s = norm2(al);
  if (!(s > 0.0)) return {0.0, 0.0};
  const Vec2 v = legendre_newton_unit(spec, (1.0 / s) * al);
  return s * v;
}

// maximize alpha(unit(theta)) / F(unit(theta)) for Table norms: coarse scan
// over the sample angles, then golden-section refinement
inline Vec2 table_dual_to_primal(const NormSpec& spec, Cov2 al) {
  const int n = static_cast<int>(spec.table().size());
  const double two_pi = 2.0 * M_PI;
  auto q = [&](double th) {
    const Vec2 u{std::cos(th), std::sin(th)};
    return pair(al, u) / detail::table_interp(spec.table(), th);
  };
  int best = 0;
  double qbest = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < n; ++k) {
    const double val = q(two_pi * k / n);
    if (val > qbest) {
      qbest = val;
      best = k;
    }
  }
  double lo = two_pi * (best - 1) / n, hi = two_pi * (best + 1) / n;
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = hi - gr * (hi - lo), d = lo + gr * (hi - lo);
  double qc = q(c), qd = q(d);
  for (int it = 0; it < 80; ++it) {
    if (qc > qd) {
      hi = d;
      d = c;
      qd = qc;
      c = hi - gr * (hi - lo);
      qc = q(c);
    } else {
      lo = c;
      c = d;
      qc = qd;
      d = lo + gr * (hi - lo);
      qd = q(d);
    }
  }
  const double th = 0.5 * (lo + hi);
  const double Fstar = std::max(q(th), 0.0);
  if (Fstar == 0.0) return {0.0, 0.0};
  const Vec2 u{std::cos(th), std::sin(th)};
  const double G = detail::table_interp(spec.table(), th);
  return (Fstar / G) * u;
}

}  // namespace detail

namespace detail {

// F* of a Randers norm through its closed dual-Randers representation
inline double randers_dual_norm(const NormSpec& spec, Cov2 al) {
  return std::sqrt(spec.dual_q().quad_cov(al)) + pair(al, spec.dual_drift());
}

}  // namespace detail

// L*: alpha -> the unique v with F(v) = F*(alpha), alpha(v) = F*(alpha)^2
inline Vec2 legendre_dual_to_primal(const NormSpec& spec, Cov2 al) {
  if (al.x == 0.0 && al.y == 0.0) return {0.0, 0.0};
  switch (spec.kind()) {
    case NormKind::Quadratic:
      return spec.g_inv().apply_to_cov(al);
    case NormKind::Randers: {
      // L* = (1/2) grad (F*)^2 = F* (Q a / |a|_Q + drift), all closed form
      const double s = norm2(al);
      const Cov2 an = (1.0 / s) * al;
      const double At = std::sqrt(spec.dual_q().quad_cov(an));
      const Vec2 n = (1.0 / At) * spec.dual_q().apply_to_cov(an);
      const double fs = At + pair(an, spec.dual_drift());
      return (s * fs) * (n + spec.dual_drift());
    }
    case NormKind::LpEps: {
      const double e = spec.eps();
      if (std::isinf(spec.p())) return detail::lpinf_dual_to_primal(e, al);
      if (spec.p() == 1.0) return detail::lp1_dual_to_primal(e, al);
      if (spec.p() == 2.0) return {al.x / (1.0 + e), al.y / (1.0 + e)};
      return detail::legendre_newton(spec, al);
    }
    case NormKind::Table:
      return detail::table_dual_to_primal(spec, al);
  }
  return {al.x, al.y};
}

// dual norm F*(alpha) = sup_{F(v)=1} alpha(v), via the Legendre identity
// F* = alpha(L*(alpha)) / F(L*(alpha)) for the non-quadratic kinds
inline double eval_F_star(const NormSpec& spec, Cov2 al) {
  if (al.x == 0.0 && al.y == 0.0) return 0.0;
  switch (spec.kind()) {
    case NormKind::Quadratic:
      return std::sqrt(std::max(0.0, spec.g_inv().quad_cov(al)));
    case NormKind::Randers: {
      const double s = norm2(al);
      return s * detail::randers_dual_norm(spec, (1.0 / s) * al);
    }
    case NormKind::LpEps: {
      const double e = spec.eps();
      if (spec.p() == 2.0) return norm2(al) / std::sqrt(1.0 + e);
      break;
    }
    default:
      break;
  }
  const double s = norm2(al);
  const Cov2 an = (1.0 / s) * al;
  const Vec2 v = legendre_dual_to_primal(spec, an);
  const double F = eval_F(spec, v);
  if (F == 0.0) return 0.0;
  return s * pair(an, v) / F;
}

// dual Hessian metric g*_alpha = (1/2) Hess((F*)^2) at alpha != 0.
// For LpEps p in {1, inf} the exact tensor is positive-semidefinite only:
// it degenerates on the dual faces produced by the unit-ball corners.
inline Mat2 metric_tensor_dual(const NormSpec& spec, Cov2 al) {
  if (al.x == 0.0 && al.y == 0.0)
    throw std::domain_error("metric_tensor_dual: alpha must be nonzero");
  switch (spec.kind()) {
    case NormKind::Quadratic:
      return spec.g_inv();
    case NormKind::Randers: {
      // same Hessian algebra as the primal Randers metric, applied to the
      // dual-Randers representation (Q, drift)
      const Cov2 an = (1.0 / norm2(al)) * al;
      const Mat2& Q = spec.dual_q();
      const double At = std::sqrt(Q.quad_cov(an));
      const Vec2 n = (1.0 / At) * Q.apply_to_cov(an);
      const Vec2 nb = n + spec.dual_drift();
      const double fs = At + pair(an, spec.dual_drift());
      return Mat2::outer(nb) + (fs / At) * (Q - Mat2::outer(n));
    }
    case NormKind::LpEps: {
      const double e = spec.eps();
      if (std::isinf(spec.p())) return detail::lpinf_dual_tensor(e, al);
      if (spec.p() == 1.0) return detail::lp1_dual_tensor(e, al);
      if (spec.p() == 2.0) return (1.0 / (1.0 + e)) * Mat2::identity();
      return metric_tensor_primal(spec, detail::legendre_newton(spec, al)).inverse();
    }
    case NormKind::Table: {
      const double h = 1e-4 * norm2(al);
      auto f = [&](double x, double y) {
        const double Fs = eval_F_star(spec, {x, y});
        return 0.5 * Fs * Fs;
      };
      const double fxx =
          (f(al.x + h, al.y) - 2.0 * f(al.x, al.y) + f(al.x - h, al.y)) / (h * h);
      const double fyy =
          (f(al.x, al.y + h) - 2.0 * f(al.x, al.y) + f(al.x, al.y - h)) / (h * h);
      const double fxy = (f(al.x + h, al.y + h) - f(al.x + h, al.y - h) -
                          f(al.x - h, al.y + h) + f(al.x - h, al.y - h)) /
                         (4.0 * h * h);
      Mat2 m{fxx, fxy, fyy};
      // interpolation noise can leave a slightly indefinite matrix
      const auto ev = m.eigenvalues();
      if (ev[0] <= 0.0) {
        const double lift = -ev[0] + 1e-12 * std::max(1.0, ev[1]);
        m.xx += lift;
        m.yy += lift;
      }
      return m;
    }
  }
  return Mat2::identity();
}

inline NormSpec NormSpec::table_from(const NormSpec& src, int n) {
  std::vector<double> samples(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    const double th = 2.0 * M_PI * k / n;
    samples[static_cast<std::size_t>(k)] = eval_F(src, {std::cos(th), std::sin(th)});
  }
  return NormSpec::table(std::move(samples));
}

// ---------------------------------------------------------------------------
// global constants

struct NormConstants {
  double lambda = 1.0;   // reversibility sup F(v)/F(-v)
  double c_unif = 1.0;   // uniform convexity sup F(w)^2 / g_v(w,w)
  double s_unif = 1.0;   // uniform smoothness sup g_v(w,w) / F(w)^2
  long n_samples = 0;    // direction pairs inspected
};

namespace detail {

// golden-section maximization over a fixed bracket; returns the maximum and
// writes the maximizer to *argmax
template <typename Fn>
inline double golden_max(Fn&& f, double lo, double hi, double* argmax = nullptr,
                         int iters = 80) {
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = hi - gr * (hi - lo), d = lo + gr * (hi - lo);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < iters; ++it) {
    if (fc > fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - gr * (hi - lo);
      fc = f(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + gr * (hi - lo);
      fd = f(d);
    }
  }
  const double mid = 0.5 * (lo + hi);
  const double fm = f(mid);
  if (argmax) *argmax = mid;
  return std::max(fm, std::max(fc, fd));
}

}  // namespace detail

// Direction-sampled approximations of the sups over the tangent sphere. The
// angular grid locates the extremal basin and a golden-section refinement
// pins the maximum, so the estimates are stable in n_dir (Randers norms have
// lambda = sqrt(C) = sqrt(S) exactly and a raw grid scan would order the
// three sups inconsistently).
inline NormConstants compute_constants(const NormSpec& spec, int n_dir = 512) {
  if (n_dir < 64) throw std::invalid_argument("compute_constants: n_dir must be >= 64");
  NormConstants out;
  auto unit = [](double th) { return Vec2{std::cos(th), std::sin(th)}; };
  auto Fth = [&](double th) { return eval_F(spec, unit(th)); };
  const double step = 2.0 * M_PI / n_dir;

  auto lam_of = [&](double th) { return Fth(th) / Fth(th + M_PI); };
  auto ratio_c = [&](double tv, double tw) {
    const double q = metric_tensor_primal(spec, unit(tv)).quad_vec(unit(tw));
    const double F2 = Fth(tw) * Fth(tw);
    return q > 0.0 ? F2 / q : 0.0;
  };
  auto ratio_s = [&](double tv, double tw) {
    const double q = metric_tensor_primal(spec, unit(tv)).quad_vec(unit(tw));
    return q / (Fth(tw) * Fth(tw));
  };

  double lam = 1.0, lam_th = 0.0;
  double c = 1.0, c_tv = 0.0, c_tw = 0.0;
  double s = 1.0, s_tv = 0.0, s_tw = 0.0;
  std::vector<Mat2> gv(static_cast<std::size_t>(n_dir));
  std::vector<double> Fd(static_cast<std::size_t>(n_dir));
  for (int k = 0; k < n_dir; ++k) {
    Fd[k] = Fth(step * k);
    gv[k] = metric_tensor_primal(spec, unit(step * k));
  }
  for (int i = 0; i < n_dir; ++i) {
    const double l = Fd[i] / Fd[(i + n_dir / 2) % n_dir];
    if (l > lam) {
      lam = l;
      lam_th = step * i;
    }
    for (int j = 0; j < n_dir; ++j) {
      const double q = gv[i].quad_vec(unit(step * j));
      const double F2 = Fd[j] * Fd[j];
      if (q > 0.0 && F2 / q > c) {
        c = F2 / q;
        c_tv = step * i;
        c_tw = step * j;
      }
      if (q / F2 > s) {
        s = q / F2;
        s_tv = step * i;
        s_tw = step * j;
      }
    }
  }

  lam = std::max(lam, detail::golden_max(lam_of, lam_th - step, lam_th + step));

  // coordinate-wise golden ascent around the best grid pair
  auto refine_pair = [&](auto&& f, double& tv, double& tw, double current) {
    double best = current;
    for (int round = 0; round < 3; ++round) {
      double arg = tw;
      const double fw = detail::golden_max([&](double t) { return f(tv, t); }, tw - step,
                                           tw + step, &arg);
      if (fw > best) {
        best = fw;
        tw = arg;
      }
      const double fv = detail::golden_max([&](double t) { return f(t, tw); }, tv - step,
                                           tv + step, &arg);
      if (fv > best) {
        best = fv;
        tv = arg;
      }
    }
    return best;
  };
  c = refine_pair(ratio_c, c_tv, c_tw, c);
  s = refine_pair(ratio_s, s_tv, s_tw, s);

  out.lambda = std::max(1.0, lam);
  out.c_unif = std::max(1.0, c);
  out.s_unif = std::max(1.0, s);
  out.n_samples = static_cast<long>(n_dir) * n_dir;
  return out;
}

}  // namespace fheat
