#pragma once

// Experiment harness: evolve indicator data over a geometric ladder of times,
// assemble the heat-content records P_t(A,B), check the non-asymptotic upper
// bound P_t <= sqrt(m(A) m(B)) exp(-(d-3hk)^2/(2t)) at every recorded t,
// extrapolate V(t) = -2t log P_t to its short-time limit, and compare it with
// the squared eikonal distance. Both orientations are computed: P_t(A,B)
// tracks the distance from A to B, so the report distinguishes them whenever
// the norm is irreversible.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fheat/config.hpp"
#include "fheat/distance.hpp"
#include "fheat/grid.hpp"
#include "fheat/heat.hpp"

namespace fheat {

constexpr double kUnderflowFloor = 1e-280;

struct VaradhanRow {
  double t = 0.0;
  double p_t = 0.0;
  double v_t = 0.0;        // -2 t log P_t
  double bound_rhs = 0.0;  // sqrt(m(A) m(B)) exp(-(d - 3 h kappa)^2 / (2t))
  double slack = 0.0;      // bound_rhs - p_t, nonnegative when the bound holds
};

struct OrientationReport {
  std::string label;
  std::vector<VaradhanRow> rows;  // decreasing t, underflowed rows dropped
  std::vector<double> dropped;    // times whose P_t fell below the floor
  double d = 0.0;                 // eikonal set distance for this orientation
  double v_extrap = 0.0;
  double rel_error = 0.0;  // |v_extrap - d^2| / d^2
  bool bound_ok = true;
  bool tail_monotone = true;  // V decreasing along the recorded tail
};

struct VaradhanReport {
  OrientationReport forward;  // P_t(A,B): heat from B integrated over A
  OrientationReport reverse;  // P_t(B,A)
  double d_ab = 0.0, d_ba = 0.0;
  double kappa = 1.0;
  double m_a = 0.0, m_b = 0.0, m_total = 0.0;
  double grid_h = 0.0;
  Extrapolation extrapolation = Extrapolation::Richardson;
};

namespace detail {

// least-squares line through the n smallest-t points, evaluated at t = 0
inline double fit_intercept(const std::vector<VaradhanRow>& rows, std::size_t n) {
  const std::size_t m = std::min(n, rows.size());
  double st = 0.0, sv = 0.0;
  for (std::size_t k = rows.size() - m; k < rows.size(); ++k) {
    st += rows[k].t;
    sv += rows[k].v_t;
  }
  const double tbar = st / m, vbar = sv / m;
  double stt = 0.0, stv = 0.0;
  for (std::size_t k = rows.size() - m; k < rows.size(); ++k) {
    stt += (rows[k].t - tbar) * (rows[k].t - tbar);
    stv += (rows[k].t - tbar) * (rows[k].v_t - vbar);
  }
  const double slope = stv / stt;
  return vbar - slope * tbar;
}

// two-point elimination of the linear term using the smallest times
inline double richardson_limit(const std::vector<VaradhanRow>& rows) {
  const std::size_t n = rows.size();
  const double t0 = rows[n - 2].t, v0 = rows[n - 2].v_t;
  const double t1 = rows[n - 1].t, v1 = rows[n - 1].v_t;
  return (v1 * t0 - v0 * t1) / (t0 - t1);
}

inline OrientationReport orientation_report(const Grid& grid, const FinslerField& F,
                                            const Region& from, const Region& to,
                                            const std::vector<double>& ladder_desc, double d,
                                            double kappa, double m_from, double m_to,
                                            Extrapolation extrap, double cfl,
                                            const std::string& label) {
  OrientationReport rep;
  rep.label = label;
  rep.d = d;

  std::vector<double> times(ladder_desc.rbegin(), ladder_desc.rend());
  const auto pt = pt_mass(grid, F, from, to, times, cfl);

  const double h = std::max(grid.hx, grid.hy);
  const double d_eff = std::max(d - 3.0 * h * kappa, 0.0);
  const double pref = std::sqrt(m_from * m_to);
  for (auto it = pt.rbegin(); it != pt.rend(); ++it) {  // decreasing t
    const auto [t, p] = *it;
    if (!(p > kUnderflowFloor)) {
      rep.dropped.push_back(t);
      continue;
    }
    VaradhanRow row;
    row.t = t;
    row.p_t = p;
    row.v_t = -2.0 * t * std::log(p);
    row.bound_rhs = pref * std::exp(-d_eff * d_eff / (2.0 * t));
    row.slack = row.bound_rhs - p;
    if (row.slack < 0.0) rep.bound_ok = false;
    rep.rows.push_back(row);
  }
  if (rep.rows.size() < 2)
    throw std::runtime_error("run_varadhan: ladder fully below the underflow floor for " + label);

  for (std::size_t k = rep.rows.size() - std::min<std::size_t>(4, rep.rows.size());
       k + 1 < rep.rows.size(); ++k)
    if (rep.rows[k + 1].v_t > rep.rows[k].v_t) rep.tail_monotone = false;

  rep.v_extrap = (extrap == Extrapolation::LinearInT) ? fit_intercept(rep.rows, 4)
                                                      : richardson_limit(rep.rows);
  rep.rel_error = std::fabs(rep.v_extrap - d * d) / (d * d);
  return rep;
}

}  // namespace detail

inline VaradhanReport run_varadhan(const ExperimentConfig& cfg) {
  cfg.validate();
  const Grid grid = cfg.make_grid();
  const FinslerField F = cfg.make_field();
  const Region A = cfg.region_a.build(grid);
  const Region B = cfg.region_b.build(grid);

  VaradhanReport rep;
  rep.extrapolation = cfg.extrapolation;
  rep.m_a = measure(grid, A);
  rep.m_b = measure(grid, B);
  rep.m_total = total_measure(grid);
  rep.grid_h = std::max(grid.hx, grid.hy);

  const DistanceField to_b = eikonal(grid, F, B);
  const DistanceField to_a = eikonal(grid, F, A);
  rep.d_ab = min_over_region(to_b.values, A);
  rep.d_ba = min_over_region(to_a.values, B);
  rep.kappa = to_b.kappa;

  const auto ladder = cfg.ladder.times_decreasing();
  rep.forward = detail::orientation_report(grid, F, A, B, ladder, rep.d_ab, rep.kappa, rep.m_a,
                                           rep.m_b, cfg.extrapolation, cfg.cfl, "A->B");
  rep.reverse = detail::orientation_report(grid, F, B, A, ladder, rep.d_ba, rep.kappa, rep.m_b,
                                           rep.m_a, cfg.extrapolation, cfg.cfl, "B->A");
  return rep;
}

// ---------------------------------------------------------------------------
// emission

namespace detail {

inline void write_rows_csv(const std::vector<VaradhanRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("emit_report: cannot open " + path);
  out << "t,P_t,V_t,bound_rhs,slack\n";
  char buf[220];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", r.t, r.p_t, r.v_t,
                  r.bound_rhs, r.slack);
    out << buf;
  }
}

// V(t) vs t with one horizontal reference line per orientation
inline void write_svg(const VaradhanReport& rep, const std::string& path) {
  const double W = 640.0, H = 420.0, ml = 70.0, mr = 20.0, mt = 20.0, mb = 50.0;
  double tmax = 0.0, vmax = 0.0;
  for (const auto* o : {&rep.forward, &rep.reverse})
    for (const auto& r : o->rows) {
      tmax = std::max(tmax, r.t);
      vmax = std::max(vmax, r.v_t);
    }
  vmax = std::max({vmax, rep.d_ab * rep.d_ab, rep.d_ba * rep.d_ba}) * 1.15 + 1e-12;
  tmax *= 1.05;
  auto X = [&](double t) { return ml + (W - ml - mr) * t / tmax; };
  auto Y = [&](double v) { return H - mb - (H - mt - mb) * v / vmax; };

  std::ofstream out(path);
  if (!out) throw std::runtime_error("emit_report: cannot open " + path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"black\"/>\n",
                ml, H - mb, W - mr, H - mb);
  out << buf;
  std::snprintf(buf, sizeof buf,
                "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"black\"/>\n",
                ml, mt, ml, H - mb);
  out << buf;
  out << "<text x=\"" << (W / 2) << "\" y=\"" << (H - 12)
      << "\" font-size=\"14\" text-anchor=\"middle\">t</text>\n";
  out << "<text x=\"18\" y=\"" << (H / 2)
      << "\" font-size=\"14\" text-anchor=\"middle\" transform=\"rotate(-90 18 " << (H / 2)
      << ")\">V(t) = -2t log P_t</text>\n";

  const char* colors[2] = {"#1f6fb2", "#c23b22"};
  const OrientationReport* reps[2] = {&rep.forward, &rep.reverse};
  const double dvals[2] = {rep.d_ab, rep.d_ba};
  for (int k = 0; k < 2; ++k) {
    std::snprintf(buf, sizeof buf,
                  "<line class=\"ref-line\" x1=\"%.1f\" y1=\"%.2f\" x2=\"%.1f\" y2=\"%.2f\" "
                  "stroke=\"%s\" stroke-dasharray=\"6,4\"/>\n",
                  ml, Y(dvals[k] * dvals[k]), W - mr, Y(dvals[k] * dvals[k]), colors[k]);
    out << buf;
    out << "<polyline fill=\"none\" stroke=\"" << colors[k] << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& r : reps[k]->rows) {
      std::snprintf(buf, sizeof buf, "%.2f,%.2f ", X(r.t), Y(r.v_t));
      out << buf;
    }
    out << "\"/>\n";
    for (const auto& r : reps[k]->rows) {
      std::snprintf(buf, sizeof buf, "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"3\" fill=\"%s\"/>\n",
                    X(r.t), Y(r.v_t), colors[k]);
      out << buf;
    }
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%.1f\" y=\"%.2f\" font-size=\"12\" fill=\"%s\">%s d^2 = %.5g</text>\n",
                  W - mr - 150.0, Y(dvals[k] * dvals[k]) - 5.0, colors[k], reps[k]->label.c_str(),
                  dvals[k] * dvals[k]);
    out << buf;
  }
  out << "</svg>\n";
}

}  // namespace detail

inline void emit_report(const VaradhanReport& rep, const std::string& dir) {
  std::filesystem::create_directories(dir);
  detail::write_rows_csv(rep.forward.rows, dir + "/varadhan.csv");
  detail::write_rows_csv(rep.reverse.rows, dir + "/varadhan_reverse.csv");
  detail::write_svg(rep, dir + "/varadhan.svg");

  std::ofstream out(dir + "/summary.txt");
  if (!out) throw std::runtime_error("emit_report: cannot open summary.txt");
  char buf[256];
  out << "integral short-time limit check\n";
  std::snprintf(buf, sizeof buf, "m(A) = %.12g  m(B) = %.12g  m(M) = %.12g\n", rep.m_a, rep.m_b,
                rep.m_total);
  out << buf;
  std::snprintf(buf, sizeof buf, "d(A,B) = %.12g  d(B,A) = %.12g  kappa = %.6g  h = %.6g\n",
                rep.d_ab, rep.d_ba, rep.kappa, rep.grid_h);
  out << buf;
  for (const auto* o : {&rep.forward, &rep.reverse}) {
    std::snprintf(buf, sizeof buf,
                  "%s: V_extrap = %.12g  target d^2 = %.12g  rel_error = %.4g  bound_ok = %d  "
                  "rows = %zu  dropped = %zu\n",
                  o->label.c_str(), o->v_extrap, o->d * o->d, o->rel_error, o->bound_ok ? 1 : 0,
                  o->rows.size(), o->dropped.size());
    out << buf;
  }
}

// ---------------------------------------------------------------------------
// lp family (Remark-4.5-style regularized p-norms)

struct LpFamilyEntry {
  double p = 2.0;
  double eps = 1e-2;
  double d = 0.0;  // regularized distance between the regions
  OrientationReport forward;
};

struct LpFamilyResult {
  std::vector<LpFamilyEntry> entries;
  bool bound_ok_all = true;
  bool eps_monotone = true;        // d_eps non-increasing as eps decreases (1e-3 slack)
  double max_stability_gap = 0.0;  // relative P gap between the two smallest eps at t_max
};

inline LpFamilyResult run_lp_family(const ExperimentConfig& cfg) {
  cfg.validate();
  const Grid grid = cfg.make_grid();
  const Region A = cfg.region_a.build(grid);
  const Region B = cfg.region_b.build(grid);
  const double m_a = measure(grid, A), m_b = measure(grid, B);
  const auto ladder = cfg.ladder.times_decreasing();

  std::vector<double> eps_sorted = cfg.lp_eps;
  std::sort(eps_sorted.rbegin(), eps_sorted.rend());  // decreasing

  LpFamilyResult out;
  for (double p : cfg.lp_ps) {
    double prev_d = std::numeric_limits<double>::infinity();
    std::vector<double> stability_p;  // P at t_max for each eps
    for (double eps : eps_sorted) {
      const auto F = FinslerField::constant(NormSpec::lp(p, eps));
      const DistanceField to_b = eikonal(grid, F, B);
      const double d = min_over_region(to_b.values, A);

      LpFamilyEntry entry;
      entry.p = p;
      entry.eps = eps;
      entry.d = d;
      entry.forward = detail::orientation_report(grid, F, A, B, ladder, d, to_b.kappa, m_a, m_b,
                                                 cfg.extrapolation, cfg.cfl, "A->B");
      if (!entry.forward.bound_ok) out.bound_ok_all = false;
      if (d > prev_d + 1e-3) out.eps_monotone = false;
      prev_d = d;
      stability_p.push_back(entry.forward.rows.front().p_t);  // largest t
      out.entries.push_back(std::move(entry));
    }
    if (stability_p.size() >= 2) {
      const double a = stability_p[stability_p.size() - 2];
      const double b = stability_p[stability_p.size() - 1];
      out.max_stability_gap = std::max(out.max_stability_gap, std::fabs(a - b) / std::min(a, b));
    }
  }
  return out;
}

inline void emit_lp_family(const LpFamilyResult& res, const std::string& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir + "/lp_family.csv");
  if (!out) throw std::runtime_error("emit_lp_family: cannot open lp_family.csv");
  out << "p,eps,d,V_extrap,bound_ok\n";
  char buf[200];
  for (const auto& e : res.entries) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%d\n", e.p, e.eps, e.d,
                  e.forward.v_extrap, e.forward.bound_ok ? 1 : 0);
    out << buf;
  }
}

}  // namespace fheat
