// Command-line driver: loads an experiment config and runs one of the
// subcommands. Exit code 0 means every asserted invariant passed.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fheat/config.hpp"
#include "fheat/distance.hpp"
#include "fheat/heat.hpp"
#include "fheat/linheat.hpp"
#include "fheat/varadhan.hpp"

using namespace fheat;

namespace {

int cmd_norm_check(const ExperimentConfig& cfg) {
  const NormSpec& spec = cfg.norm;
  const auto c = compute_constants(spec, cfg.n_dir);
  std::printf("reversibility  Lambda = %.9g\n", c.lambda);
  std::printf("uniform convexity  C = %.9g\n", c.c_unif);
  std::printf("uniform smoothness S = %.9g\n", c.s_unif);
  std::printf("direction pairs sampled: %ld\n", c.n_samples);

  bool ok = c.lambda >= 1.0 && c.c_unif >= 1.0 - 1e-12 && c.s_unif >= 1.0 - 1e-12;
  ok = ok && c.lambda <= std::min(std::sqrt(c.c_unif), std::sqrt(c.s_unif)) + 1e-9;
  if (spec.reversible() && c.lambda > 1.0 + 1e-9) ok = false;

  // Legendre identities on a deterministic sample
  double worst = 0.0;
  for (int k = 0; k < 200; ++k) {
    const double th = 2.0 * M_PI * k / 200.0;
    const Cov2 a{1.3 * std::cos(th), 1.3 * std::sin(th)};
    const Vec2 v = legendre_dual_to_primal(spec, a);
    const double fs = eval_F_star(spec, a);
    worst = std::max(worst, std::fabs(eval_F(spec, v) - fs) / (1.0 + fs));
    worst = std::max(worst, std::fabs(pair(a, v) - fs * fs) / (1.0 + fs * fs));
  }
  std::printf("legendre identity residual: %.3e\n", worst);
  ok = ok && worst < 1e-9;
  std::printf("%s\n", ok ? "norm-check PASS" : "norm-check FAIL");
  return ok ? 0 : 1;
}

int cmd_heat(const ExperimentConfig& cfg) {
  const Grid grid = cfg.make_grid();
  const FinslerField F = cfg.make_field();
  const Region B = cfg.region_b.build(grid);
  HeatParams params;
  params.t_end = cfg.ladder.t_max;
  params.cfl = cfg.cfl;
  params.max_steps = cfg.max_steps;
  for (double t : cfg.ladder.times_decreasing()) params.record_times.push_back(t);
  std::sort(params.record_times.begin(), params.record_times.end());
  const HeatTrace trace = evolve(grid, F, indicator(B), params);

  std::filesystem::create_directories(cfg.output_dir);
  std::ofstream out(cfg.output_dir + "/heat_trace.csv");
  out << "t,mass,energy\n";
  char buf[160];
  for (std::size_t k = 0; k < trace.times.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", trace.times[k], trace.masses[k],
                  trace.energies[k]);
    out << buf;
  }
  dump_field_csv(grid, trace.fields.back(), cfg.output_dir + "/heat_final.csv");

  bool ok = trace.global_min >= -1e-12 && trace.global_max <= 1.0 + 1e-12;
  for (std::size_t k = 1; k < trace.masses.size(); ++k) {
    ok = ok && std::fabs(trace.masses[k] - trace.masses[0]) <= 1e-11 * std::fabs(trace.masses[0]);
    ok = ok && trace.energies[k] <= trace.energies[k - 1] + 1e-12;
  }
  std::printf("steps = %ld, range = [%.3e, %.3e]\n", trace.steps_taken, trace.global_min,
              trace.global_max);
  std::printf("%s\n", ok ? "heat PASS" : "heat FAIL");
  return ok ? 0 : 1;
}

int cmd_distance(const ExperimentConfig& cfg) {
  const Grid grid = cfg.make_grid();
  const FinslerField F = cfg.make_field();
  const Region A = cfg.region_a.build(grid);
  const Region B = cfg.region_b.build(grid);
  const DistanceField to_b = eikonal(grid, F, B);
  const DistanceField to_a = eikonal(grid, F, A);
  const double dab = min_over_region(to_b.values, A);
  const double dba = min_over_region(to_a.values, B);
  std::printf("d(A,B) = %.9g (sweeps %d, residual %.3e)\n", dab, to_b.iterations, to_b.residual);
  std::printf("d(B,A) = %.9g (sweeps %d, residual %.3e)\n", dba, to_a.iterations, to_a.residual);

  const DistanceField oracle_b = dijkstra_oracle(grid, F, B);
  const DistanceField oracle_a = dijkstra_oracle(grid, F, A);
  const double oab = min_over_region(oracle_b.values, A);
  const double oba = min_over_region(oracle_a.values, B);
  std::printf("dijkstra oracle: d(A,B) = %.9g, d(B,A) = %.9g\n", oab, oba);

  std::filesystem::create_directories(cfg.output_dir);
  dump_field_csv(grid, to_b.values, cfg.output_dir + "/distance_to_b.csv");
  dump_field_csv(grid, to_a.values, cfg.output_dir + "/distance_to_a.csv");

  const bool ok = std::fabs(dab - oab) <= 0.03 * std::max(oab, 1e-9) &&
                  std::fabs(dba - oba) <= 0.03 * std::max(oba, 1e-9);
  std::printf("%s\n", ok ? "distance PASS" : "distance FAIL");
  return ok ? 0 : 1;
}

int cmd_varadhan(const ExperimentConfig& cfg) {
  const VaradhanReport rep = run_varadhan(cfg);
  emit_report(rep, cfg.output_dir);
  for (const auto* o : {&rep.forward, &rep.reverse})
    std::printf("%s: V_extrap = %.9g, target d^2 = %.9g, rel error = %.3f, bound_ok = %d\n",
                o->label.c_str(), o->v_extrap, o->d * o->d, o->rel_error, o->bound_ok ? 1 : 0);
  const bool ok = rep.forward.bound_ok && rep.reverse.bound_ok;
  std::printf("report written to %s\n", cfg.output_dir.c_str());
  std::printf("%s\n", ok ? "varadhan PASS" : "varadhan FAIL");
  return ok ? 0 : 1;
}

int cmd_linearized(const ExperimentConfig& cfg) {
  const Grid grid = cfg.make_grid();
  const FinslerField F = cfg.make_field();
  const Region A = cfg.region_a.build(grid);
  const Region B = cfg.region_b.build(grid);
  const auto constants = compute_constants(cfg.norm, cfg.n_dir);
  std::vector<ClosenessRow> rows;
  bool ok = true;
  for (double sigma : {0.001, 0.005, 0.02})
    for (double tau : {0.001, 0.005, 0.02}) {
      rows.push_back(closeness_check(grid, F, A, B, sigma, tau, constants, cfg.cfl));
      const auto& r = rows.back();
      ok = ok && r.lhs <= r.rhs + r.slack;
      std::printf("sigma=%.4g tau=%.4g lhs=%.4e rhs=%.4e slack=%.4e %s\n", r.sigma, r.tau, r.lhs,
                  r.rhs, r.slack, r.lhs <= r.rhs + r.slack ? "ok" : "VIOLATED");
    }
  std::filesystem::create_directories(cfg.output_dir);
  write_closeness_csv(rows, cfg.output_dir + "/linearized.csv");
  std::printf("%s\n", ok ? "linearized-check PASS" : "linearized-check FAIL");
  return ok ? 0 : 1;
}

int cmd_lp_family(const ExperimentConfig& cfg) {
  const LpFamilyResult res = run_lp_family(cfg);
  emit_lp_family(res, cfg.output_dir);
  for (const auto& e : res.entries)
    std::printf("p=%.3g eps=%.4g d=%.6g V_extrap=%.6g bound_ok=%d\n", e.p, e.eps, e.d,
                e.forward.v_extrap, e.forward.bound_ok ? 1 : 0);
  std::printf("eps trend monotone: %d, stability gap: %.4f\n", res.eps_monotone ? 1 : 0,
              res.max_stability_gap);
  const bool ok = res.bound_ok_all && res.eps_monotone && res.max_stability_gap <= 0.02;
  std::printf("%s\n", ok ? "lp-family PASS" : "lp-family FAIL");
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finsler heat flow laboratory: asymmetric distances and short-time heat content"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_override;

  auto add = [&](const char* name, const char* desc) {
    CLI::App* sub = app.add_subcommand(name, desc);
    sub->add_option("config", config_path, "experiment config file")->required();
    sub->add_option("-o,--output", out_override, "override the output directory");
    return sub;
  };
  CLI::App* s_norm = add("norm-check", "norm constants and Legendre identities");
  CLI::App* s_heat = add("heat", "evolve the indicator of region B, dump trace CSVs");
  CLI::App* s_dist = add("distance", "asymmetric set distances with the Dijkstra oracle");
  CLI::App* s_var = add("varadhan", "short-time limit report with CSV/SVG output");
  CLI::App* s_lin = add("linearized-check", "linearised-flow closeness inequality grid");
  CLI::App* s_lp = add("lp-family", "regularized p-norm family sweep");

  CLI11_PARSE(app, argc, argv);

  try {
    ExperimentConfig cfg = load_experiment(config_path);
    if (!out_override.empty()) cfg.output_dir = out_override;
    if (s_norm->parsed()) return cmd_norm_check(cfg);
    if (s_heat->parsed()) return cmd_heat(cfg);
    if (s_dist->parsed()) return cmd_distance(cfg);
    if (s_var->parsed()) return cmd_varadhan(cfg);
    if (s_lin->parsed()) return cmd_linearized(cfg);
    if (s_lp->parsed()) return cmd_lp_family(cfg);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;
}
