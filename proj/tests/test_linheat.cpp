#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "fheat/linheat.hpp"
#include "oracles.hpp"

using namespace fheat;

namespace {

FinslerField euclidean() { return FinslerField::constant(NormSpec::quadratic(Mat2::identity())); }
FinslerField randers05() {
  return FinslerField::constant(NormSpec::randers(Mat2::identity(), {0.5, 0.0}));
}

ScalarField smooth_noncritical(const Grid& g) {
  // discrete differential never vanishes: the critical points of the
  // underlying function fall between cell centers
  ScalarField u(g.nx, g.ny);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      u(i, j) = std::sin(2.0 * M_PI * g.cx(i)) + 0.3 * std::cos(2.0 * M_PI * g.cy(j));
  return u;
}

ScalarField random_field(const Grid& g) {
  ScalarField f(g.nx, g.ny);
  for (auto& x : f.v) x = oracle::uniform(-1.0, 1.0);
  return f;
}

}  // namespace

TEST_CASE("freeze") {
  const Grid g = Grid::unit(32);
  SUBCASE("quadratic norms freeze to g^{-1} regardless of the state") {
    const auto F = FinslerField::constant(NormSpec::quadratic({2.0, 0.3, 1.0}));
    const auto coeffs = freeze(g, F, random_field(g));
    const Mat2 want = NormSpec::quadratic({2.0, 0.3, 1.0}).g_inv();
    for (const auto& m : coeffs.tensors) {
      CHECK(m.xx == doctest::Approx(want.xx).epsilon(1e-14));
      CHECK(m.xy == doctest::Approx(want.xy).epsilon(1e-14));
      CHECK(m.yy == doctest::Approx(want.yy).epsilon(1e-14));
    }
  }
  SUBCASE("constant state freezes to the fallback direction everywhere") {
    const auto F = randers05();
    const Cov2 fb{1.0, 0.0};
    const auto coeffs = freeze(g, F, ScalarField(g.nx, g.ny, 3.0), fb);
    const Mat2 want = metric_tensor_dual(F.any(), fb);
    for (const auto& m : coeffs.tensors) {
      CHECK(m.xx == doctest::Approx(want.xx).epsilon(1e-12));
      CHECK(m.yy == doctest::Approx(want.yy).epsilon(1e-12));
    }
    CHECK_THROWS_AS(freeze(g, F, ScalarField(g.nx, g.ny, 0.0), Cov2{0.0, 0.0}),
                    std::invalid_argument);
  }
  SUBCASE("coefficients are 0-homogeneous in the state") {
    const auto F = randers05();
    const ScalarField u = smooth_noncritical(g);
    ScalarField u2 = u;
    for (auto& x : u2.v) x *= 2.0;
    const auto c1 = freeze(g, F, u);
    const auto c2 = freeze(g, F, u2);
    for (std::size_t k = 0; k < c1.tensors.size(); ++k) {
      CHECK(c1.tensors[k].xx == doctest::Approx(c2.tensors[k].xx).epsilon(1e-12));
      CHECK(c1.tensors[k].xy == doctest::Approx(c2.tensors[k].xy).epsilon(1e-12));
      CHECK(c1.tensors[k].yy == doctest::Approx(c2.tensors[k].yy).epsilon(1e-12));
    }
  }
  SUBCASE("frozen eigenvalues lie within the norm's constant bounds") {
    const auto F = randers05();
    const auto consts = compute_constants(F.any(), 512);
    const auto coeffs = freeze(g, F, smooth_noncritical(g));
    for (const auto& m : coeffs.tensors) {
      const auto ev = m.eigenvalues();
      CHECK(ev[0] >= 1.0 / consts.c_unif - 1e-6);
      CHECK(ev[1] <= consts.s_unif + 1e-6);
    }
  }
}

TEST_CASE("linearised laplacian") {
  const Grid g = Grid::unit(48);
  const auto F = randers05();
  SUBCASE("linearity in h") {
    const auto coeffs = freeze(g, F, smooth_noncritical(g));
    const ScalarField h1 = random_field(g), h2 = random_field(g);
    ScalarField combo(g.nx, g.ny);
    for (std::size_t k = 0; k < combo.v.size(); ++k)
      combo.v[k] = 2.5 * h1.v[k] - 1.25 * h2.v[k];
    const ScalarField l1 = lin_laplacian(g, coeffs, h1);
    const ScalarField l2 = lin_laplacian(g, coeffs, h2);
    const ScalarField lc = lin_laplacian(g, coeffs, combo);
    double worst = 0.0;
    for (std::size_t k = 0; k < combo.v.size(); ++k)
      worst = std::max(worst, std::fabs(lc.v[k] - (2.5 * l1.v[k] - 1.25 * l2.v[k])));
    CHECK(worst < 1e-9);
  }
  SUBCASE("self-adjoint in L^2(m)") {
    Grid gw = Grid::unit(32);
    for (auto& p : gw.psi.v) p = oracle::uniform(-0.2, 0.2);
    const auto coeffs = freeze(gw, F, smooth_noncritical(gw));
    double worst = 0.0;
    for (int rep = 0; rep < 20; ++rep) {
      const ScalarField h1 = random_field(gw), h2 = random_field(gw);
      const double a = integrate(gw, multiply(h1, lin_laplacian(gw, coeffs, h2)));
      const double b = integrate(gw, multiply(h2, lin_laplacian(gw, coeffs, h1)));
      worst = std::max(worst, std::fabs(a - b) / (1.0 + std::fabs(a)));
    }
    CHECK(worst <= 1e-10);
  }
  SUBCASE("identity lin_laplacian(freeze(u), u) = laplacian(u) off criticality") {
    const ScalarField u = smooth_noncritical(g);
    const auto coeffs = freeze(g, F, u);
    const ScalarField lin = lin_laplacian(g, coeffs, u);
    const ScalarField nonlin = laplacian(g, F, u);
    double scale = 0.0;
    for (double x : nonlin.v) scale = std::max(scale, std::fabs(x));
    double worst = 0.0;
    for (std::size_t k = 0; k < lin.v.size(); ++k)
      worst = std::max(worst, std::fabs(lin.v[k] - nonlin.v[k]));
    CHECK(worst <= 1e-9 * scale);
  }
  SUBCASE("quadratic identity norm reduces to the plain laplacian") {
    const auto E = euclidean();
    const ScalarField u = random_field(g);
    const auto coeffs = freeze(g, E, u);
    const ScalarField lin = lin_laplacian(g, coeffs, u);
    const ScalarField nonlin = laplacian(g, E, u);
    for (std::size_t k = 0; k < lin.v.size(); ++k)
      CHECK(lin.v[k] == doctest::Approx(nonlin.v[k]).epsilon(1e-12));
  }
}

TEST_CASE("linearised evolution") {
  const Grid g = Grid::unit(48);
  const Region D = disk_region(g, 0.35, 0.5, 0.12);
  const Region B = disk_region(g, 0.65, 0.5, 0.12);

  SUBCASE("quadratic case degenerates to the non-linear flow bitwise") {
    const auto F = euclidean();
    const double sigma = 0.003, tau = 0.004;
    HeatParams wp;
    wp.t_end = sigma + tau;
    wp.record_times = {sigma, sigma + tau};
    const HeatTrace w = evolve(g, F, indicator(D), wp);

    HeatParams up;
    up.t_end = tau;
    up.record_times = {0.0, tau};
    const HeatTrace utr = evolve(g, F, indicator(B), up);

    const ScalarField h = evolve_linearised(g, F, utr, w.fields[0], tau);
    for (std::size_t k = 0; k < h.v.size(); ++k) CHECK(h.v[k] == w.fields[1].v[k]);
  }
  SUBCASE("mass of the linearised flow is conserved") {
    const auto F = randers05();
    HeatParams up;
    up.t_end = 0.004;
    for (int k = 0; k <= 16; ++k) up.record_times.push_back(0.004 * k / 16);
    up.record_times.front() = 0.0;
    const HeatTrace utr = evolve(g, F, indicator(B), up);
    const ScalarField h0 = indicator(D);
    const ScalarField h = evolve_linearised(g, F, utr, h0, 0.004);
    const double m0 = integrate(g, h0);
    CHECK(std::fabs(integrate(g, h) - m0) <= 1e-11 * m0);
    for (double x : h.v) CHECK(x >= -1e-12);
  }
  SUBCASE("closeness inequality rows") {
    const auto Fq = euclidean();
    const auto cq = compute_constants(Fq.any(), 128);
    const auto rq = closeness_check(g, Fq, D, B, 0.003, 0.004, cq);
    CHECK(rq.lhs == 0.0);  // flows coincide bitwise, slack pinned to zero
    CHECK(rq.slack == 0.0);
    CHECK(rq.rhs == 0.0);

    const auto Fr = randers05();
    const auto cr = compute_constants(Fr.any(), 256);
    for (double sigma : {0.002, 0.005})
      for (double tau : {0.002, 0.005}) {
        const auto row = closeness_check(g, Fr, D, B, sigma, tau, cr);
        CHECK(row.lhs <= row.rhs + row.slack);
        CHECK(row.rhs >= 0.0);
      }
  }
  SUBCASE("closeness CSV schema") {
    const auto F = euclidean();
    const auto c = compute_constants(F.any(), 128);
    std::vector<ClosenessRow> rows{closeness_check(g, F, D, B, 0.002, 0.002, c)};
    const std::string path = "/tmp/fheat_sec54.csv";
    write_closeness_csv(rows, path);
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "sigma,tau,lhs,rhs,slack");
    std::filesystem::remove(path);
  }
  SUBCASE("trace must cover the requested horizon") {
    const auto F = euclidean();
    HeatParams up;
    up.t_end = 0.001;
    up.record_times = {0.0, 0.001};
    const HeatTrace utr = evolve(g, F, indicator(B), up);
    CHECK_THROWS_AS(evolve_linearised(g, F, utr, indicator(D), 0.01), std::invalid_argument);
  }
}
