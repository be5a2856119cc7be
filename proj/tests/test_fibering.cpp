// Copyright (c) the fspg authors.
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "fspg/fibering.hpp"
#include "oracles.hpp"

using namespace fspg;

namespace {

ProblemSpec make_ps(double s, double p, double lambda, double v_const, GridSpec grid) {
  ProblemSpec ps;
  ps.s = s;
  ps.p = p;
  ps.lambda = lambda;
  ps.potential = PotentialSpec::constant(v_const);
  ps.grid = grid;
  return ps;
}

} // namespace

TEST_CASE("dilate: identity, amplitude law, composition, domain errors") {
  GridSpec g{12, 10.0};
  Field u = oracle::random_smooth_field(g, 2);
  const double s = 0.9;

  Field same = dilate(u, 1.0, s);
  CHECK(same.grid == u.grid);
  CHECK(std::memcmp(same.values.data(), u.values.data(), u.size() * sizeof(double)) == 0);

  Field d2 = dilate(u, 2.0, s);
  CHECK(d2.grid.L == 5.0);
  CHECK(oracle::rel_err(d2.values[7], std::pow(2.0, 1.8) * u.values[7]) < 1e-15);

  Field comp = dilate(dilate(u, 1.6, s), 0.7, s);
  Field direct = dilate(u, 1.6 * 0.7, s);
  CHECK(oracle::rel_err(comp.grid.L, direct.grid.L) < 1e-14);
  for (std::size_t i = 0; i < u.size(); i += 97)
    CHECK(oracle::rel_err(comp.values[i], direct.values[i]) < 1e-14);

  CHECK_THROWS_AS(dilate(u, 0.0, s), error);
  CHECK_THROWS_AS(dilate(u, -1.0, s), error);
}

TEST_CASE("dilation power laws hold to 1e-13 (kinetic example 2^{6s-3})") {
  GridSpec g{12, 10.0};
  ProblemSpec ps = make_ps(0.9, 3.0, 1.0, 1.0, g);
  Field u = oracle::random_smooth_field(g, 9);
  Quartet q = quartet(u, ps);

  // spot value from the scaling-law exponent at theta = 2, s = 0.9
  CHECK(std::pow(2.0, 6.0 * 0.9 - 3.0) == Catch::Approx(5.27803164).epsilon(1e-8));

  for (double theta : {0.5, 1.0 / std::sqrt(2.0), std::sqrt(2.0), 2.0}) {
    Field v = dilate(u, theta, ps.s);
    Quartet qt = quartet(v, ps);
    const double ea = 6.0 * ps.s - 3.0, em = 4.0 * ps.s - 3.0,
                 ed = 2.0 * ps.s * (ps.p + 1.0) - 3.0;
    CHECK(oracle::rel_err(qt.a, std::pow(theta, ea) * q.a) < 1e-13);
    CHECK(oracle::rel_err(qt.mass, std::pow(theta, em) * q.mass) < 1e-13);
    CHECK(oracle::rel_err(qt.c, std::pow(theta, ea) * q.c) < 1e-13);
    CHECK(oracle::rel_err(qt.d_raw, std::pow(theta, ed) * q.d_raw) < 1e-13);
  }
}

TEST_CASE("fiber energy and derivative: closed-form structure") {
  GridSpec g{8, 5.0};
  ProblemSpec ps = make_ps(0.9, 3.0, 1.0, 1.0, g);

  Quartet q;
  q.a = 1.3;
  q.b = 0.8;
  q.c = 0.5;
  q.d_raw = 2.1;
  q.mass = 0.8;
  CHECK(fiber_energy(q, 1.0, ps) == Catch::Approx(energy(q, ps)).epsilon(1e-15));
  CHECK(fiber_derivative(q, 1.0, ps) == Catch::Approx(constraint_g(q, ps)).margin(1e-14));

  // d_raw = 0 with positive entries: gamma' > 0 for every theta
  Quartet q0 = q;
  q0.d_raw = 0.0;
  for (double t : {0.03, 0.5, 1.0, 7.0, 300.0}) CHECK(fiber_derivative(q0, t, ps) > 0.0);

  // q = (1,1,1,0): monotone increasing fiber map
  Quartet q1;
  q1.a = q1.b = q1.c = 1.0;
  q1.d_raw = 0.0;
  double prev = fiber_energy(q1, 0.01, ps);
  for (double t = 0.02; t < 100.0; t *= 1.5) {
    const double cur = fiber_energy(q1, t, ps);
    CHECK(cur > prev);
    prev = cur;
  }

  // with d_raw > 0 the map is unbounded below
  CHECK(fiber_energy(q, 1e3, ps) < -1e6);

  // finite differences of gamma confirm gamma'
  for (double t : {0.3, 1.0, 2.7}) {
    const double h = 1e-6 * t;
    const double fd = (fiber_energy(q, t + h, ps) - fiber_energy(q, t - h, ps)) / (2.0 * h);
    CHECK(oracle::rel_err(fiber_derivative(q, t, ps), fd) < 1e-7);
  }

  ProblemSpec psv = ps;
  psv.potential = PotentialSpec::paper_example(ps.s);
  CHECK_THROWS_AS(fiber_energy(q, 1.0, psv), error);
  CHECK_THROWS_AS(fiber_derivative(q, 1.0, psv), error);
}

TEST_CASE("gamma'(1) equals the constraint on random quartets") {
  Rng rng(12);
  GridSpec g{8, 5.0};
  for (int t = 0; t < 100; ++t) {
    ProblemSpec ps = make_ps(rng.uniform(0.76, 0.99), rng.uniform(2.1, 3.4),
                             rng.uniform(0.5, 1.0), 1.0, g);
    Quartet q;
    q.a = rng.uniform(0.0, 4.0);
    q.b = rng.uniform(0.0, 4.0);
    q.c = rng.uniform(0.0, 4.0);
    q.d_raw = rng.uniform(0.0, 4.0);
    const double scale = q.a + q.b + q.c + q.d_raw + 1.0;
    CHECK(std::abs(fiber_derivative(q, 1.0, ps) - constraint_g(q, ps)) <= 1e-12 * scale);
  }
}

TEST_CASE("h(theta) is strictly increasing on a 50-point log scan") {
  Rng rng(31);
  GridSpec g{8, 5.0};
  for (int t = 0; t < 20; ++t) {
    const double s = rng.uniform(0.76, 0.99);
    const double p = rng.uniform(2.05, std::min(critical_p(s) - 0.05, 4.0));
    ProblemSpec ps = make_ps(s, p, rng.uniform(0.5, 1.0), 1.0, g);
    Quartet q;
    q.b = rng.uniform(0.1, 3.0);
    q.d_raw = rng.uniform(0.1, 3.0);
    double prev = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < 50; ++i) {
      const double theta = 1e-3 * std::pow(1e6, i / 49.0);
      const double h = fiber_h(q, theta, ps);
      CHECK(h > prev);
      prev = h;
    }
  }
}

TEST_CASE("project_to_M: root at unity, monotone displacement, and residual") {
  GridSpec g{12, 12.0};
  ProblemSpec ps = make_ps(0.9, 3.0, 1.0, 1.0, g);
  Field u = oracle::random_smooth_field(g, 44);

  Projection pr = project_to_M(u, ps);
  Quartet qp = quartet(pr.field, ps);
  CHECK(std::abs(constraint_g(qp, ps)) <= 1e-10 * constraint_scale(qp, ps));

  // already on M: theta0 = 1
  Projection again = project_to_M(pr.field, ps);
  CHECK(std::abs(again.theta0 - 1.0) < 1e-9);

  // monotonicity of the displacement: G > 0 pushes theta0 above 1
  Field small = scale(pr.field, 0.7); // shrinks d_raw fastest: G(small) > 0
  CHECK(constraint_g(quartet(small, ps), ps) > 0.0);
  CHECK(project_to_M(small, ps).theta0 > 1.0);
  Field big = scale(pr.field, 1.4);
  CHECK(constraint_g(quartet(big, ps), ps) < 0.0);
  CHECK(project_to_M(big, ps).theta0 < 1.0);

  CHECK_THROWS_AS(project_to_M(Field(g), ps), error);
}

TEST_CASE("project_to_M agrees with an independent h-equation bisection") {
  GridSpec g{12, 12.0};
  Rng rng(7);
  for (int t = 0; t < 10; ++t) {
    ProblemSpec ps =
        make_ps(rng.uniform(0.8, 0.95), rng.uniform(2.3, 3.2), 1.0, 1.0, g);
    Field u = oracle::random_smooth_field(g, 100 + t);
    Quartet q = quartet(u, ps);
    const double target = (6.0 * ps.s - 3.0) * (0.5 * q.a + 0.25 * q.c);
    double lo = 1e-6, hi = 1e6;
    for (int it = 0; it < 200; ++it) {
      const double mid = std::sqrt(lo * hi);
      (fiber_h(q, mid, ps) < target ? lo : hi) = mid;
    }
    const double theta_h = std::sqrt(lo * hi);
    Projection pr = project_to_M(u, ps);
    CHECK(oracle::rel_err(pr.theta0, theta_h) < 1e-10);
  }
}

TEST_CASE("projection maximizes the fiber energy") {
  GridSpec g{12, 12.0};
  ProblemSpec ps = make_ps(0.85, 2.8, 1.0, 1.0, g);
  Field u = oracle::random_smooth_field(g, 55);
  Projection pr = project_to_M(u, ps);
  Quartet q = quartet(u, ps);
  const double peak = fiber_energy(q, pr.theta0, ps);
  for (int i = 0; i < 200; ++i) {
    const double t = 1e-2 * std::pow(1e4, i / 199.0);
    CHECK(fiber_energy(q, t, ps) <= peak * (1.0 + 1e-12) + 1e-12);
  }
}

TEST_CASE("scan_fiber: unique root for projectable fields, none for d_raw = 0") {
  GridSpec g{12, 12.0};
  ProblemSpec ps = make_ps(0.9, 3.0, 1.0, 1.0, g);
  Field u = oracle::random_smooth_field(g, 66);
  FiberScan scan = scan_fiber(u, ps, 1e-3, 1e3, 121);
  CHECK(scan.unique_root);
  Projection pr = project_to_M(u, ps);
  CHECK(oracle::rel_err(scan.theta_star, pr.theta0) < 1e-9);

  // constant field on the torus: a = c = 0 but d_raw > 0 keeps one root
  Field cst(g, 0.8);
  FiberScan scan_c = scan_fiber(cst, ps, 1e-3, 1e3, 121);
  CHECK(scan_c.unique_root);

  Field zero(g);
  FiberScan none = scan_fiber(zero, ps, 1e-3, 1e3, 61);
  CHECK_FALSE(none.unique_root);

  CHECK_THROWS_AS(scan_fiber(u, ps, -1.0, 2.0, 10), error);
}

TEST_CASE("fiber scan CSV export") {
  namespace fs = std::filesystem;
  GridSpec g{8, 8.0};
  ProblemSpec ps = make_ps(0.9, 3.0, 1.0, 1.0, g);
  FiberScan scan = scan_fiber(oracle::random_smooth_field(g, 3), ps, 0.1, 10.0, 17);
  const fs::path dir = fs::temp_directory_path() / "fspg_fiber_test";
  fs::create_directories(dir);
  const std::string path = (dir / "scan.csv").string();
  write_fiber_csv(scan, path);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "theta,gamma,gamma_prime");
  int rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  CHECK(rows == 17);
}

TEST_CASE("project_to_M_generalV: reduction, residual, and the no-root error") {
  GridSpec g{12, 12.0};
  ProblemSpec ps = make_ps(0.9, 3.0, 1.0, 1.0, g);
  Field u = oracle::random_smooth_field(g, 77, 3, true);

  // constant V goes through the closed-form path
  Projection a = project_to_M(u, ps);
  Projection b = project_to_M_generalV(u, ps);
  CHECK(oracle::rel_err(a.theta0, b.theta0) < 1e-10);

  // example potential: projected constraint residual
  ProblemSpec psv = ps;
  psv.potential = PotentialSpec::paper_example(ps.s);
  Projection pv = project_to_M_generalV(oracle::gaussian(g, 1.6), psv);
  Quartet qv = quartet(pv.field, psv);
  CHECK(std::abs(constraint_g(qv, psv)) <= 1e-8 * constraint_scale(qv, psv));

  // strongly negative potential leaves gamma' without a sign change
  std::vector<double> r = {0.0, 2.0, 4.0, 6.0, 8.0, 10.0};
  std::vector<double> v(r.size(), -50.0);
  ProblemSpec bad = ps;
  bad.potential = PotentialSpec::radial_table(r, v, -50.0);
  Field cst(g, 1.0);
  CHECK_THROWS_AS(project_to_M_generalV(cst, bad), error);
}

TEST_CASE("nehari_ray: analytic root and regime guard") {
  GridSpec g{8, 5.0};
  ProblemSpec ps = make_ps(0.95, 4.0, 1.0, 1.0, g);
  Quartet q;
  q.a = 0.6;
  q.b = 0.4;
  q.c = 0.0;
  q.d_raw = 1.0;
  q.mass = 0.4;
  // (a+b) = t^{p-1} d_raw with c = 0: t = 1, level = 1/2 - 1/5
  NehariRay nr = nehari_ray(q, ps);
  CHECK(nr.t == Catch::Approx(1.0).epsilon(1e-10));
  CHECK(nr.level == Catch::Approx(0.3).epsilon(1e-10));

  ProblemSpec p3 = make_ps(0.9, 3.0, 1.0, 1.0, g);
  CHECK_THROWS_AS(nehari_ray(q, p3), error);
}
