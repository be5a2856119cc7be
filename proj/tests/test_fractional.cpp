// Copyright (c) the fspg authors.
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include "fspg/fractional.hpp"
#include "oracles.hpp"

using namespace fspg;

TEST_CASE("frac_laplacian: classical eigenfunction and constants") {
  GridSpec g{16, 5.0};
  Field c(g);
  c.fill_with([&](double x, double, double) { return std::cos(2.0 * M_PI * x / g.L); });
  Field lap = frac_laplacian(c, 1.0);
  const double ev = std::pow(2.0 * M_PI / g.L, 2.0);
  for (std::size_t i = 0; i < c.size(); ++i)
    CHECK(std::abs(lap.values[i] - ev * c.values[i]) < 1e-12 * ev);

  Field ones(g, 3.5);
  Field z = frac_laplacian(ones, 0.7);
  CHECK(max_abs(z) < 1e-12);

  CHECK_THROWS_AS(frac_laplacian(c, 0.0), error);
  CHECK_THROWS_AS(frac_laplacian(c, 1.2), error);
}

TEST_CASE("frac_laplacian matches the direct O(N^2) spectral sum on 8^3") {
  GridSpec g{8, 6.0};
  Field u = oracle::random_field(g, 11);
  const double s = 0.8;
  Field fast = frac_laplacian(u, s);
  Field slow = oracle::direct_multiplier(
      u, [s](double xi2) { return xi2 > 0.0 ? std::pow(xi2, s) : 0.0; });
  double sup = std::max(max_abs(fast), 1e-300);
  for (std::size_t i = 0; i < u.size(); ++i)
    CHECK(std::abs(fast.values[i] - slow.values[i]) <= 1e-10 * sup);
}

TEST_CASE("frac_seminorm_sq: basics and the s = 1 gradient identity") {
  GridSpec g{12, 8.0};
  CHECK(frac_seminorm_sq(Field(g), 0.9) == 0.0);
  CHECK(frac_seminorm_sq(Field(g, 2.0), 0.9) == 0.0); // constants have no seminorm

  Field u = oracle::random_smooth_field(g, 5);
  // spectral gradient energy: sum over axes of |i xi_d u_hat|^2
  SpectralField F = forward_transform(u);
  double grad_energy = 0.0;
  const int n = g.n;
  std::size_t idx = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k, ++idx) {
        const double xi2 = g.freq(i) * g.freq(i) + g.freq(j) * g.freq(j) +
                           g.freq(k) * g.freq(k);
        grad_energy += xi2 * std::norm(F.modes[idx]);
      }
  grad_energy *= detail::mode_weight(g);
  CHECK(oracle::rel_err(frac_seminorm_sq(u, 1.0), grad_energy) < 1e-12);
}

TEST_CASE("frac_seminorm_sq: Gaussian against the analytic-transform radial quadrature") {
  const double w = 1.2, s = 0.9;
  GridSpec g{32, 20.0};
  Field u = oracle::gaussian(g, w);

  // u_hat(xi) = (w sqrt(2 pi))^3 exp(-w^2 |xi|^2/2); Simpson quadrature of
  // (2 pi)^{-3} int |xi|^{2s} |u_hat|^2 dxi in the radial variable
  auto integrand = [w, s](double r) {
    const double uh = std::pow(w * std::sqrt(2.0 * M_PI), 3.0) *
                      std::exp(-0.5 * w * w * r * r);
    return std::pow(r, 2.0 * s + 2.0) * uh * uh * 4.0 * M_PI /
           std::pow(2.0 * M_PI, 3.0);
  };
  const int m = 20000;
  const double R = 20.0 / w;
  double quad = integrand(0.0) + integrand(R);
  for (int i = 1; i < m; ++i)
    quad += integrand(i * R / m) * (i % 2 ? 4.0 : 2.0);
  quad *= R / (3.0 * m);

  // sanity: closed form 2 pi Gamma(s + 3/2) w^{3-2s}
  const double closed = 2.0 * M_PI * std::tgamma(s + 1.5) * std::pow(w, 3.0 - 2.0 * s);
  REQUIRE(oracle::rel_err(quad, closed) < 1e-8);

  CHECK(oracle::rel_err(frac_seminorm_sq(u, s), quad) < 1e-4);
}

TEST_CASE("poisson torus: zero source, single mode, and the direct-sum oracle") {
  GridSpec g{8, 6.0};
  const double s = 0.9;
  CHECK(max_abs(poisson_solve(Field(g), s, PoissonMode::torus)) == 0.0);

  Field c(g);
  c.fill_with([&](double x, double, double) { return std::cos(2.0 * M_PI * x / g.L); });
  Field phi = poisson_solve(c, s, PoissonMode::torus);
  const double amp = std::pow(g.L / (2.0 * M_PI), 2.0 * s);
  for (std::size_t i = 0; i < c.size(); ++i)
    CHECK(std::abs(phi.values[i] - amp * c.values[i]) < 1e-12 * amp);

  Field u = oracle::random_field(g, 21);
  Field fast = poisson_solve(u, s, PoissonMode::torus);
  Field slow = oracle::direct_multiplier(
      u, [s](double xi2) { return xi2 > 0.0 ? std::pow(xi2, -s) : 0.0; });
  const double sup = std::max(max_abs(fast), 1e-300);
  for (std::size_t i = 0; i < u.size(); ++i)
    CHECK(std::abs(fast.values[i] - slow.values[i]) <= 1e-10 * sup);

  CHECK_THROWS_AS(poisson_solve(u, 0.4, PoissonMode::torus), error);
}

TEST_CASE("poisson free_space: nonnegativity for nonnegative sources") {
  GridSpec g{16, 16.0};
  Field u = oracle::gaussian(g, 1.5);
  Field src = multiply(u, u);
  Field phi = poisson_solve(src, 0.9, PoissonMode::free_space);
  double mn = 0.0, mx = 0.0;
  for (double v : phi.values) {
    mn = std::min(mn, v);
    mx = std::max(mx, std::abs(v));
  }
  CHECK(mn >= -1e-12 * mx);
}

TEST_CASE("coulomb energy: homogeneity, translation invariance, pairing identity") {
  GridSpec g{12, 10.0};
  const double s = 0.85;
  CHECK(coulomb_energy(Field(g), s, PoissonMode::torus) == 0.0);

  Field u = oracle::random_smooth_field(g, 31);
  const double psi = coulomb_energy(u, s, PoissonMode::torus);
  CHECK(psi >= 0.0);

  const double tau = 1.7;
  CHECK(oracle::rel_err(coulomb_energy(scale(u, tau), s, PoissonMode::torus),
                        tau * tau * tau * tau * psi) < 1e-12);

  Field shifted = circular_shift(u, {5, -3, 2});
  CHECK(oracle::rel_err(coulomb_energy(shifted, s, PoissonMode::torus), psi) < 1e-12);

  // spectral pairing equals integrate(phi u^2)
  Field usq = multiply(u, u);
  Field phi = poisson_solve(usq, s, PoissonMode::torus);
  CHECK(oracle::rel_err(inner(phi, usq), psi) < 1e-10);

  // exchange symmetry of the underlying bilinear form
  Field v = oracle::random_smooth_field(g, 32);
  Field vsq = multiply(v, v);
  Field phi_v = poisson_solve(vsq, s, PoissonMode::torus);
  CHECK(oracle::rel_err(inner(phi, vsq), inner(phi_v, usq)) < 1e-10);
}

TEST_CASE("operator invariants: self-adjointness and semigroup composition") {
  GridSpec g{12, 7.0};
  Field u = oracle::random_field(g, 41), v = oracle::random_field(g, 42);
  const double s = 0.9;
  CHECK(oracle::rel_err(inner(frac_laplacian(u, s), v), inner(u, frac_laplacian(v, s))) <
        1e-10);

  Field two_step = frac_laplacian(frac_laplacian(u, 0.3), 0.5);
  Field one_step = frac_laplacian(u, 0.8);
  const double sup = std::max(max_abs(one_step), 1e-300);
  for (std::size_t i = 0; i < u.size(); ++i)
    CHECK(std::abs(two_step.values[i] - one_step.values[i]) <= 1e-10 * sup);
}

TEST_CASE("riesz_constant: both published normalizations") {
  // paper-style formula at s = 3/4: pi^{-3/2} 2^{-3/2} Gamma(3/2)/Gamma(3/4)
  RieszConstants r34 = riesz_constant(0.75);
  CHECK(oracle::rel_err(r34.paper, 0.045918885915803921) < 1e-12);

  // standard formula at the classical endpoint: 1/(4 pi)
  RieszConstants r1 = riesz_constant(1.0);
  CHECK(oracle::rel_err(r1.standard, 1.0 / (4.0 * M_PI)) < 1e-12);

  RieszConstants r9 = riesz_constant(0.9);
  CHECK(oracle::rel_err(r9.paper, 0.044311542469054266) < 1e-12);
  CHECK(oracle::rel_err(r9.standard, 0.071869584021544641) < 1e-12);

  CHECK_THROWS_AS(riesz_constant(0.5), error);
}

TEST_CASE("kernel calibration selects the standard normalization") {
  const double s = 0.9;
  KernelCalibration cal = calibrate_kernel(s, GridSpec{64, 40.0});
  RieszConstants rc = riesz_constant(s);
  CHECK(oracle::rel_err(cal.constant, rc.standard) < 0.05);
  CHECK(oracle::rel_err(cal.constant, rc.paper) > 0.20);
}

TEST_CASE("kernel calibration: doubling the box at least halves the fit residual") {
  const double s = 0.8, sigma = 2.0;
  KernelCalibration small = calibrate_kernel(s, GridSpec{32, 20.0}, 0.08, sigma);
  KernelCalibration big = calibrate_kernel(s, GridSpec{64, 40.0}, 0.08, sigma);
  CHECK(big.residual <= 0.5 * small.residual);
}

TEST_CASE("kernel calibration: classical limit against the Newtonian constant") {
  KernelCalibration cal = calibrate_kernel(1.0, GridSpec{64, 40.0});
  CHECK(oracle::rel_err(cal.constant, 1.0 / (4.0 * M_PI)) < 0.05);
}
