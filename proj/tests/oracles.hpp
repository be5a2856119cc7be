// Copyright (c) the fspg authors.
// SPDX-License-Identifier: Apache-2.0
//
// Test-only oracles, kept independent of the implementation paths they check:
// O(N^2) direct DFT sums, brute-force multiplier application, and helpers for
// random and analytic fields.

#ifndef FSPG_TEST_ORACLES_HPP
#define FSPG_TEST_ORACLES_HPP

#include <complex>
#include <vector>

#include "fspg/grid.hpp"

namespace oracle {

using fspg::Field;
using fspg::GridSpec;

// direct centered-phase DFT: F_m = sum_j f_j exp(-i xi_m . x_j)
inline std::vector<std::complex<double>> direct_dft(const Field &f) {
  const GridSpec &g = f.grid;
  const int n = g.n;
  std::vector<std::complex<double>> out(g.size());
  for (int mi = 0; mi < n; ++mi)
    for (int mj = 0; mj < n; ++mj)
      for (int mk = 0; mk < n; ++mk) {
        std::complex<double> acc = 0.0;
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
              const double phase = g.freq(mi) * g.coord(i) + g.freq(mj) * g.coord(j) +
                                   g.freq(mk) * g.coord(k);
              acc += f.values[g.flat(i, j, k)] * std::polar(1.0, -phase);
            }
        out[g.flat(mi, mj, mk)] = acc;
      }
  return out;
}

// direct inverse: f_j = (1/n^3) sum_m F_m exp(+i xi_m . x_j)
inline Field direct_idft(const std::vector<std::complex<double>> &modes, const GridSpec &g) {
  const int n = g.n;
  Field out(g);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        std::complex<double> acc = 0.0;
        for (int mi = 0; mi < n; ++mi)
          for (int mj = 0; mj < n; ++mj)
            for (int mk = 0; mk < n; ++mk) {
              const double phase = g.freq(mi) * g.coord(i) + g.freq(mj) * g.coord(j) +
                                   g.freq(mk) * g.coord(k);
              acc += modes[g.flat(mi, mj, mk)] * std::polar(1.0, phase);
            }
        out.values[g.flat(i, j, k)] = acc.real() / static_cast<double>(g.size());
      }
  return out;
}

// brute-force application of a radial spectral multiplier through direct sums
template <class M>
inline Field direct_multiplier(const Field &f, M &&mult) {
  const GridSpec &g = f.grid;
  auto modes = direct_dft(f);
  const int n = g.n;
  for (int mi = 0; mi < n; ++mi)
    for (int mj = 0; mj < n; ++mj)
      for (int mk = 0; mk < n; ++mk) {
        const double xi = g.freq(mi), xj = g.freq(mj), xk = g.freq(mk);
        modes[g.flat(mi, mj, mk)] *= mult(xi * xi + xj * xj + xk * xk);
      }
  return direct_idft(modes, g);
}

inline Field random_field(const GridSpec &g, std::uint64_t seed) {
  fspg::Rng rng(seed);
  Field f(g);
  for (auto &v : f.values) v = rng.normal();
  return f;
}

// smooth random field: a few Gaussians with random centers, widths and signs
inline Field random_smooth_field(const GridSpec &g, std::uint64_t seed, int bumps = 3,
                                 bool nonnegative = false) {
  fspg::Rng rng(seed);
  Field f(g);
  for (int b = 0; b < bumps; ++b) {
    const double amp = (nonnegative ? 1.0 : (rng.uniform() < 0.5 ? -1.0 : 1.0)) *
                       rng.uniform(0.5, 1.5);
    const double w = rng.uniform(g.L / 14.0, g.L / 8.0);
    const double cx = rng.uniform(-g.L / 6.0, g.L / 6.0);
    const double cy = rng.uniform(-g.L / 6.0, g.L / 6.0);
    const double cz = rng.uniform(-g.L / 6.0, g.L / 6.0);
    const int n = g.n;
    std::size_t idx = 0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k, ++idx) {
          const double dx = g.coord(i) - cx, dy = g.coord(j) - cy, dz = g.coord(k) - cz;
          f.values[idx] += amp * std::exp(-(dx * dx + dy * dy + dz * dz) / (2.0 * w * w));
        }
  }
  return f;
}

inline Field gaussian(const GridSpec &g, double width, double amp = 1.0,
                      double cx = 0.0, double cy = 0.0, double cz = 0.0) {
  Field f(g);
  f.fill_with([=](double x, double y, double z) {
    const double dx = x - cx, dy = y - cy, dz = z - cz;
    return amp * std::exp(-(dx * dx + dy * dy + dz * dz) / (2.0 * width * width));
  });
  return f;
}

inline double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}

} // namespace oracle

#endif
