// Copyright (c) the fspg authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef FSPG_POTENTIAL_HPP
#define FSPG_POTENTIAL_HPP

#include <array>
#include <fstream>
#include <sstream>
#include <vector>

#include "fspg/fractional.hpp"
#include "fspg/grid.hpp"

namespace fspg {

enum class PotentialKind { constant, paper_example, radial_table };

namespace detail {

// natural cubic spline on strictly increasing abscissas
struct CubicSpline {
  std::vector<double> x, y, m; // m = second derivatives at the knots

  void build(const std::vector<double> &xs, const std::vector<double> &ys) {
    require(xs.size() == ys.size() && xs.size() >= 4,
            "radial table: need at least 4 points for a stable spline");
    for (std::size_t i = 1; i < xs.size(); ++i)
      require(xs[i] > xs[i - 1], "radial table: radii must be strictly increasing");
    x = xs;
    y = ys;
    const int n = static_cast<int>(x.size());
    m.assign(n, 0.0);
    std::vector<double> sub(n, 0.0), diag(n, 1.0), sup(n, 0.0), rhs(n, 0.0);
    for (int i = 1; i < n - 1; ++i) {
      const double h0 = x[i] - x[i - 1], h1 = x[i + 1] - x[i];
      sub[i] = h0 / 6.0;
      diag[i] = (h0 + h1) / 3.0;
      sup[i] = h1 / 6.0;
      rhs[i] = (y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0;
    }
    for (int i = 1; i < n; ++i) { // Thomas sweep
      const double w = sub[i] / diag[i - 1];
      diag[i] -= w * sup[i - 1];
      rhs[i] -= w * rhs[i - 1];
    }
    m[n - 1] = rhs[n - 1] / diag[n - 1];
    for (int i = n - 2; i >= 0; --i) m[i] = (rhs[i] - sup[i] * m[i + 1]) / diag[i];
  }

  int segment(double t) const {
    int lo = 0, hi = static_cast<int>(x.size()) - 1;
    while (hi - lo > 1) {
      const int mid = (lo + hi) / 2;
      (x[mid] <= t ? lo : hi) = mid;
    }
    return lo;
  }

  double eval(double t) const {
    if (t <= x.front()) return y.front();
    if (t >= x.back()) return y.back();
    const int i = segment(t);
    const double h = x[i + 1] - x[i], a = (x[i + 1] - t) / h, b = (t - x[i]) / h;
    return a * y[i] + b * y[i + 1] +
           ((a * a * a - a) * m[i] + (b * b * b - b) * m[i + 1]) * h * h / 6.0;
  }

  double deriv(double t) const {
    if (t <= x.front() || t >= x.back()) return 0.0;
    const int i = segment(t);
    const double h = x[i + 1] - x[i], a = (x[i + 1] - t) / h, b = (t - x[i]) / h;
    return (y[i + 1] - y[i]) / h +
           ((1.0 - 3.0 * a * a) * m[i] + (3.0 * b * b - 1.0) * m[i + 1]) * h / 6.0;
  }
};

} // namespace detail

// Potential family V(x). All shipped kinds are radial.
//   constant:      V = v_inf everywhere
//   paper_example: V(x) = 2 - 1/(1 + |x|^{2s}), v_inf = 2
//   radial_table:  spline through (r, V) samples, v_inf beyond the last radius
struct PotentialSpec {
  PotentialKind kind = PotentialKind::constant;
  double v_inf = 1.0;
  double s_exponent = 0.9; // used by paper_example
  detail::CubicSpline table;

  static PotentialSpec constant(double v) {
    PotentialSpec p;
    p.kind = PotentialKind::constant;
    p.v_inf = v;
    return p;
  }

  static PotentialSpec paper_example(double s) {
    PotentialSpec p;
    p.kind = PotentialKind::paper_example;
    p.v_inf = 2.0;
    p.s_exponent = s;
    return p;
  }

  static PotentialSpec radial_table(const std::vector<double> &r, const std::vector<double> &v,
                                    double v_inf_override = 0.0) {
    PotentialSpec p;
    p.kind = PotentialKind::radial_table;
    p.table.build(r, v);
    p.v_inf = v_inf_override != 0.0 ? v_inf_override : v.back();
    return p;
  }

  bool is_constant() const { return kind == PotentialKind::constant; }

  double value(double r) const {
    switch (kind) {
    case PotentialKind::constant: return v_inf;
    case PotentialKind::paper_example:
      return 2.0 - 1.0 / (1.0 + std::pow(r, 2.0 * s_exponent));
    case PotentialKind::radial_table:
      return r >= table.x.back() ? v_inf : table.eval(r);
    }
    return v_inf;
  }

  // radial virial weight (x . grad V) = r V'(r)
  double virial(double r) const {
    switch (kind) {
    case PotentialKind::constant: return 0.0;
    case PotentialKind::paper_example: {
      const double q = std::pow(r, 2.0 * s_exponent);
      const double d = 1.0 + q;
      return 2.0 * s_exponent * q / (d * d);
    }
    case PotentialKind::radial_table: return r * table.deriv(r);
    }
    return 0.0;
  }
};

// CSV with header "r,V", strictly increasing r
inline PotentialSpec load_radial_table(const std::string &path, double v_inf_override = 0.0) {
  std::ifstream in(path);
  require(in.good(), "radial table: cannot open " + path);
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), "radial table: empty file");
  std::vector<double> r, v;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string a, b;
    require(static_cast<bool>(std::getline(ss, a, ',')) &&
                static_cast<bool>(std::getline(ss, b, ',')),
            "radial table: malformed row '" + line + "'");
    r.push_back(std::stod(a));
    v.push_back(std::stod(b));
  }
  return PotentialSpec::radial_table(r, v, v_inf_override);
}

inline Field evaluate_V(const PotentialSpec &spec, const GridSpec &grid) {
  Field f(grid);
  if (spec.is_constant()) {
    std::fill(f.values.begin(), f.values.end(), spec.v_inf);
    return f;
  }
  f.fill_with([&spec](double x, double y, double z) {
    return spec.value(std::sqrt(x * x + y * y + z * z));
  });
  f.validate();
  return f;
}

// samples of (x . grad V); identically zero for constant V
inline Field virial_V(const PotentialSpec &spec, const GridSpec &grid) {
  Field f(grid);
  if (spec.is_constant()) return f;
  f.fill_with([&spec](double x, double y, double z) {
    return spec.virial(std::sqrt(x * x + y * y + z * z));
  });
  f.validate();
  return f;
}

struct HypothesisReport {
  bool pass = false;
  double value = 0.0;           // min of 2sV+(x.gradV) for V1, max of V-v_inf for V2
  std::array<double, 3> witness = {0, 0, 0};
  double strict_fraction = 0.0; // V2: fraction of samples with V < v_inf - 1e-9
  bool constant_regime = false; // V2: no strict inequality anywhere
  double max_abs_virial = 0.0;  // V1: grid bound standing in for the integrability condition
};

// (V1): 2sV(x) + (x, grad V(x)) >= 0, checked as a grid minimum
inline HypothesisReport check_V1(const PotentialSpec &spec, const GridSpec &grid, double s) {
  Field V = evaluate_V(spec, grid);
  Field W = virial_V(spec, grid);
  HypothesisReport rep;
  rep.value = std::numeric_limits<double>::infinity();
  const int n = grid.n;
  std::size_t idx = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k, ++idx) {
        const double g = 2.0 * s * V.values[idx] + W.values[idx];
        rep.max_abs_virial = std::max(rep.max_abs_virial, std::abs(W.values[idx]));
        if (g < rep.value) {
          rep.value = g;
          rep.witness = {grid.coord(i), grid.coord(j), grid.coord(k)};
        }
      }
  rep.pass = rep.value >= -1e-12;
  return rep;
}

// (V2): V <= v_inf with strict inequality on a set of positive measure
inline HypothesisReport check_V2(const PotentialSpec &spec, const GridSpec &grid) {
  Field V = evaluate_V(spec, grid);
  HypothesisReport rep;
  rep.value = -std::numeric_limits<double>::infinity();
  std::size_t strict = 0;
  const int n = grid.n;
  std::size_t idx = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k, ++idx) {
        const double d = V.values[idx] - spec.v_inf;
        if (d > rep.value) {
          rep.value = d;
          rep.witness = {grid.coord(i), grid.coord(j), grid.coord(k)};
        }
        if (V.values[idx] < spec.v_inf - 1e-9) ++strict;
      }
  rep.pass = rep.value <= 1e-12;
  rep.strict_fraction = static_cast<double>(strict) / static_cast<double>(grid.size());
  rep.constant_regime = strict == 0;
  return rep;
}

// (V3): estimate of inf_u (|(-D)^{s/2}u|_2^2 + int V u^2) / int u^2 by
// preconditioned gradient descent on the Rayleigh quotient from several random
// starts. An estimate, not a certificate.
inline double estimate_alpha0(const PotentialSpec &spec, const GridSpec &grid, double s,
                              int starts = 3, int max_iters = 2000, std::uint64_t seed = 1) {
  detail::check_s_laplacian(s);
  Field V = evaluate_V(spec, grid);
  Rng rng(seed);
  double best = std::numeric_limits<double>::infinity();
  for (int run = 0; run < starts; ++run) {
    Field u(grid);
    for (auto &v : u.values) v = rng.normal();
    double nrm = std::sqrt(inner(u, u));
    u = scale(u, 1.0 / nrm);
    double q_prev = std::numeric_limits<double>::infinity();
    double q = 0.0;
    int stall = 0;
    bool done = false;
    for (int it = 0; it < max_iters && !done; ++it) {
      Field Au = add(frac_laplacian(u, s), multiply(V, u));
      q = inner(Au, u);
      // residual (A - q) u, preconditioned by (1 + |xi|^{2s})^{-1}
      Field res = add_scaled(Au, -q, u);
      SpectralField R = forward_transform(res);
      R = detail::apply_multiplier(R, [s](double xi2) {
        return 1.0 / (1.0 + (xi2 > 0.0 ? std::pow(xi2, s) : 0.0));
      });
      Field dir = inverse_transform(R);
      double step = 1.0;
      for (int h = 0; h < 40; ++h) {
        Field cand = add_scaled(u, -step, dir);
        const double cn = std::sqrt(inner(cand, cand));
        if (cn > 1e-14) {
          cand = scale(cand, 1.0 / cn);
          Field Ac = add(frac_laplacian(cand, s), multiply(V, cand));
          const double qc = inner(Ac, cand);
          if (qc < q) {
            u = cand;
            q = qc;
            break;
          }
        }
        step *= 0.5;
      }
      if (std::abs(q_prev - q) <= 1e-11 * std::max(1.0, std::abs(q))) {
        if (++stall >= 5) done = true;
      } else {
        stall = 0;
      }
      q_prev = q;
    }
    require(done, "estimate_alpha0: Rayleigh descent did not converge");
    best = std::min(best, q);
  }
  return best;
}

} // namespace fspg

#endif
