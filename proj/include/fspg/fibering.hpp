// Copyright (c) the fspg authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef FSPG_FIBERING_HPP
#define FSPG_FIBERING_HPP

#include <fstream>
#include <functional>
#include <vector>

#include "fspg/functionals.hpp"

namespace fspg {

// Dilation u_theta = theta^{2s} u(theta x), realized exactly by metadata:
// the sample array is scaled by theta^{2s} and the box shrinks to L/theta.
// Consequence: fields at different theta live on different boxes; binary
// operations across them are rejected by the grid-mismatch checks and require
// an explicit resample.
inline Field dilate(const Field &u, double theta, double s) {
  require(theta > 0.0 && std::isfinite(theta), "dilate: theta must be positive");
  if (theta == 1.0) return u;
  Field r = u;
  r.grid.L = u.grid.L / theta;
  const double amp = std::pow(theta, 2.0 * s);
  for (auto &v : r.values) v *= amp;
  return r;
}

namespace detail {

struct FiberExponents {
  double ea, em, ed; // kinetic/coulomb, mass, nonlinearity
};

inline FiberExponents fiber_exponents(const ProblemSpec &ps) {
  return {6.0 * ps.s - 3.0, 4.0 * ps.s - 3.0, 2.0 * ps.s * (ps.p + 1.0) - 3.0};
}

} // namespace detail

// gamma(theta) = I(u_theta) in closed form on a quartet; valid verbatim only
// for constant V, where b scales like the mass integral.
inline double fiber_energy(const Quartet &q, double theta, const ProblemSpec &ps) {
  require(ps.potential.is_constant(),
          "fiber_energy: closed form requires a constant potential");
  const auto [ea, em, ed] = detail::fiber_exponents(ps);
  return std::pow(theta, ea) * (0.5 * q.a + 0.25 * q.c) + std::pow(theta, em) * 0.5 * q.b -
         ps.lambda * std::pow(theta, ed) * q.d_raw / (ps.p + 1.0);
}

// gamma'(theta); gamma'(1) = G(u) by construction
inline double fiber_derivative(const Quartet &q, double theta, const ProblemSpec &ps) {
  require(ps.potential.is_constant(),
          "fiber_derivative: closed form requires a constant potential");
  const auto [ea, em, ed] = detail::fiber_exponents(ps);
  return ea * std::pow(theta, ea - 1.0) * (0.5 * q.a + 0.25 * q.c) +
         em * std::pow(theta, em - 1.0) * 0.5 * q.b -
         ps.lambda * ed * std::pow(theta, ed - 1.0) * q.d_raw / (ps.p + 1.0);
}

inline double fiber_second_derivative(const Quartet &q, double theta, const ProblemSpec &ps) {
  const auto [ea, em, ed] = detail::fiber_exponents(ps);
  return ea * (ea - 1.0) * std::pow(theta, ea - 2.0) * (0.5 * q.a + 0.25 * q.c) +
         em * (em - 1.0) * std::pow(theta, em - 2.0) * 0.5 * q.b -
         ps.lambda * ed * (ed - 1.0) * std::pow(theta, ed - 2.0) * q.d_raw / (ps.p + 1.0);
}

// h(theta) of the uniqueness argument: gamma'(theta) = 0 iff
// h(theta) = (6s-3)(a/2 + c/4), and h is strictly increasing for p > 2, s > 3/4.
inline double fiber_h(const Quartet &q, double theta, const ProblemSpec &ps) {
  const auto [ea, em, ed] = detail::fiber_exponents(ps);
  (void)ea;
  return ps.lambda * ed * std::pow(theta, 2.0 * ps.s * (ps.p - 2.0)) * q.d_raw / (ps.p + 1.0) -
         em * std::pow(theta, -2.0 * ps.s) * 0.5 * q.b;
}

// Exact fiber evaluation valid for any potential: a, c, d_raw and the mass
// follow the dilation power laws; for nonconstant V the b and e integrals are
// requadratured against V sampled on the dilated grid.
class FiberMap {
public:
  FiberMap(const Field &u, const ProblemSpec &ps) : ps_(ps), base_(quartet(u, ps)) {
    if (!ps.potential.is_constant()) {
      // all shipped potentials are radial, so the mass density can be binned
      // by the integer squared radius i^2+j^2+k^2 of the centered indices;
      // b(theta) and e(theta) then cost one V evaluation per occupied bin
      grid_ = u.grid;
      const int n = grid_.n, half = n / 2;
      mass_by_rsq_.assign(static_cast<std::size_t>(3 * half * half + 1), 0.0);
      std::size_t idx = 0;
      for (int i = 0; i < n; ++i) {
        const int ci = i - half;
        for (int j = 0; j < n; ++j) {
          const int cj = j - half;
          for (int k = 0; k < n; ++k, ++idx) {
            const int ck = k - half;
            mass_by_rsq_[static_cast<std::size_t>(ci * ci + cj * cj + ck * ck)] +=
                u.values[idx] * u.values[idx];
          }
        }
      }
    }
  }

  // constant-V construction from a precomputed quartet
  FiberMap(const Quartet &q, const ProblemSpec &ps) : ps_(ps), base_(q) {
    require(ps.potential.is_constant(),
            "FiberMap: field required for nonconstant potentials");
  }

  const Quartet &base() const { return base_; }

  Quartet at(double theta) const {
    const auto [ea, em, ed] = detail::fiber_exponents(ps_);
    Quartet q;
    q.a = std::pow(theta, ea) * base_.a;
    q.c = std::pow(theta, ea) * base_.c;
    q.d_raw = std::pow(theta, ed) * base_.d_raw;
    q.mass = std::pow(theta, em) * base_.mass;
    if (ps_.potential.is_constant()) {
      q.b = std::pow(theta, em) * base_.b;
      q.e = 0.0;
    } else {
      // b(theta) = theta^{4s-3} int V(x/theta) u(x)^2 dx, e(theta) analogously
      const double h = grid_.spacing();
      double sb = 0.0, se = 0.0;
      for (std::size_t m = 0; m < mass_by_rsq_.size(); ++m) {
        if (mass_by_rsq_[m] == 0.0) continue;
        const double r = h * std::sqrt(static_cast<double>(m)) / theta;
        sb += ps_.potential.value(r) * mass_by_rsq_[m];
        se += ps_.potential.virial(r) * mass_by_rsq_[m];
      }
      const double w = std::pow(theta, em) * grid_.cell_volume();
      q.b = w * sb;
      q.e = w * se;
    }
    return q;
  }

  double gamma(double theta) const { return energy(at(theta), ps_); }
  // theta gamma'(theta) = G_V(u_theta)
  double dgamma(double theta) const { return constraint_g(at(theta), ps_) / theta; }

private:
  ProblemSpec ps_;
  Quartet base_;
  std::vector<double> mass_by_rsq_;
  GridSpec grid_;
};

struct Projection {
  double theta0 = 1.0;
  Field field;
  int root_count = 1; // multiplicity seen by the general-V scan
};

namespace detail {

// bisection + Newton polish for a bracketed root of dgamma
template <class F, class DF>
inline double refine_root(F &&dgamma, DF &&ddgamma, double lo, double hi) {
  double flo = dgamma(lo);
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = dgamma(mid);
    if (fm == 0.0) return mid;
    if ((fm > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  double t = 0.5 * (lo + hi);
  for (int it = 0; it < 5; ++it) {
    const double f = dgamma(t), df = ddgamma(t);
    if (df == 0.0) break;
    const double t2 = t - f / df;
    if (!(t2 > lo && t2 < hi)) break;
    t = t2;
  }
  return t;
}

} // namespace detail

// Unique projection onto M for constant V: exponential bracketing from
// theta = 1 by factors of 2, then bisection refined by Newton on gamma'.
inline Projection project_to_M(const Field &u, const ProblemSpec &ps) {
  require(ps.potential.is_constant(), "project_to_M: constant potential required");
  require(ps.p > 2.0, "project_to_M: requires p > 2");
  Quartet q = quartet(u, ps);
  require(q.mass > 0.0 && q.d_raw > 0.0,
          "project_to_M: zero field or vanishing |u|^{p+1} integral, no projection");
  auto dg = [&](double t) { return fiber_derivative(q, t, ps); };
  auto ddg = [&](double t) { return fiber_second_derivative(q, t, ps); };

  double lo = 1.0, hi = 1.0;
  if (dg(1.0) > 0.0) {
    while (dg(hi) > 0.0) {
      hi *= 2.0;
      require(hi <= 1e6, "project_to_M: no sign change of gamma' up to theta = 1e6");
    }
    lo = hi * 0.5;
  } else {
    while (dg(lo) <= 0.0) {
      lo *= 0.5;
      require(lo >= 1e-6, "project_to_M: no sign change of gamma' down to theta = 1e-6");
    }
    hi = lo * 2.0;
  }
  Projection pr;
  pr.theta0 = detail::refine_root(dg, ddg, lo, hi);
  pr.field = dilate(u, pr.theta0, ps.s);
  return pr;
}

// Generalized projection for nonconstant V: no monotonicity theorem is
// available, so the fiber is scanned for sign changes of gamma_V' and, among
// the critical points found, the gamma_V-maximizer is taken.
inline Projection project_to_M_generalV(const Field &u, const ProblemSpec &ps,
                                        double theta_hint = 1.0) {
  if (ps.potential.is_constant()) return project_to_M(u, ps);
  require(ps.p > 2.0, "project_to_M_generalV: requires p > 2");
  FiberMap fm(u, ps);
  require(fm.base().mass > 0.0 && fm.base().d_raw > 0.0,
          "project_to_M_generalV: zero field, no projection");
  auto dg = [&](double t) { return fm.dgamma(t); };
  auto ddg = [&](double t) {
    const double h = 1e-6 * t;
    return (fm.dgamma(t + h) - fm.dgamma(t - h)) / (2.0 * h);
  };

  // local bracket around the hint first (cheap in warm-started descent loops)
  double lo = theta_hint / 1.3, hi = theta_hint * 1.3;
  for (int grow = 0; grow < 6; ++grow) {
    if (dg(lo) > 0.0 && dg(hi) < 0.0) {
      Projection pr;
      pr.theta0 = detail::refine_root(dg, ddg, lo, hi);
      pr.field = dilate(u, pr.theta0, ps.s);
      return pr;
    }
    lo /= 1.7;
    hi *= 1.7;
  }

  // full scan fallback; keeps every root and picks the energy maximizer
  const int count = 121;
  const double tmin = 1e-3, tmax = 1e3;
  std::vector<double> roots;
  double prev_t = tmin, prev_f = dg(tmin);
  for (int i = 1; i < count; ++i) {
    const double t = tmin * std::pow(tmax / tmin, static_cast<double>(i) / (count - 1));
    const double f = dg(t);
    if ((prev_f > 0.0) != (f > 0.0))
      roots.push_back(prev_f > 0.0 ? detail::refine_root(dg, ddg, prev_t, t)
                                   : detail::refine_root([&](double x) { return -dg(x); },
                                                         [&](double x) { return -ddg(x); },
                                                         prev_t, t));
    prev_t = t;
    prev_f = f;
  }
  require(!roots.empty(), "project_to_M_generalV: no sign change of gamma' on the scan range");
  Projection pr;
  pr.root_count = static_cast<int>(roots.size());
  double best = -std::numeric_limits<double>::infinity();
  for (double t : roots) {
    const double g = fm.gamma(t);
    if (g > best) {
      best = g;
      pr.theta0 = t;
    }
  }
  pr.field = dilate(u, pr.theta0, ps.s);
  return pr;
}

struct FiberScan {
  std::vector<double> thetas, gamma, gamma_prime;
  double theta_star = 0.0;
  bool unique_root = false;
};

// log-spaced diagnostic scan of the fibering map
inline FiberScan scan_fiber(const Field &u, const ProblemSpec &ps, double theta_min,
                            double theta_max, int count) {
  require(theta_min > 0.0 && theta_min < theta_max, "scan_fiber: bad theta range");
  require(count >= 2, "scan_fiber: need at least 2 scan points");
  FiberMap fm(u, ps);
  FiberScan scan;
  scan.thetas.reserve(count);
  int sign_changes = 0;
  double best_gamma = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < count; ++i) {
    const double t =
        theta_min * std::pow(theta_max / theta_min, static_cast<double>(i) / (count - 1));
    scan.thetas.push_back(t);
    scan.gamma.push_back(fm.gamma(t));
    scan.gamma_prime.push_back(fm.dgamma(t));
    if (scan.gamma.back() > best_gamma) {
      best_gamma = scan.gamma.back();
      scan.theta_star = t;
    }
    if (i > 0 && (scan.gamma_prime[i - 1] > 0.0) != (scan.gamma_prime[i] > 0.0)) ++sign_changes;
  }
  scan.unique_root = sign_changes == 1;
  // refine theta_star by bisection when the scan brackets a derivative root
  for (std::size_t i = 1; i < scan.thetas.size(); ++i) {
    if ((scan.gamma_prime[i - 1] > 0.0) && !(scan.gamma_prime[i] > 0.0)) {
      scan.theta_star = detail::refine_root(
          [&](double t) { return fm.dgamma(t); },
          [&](double t) {
            const double h = 1e-6 * t;
            return (fm.dgamma(t + h) - fm.dgamma(t - h)) / (2.0 * h);
          },
          scan.thetas[i - 1], scan.thetas[i]);
      break;
    }
  }
  return scan;
}

inline void write_fiber_csv(const FiberScan &scan, const std::string &path) {
  std::ofstream out(path);
  require(out.good(), "write_fiber_csv: cannot open " + path);
  out << "theta,gamma,gamma_prime\n";
  char buf[128];
  for (std::size_t i = 0; i < scan.thetas.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", scan.thetas[i], scan.gamma[i],
                  scan.gamma_prime[i]);
    out << buf;
  }
}

// Nehari ray diagnostic (p > 3 only): the positive root of
// (a+b) + t^2 c = lambda t^{p-1} d_raw and the level I(t u).
struct NehariRay {
  double t = 1.0;
  double level = 0.0;
};

inline NehariRay nehari_ray(const Quartet &q, const ProblemSpec &ps) {
  require(ps.p > 3.0, "nehari_ray: diagnostic restricted to p > 3");
  require(q.d_raw > 0.0 && q.a + q.b > 0.0, "nehari_ray: degenerate quartet");
  auto f = [&](double t) {
    return q.a + q.b + t * t * q.c - ps.lambda * std::pow(t, ps.p - 1.0) * q.d_raw;
  };
  double lo = 1e-8, hi = 1.0;
  while (f(hi) > 0.0) {
    hi *= 2.0;
    require(hi < 1e12, "nehari_ray: no root found");
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) > 0.0 ? lo : hi) = mid;
  }
  NehariRay r;
  r.t = 0.5 * (lo + hi);
  const double t2 = r.t * r.t;
  r.level = 0.5 * t2 * (q.a + q.b) + 0.25 * t2 * t2 * q.c -
            ps.lambda * std::pow(r.t, ps.p + 1.0) * q.d_raw / (ps.p + 1.0);
  return r;
}

} // namespace fspg

#endif
