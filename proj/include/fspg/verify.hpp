// Copyright (c) the fspg authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef FSPG_VERIFY_HPP
#define FSPG_VERIFY_HPP

#include <array>

#include "fspg/solver.hpp"

namespace fspg {

// ---------------------------------------------------------------------------
// Lagrange-multiplier algebra. Unknowns are the normalized integrals
//   a = (1/2) int |(-D)^{s/2}u|^2,  b = (1/2) int u^2,
//   c = (1/4) int phi_u u^2,        d = (1/(p+1)) int |u|^{p+1},
// and the four rows are: the definition of k = I(u), membership G(u) = 0, the
// pairing <I'(u)+mu G'(u), u> = 0, and the Pohozaev identity of the
// mu-modified equation.
// ---------------------------------------------------------------------------

inline std::array<std::array<double, 4>, 4> lagrange_matrix(double mu, double s, double p) {
  const double D1 = 6.0 * s - 3.0, D2 = 4.0 * s - 3.0, D3 = 2.0 * s * (p + 1.0) - 3.0;
  const double m1 = 1.0 + mu * D1, m2 = 1.0 + mu * D2, m3 = 1.0 + mu * D3;
  return {{{1.0, 1.0, 1.0, -1.0},
           {D1, D2, D1, -D3},
           {2.0 * m1, 2.0 * m2, 4.0 * m1, -(p + 1.0) * m3},
           {(3.0 - 2.0 * s) * m1, 3.0 * m2, (3.0 + 2.0 * s) * m1, -3.0 * m3}}};
}

namespace detail {

// determinant of a 4x4 by LU with partial pivoting
inline double det4(std::array<std::array<double, 4>, 4> a) {
  double det = 1.0;
  for (int col = 0; col < 4; ++col) {
    int piv = col;
    for (int r = col + 1; r < 4; ++r)
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    if (a[piv][col] == 0.0) return 0.0;
    if (piv != col) {
      std::swap(a[piv], a[col]);
      det = -det;
    }
    det *= a[col][col];
    for (int r = col + 1; r < 4; ++r) {
      const double f = a[r][col] / a[col][col];
      for (int c = col; c < 4; ++c) a[r][c] -= f * a[col][c];
    }
  }
  return det;
}

} // namespace detail

struct DetPair {
  double closed_form;
  double numeric;
};

// det(A) = -16 mu s^3 (1 + mu(6s-3)) (p-1)(p-2), vanishing exactly at mu = 0,
// mu = -1/(6s-3), p = 1 and p = 2
inline DetPair lagrange_det(double mu, double s, double p) {
  DetPair d;
  d.closed_form =
      -16.0 * mu * s * s * s * (1.0 + mu * (6.0 * s - 3.0)) * (p - 1.0) * (p - 2.0);
  d.numeric = detail::det4(lagrange_matrix(mu, s, p));
  return d;
}

// Cramer value of d in the regular case: d = -3k(2s-1)(4s-3) / (4s^2 (p-1)(p-2));
// negative for k > 0, s in (3/4,1), p > 2 -- the contradiction that forces mu = 0.
inline double cramer_d(double k, double s, double p) {
  require(std::abs(p - 1.0) > 1e-12 && std::abs(p - 2.0) > 1e-12,
          "cramer_d: singular at p = 1 and p = 2");
  return -3.0 * k * (2.0 * s - 1.0) * (4.0 * s - 3.0) / (4.0 * s * s * (p - 1.0) * (p - 2.0));
}

// dense-solve cross-check of cramer_d at a regular multiplier mu
inline double cramer_d_solve(double k, double s, double p, double mu) {
  const auto A = lagrange_matrix(mu, s, p);
  std::vector<double> flat(16);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) flat[r * 4 + c] = A[r][c];
  auto x = detail::solve_dense(4, flat, {k, 0.0, 0.0, 0.0});
  return x[3];
}

// ---------------------------------------------------------------------------
// Nonexistence certificates
// ---------------------------------------------------------------------------

struct Certificate {
  double value; // int (|u|^3 + u^2 - |u|^{p+1})
  double scale; // int (|u|^3 + u^2 + |u|^{p+1})
};

// Subcritical regime (p in (1,2], lambda >= 1/4, V = const): the pointwise
// nonnegativity of t^2 + t^3 - t^{p+1} makes the certificate nonnegative for
// every field, while the solution identities force it to be <= 0; any solution
// is therefore zero, and a probe run must terminate in collapse.
inline Certificate nonexistence_subcritical_certificate(const Field &u, const ProblemSpec &ps) {
  require(ps.p > 1.0 && ps.p <= 2.0,
          "subcritical certificate: regime requires p in (1,2]");
  require(ps.lambda >= 0.25, "subcritical certificate: regime requires lambda >= 1/4");
  require(ps.potential.is_constant(), "subcritical certificate: regime requires constant V");
  Certificate c{0.0, 0.0};
  const double w = u.grid.cell_volume();
  for (double v : u.values) {
    const double t = std::abs(v);
    const double t2 = t * t, t3 = t2 * t, tp = t > 0.0 ? std::pow(t, ps.p + 1.0) : 0.0;
    c.value += t2 + t3 - tp;
    c.scale += t2 + t3 + tp;
  }
  c.value *= w;
  c.scale *= w;
  return c;
}

struct CriticalIdentity {
  double term_V;   // int (2sV + (x, grad V)) u^2
  double term_phi; // (6s-3)/(2(3-2s)) int phi u^2
};

// Critical exponent p = 2*_s - 1: combining the Pohozaev and Nehari identities
// leaves term_V/(3-2s) + term_phi = 0, and both terms are nonnegative under
// (V1); a true solution must therefore be zero.
inline CriticalIdentity nonexistence_critical_identity(const Field &u, const ProblemSpec &ps) {
  require(std::abs(ps.p - critical_p(ps.s)) <= 1e-9,
          "critical identity: regime requires p = (3+2s)/(3-2s)");
  Quartet q = quartet(u, ps);
  CriticalIdentity ci;
  ci.term_V = 2.0 * ps.s * q.b + q.e;
  ci.term_phi = (6.0 * ps.s - 3.0) / (2.0 * (3.0 - 2.0 * ps.s)) * q.c;
  return ci;
}

struct YoungCheck {
  double lhs; // int |u|^3
  double rhs; // int |(-D)^{s/2}u|^2 + (1/4) int |(-D)^{s/2}phi|^2
};

// The one place the two fields' seminorms are coupled; testing it guards the
// Poisson-solve normalization.
inline YoungCheck young_inequality(const Field &u, const Field &phi, double s) {
  YoungCheck y;
  y.lhs = integrate(abs_power(u, 3.0));
  y.rhs = frac_seminorm_sq(u, s) + 0.25 * frac_seminorm_sq(phi, s);
  return y;
}

// ---------------------------------------------------------------------------
// Level consistency report: manifold level (c3 proxy), fibering max (c2 proxy)
// and, for p > 3, the Nehari-ray level.
// ---------------------------------------------------------------------------

struct LevelEntry {
  double manifold_level = 0.0;
  double fibering_max = 0.0;
  double theta_star = 1.0;
  double nehari_level = 0.0;
  bool has_nehari = false;
  bool consistent = true;
};

struct LevelReport {
  std::vector<LevelEntry> entries;
  bool all_consistent = true;
  double rel_tol = 1e-4;
};

inline LevelReport level_report(const std::vector<GroundStateResult> &results,
                                const ProblemSpec &ps, double rel_tol = 1e-4) {
  LevelReport rep;
  rep.rel_tol = rel_tol;
  for (const auto &r : results) {
    if (r.status != SolveStatus::converged && r.status != SolveStatus::energy_stop) continue;
    LevelEntry e;
    e.manifold_level = r.level;
    MountainPass mp = mountain_pass_check(r, ps);
    e.fibering_max = mp.max_gamma;
    e.theta_star = mp.theta_star;
    const double denom = std::max(std::abs(e.manifold_level), 1e-300);
    e.consistent = std::abs(e.fibering_max - e.manifold_level) / denom <= rel_tol;
    if (ps.p > 3.0) {
      NehariRay nr = nehari_ray(r.quartet, ps);
      e.nehari_level = nr.level;
      e.has_nehari = true;
      e.consistent =
          e.consistent && std::abs(e.nehari_level - e.manifold_level) / denom <= rel_tol;
    }
    rep.all_consistent = rep.all_consistent && e.consistent;
    rep.entries.push_back(e);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Probe drivers. Nonexistence is "verified" as solver collapse plus
// certificate positivity, never as a proof; reports phrase the outcome as
// consistency with the corresponding nonexistence statement.
// ---------------------------------------------------------------------------

struct SubcriticalProbe {
  std::vector<SolveStatus> statuses;
  std::vector<double> final_mass_ratio;
  double min_certificate = 0.0;        // most negative certificate seen on any iterate
  double min_certificate_scale = 0.0;  // scale at that iterate
  bool all_collapsed = true;
  bool certificate_nonnegative = true; // >= -1e-12 * scale along every trajectory
};

inline SubcriticalProbe subcritical_probe(const ProblemSpec &ps, const SolverConfig &cfg,
                                          const std::vector<std::uint64_t> &seeds) {
  require(!seeds.empty(), "subcritical_probe: need at least one seed");
  SubcriticalProbe probe;
  probe.min_certificate = std::numeric_limits<double>::infinity();
  for (std::uint64_t seed : seeds) {
    SolverConfig c = cfg;
    c.seed = seed;
    double worst = std::numeric_limits<double>::infinity(), worst_scale = 1.0;
    auto observer = [&](long, const Field &u) {
      Certificate cert = nonexistence_subcritical_certificate(u, ps);
      if (cert.value < worst) {
        worst = cert.value;
        worst_scale = cert.scale;
      }
      if (cert.value < -1e-12 * cert.scale) probe.certificate_nonnegative = false;
    };
    GroundStateResult run = probe_descent(ps, c, observer);
    probe.statuses.push_back(run.status);
    const double mass0 = run.trace.empty() ? 1.0 : run.trace.front().mass;
    probe.final_mass_ratio.push_back(run.quartet.mass / std::max(mass0, 1e-300));
    probe.all_collapsed = probe.all_collapsed && run.status == SolveStatus::collapsed;
    if (worst < probe.min_certificate) {
      probe.min_certificate = worst;
      probe.min_certificate_scale = worst_scale;
    }
  }
  return probe;
}

struct CriticalProbe {
  GroundStateResult run;
  double min_term_V = 0.0; // over the trace, for constant V; else final state only
  bool term_V_positive = true;
  bool nonexistence_consistent = false; // no nonzero stationary state reached
};

inline CriticalProbe critical_probe(const ProblemSpec &ps, const SolverConfig &cfg) {
  require(std::abs(ps.p - critical_p(ps.s)) <= 1e-9,
          "critical_probe: requires p = (3+2s)/(3-2s)");
  CriticalProbe probe;
  probe.run = minimize_on_manifold(ps, cfg);
  probe.min_term_V = std::numeric_limits<double>::infinity();
  if (ps.potential.is_constant()) {
    for (const auto &tp : probe.run.trace) {
      const double tv = 2.0 * ps.s * ps.potential.v_inf * tp.mass;
      probe.min_term_V = std::min(probe.min_term_V, tv);
      if (tp.mass > 0.0 && tv <= 0.0) probe.term_V_positive = false;
    }
  } else {
    CriticalIdentity ci = nonexistence_critical_identity(probe.run.field, ps);
    probe.min_term_V = ci.term_V;
    probe.term_V_positive = ci.term_V > 0.0;
  }
  const bool reached_zero = std::sqrt(probe.run.quartet.mass) < 1e-8;
  probe.nonexistence_consistent =
      probe.run.status != SolveStatus::converged || reached_zero;
  return probe;
}

} // namespace fspg

#endif
