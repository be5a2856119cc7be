// Copyright (c) the fspg authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef FSPG_SOLVER_HPP
#define FSPG_SOLVER_HPP

#include <functional>
#include <optional>

#include "fspg/fibering.hpp"
#include "fspg/functionals.hpp"

namespace fspg {

enum class SolveStatus {
  converged,   // dual gradient norm reached tol_grad
  energy_stop, // relative energy change below tol_energy over the window, or
               // the line search hit its floor; a normal termination (the
               // general-V constrained minimizer keeps a nonzero multiplier,
               // so its free gradient has a positive floor)
  max_iters,   // iteration budget exhausted; best iterate returned, flagged
  collapsed    // trajectory reached the zero field (a first-class outcome:
               // the numerical signature of the nonexistence regimes)
};

inline const char *to_string(SolveStatus s) {
  switch (s) {
  case SolveStatus::converged: return "converged";
  case SolveStatus::energy_stop: return "energy_stop";
  case SolveStatus::max_iters: return "max_iters";
  case SolveStatus::collapsed: return "collapsed";
  }
  return "unknown";
}

struct SolverConfig {
  double step_size = 1.0;
  double tol_grad = 1e-6;
  double tol_energy = 1e-12; // relative energy change over energy_window iterations
  int energy_window = 10;
  long max_iters = 2000;
  std::uint64_t seed = 1;
  enum class Init { gaussian, file } init = Init::gaussian;
  std::string init_path;
  double backtrack_factor = 0.5;
  int max_halvings = 40;
  // trust-region-style cap on ||eta dir|| / ||u||; an uncapped first step can
  // hop into the spurious torus branch where constants slide along M toward
  // the zero field under dilation
  double max_rel_step = 0.3;
  bool clip_negative = false;  // positivity-projected variant
  double collapse_norm = 1e-10; // ||u||_2 below this is a collapse
  // mass decay relative to the first on-manifold iterate that counts as
  // collapse; healthy constant-V runs cannot shed mass like this because the
  // reduced functional pins int V u^2 from below
  double collapse_mass_ratio = 1e-9;

  void validate() const {
    require(step_size > 0.0 && tol_grad > 0.0 && tol_energy > 0.0,
            "SolverConfig: tolerances and step size must be positive");
    require(max_iters >= 1, "SolverConfig: max_iters must be >= 1");
    require(backtrack_factor > 0.0 && backtrack_factor < 1.0,
            "SolverConfig: backtracking factor must lie in (0,1)");
  }
};

struct TracePoint {
  long iter = 0;
  double energy = 0.0;
  double grad_norm = 0.0;
  double theta = 1.0; // projection dilation accepted at this step
  double mass = 0.0;  // int u^2
};

struct GroundStateResult {
  Field field;
  double level = 0.0;
  Quartet quartet;
  ResidualReport residuals;
  long iterations = 0;
  std::vector<TracePoint> trace;
  double lambda = 1.0;
  SolveStatus status = SolveStatus::max_iters;
};

// centered Gaussian with seeded random amplitude and width: nonnegative, fast
// transform decay, nonzero |u|^{p+1} integral, hence always projectable
inline Field gaussian_initial_field(const GridSpec &grid, std::uint64_t seed) {
  Rng rng(seed);
  const double amp = rng.uniform(0.8, 1.6);
  const double width = rng.uniform(grid.L / 12.0, grid.L / 8.0);
  Field u(grid);
  u.fill_with([amp, width](double x, double y, double z) {
    return amp * std::exp(-(x * x + y * y + z * z) / (2.0 * width * width));
  });
  return u;
}

inline Field make_initial_field(const ProblemSpec &ps, const SolverConfig &cfg) {
  if (cfg.init == SolverConfig::Init::file) {
    require(!cfg.init_path.empty(), "solver: init = file requires a field path");
    return read_field(cfg.init_path);
  }
  return gaussian_initial_field(ps.grid, cfg.seed);
}

namespace detail {

struct ProjectedCandidate {
  double theta0 = 1.0;
  Field field;
  Quartet quartet;
};

// project and carry the projected quartet along the exact fiber power laws,
// avoiding a second transform pass per line-search candidate
inline ProjectedCandidate project_candidate(const Field &u, const ProblemSpec &ps,
                                            double theta_hint) {
  ProjectedCandidate pc;
  if (ps.potential.is_constant()) {
    Projection pr = project_to_M(u, ps);
    pc.theta0 = pr.theta0;
    pc.field = std::move(pr.field);
    pc.quartet = FiberMap(quartet(u, ps), ps).at(pc.theta0);
  } else {
    FiberMap fm(u, ps);
    Projection pr = project_to_M_generalV(u, ps, theta_hint);
    pc.theta0 = pr.theta0;
    pc.field = std::move(pr.field);
    pc.quartet = fm.at(pc.theta0);
  }
  return pc;
}

inline Field clip_negative_part(const Field &u) {
  Field r = u;
  for (auto &v : r.values) v = std::max(v, 0.0);
  return r;
}

} // namespace detail

// Constrained minimization of I over the Pohozaev-Nehari manifold:
//   u_{k+1} = project(u_k - eta (1+|xi|^{2s})^{-1} (grad I + mu grad G)(u_k)),
// where mu is the best-fit multiplier in the preconditioned metric (zero in
// the constant-V natural-constraint case, nonzero obstruction otherwise) and
// project is the dilation projection. Backtracking accepts on a decrease of
// the reduced functional J for constant V (where J = I on M, J positive) and
// of I itself for general V (where they differ by e/(2 (2s(p+1)-3)) on M).
inline GroundStateResult minimize_on_manifold(const ProblemSpec &ps, const SolverConfig &cfg,
                                              std::optional<Field> initial = std::nullopt) {
  ps.validate_solver();
  cfg.validate();
  const bool const_V = ps.potential.is_constant();
  auto objective = [&](const Quartet &q) {
    return const_V ? reduced_j(q, ps) : energy(q, ps);
  };

  GroundStateResult res;
  res.lambda = ps.lambda;
  Field u = initial ? std::move(*initial) : make_initial_field(ps, cfg);
  if (cfg.clip_negative) u = detail::clip_negative_part(u);

  double mass0 = 0.0;
  {
    auto pc = detail::project_candidate(u, ps, 1.0);
    u = std::move(pc.field);
    mass0 = pc.quartet.mass;
  }

  double eta = cfg.step_size;
  double theta_last = 1.0;
  std::vector<double> recent;
  res.status = SolveStatus::max_iters;

  long iter = 0;
  for (; iter < cfg.max_iters; ++iter) {
    StateEval st = evaluate_state(u, ps);
    const Quartet &q = st.quartet;
    const double I = energy(q, ps);
    const double obj = objective(q);
    const double gn = dual_norm(st.grad_energy, ps.s);
    res.trace.push_back({iter, I, gn, theta_last, q.mass});

    if (std::sqrt(q.mass) < cfg.collapse_norm || q.mass <= cfg.collapse_mass_ratio * mass0) {
      res.status = SolveStatus::collapsed;
      break;
    }
    if (gn <= cfg.tol_grad) {
      res.status = SolveStatus::converged;
      break;
    }
    recent.push_back(obj);
    if (static_cast<int>(recent.size()) > cfg.energy_window + 1)
      recent.erase(recent.begin());
    if (static_cast<int>(recent.size()) == cfg.energy_window + 1) {
      const auto [mn, mx] = std::minmax_element(recent.begin(), recent.end());
      if (*mx - *mn <= cfg.tol_energy * std::max(std::abs(obj), 1.0)) {
        res.status = SolveStatus::energy_stop;
        break;
      }
    }

    Field dir = precondition(st.grad_energy, ps.s);
    const double rel = std::sqrt(inner(u, u) / std::max(inner(dir, dir), 1e-300));
    eta = std::min(eta, cfg.max_rel_step * rel);
    bool accepted = false;
    bool first_try = true;
    // decrease margin above the rounding mismatch between the fiber power-law
    // evaluation of the objective and its fresh-quartet recomputation
    const double margin = 1e-13 * std::max(std::abs(obj), 1.0);
    for (int h = 0; h <= cfg.max_halvings; ++h) {
      Field cand = add_scaled(u, -eta, dir);
      if (cfg.clip_negative) cand = detail::clip_negative_part(cand);
      try {
        auto pc = detail::project_candidate(cand, ps, theta_last);
        if (objective(pc.quartet) < obj - margin) {
          u = std::move(pc.field);
          theta_last = pc.theta0;
          accepted = true;
          break;
        }
      } catch (const error &) {
        // candidate left the projectable cone; shrink the step
      }
      eta *= cfg.backtrack_factor;
      first_try = false;
    }
    if (!accepted) {
      res.status = SolveStatus::energy_stop;
      ++iter;
      break;
    }
    eta = std::min(first_try ? eta * 1.5 : eta * 1.2, 1e3);
  }

  res.iterations = iter;
  res.field = u;
  res.quartet = quartet(u, ps);
  res.level = energy(res.quartet, ps);
  res.residuals = residual_report(u, ps);
  return res;
}

// Fibering max of a converged state: gamma(theta*) along its own dilation
// fiber, which must reproduce the level at theta* = 1 (the c2 = c3 check).
struct MountainPass {
  double max_gamma = 0.0;
  double theta_star = 1.0;
};

inline MountainPass mountain_pass_check(const GroundStateResult &result, const ProblemSpec &ps) {
  require(result.quartet.mass > 0.0, "mountain_pass_check: zero field");
  FiberScan scan = scan_fiber(result.field, ps, 0.5, 2.0, 101);
  MountainPass mp;
  mp.theta_star = scan.theta_star;
  FiberMap fm(result.field, ps);
  mp.max_gamma = fm.gamma(scan.theta_star);
  for (double g : scan.gamma) mp.max_gamma = std::max(mp.max_gamma, g);
  return mp;
}

struct ContinuationResult {
  std::vector<double> lambdas;
  std::vector<double> levels;
  std::vector<GroundStateResult> results;

  const GroundStateResult &final() const {
    require(!results.empty(), "continuation: empty result chain");
    return results.back();
  }
};

inline std::vector<double> default_lambda_grid(double delta = 0.7, int count = 8) {
  std::vector<double> grid(count);
  for (int i = 0; i < count; ++i)
    grid[i] = delta * std::pow(1.0 / delta, static_cast<double>(i) / (count - 1));
  grid.back() = 1.0;
  return grid;
}

// Monotonicity-trick continuation over the family I_{V,lambda}: solve along an
// increasing lambda grid ending at 1, warm-starting each solve from the
// previous minimizer. Per-lambda failures are recorded and the chain continues
// from the last success.
inline ContinuationResult continuation(const ProblemSpec &ps, const SolverConfig &cfg,
                                       std::vector<double> lambda_grid = {}) {
  if (lambda_grid.empty()) lambda_grid = default_lambda_grid();
  require(lambda_grid.back() == 1.0, "continuation: lambda grid must end at 1");
  for (std::size_t i = 0; i < lambda_grid.size(); ++i) {
    require(lambda_grid[i] > 0.0 && lambda_grid[i] <= 1.0,
            "continuation: lambda grid must lie in (0,1]");
    if (i > 0)
      require(lambda_grid[i] > lambda_grid[i - 1],
              "continuation: lambda grid must be strictly increasing");
  }
  ContinuationResult cr;
  std::optional<Field> warm;
  for (double lam : lambda_grid) {
    ProblemSpec psl = ps;
    psl.lambda = lam;
    try {
      GroundStateResult r = minimize_on_manifold(
          psl, cfg, warm ? std::optional<Field>(*warm) : std::nullopt);
      if (r.status == SolveStatus::converged || r.status == SolveStatus::energy_stop)
        warm = r.field;
      cr.lambdas.push_back(lam);
      cr.levels.push_back(r.level);
      cr.results.push_back(std::move(r));
    } catch (const error &e) {
      GroundStateResult failed;
      failed.lambda = lam;
      failed.status = SolveStatus::max_iters;
      failed.level = std::numeric_limits<double>::quiet_NaN();
      cr.lambdas.push_back(lam);
      cr.levels.push_back(failed.level);
      cr.results.push_back(std::move(failed));
    }
  }
  return cr;
}

// Unconstrained preconditioned descent on I itself; the probe driver for the
// nonexistence regimes, where no manifold projection exists and the expected
// outcome is collapse to the zero field.
inline GroundStateResult probe_descent(
    const ProblemSpec &ps, const SolverConfig &cfg,
    const std::function<void(long, const Field &)> &observer = {}) {
  ps.validate_probe();
  cfg.validate();
  GroundStateResult res;
  res.lambda = ps.lambda;
  Field u = make_initial_field(ps, cfg);
  const double mass0 = integrate(multiply(u, u));
  double eta = cfg.step_size;
  res.status = SolveStatus::max_iters;

  long iter = 0;
  for (; iter < cfg.max_iters; ++iter) {
    Quartet q = quartet(u, ps);
    const double I = energy(q, ps);
    Field g = gradient(u, ps);
    const double gn = dual_norm(g, ps.s);
    res.trace.push_back({iter, I, gn, 1.0, q.mass});
    if (observer) observer(iter, u);

    if (q.mass <= 1e-6 * mass0 || std::sqrt(q.mass) < cfg.collapse_norm) {
      res.status = SolveStatus::collapsed;
      break;
    }
    if (gn <= cfg.tol_grad) {
      res.status = SolveStatus::converged;
      break;
    }
    Field dir = precondition(g, ps.s);
    const double rel =
        std::sqrt(inner(u, u) / std::max(inner(dir, dir), 1e-300));
    eta = std::min(eta, cfg.max_rel_step * rel);
    bool accepted = false;
    for (int h = 0; h <= cfg.max_halvings; ++h) {
      Field cand = add_scaled(u, -eta, dir);
      Quartet qc = quartet(cand, ps);
      if (energy(qc, ps) < I) {
        u = std::move(cand);
        accepted = true;
        break;
      }
      eta *= cfg.backtrack_factor;
    }
    if (!accepted) {
      res.status = SolveStatus::energy_stop;
      ++iter;
      break;
    }
    eta = std::min(eta * 1.5, 1e3);
  }

  res.iterations = iter;
  res.field = u;
  res.quartet = quartet(u, ps);
  res.level = energy(res.quartet, ps);
  res.residuals = residual_report(u, ps);
  return res;
}

struct ResampleResult {
  Field field;
  double truncated_fraction = 0.0; // spectral energy outside the target band
  bool aliasing_warning = false;
};

// Trigonometric interpolation onto a target grid, evaluated by per-axis mode
// contraction; exact whenever the target resolves all source modes. Needed to
// compare fields across dilations and to warm-start across resolutions.
inline ResampleResult resample(const Field &u, const GridSpec &target) {
  target.validate();
  const GridSpec &src = u.grid;
  require(target.L >= 0.25 * src.L && target.L <= 4.0 * src.L,
          "resample: target box must be within 4x of the source box");
  ResampleResult out;
  if (target == src) {
    out.field = u;
    return out;
  }

  SpectralField F = forward_transform(u);
  const int ns = src.n, nt = target.n;

  // spectral energy the target band cannot represent
  const double xi_max = M_PI * target.n / target.L * (1.0 + 1e-12);
  double tot = 0.0, cut = 0.0;
  std::size_t idx = 0;
  for (int i = 0; i < ns; ++i)
    for (int j = 0; j < ns; ++j)
      for (int k = 0; k < ns; ++k, ++idx) {
        const double e = std::norm(F.modes[idx]);
        tot += e;
        if (std::abs(src.freq(i)) > xi_max || std::abs(src.freq(j)) > xi_max ||
            std::abs(src.freq(k)) > xi_max)
          cut += e;
      }
  out.truncated_fraction = tot > 0.0 ? cut / tot : 0.0;
  out.aliasing_warning = out.truncated_fraction > 0.01;

  // per-axis evaluation matrix E[i*ns+m] = exp(i xi_m x'_i)/ns
  std::vector<std::complex<double>> E(static_cast<std::size_t>(nt) * ns);
  for (int i = 0; i < nt; ++i) {
    const double x = target.coord(i);
    for (int m = 0; m < ns; ++m)
      E[static_cast<std::size_t>(i) * ns + m] =
          std::polar(1.0 / ns, src.freq(m) * x);
  }

  auto contract = [&](const std::vector<std::complex<double>> &in, int d0, int d1, int d2) {
    // contracts the first axis of an (d0 x d1 x d2) array against E -> (nt x d1 x d2)
    std::vector<std::complex<double>> r(static_cast<std::size_t>(nt) * d1 * d2, 0.0);
    for (int i = 0; i < nt; ++i)
      for (int m = 0; m < d0; ++m) {
        const std::complex<double> w = E[static_cast<std::size_t>(i) * ns + m];
        const std::complex<double> *src_row = &in[static_cast<std::size_t>(m) * d1 * d2];
        std::complex<double> *dst_row = &r[static_cast<std::size_t>(i) * d1 * d2];
        for (int t = 0; t < d1 * d2; ++t) dst_row[t] += w * src_row[t];
      }
    return r;
  };

  // cycle axes: contract x, then permute so y (then z) leads
  auto permute_front = [](const std::vector<std::complex<double>> &in, int d0, int d1, int d2) {
    // (d0,d1,d2) -> (d1,d2,d0)
    std::vector<std::complex<double>> r(in.size());
    for (int i = 0; i < d0; ++i)
      for (int j = 0; j < d1; ++j)
        for (int k = 0; k < d2; ++k)
          r[(static_cast<std::size_t>(j) * d2 + k) * d0 + i] =
              in[(static_cast<std::size_t>(i) * d1 + j) * d2 + k];
    return r;
  };

  std::vector<std::complex<double>> work(F.modes);
  work = contract(work, ns, ns, ns);          // (nt, ns, ns)
  work = permute_front(work, nt, ns, ns);     // (ns, ns, nt)
  work = contract(work, ns, ns, nt);          // (nt, ns, nt)
  work = permute_front(work, nt, ns, nt);     // (ns, nt, nt)
  work = contract(work, ns, nt, nt);          // (nt, nt, nt)
  work = permute_front(work, nt, nt, nt);     // back to (x, y, z) order

  out.field = Field(target);
  for (std::size_t i = 0; i < out.field.size(); ++i) out.field.values[i] = work[i].real();
  return out;
}

} // namespace fspg

#endif
