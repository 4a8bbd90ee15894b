#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sdnest/energy.hpp"
#include "sdnest/field_index.hpp"
#include "sdnest/laguerre.hpp"
#include "sdnest/nest_analysis.hpp"
#include "sdnest/numerics.hpp"

namespace sdnest {

// Congestion problem: transport the source density to freely chosen weights
// on the ordered targets, paying the transport cost plus sum f(nu_i). At the
// optimum the weights satisfy nu_i = (f')^{-1}(C - v_i) for the dual values
// v of the transport part and a common level C.
struct CongestionProblem {
  DensityField density;
  CostSpec cost;
  TargetSet targets;
  InternalEnergy energy = InternalEnergy::entropy();

  int size() const { return static_cast<int>(targets.t.size()); }
};

// Cell mass minus the weight implied by a fixed level C.
inline std::vector<double> residual_fixed_level(const CongestionProblem& p,
                                                const Tessellation& tess,
                                                double C) {
  const int n = p.size();
  std::vector<double> r(n);
  for (int i = 0; i < n; ++i) {
    r[i] = tess.mass[i] - p.energy.fprime_inv(C - tess.v[i]);
  }
  return r;
}

// Cell mass minus the implied weight after eliminating C through the unit
// mass constraint. For the entropy this subtracts softmin weights of v; the
// residual always sums to zero, so it only determines v up to a shift.
inline std::vector<double> residual_normalized(const CongestionProblem& p,
                                               const Tessellation& tess) {
  const int n = p.size();
  const double level = energy_level_for_unit_mass(p.energy, tess.v);
  std::vector<double> r(n);
  for (int i = 0; i < n; ++i) {
    r[i] = tess.mass[i] - p.energy.fprime_inv(level - tess.v[i]);
  }
  return r;
}

// Transport cost plus the internal energy of the cell masses.
inline double objective_value(const CongestionProblem& p,
                              const Tessellation& tess) {
  double energy = 0.0;
  for (double nu : tess.mass) {
    if (nu > 0.0) energy += p.energy.f(nu);
  }
  return transport_cost(tess, p.density, p.cost, p.targets) + energy;
}

// Level consistent with the optimality relation C = v_i + f'(nu_i),
// averaged over the cells that carry mass.
inline double dual_level_estimate(const CongestionProblem& p,
                                  const Tessellation& tess) {
  double acc = 0.0;
  int count = 0;
  for (int i = 0; i < p.size(); ++i) {
    if (tess.mass[i] > 0.0) {
      acc += tess.v[i] + p.energy.fprime(tess.mass[i]);
      ++count;
    }
  }
  if (count == 0) throw std::runtime_error("dual level: all cells empty");
  return acc / count;
}

struct CBounds {
  double lo = 0.0;
  double hi = 0.0;
};

// A-priori range for the optimal level C under the convention v_0 = 0: the
// first weight is sandwiched by the Lipschitz bounds, and C = f'(nu_0).
inline CBounds c_search_bounds(const CongestionProblem& p) {
  const double mc = lipschitz_constant(p.density.grid, p.cost, p.targets);
  const int n = p.size();
  std::vector<double> w_lo(n), w_hi(n);
  for (int i = 0; i < n; ++i) {
    const double d = target_distance(p.cost, p.targets, i, 0);
    w_lo[i] = -mc * d;
    w_hi[i] = mc * d;
  }
  return CBounds{energy_level_for_unit_mass(p.energy, w_lo),
                 energy_level_for_unit_mass(p.energy, w_hi)};
}

// Search interval for the sequential methods. Wider problems push the level
// further down, so large target counts get a deeper floor.
inline CBounds default_c_bracket(int n) {
  return CBounds{n >= 192 ? -7.5 : -5.0, 0.0};
}

// Largest mass carried by one tied value of any adjacent difference field.
// Fields whose level lines align with the grid tie whole rows of cells at
// exactly equal values, so cell masses can only move in jumps of this size
// no matter how finely a threshold or dual value is tuned.
inline double staircase_quantum(const DensityField& density, const CostSpec& cost,
                                const TargetSet& targets) {
  double worst = 0.0;
  std::vector<std::pair<double, double>> vw;
  const int n = static_cast<int>(targets.t.size());
  for (int i = 0; i + 1 < n; ++i) {
    const std::vector<double> g =
        cost_difference_field(density.grid, cost, targets, i);
    vw.clear();
    vw.reserve(g.size());
    for (std::size_t c = 0; c < g.size(); ++c) {
      vw.emplace_back(g[c], density.w[c]);
    }
    std::sort(vw.begin(), vw.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    double run = 0.0;
    for (std::size_t c = 0; c < vw.size(); ++c) {
      if (c > 0 && vw[c].first != vw[c - 1].first) run = 0.0;
      run += vw[c].second;
      worst = std::max(worst, run);
    }
  }
  return worst;
}

inline double staircase_quantum(const CongestionProblem& p) {
  return staircase_quantum(p.density, p.cost, p.targets);
}

// Masses move in steps of grid cells, and tied rows move together, so no
// solver can push a mass residual reliably below the staircase quantum.
// Success is therefore declared at this floor when the requested tolerance
// is finer than the grid can resolve.
inline double effective_tolerance(const CongestionProblem& p, double tol) {
  const double m = static_cast<double>(p.density.grid.m);
  return std::max({tol, 2.0 * p.size() / (m * m), staircase_quantum(p)});
}

enum class SolveStatus {
  converged,
  max_iterations,
  singular_jacobian,
  stalled,
  infeasible,
  diverged,
  not_nested,
};

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::converged: return "converged";
    case SolveStatus::max_iterations: return "max-iterations";
    case SolveStatus::singular_jacobian: return "singular-jacobian";
    case SolveStatus::stalled: return "stalled";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::diverged: return "diverged";
    case SolveStatus::not_nested: return "not-nested";
  }
  return "unknown";
}

struct SolveReport {
  std::string method;
  SolveStatus status = SolveStatus::max_iterations;
  int iterations = 0;
  int halvings = 0;
  double residual_norm = 0.0;
  double c_value = 0.0;
  double objective = 0.0;
  double seconds = 0.0;
  bool nested = false;
  std::vector<double> v;
  std::vector<double> nu;
  std::string note;  // human-readable diagnostic for failure statuses
};

struct NewtonOptions {
  double tol = 1e-5;
  int max_iterations = 20;
  // Finite difference floor in boundary cells: the dual step must move cell
  // boundaries across a few grid cells, or the mass staircase drowns the
  // derivative.
  double fd_floor_cells = 4.0;
  double cond_limit = 1e12;
};

struct DampedNewtonOptions {
  double tol = 1e-5;
  int max_iterations = 40;
  int max_halvings = 40;
  double fd_floor_cells = 4.0;
  double cond_limit = 1e12;
};

namespace detail {

inline double linf(const std::vector<double>& r) {
  double m = 0.0;
  for (double x : r) m = std::max(m, std::abs(x));
  return m;
}

inline bool all_finite(const std::vector<double>& r) {
  for (double x : r) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

// Dual perturbations below this scale cannot move any cell boundary across
// a grid cell, so mass differences degenerate into staircase noise.
inline double fd_floor(const GridSpec& grid, const CostSpec& cost,
                       const TargetSet& targets, double cells) {
  const std::vector<AffineScore> s = cost_scores(cost, targets);
  double grad = 0.0;
  for (std::size_t i = 0; i + 1 < s.size(); ++i) {
    const double ax = s[i + 1].ax - s[i].ax;
    const double ay = s[i + 1].ay - s[i].ay;
    grad = std::max(grad, std::hypot(ax, ay));
  }
  return cells * grid.h() * grad;
}

inline double fd_floor(const CongestionProblem& p, double cells) {
  return fd_floor(p.density.grid, p.cost, p.targets, cells);
}

template <typename Accept>
SolveReport newton_loop(const CongestionProblem& p, const char* method,
                        double tol, int max_iterations, double fd_floor_cells,
                        double cond_limit, int max_halvings, Accept accept) {
  const auto t0 = std::chrono::steady_clock::now();
  SolveReport rep;
  rep.method = method;
  const int n = p.size();
  auto as_vector = [](const Eigen::VectorXd& x) {
    return std::vector<double>(x.data(), x.data() + x.size());
  };
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> residual_at =
      [&](const Eigen::VectorXd& vv) {
        Tessellation t = tessellate(p.density, p.cost, p.targets, as_vector(vv));
        std::vector<double> r = residual_normalized(p, t);
        return Eigen::Map<Eigen::VectorXd>(r.data(), r.size()).eval();
      };
  const double floor = fd_floor(p, fd_floor_cells);
  const double tol_eff = effective_tolerance(p, tol);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
  Tessellation tess = tessellate(p.density, p.cost, p.targets, as_vector(v));
  std::vector<double> r = residual_normalized(p, tess);
  rep.status = SolveStatus::max_iterations;
  // Success is declared at the staircase floor; afterwards a few polish
  // steps chase the requested tolerance, and the best iterate wins.
  Eigen::VectorXd best_v = v;
  Tessellation best_tess = tess;
  double best_norm = linf(r);
  int success_at = -1;
  int updates = 0;
  for (int it = 0; it < max_iterations; ++it) {
    const double norm = linf(r);
    if (!all_finite(r)) {
      rep.status = SolveStatus::diverged;
      break;
    }
    if (norm < best_norm) {
      best_norm = norm;
      best_v = v;
      best_tess = tess;
    }
    if (success_at < 0 && norm <= tol_eff) success_at = updates;
    if (norm <= tol) break;
    if (success_at >= 0 && updates >= success_at + 4) break;
    Eigen::MatrixXd J = fd_jacobian(residual_at, v, floor);
    Eigen::VectorXd minus_r =
        -Eigen::Map<const Eigen::VectorXd>(r.data(), static_cast<int>(r.size()));
    RestrictedSolveResult step = restricted_solve(J, minus_r, cond_limit);
    if (!step.ok) {
      if (success_at < 0) rep.status = SolveStatus::singular_jacobian;
      break;
    }
    Eigen::VectorXd v_next;
    double alpha = 1.0;
    bool accepted = false;
    while (true) {
      v_next = v + alpha * step.step;
      Tessellation trial = tessellate(p.density, p.cost, p.targets, as_vector(v_next));
      if (accept(trial)) {
        tess = std::move(trial);
        accepted = true;
        break;
      }
      alpha *= 0.5;
      if (++rep.halvings > max_halvings) break;
    }
    if (!accepted) {
      if (success_at < 0) rep.status = SolveStatus::stalled;
      break;
    }
    v = v_next;
    r = residual_normalized(p, tess);
    ++updates;
  }
  if (best_norm <= tol_eff) rep.status = SolveStatus::converged;
  rep.iterations = success_at >= 0 ? success_at : updates;
  rep.residual_norm = best_norm;
  // Report in the v_0 = 0 gauge shared with the sequential methods; the
  // tessellation only sees dual differences, so shifting is free.
  const double gauge = best_v[0];
  for (int i = 0; i < n; ++i) best_tess.v[i] -= gauge;
  rep.v = best_tess.v;
  rep.nu = best_tess.mass;
  rep.nested = check_nested(best_tess).nested;
  rep.c_value = dual_level_estimate(p, best_tess);
  rep.objective = objective_value(p, best_tess);
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

}  // namespace detail

// Newton iteration on the normalized residual with a least squares step
// restricted to mean zero. Every step is taken at full length; problems
// whose iterates leave the nested regime are expected to fail here, either
// through a singular Jacobian or by running out of iterations.
inline SolveReport newton_standard(const CongestionProblem& p,
                                   const NewtonOptions& opts = {}) {
  return detail::newton_loop(p, "newton", opts.tol, opts.max_iterations,
                             opts.fd_floor_cells, opts.cond_limit,
                             0, [](const Tessellation&) { return true; });
}

// Newton iteration that halves the step until the trial tessellation is
// nested with every cell still occupied, keeping the iterates inside the
// regime where the dual problem is well behaved. An emptied cell means the
// strict inclusion chain has collapsed, so such trials are rejected even
// though the adjacency test alone would let them through. The total number
// of halvings across the run is reported.
inline SolveReport newton_damped(const CongestionProblem& p,
                                 const DampedNewtonOptions& opts = {}) {
  return detail::newton_loop(p, "newton-damped", opts.tol, opts.max_iterations,
                             opts.fd_floor_cells, opts.cond_limit,
                             opts.max_halvings, [](const Tessellation& t) {
                               const NestednessReport nr = check_nested(t);
                               return nr.nested && nr.all_present;
                             });
}

struct ErrorEval {
  double error = std::numeric_limits<double>::quiet_NaN();
  bool feasible = false;
  int stages = 0;  // completed sequential stages
  std::vector<double> v;
  std::vector<double> nu;
};

// Sequential mass-matching pass for a trial level C: fix v_0 = 0, then for
// each next target choose its dual value so that the previous cell receives
// exactly the weight implied by C. Works cell by cell on the set still owned
// by the last target, so one pass costs O(N M^2). Grid cells tied at the
// threshold value are split fractionally, which lands every interior stage
// on its target mass exactly and makes the error continuous in C. The
// leftover of the final cell is the error; an interior stage whose implied
// weight exceeds the available mass aborts with NaN.
inline ErrorEval sequential_error(const CongestionProblem& p, double C) {
  const int n = p.size();
  ErrorEval out;
  out.v.assign(n, 0.0);
  out.nu.assign(n, 0.0);
  const std::vector<AffineScore> s = cost_scores(p.cost, p.targets);
  const GridSpec grid = p.density.grid;
  // Cells owned by the current last target.
  std::vector<double> ax, ay, ww;
  const std::size_t cells = p.density.w.size();
  ax.reserve(cells);
  ay.reserve(cells);
  ww.reserve(cells);
  for (int iy = 0; iy < grid.m; ++iy) {
    for (int ix = 0; ix < grid.m; ++ix) {
      ax.push_back(grid.x1(ix));
      ay.push_back(grid.x2(iy));
      ww.push_back(p.density.w[grid.index(ix, iy)]);
    }
  }
  double remaining = 0.0;
  for (double w : ww) remaining += w;
  std::vector<double> g;
  for (int j = 1; j < n; ++j) {
    const double target = p.energy.fprime_inv(C - out.v[j - 1]);
    if (target > remaining) return out;  // infeasible, error stays NaN
    const double da = s[j].ax - s[j - 1].ax;
    const double db = s[j].ay - s[j - 1].ay;
    const double dd = s[j].d - s[j - 1].d;
    g.resize(ax.size());
    for (std::size_t c = 0; c < ax.size(); ++c) {
      g[c] = da * ax[c] + db * ay[c] + dd;
    }
    ThresholdSolve ts = solve_suffix_mass(g, ww, target);
    double tau = ts.tau;
    double stay_mass = 0.0;
    std::size_t keep = 0;
    if (ts.has_split) {
      // The tied group at split_value straddles the target. Keep the lambda
      // share of that group with target j-1 and move the rest on with scaled
      // weight; the threshold interpolates the same fraction of the way down
      // from the value above.
      const double span = ts.mass_incl - ts.mass_excl;
      double lambda = span > 0.0 ? (target - ts.mass_excl) / span : 1.0;
      lambda = std::clamp(lambda, 0.0, 1.0);
      tau = std::isfinite(ts.upper_value)
                ? ts.upper_value - lambda * (ts.upper_value - ts.split_value)
                : ts.split_value;
      for (std::size_t c = 0; c < ax.size(); ++c) {
        double w = ww[c];
        if (g[c] > ts.split_value) continue;
        if (g[c] == ts.split_value) {
          w *= 1.0 - lambda;
          if (w <= 0.0) continue;
        }
        ax[keep] = ax[c];
        ay[keep] = ay[c];
        ww[keep] = w;
        g[keep] = g[c];
        ++keep;
      }
      stay_mass = target;
    } else {
      // Edge landing (nothing or everything stays): sharp threshold.
      for (std::size_t c = 0; c < ax.size(); ++c) {
        if (g[c] >= ts.tau) {
          stay_mass += ww[c];
        } else {
          ax[keep] = ax[c];
          ay[keep] = ay[c];
          ww[keep] = ww[c];
          g[keep] = g[c];
          ++keep;
        }
      }
    }
    ax.resize(keep);
    ay.resize(keep);
    ww.resize(keep);
    out.v[j] = out.v[j - 1] + tau;
    out.nu[j - 1] = stay_mass;
    remaining -= stay_mass;
    out.stages = j;
  }
  const double last = p.energy.fprime_inv(C - out.v[n - 1]);
  // The final stage reports a signed leftover: a small overdraw is still a
  // meaningful error value, unlike an interior stage running out of mass.
  out.nu[n - 1] = remaining;
  out.error = remaining - last;
  out.feasible = out.error >= 0.0;
  return out;
}

struct BisectLevelOptions {
  double c_lo = -5.0;
  double c_hi = 0.0;
  double tol = 1e-5;
  int max_iterations = 60;
};

// Bisection on the common level C using the sequential error: a positive
// error means C is too deep, a negative or infeasible pass means C is too
// high. Reported iterations count the midpoint evaluations; the best finite
// evaluation is reported even when the bracket shrinks without reaching
// tolerance.
inline SolveReport nested_bisection(const CongestionProblem& p,
                                    const BisectLevelOptions& opts = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  SolveReport rep;
  rep.method = "nested-bisection";
  rep.status = SolveStatus::max_iterations;
  double lo = opts.c_lo, hi = opts.c_hi;
  ErrorEval best;
  double best_c = 0.0;
  for (int it = 0; it < opts.max_iterations; ++it) {
    const double mid = 0.5 * (lo + hi);
    ErrorEval ev = sequential_error(p, mid);
    rep.iterations = it + 1;
    const bool finite = std::isfinite(ev.error);
    if (finite &&
        (!std::isfinite(best.error) || std::abs(ev.error) < std::abs(best.error))) {
      best = ev;
      best_c = mid;
    }
    if (finite && std::abs(ev.error) <= opts.tol) {
      rep.status = SolveStatus::converged;
      break;
    }
    if (ev.feasible) {
      lo = mid;  // leftover mass, the level must rise
    } else {
      hi = mid;  // implied weights overran the source, back off
    }
    if (!(hi - lo > 1e-13)) {
      rep.status = SolveStatus::stalled;
      break;
    }
  }
  if (std::isfinite(best.error)) {
    rep.residual_norm = std::abs(best.error);
    rep.c_value = best_c;
    rep.v = std::move(best.v);
    rep.nu = std::move(best.nu);
    Tessellation tess = tessellate(p.density, p.cost, p.targets, rep.v);
    rep.nested = check_nested(tess).nested;
    rep.objective = objective_value(p, tess);
  }
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

struct NewtonLevelOptions {
  double c0 = -5.0;
  double tol = 1e-5;
  int max_iterations = 30;
  int max_halvings = 40;
};

// Newton iteration on the scalar sequential error with a centered finite
// difference slope. Trial steps are halved while they land at a non-negative
// level or lose feasibility at an interior stage.
inline SolveReport nested_newton(const CongestionProblem& p,
                                 const NewtonLevelOptions& opts = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  SolveReport rep;
  rep.method = "nested-newton";
  rep.status = SolveStatus::max_iterations;
  double c = opts.c0;
  ErrorEval ev = sequential_error(p, c);
  if (!std::isfinite(ev.error)) {
    rep.status = SolveStatus::infeasible;
    rep.c_value = c;
    rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
  }
  for (int it = 0; it < opts.max_iterations; ++it) {
    if (std::abs(ev.error) <= opts.tol) {
      rep.status = SolveStatus::converged;
      break;
    }
    const double h = fd_step_scale() * (1.0 + std::abs(c));
    ErrorEval above = sequential_error(p, c + h);
    ErrorEval below = sequential_error(p, c - h);
    if (!std::isfinite(above.error) || !std::isfinite(below.error)) {
      rep.status = SolveStatus::stalled;
      break;
    }
    const double slope = (above.error - below.error) / (2.0 * h);
    if (!(std::abs(slope) > 1e-14)) {
      rep.status = SolveStatus::stalled;
      break;
    }
    double delta = -ev.error / slope;
    ErrorEval trial;
    bool accepted = false;
    while (true) {
      const double c_try = c + delta;
      if (c_try < 0.0) {
        trial = sequential_error(p, c_try);
        if (std::isfinite(trial.error)) {
          accepted = true;
          break;
        }
      }
      delta *= 0.5;
      if (++rep.halvings > opts.max_halvings) break;
    }
    if (!accepted) {
      rep.status = SolveStatus::stalled;
      break;
    }
    c += delta;
    ev = std::move(trial);
    rep.iterations = it + 1;
  }
  if (std::isfinite(ev.error) && std::abs(ev.error) <= opts.tol) {
    rep.status = SolveStatus::converged;
  }
  rep.residual_norm = std::abs(ev.error);
  rep.c_value = c;
  rep.v = std::move(ev.v);
  rep.nu = std::move(ev.nu);
  if (rep.status == SolveStatus::converged) {
    Tessellation tess = tessellate(p.density, p.cost, p.targets, rep.v);
    rep.nested = check_nested(tess).nested;
    rep.objective = objective_value(p, tess);
  }
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

// Error of the a-priori splitting-level construction at level C: thresholds
// are taken at ceil-quantiles of the cumulative implied weights and clamped
// at the containment threshold of the previous set. Every ingredient is
// monotone on the fixed grid, so the result is nonincreasing in C exactly.
// Returns -inf when the construction runs out of mass.
inline double theoretical_error(const CongestionProblem& p, double C) {
  const int n = p.size();
  if (n == 1) return 1.0 - p.energy.fprime_inv(C);
  std::vector<double> fields[2];
  fields[0] = cost_difference_field(p.density.grid, p.cost, p.targets, 0);
  std::vector<FieldIndex> idx;
  idx.reserve(n - 1);
  for (int i = 0; i + 1 < n; ++i) {
    if (i + 2 < n) {
      fields[(i + 1) & 1] =
          cost_difference_field(p.density.grid, p.cost, p.targets, i + 1);
      idx.emplace_back(p.density, fields[i & 1], fields[(i + 1) & 1]);
    } else {
      idx.emplace_back(p.density, fields[i & 1]);
    }
  }
  std::vector<double> v(n, 0.0), k(n - 1), a(n - 1);
  const double nu0 = std::min(1.0, p.energy.fprime_inv(C));
  k[0] = idx[0].quantile_ceil(nu0).k;
  a[0] = idx[0].suffix_mass(k[0]);
  for (int s = 1; s + 1 < n; ++s) {
    v[s] = v[s - 1] + k[s - 1];
    const double nu_s = p.energy.fprime_inv(C - v[s]);
    if (nu_s > 1.0 - a[s - 1]) return kMinusInf;
    const double kq = idx[s].quantile_ceil(a[s - 1] + nu_s).k;
    const double kcap = idx[s - 1].k_max_at(k[s - 1]);
    k[s] = std::min(kq, kcap);
    a[s] = idx[s].suffix_mass(k[s]);
  }
  v[n - 1] = v[n - 2] + k[n - 2];
  return 1.0 - a[n - 2] - p.energy.fprime_inv(C - v[n - 1]);
}

}  // namespace sdnest
