#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "sdnest/congestion.hpp"
#include "sdnest/energy.hpp"
#include "sdnest/field_index.hpp"
#include "sdnest/grid.hpp"
#include "sdnest/targets.hpp"

namespace sdnest {

struct SimplexSweepResult {
  std::vector<double> nu;
  double objective = 0.0;
  bool chain_ok = true;     // splitting levels of the argmin nest into a chain
  double chain_leak = 0.0;  // mass escaping the chain inclusion, 0 when valid
};

namespace detail {

// Shared state for brute-force sweeps: one index per adjacent difference
// field plus the source integral of the last target's cost. For cumulative
// masses S_1 <= ... <= S_{N-1} whose superlevel sets form a chain, the
// transport cost of the induced plan telescopes to
//   W = int c_N dmu - sum_i int_{top S_i of g_i} g_i dmu,
// because consecutive costs differ exactly by the difference field.
struct SweepContext {
  std::vector<FieldIndex> fields;
  std::vector<std::vector<double>> g;
  double last_cost = 0.0;

  SweepContext(const DensityField& density, const CostSpec& cost,
               const TargetSet& targets) {
    const int n = targets.n();
    fields.reserve(n - 1);
    g.reserve(n - 1);
    for (int i = 0; i + 1 < n; ++i) {
      g.push_back(cost_difference_field(density.grid, cost, targets, i));
      fields.emplace_back(density, g.back());
    }
    const std::vector<AffineScore> s = cost_scores(cost, targets);
    const GridSpec& grid = density.grid;
    for (int iy = 0; iy < grid.m; ++iy) {
      for (int ix = 0; ix < grid.m; ++ix) {
        last_cost += density.w[grid.index(ix, iy)] *
                     cost_value(cost, s[n - 1], grid.x1(ix), grid.x2(iy));
      }
    }
  }

  double plan_cost(const std::vector<double>& cum) const {
    double w = last_cost;
    for (std::size_t i = 0; i < fields.size(); ++i) {
      w -= fields[i].suffix_integral(cum[i]);
    }
    return w;
  }
};

inline double energy_sum(const InternalEnergy& energy,
                         const std::vector<double>& nu) {
  double e = 0.0;
  for (double m : nu) {
    if (m > 0.0) e += energy.f(m);
  }
  return e;
}

}  // namespace detail

// Brute-force minimizer of the congestion objective over the probability
// simplex, for cross-checking the solvers at tiny N. Candidates are
// evaluated through the telescoped chain plan; the returned argmin is
// validated by measuring the mass that escapes the chain inclusion, so an
// invalid evaluation cannot be reported silently. N = 2 refines the swept
// argmin by golden section, N = 3 by a zoomed second sweep.
inline SimplexSweepResult simplex_sweep_min(
    const DensityField& density, const CostSpec& cost, const TargetSet& targets,
    int resolution, const InternalEnergy& energy = InternalEnergy::entropy()) {
  const int n = targets.n();
  if (n < 1 || n > 3) {
    throw std::invalid_argument("simplex_sweep_min: supports 1 <= N <= 3");
  }
  if (resolution < 2 || resolution > 400) {
    throw std::invalid_argument("simplex_sweep_min: resolution in [2, 400]");
  }
  SimplexSweepResult out;
  if (n == 1) {
    detail::SweepContext ctx(density, cost, targets);
    out.nu = {1.0};
    out.objective = ctx.last_cost + detail::energy_sum(energy, out.nu);
    return out;
  }
  detail::SweepContext ctx(density, cost, targets);
  auto objective2 = [&](double s) {
    const std::vector<double> cum = {s};
    const std::vector<double> nu = {s, 1.0 - s};
    return ctx.plan_cost(cum) + detail::energy_sum(energy, nu);
  };
  if (n == 2) {
    double best_s = 0.0, best_obj = objective2(0.0);
    for (int k = 1; k <= resolution; ++k) {
      const double s = static_cast<double>(k) / resolution;
      const double obj = objective2(s);
      if (obj < best_obj) {
        best_obj = obj;
        best_s = s;
      }
    }
    // Golden section inside the bracketing pair of grid steps.
    const double step = 1.0 / resolution;
    double lo = std::max(0.0, best_s - step);
    double hi = std::min(1.0, best_s + step);
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = hi - phi * (hi - lo), b = lo + phi * (hi - lo);
    double fa = objective2(a), fb = objective2(b);
    for (int it = 0; it < 80 && hi - lo > 1e-12; ++it) {
      if (fa < fb) {
        hi = b;
        b = a;
        fb = fa;
        a = hi - phi * (hi - lo);
        fa = objective2(a);
      } else {
        lo = a;
        a = b;
        fa = fb;
        b = lo + phi * (hi - lo);
        fb = objective2(b);
      }
    }
    const double s = fa < fb ? a : b;
    const double obj = std::min(fa, fb);
    if (obj < best_obj) {
      best_obj = obj;
      best_s = s;
    }
    out.nu = {best_s, 1.0 - best_s};
    out.objective = best_obj;
  } else {
    auto objective3 = [&](double s1, double s2) {
      const std::vector<double> cum = {s1, s1 + s2};
      const std::vector<double> nu = {s1, s2, 1.0 - s1 - s2};
      return ctx.plan_cost(cum) + detail::energy_sum(energy, nu);
    };
    auto sweep_box = [&](double lo1, double hi1, double lo2, double hi2,
                         double& best1, double& best2, double& best_obj) {
      for (int i = 0; i <= resolution; ++i) {
        const double s1 = lo1 + (hi1 - lo1) * i / resolution;
        for (int j = 0; j <= resolution; ++j) {
          const double s2 = lo2 + (hi2 - lo2) * j / resolution;
          if (s1 + s2 > 1.0) break;
          const double obj = objective3(s1, s2);
          if (obj < best_obj) {
            best_obj = obj;
            best1 = s1;
            best2 = s2;
          }
        }
      }
    };
    double best1 = 0.0, best2 = 0.0;
    double best_obj = objective3(0.0, 0.0);
    sweep_box(0.0, 1.0, 0.0, 1.0, best1, best2, best_obj);
    const double step = 2.0 / resolution;
    sweep_box(std::max(0.0, best1 - step), std::min(1.0, best1 + step),
              std::max(0.0, best2 - step), std::min(1.0, best2 + step), best1,
              best2, best_obj);
    out.nu = {best1, best2, 1.0 - best1 - best2};
    out.objective = best_obj;
  }
  // Validate the chain at the argmin: cells fully inside one splitting level
  // must not be fully outside the next, or the telescoped value is not the
  // cost of an admissible plan.
  std::vector<double> cum(n - 1);
  double acc = 0.0;
  for (int i = 0; i + 1 < n; ++i) {
    acc += out.nu[i];
    cum[i] = acc;
  }
  for (int i = 0; i + 2 < n; ++i) {
    const double t_lo = ctx.fields[i].threshold_for_mass(cum[i]);
    const double t_hi = ctx.fields[i + 1].threshold_for_mass(cum[i + 1]);
    double leak = 0.0;
    for (std::size_t c = 0; c < density.w.size(); ++c) {
      if (ctx.g[i][c] > t_lo && ctx.g[i + 1][c] < t_hi) leak += density.w[c];
    }
    out.chain_leak = std::max(out.chain_leak, leak);
  }
  out.chain_ok = out.chain_leak == 0.0;
  return out;
}

struct MonteCarloMasses {
  std::vector<double> mass;  // label frequency estimates
  std::vector<double> se;    // binomial standard errors
  long samples = 0;
};

// Samples the discrete source by inverse CDF over the cell weights and
// assigns each draw to its best target by a direct score argmin, giving a
// statistically independent estimate of the tessellation masses.
inline MonteCarloMasses monte_carlo_masses(const DensityField& density,
                                           const CostSpec& cost,
                                           const TargetSet& targets,
                                           const std::vector<double>& v,
                                           long samples,
                                           std::uint64_t seed = 20240817u) {
  const int n = targets.n();
  if (static_cast<int>(v.size()) != n) {
    throw std::invalid_argument("monte_carlo_masses: potential size mismatch");
  }
  if (samples < 1) {
    throw std::invalid_argument("monte_carlo_masses: need at least one sample");
  }
  std::vector<double> cum(density.w.size());
  double acc = 0.0;
  for (std::size_t c = 0; c < density.w.size(); ++c) {
    acc += density.w[c];
    cum[c] = acc;
  }
  const std::vector<AffineScore> scores = cost_scores(cost, targets);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, acc);
  std::vector<long> count(n, 0);
  const int m = density.grid.m;
  for (long s = 0; s < samples; ++s) {
    const double u = unif(rng);
    const std::size_t c =
        std::upper_bound(cum.begin(), cum.end(), u) - cum.begin();
    const double x1 = density.grid.x1(static_cast<int>(c % m));
    const double x2 = density.grid.x2(static_cast<int>(c / m));
    int lab = 0;
    double best = scores[0].at(x1, x2) - v[0];
    for (int i = 1; i < n; ++i) {
      const double sc = scores[i].at(x1, x2) - v[i];
      if (sc < best) {
        best = sc;
        lab = i;
      }
    }
    ++count[lab];
  }
  MonteCarloMasses out;
  out.samples = samples;
  out.mass.resize(n);
  out.se.resize(n);
  for (int i = 0; i < n; ++i) {
    const double p = static_cast<double>(count[i]) / samples;
    out.mass[i] = p;
    out.se[i] = std::sqrt(p * (1.0 - p) / samples);
  }
  return out;
}

struct RefinedReference {
  std::vector<int> m;
  std::vector<double> c;
};

// Reruns the sequential level search on successively finer grids so tests
// can watch the level estimate self-converge and compare against published
// constants at the finest resolution.
inline RefinedReference refined_reference(Measure measure, const CostSpec& cost,
                                          const TargetSet& targets,
                                          const std::vector<int>& m_list,
                                          const BisectLevelOptions& opts = {},
                                          const InternalEnergy& energy =
                                              InternalEnergy::entropy()) {
  for (std::size_t i = 1; i < m_list.size(); ++i) {
    if (m_list[i] <= m_list[i - 1]) {
      throw std::invalid_argument("refined_reference: M list must increase");
    }
  }
  RefinedReference out;
  for (int m : m_list) {
    CongestionProblem p;
    p.density = build_density(GridSpec{m}, measure);
    p.cost = cost;
    p.targets = targets;
    p.energy = energy;
    SolveReport rep = nested_bisection(p, opts);
    out.m.push_back(m);
    out.c.push_back(rep.c_value);
  }
  return out;
}

}  // namespace sdnest
