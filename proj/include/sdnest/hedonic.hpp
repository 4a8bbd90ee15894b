#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sdnest/congestion.hpp"
#include "sdnest/laguerre.hpp"
#include "sdnest/numerics.hpp"

namespace sdnest {

// Hedonic pricing problem: two source densities share one target set and one
// cost. A single price vector v serves both sides, side one sees v and side
// two sees C - v, and at a solution every target receives the same mass from
// both sides. C is a fixed gauge constant, not an unknown.
struct HedonicProblem {
  DensityField density1;
  DensityField density2;
  CostSpec cost;
  TargetSet targets;
  double C = 0.0;

  int size() const { return static_cast<int>(targets.t.size()); }
};

inline void validate(const HedonicProblem& p) {
  if (p.density1.grid.m != p.density2.grid.m) {
    throw std::invalid_argument("hedonic: densities live on different grids");
  }
  if (p.size() == 0) {
    throw std::invalid_argument("hedonic: empty target set");
  }
}

inline std::vector<double> complement_prices(const HedonicProblem& p,
                                             const std::vector<double>& v) {
  std::vector<double> w(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) w[i] = p.C - v[i];
  return w;
}

// R_i = mu1(Lag_i(v)) - mu2(Lag_i(C - v)). Both tessellations partition unit
// densities, so the components sum to zero up to rounding.
inline std::vector<double> hedonic_residual(const HedonicProblem& p,
                                            const std::vector<double>& v) {
  validate(p);
  Tessellation t1 = tessellate(p.density1, p.cost, p.targets, v);
  Tessellation t2 =
      tessellate(p.density2, p.cost, p.targets, complement_prices(p, v));
  std::vector<double> r(t1.mass.size());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = t1.mass[i] - t2.mass[i];
  return r;
}

struct HedonicNestedness {
  bool hedonically_nested = false;
  NestednessReport side1;
  NestednessReport side2;
};

// The sequential construction is only valid when both price tessellations
// are nested; the verdicts are kept separate for diagnostics.
inline HedonicNestedness hedonic_nestedness(const HedonicProblem& p,
                                            const std::vector<double>& v) {
  validate(p);
  HedonicNestedness out;
  out.side1 = check_nested(tessellate(p.density1, p.cost, p.targets, v));
  out.side2 = check_nested(
      tessellate(p.density2, p.cost, p.targets, complement_prices(p, v)));
  out.hedonically_nested = out.side1.nested && out.side2.nested;
  return out;
}

// Sharp tessellation masses move in tied-row jumps on either side, so the
// vector methods declare success at the coarser of the two quanta.
inline double hedonic_effective_tolerance(const HedonicProblem& p, double tol) {
  const double m = static_cast<double>(p.density1.grid.m);
  return std::max({tol, 2.0 * p.size() / (m * m),
                   staircase_quantum(p.density1, p.cost, p.targets),
                   staircase_quantum(p.density2, p.cost, p.targets)});
}

struct HedonicNewtonOptions {
  double tol = 1e-7;
  int max_iterations = 30;
  int max_halvings = 40;  // damped variant only
  double fd_floor_cells = 4.0;
  double cond_limit = 1e12;
  std::vector<double> v0;  // empty means all zeros
};

namespace detail {

template <typename Accept>
SolveReport hedonic_newton_loop(const HedonicProblem& p, const char* method,
                                const HedonicNewtonOptions& opts,
                                int max_halvings, SolveStatus reject_status,
                                Accept accept) {
  const auto t0 = std::chrono::steady_clock::now();
  validate(p);
  SolveReport rep;
  rep.method = method;
  rep.c_value = p.C;
  const int n = p.size();
  auto as_vector = [](const Eigen::VectorXd& x) {
    return std::vector<double>(x.data(), x.data() + x.size());
  };
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> residual_at =
      [&](const Eigen::VectorXd& vv) {
        std::vector<double> r = hedonic_residual(p, as_vector(vv));
        return Eigen::Map<Eigen::VectorXd>(r.data(), r.size()).eval();
      };
  const double floor = fd_floor(p.density1.grid, p.cost, p.targets,
                                opts.fd_floor_cells);
  const double tol_eff = hedonic_effective_tolerance(p, opts.tol);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
  if (!opts.v0.empty()) {
    if (static_cast<int>(opts.v0.size()) != n) {
      throw std::invalid_argument("hedonic newton: v0 size mismatch");
    }
    v = Eigen::Map<const Eigen::VectorXd>(opts.v0.data(), n);
  }
  std::vector<double> r = hedonic_residual(p, as_vector(v));
  rep.status = SolveStatus::max_iterations;
  Eigen::VectorXd best_v = v;
  double best_norm = linf(r);
  int success_at = -1;
  int updates = 0;
  for (int it = 0; it < opts.max_iterations; ++it) {
    const double norm = linf(r);
    if (!all_finite(r)) {
      rep.status = SolveStatus::diverged;
      break;
    }
    if (norm < best_norm) {
      best_norm = norm;
      best_v = v;
    }
    if (success_at < 0 && norm <= tol_eff) success_at = updates;
    if (norm <= opts.tol) break;
    if (success_at >= 0 && updates >= success_at + 4) break;
    Eigen::MatrixXd J = fd_jacobian(residual_at, v, floor);
    Eigen::VectorXd minus_r =
        -Eigen::Map<const Eigen::VectorXd>(r.data(), static_cast<int>(r.size()));
    RestrictedSolveResult step = restricted_solve(J, minus_r, opts.cond_limit);
    if (!step.ok) {
      if (success_at < 0) rep.status = SolveStatus::singular_jacobian;
      break;
    }
    Eigen::VectorXd v_next;
    double alpha = 1.0;
    bool accepted = false;
    while (true) {
      v_next = v + alpha * step.step;
      if (accept(as_vector(v_next))) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
      if (++rep.halvings > max_halvings) break;
    }
    if (!accepted) {
      if (success_at < 0) {
        rep.status = reject_status;
        rep.note = "step rejected: trial prices leave the nested regime";
      }
      break;
    }
    v = v_next;
    r = hedonic_residual(p, as_vector(v));
    ++updates;
  }
  if (best_norm <= tol_eff) rep.status = SolveStatus::converged;
  rep.iterations = success_at >= 0 ? success_at : updates;
  rep.residual_norm = best_norm;
  // Both tessellations only see price differences, so reporting in the
  // v_0 = 0 gauge shared with the sequential method is free.
  const double gauge = best_v[0];
  rep.v.resize(n);
  for (int i = 0; i < n; ++i) rep.v[i] = best_v[i] - gauge;
  Tessellation t1 = tessellate(p.density1, p.cost, p.targets, rep.v);
  Tessellation t2 =
      tessellate(p.density2, p.cost, p.targets, complement_prices(p, rep.v));
  rep.nu = t1.mass;
  rep.nested = check_nested(t1).nested && check_nested(t2).nested;
  if (!rep.nested && rep.note.empty()) {
    rep.note = "solution is not hedonically nested";
  }
  rep.objective = transport_cost(t1, p.density1, p.cost, p.targets) +
                  transport_cost(t2, p.density2, p.cost, p.targets);
  rep.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

}  // namespace detail

// Newton iteration on the two-sided mass residual with the mean-zero
// restricted step (shifting all prices moves neither tessellation, so the
// Jacobian kernel contains the all-ones direction). Full steps throughout.
inline SolveReport hedonic_newton(const HedonicProblem& p,
                                  const HedonicNewtonOptions& opts = {}) {
  return detail::hedonic_newton_loop(p, "hedonic-newton", opts, 0,
                                     SolveStatus::stalled,
                                     [](const std::vector<double>&) {
                                       return true;
                                     });
}

// Newton iteration that halves the step until both trial tessellations pass
// the nestedness check. When no halving count restores nestedness the run
// stops with the structured not-nested status.
inline SolveReport hedonic_newton_damped(const HedonicProblem& p,
                                         const HedonicNewtonOptions& opts = {}) {
  return detail::hedonic_newton_loop(
      p, "hedonic-newton-damped", opts, opts.max_halvings,
      SolveStatus::not_nested, [&](const std::vector<double>& v) {
        // A trial that empties a cell on either side has left the nested
        // regime even when the adjacency test still passes.
        const HedonicNestedness hn = hedonic_nestedness(p, v);
        return hn.hedonically_nested && hn.side1.all_present &&
               hn.side2.all_present;
      });
}

enum class InnerSolver { bisection, newton };

struct HedonicNestedOptions {
  double tol = 1e-7;  // bound on the reported final residual
  InnerSolver inner = InnerSolver::bisection;
  int max_inner = 200;  // inner root iterations per stage
};

namespace detail {

// One side's remaining cells, positions and (possibly fractional) weights.
struct Pool {
  std::vector<double> x, y, w;

  std::size_t size() const { return w.size(); }
};

inline Pool make_pool(const DensityField& d) {
  Pool p;
  const std::size_t cells = d.grid.cells();
  p.x.reserve(cells);
  p.y.reserve(cells);
  p.w.reserve(cells);
  for (int iy = 0; iy < d.grid.m; ++iy) {
    for (int ix = 0; ix < d.grid.m; ++ix) {
      const double w = d.w[d.grid.index(ix, iy)];
      if (w <= 0.0) continue;
      p.x.push_back(d.grid.x1(ix));
      p.y.push_back(d.grid.x2(iy));
      p.w.push_back(w);
    }
  }
  return p;
}

// Threshold-versus-mass profile of one pool under a difference field:
// corners at the realized values, linear in the mass coordinate between
// them, flat at the top value inside the first group. value_at(m) is the
// threshold whose fractionally split superlevel set carries mass m.
struct QuantileCurve {
  std::vector<double> value;  // distinct field values, descending
  std::vector<double> cmass;  // mass of {g >= value[k]}, ascending

  double total() const { return cmass.empty() ? 0.0 : cmass.back(); }
  double top() const { return value.front(); }

  double value_at(double m) const {
    if (value.empty()) return 0.0;
    if (m <= cmass.front()) return value.front();
    auto it = std::lower_bound(cmass.begin(), cmass.end(), m);
    if (it == cmass.end()) return value.back();
    const std::size_t k = static_cast<std::size_t>(it - cmass.begin());
    const double lam = (m - cmass[k - 1]) / (cmass[k] - cmass[k - 1]);
    return value[k - 1] - lam * (value[k - 1] - value[k]);
  }

  double slope_at(double m) const {
    if (value.empty() || m <= cmass.front()) return 0.0;
    auto it = std::lower_bound(cmass.begin(), cmass.end(), m);
    if (it == cmass.end()) return 0.0;
    const std::size_t k = static_cast<std::size_t>(it - cmass.begin());
    return (value[k] - value[k - 1]) / (cmass[k] - cmass[k - 1]);
  }
};

inline QuantileCurve build_quantile_curve(const std::vector<double>& g,
                                          const std::vector<double>& w) {
  std::vector<std::pair<double, double>> vw;
  vw.reserve(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) vw.emplace_back(g[i], w[i]);
  std::sort(vw.begin(), vw.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });
  QuantileCurve q;
  double run = 0.0;
  std::size_t i = 0;
  while (i < vw.size()) {
    const double val = vw[i].first;
    double group = 0.0;
    while (i < vw.size() && vw[i].first == val) {
      group += vw[i].second;
      ++i;
    }
    run += group;
    q.value.push_back(val);
    q.cmass.push_back(run);
  }
  return q;
}

// Removes the top slice of the pool carrying mass m_star, splitting the
// boundary value group fractionally so the removed mass is exact.
inline void remove_top_mass(Pool& pool, const std::vector<double>& g,
                            const QuantileCurve& q, double m_star) {
  if (m_star <= 0.0) return;
  if (m_star >= q.total()) {
    pool.x.clear();
    pool.y.clear();
    pool.w.clear();
    return;
  }
  double boundary, lam;
  if (m_star <= q.cmass.front()) {
    boundary = q.value.front();
    lam = m_star / q.cmass.front();
  } else {
    auto it = std::lower_bound(q.cmass.begin(), q.cmass.end(), m_star);
    const std::size_t k = static_cast<std::size_t>(it - q.cmass.begin());
    boundary = q.value[k];
    lam = (m_star - q.cmass[k - 1]) / (q.cmass[k] - q.cmass[k - 1]);
  }
  lam = std::clamp(lam, 0.0, 1.0);
  std::size_t keep = 0;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    double w = pool.w[i];
    if (g[i] > boundary) continue;
    if (g[i] == boundary) {
      w *= 1.0 - lam;
      if (w <= 0.0) continue;
    }
    pool.x[keep] = pool.x[i];
    pool.y[keep] = pool.y[i];
    pool.w[keep] = w;
    ++keep;
  }
  pool.x.resize(keep);
  pool.y.resize(keep);
  pool.w.resize(keep);
}

}  // namespace detail

// Sequential solver for hedonically nested solutions: fix v_0 = 0, then for
// each stage find the price increment tau at which the two sides surrender
// equal mass to the finished cell. Parametrized by the common stage mass m,
// the side-one threshold profile and the negated side-two profile cross at a
// unique point, located by the chosen inner root method; both pools then
// shed exactly that mass, splitting tied boundary cells fractionally. The
// untouched final cell carries the telescoped residual, which must vanish at
// a nested solution. Stages whose profiles cannot cross abort with the
// structured not-nested status, and the finished prices are accepted only
// when both sharp tessellations pass the nestedness check.
inline SolveReport hedonic_nested(const HedonicProblem& p,
                                  const HedonicNestedOptions& opts = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  validate(p);
  SolveReport rep;
  rep.method = opts.inner == InnerSolver::bisection ? "hedonic-nested-bisection"
                                                    : "hedonic-nested-newton";
  rep.c_value = p.C;
  const int n = p.size();
  rep.v.assign(n, 0.0);
  rep.nu.assign(n, 0.0);
  const std::vector<AffineScore> s = cost_scores(p.cost, p.targets);
  detail::Pool pool1 = detail::make_pool(p.density1);
  detail::Pool pool2 = detail::make_pool(p.density2);
  std::vector<double> g1, g2;
  for (int j = 1; j < n; ++j) {
    const double da = s[j].ax - s[j - 1].ax;
    const double db = s[j].ay - s[j - 1].ay;
    const double dd = s[j].d - s[j - 1].d;
    g1.resize(pool1.size());
    for (std::size_t c = 0; c < pool1.size(); ++c) {
      g1[c] = da * pool1.x[c] + db * pool1.y[c] + dd;
    }
    g2.resize(pool2.size());
    for (std::size_t c = 0; c < pool2.size(); ++c) {
      g2[c] = da * pool2.x[c] + db * pool2.y[c] + dd;
    }
    detail::QuantileCurve q1 = detail::build_quantile_curve(g1, pool1.w);
    detail::QuantileCurve q2 = detail::build_quantile_curve(g2, pool2.w);
    if (q1.value.empty() || q2.value.empty()) {
      rep.status = SolveStatus::not_nested;
      rep.note = "stage " + std::to_string(j) + ": a side ran out of mass";
      rep.seconds = std::chrono::duration<double>(
                        std::chrono::steady_clock::now() - t0).count();
      return rep;
    }
    // Stage equation in the common mass m: side one hands over its top slice
    // at threshold q1(m), side two at field threshold q2(m), and consistency
    // of the price increment demands q1(m) = -q2(m). The sum is continuous
    // and nonincreasing in m, so a crossing inside the remaining mass exists
    // exactly when it changes sign.
    const double m_max = std::min(q1.total(), q2.total());
    auto phi = [&](double m) { return q1.value_at(m) + q2.value_at(m); };
    const double phi_top = q1.top() + q2.top();
    const double phi_end = phi(m_max);
    if (phi_top < 0.0 || phi_end > 0.0) {
      rep.status = SolveStatus::not_nested;
      rep.note = "stage " + std::to_string(j) +
                 (phi_top < 0.0
                      ? ": no shared threshold takes positive mass"
                      : ": sides cannot match within the remaining mass");
      rep.seconds = std::chrono::duration<double>(
                        std::chrono::steady_clock::now() - t0).count();
      return rep;
    }
    const double xtol = 1e-12 * std::max(1.0, m_max);
    double m_star;
    if (opts.inner == InnerSolver::bisection) {
      ScalarRootResult root = bisect_root(phi, 0.0, m_max, xtol, opts.max_inner);
      m_star = root.x;
      rep.iterations += root.iterations;
    } else {
      ScalarRootResult root = safeguarded_newton_root(
          [&](double m, double& f, double& df) {
            f = phi(m);
            df = q1.slope_at(m) + q2.slope_at(m);
          },
          0.0, m_max, xtol, opts.max_inner);
      m_star = root.x;
      rep.iterations += root.iterations;
    }
    const double tau = 0.5 * (q1.value_at(m_star) - q2.value_at(m_star));
    rep.v[j] = rep.v[j - 1] + tau;
    rep.nu[j - 1] = m_star;
    detail::remove_top_mass(pool1, g1, q1, m_star);
    detail::remove_top_mass(pool2, g2, q2, m_star);
  }
  double rem1 = 0.0, rem2 = 0.0;
  for (double w : pool1.w) rem1 += w;
  for (double w : pool2.w) rem2 += w;
  rep.nu[n - 1] = rem1;
  rep.residual_norm = std::abs(rem1 - rem2);
  Tessellation t1 = tessellate(p.density1, p.cost, p.targets, rep.v);
  Tessellation t2 =
      tessellate(p.density2, p.cost, p.targets, complement_prices(p, rep.v));
  rep.nested = check_nested(t1).nested && check_nested(t2).nested;
  rep.objective = transport_cost(t1, p.density1, p.cost, p.targets) +
                  transport_cost(t2, p.density2, p.cost, p.targets);
  if (!rep.nested) {
    rep.status = SolveStatus::not_nested;
    rep.note = "solution is not hedonically nested";
  } else if (rep.residual_norm <= opts.tol) {
    rep.status = SolveStatus::converged;
  } else {
    rep.status = SolveStatus::stalled;
  }
  rep.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

}  // namespace sdnest
