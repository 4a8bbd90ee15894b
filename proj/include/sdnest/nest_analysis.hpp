#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "sdnest/energy.hpp"
#include "sdnest/field_index.hpp"
#include "sdnest/laguerre.hpp"
#include "sdnest/targets.hpp"

namespace sdnest {

// The analysis below works on the difference fields g_i = c(., y_{i+1}) -
// c(., y_i), i = 0..N-2. The superlevel set {g_i >= k} collects the source
// region preferring the first i+1 targets, so its mass sweeps the cumulative
// target masses as k decreases.

inline void require_pair(const TargetSet& targets, int pair) {
  const int n = static_cast<int>(targets.t.size());
  if (pair < 0 || pair >= n - 1) {
    throw std::invalid_argument("pair index out of range");
  }
}

// Thresholds k_i with mass{g_i >= k_i} landing on the cumulative target
// masses nu_0 + ... + nu_i, each on the nearest achievable staircase jump
// from above. Degenerate cumulatives get sentinels: +inf for an empty set,
// -inf for the full square.
inline std::vector<double> splitting_levels(const DensityField& density,
                                            const CostSpec& cost,
                                            const TargetSet& targets,
                                            const std::vector<double>& nu) {
  const int n = static_cast<int>(targets.t.size());
  if (static_cast<int>(nu.size()) != n) {
    throw std::invalid_argument("splitting_levels: nu size mismatch");
  }
  double sum = 0.0;
  for (double x : nu) {
    if (x < 0.0) throw std::invalid_argument("splitting_levels: negative nu");
    sum += x;
  }
  if (std::abs(sum - 1.0) > 1e-8) {
    throw std::invalid_argument("splitting_levels: nu must sum to one");
  }
  std::vector<double> levels(n - 1);
  double cum = 0.0;
  for (int i = 0; i + 1 < n; ++i) {
    cum += nu[i];
    std::vector<double> g = cost_difference_field(density.grid, cost, targets, i);
    FieldIndex idx(density, g);
    if (cum <= 0.0) {
      levels[i] = kPlusInf;
    } else if (cum >= idx.total_mass() - 1e-12) {
      levels[i] = kMinusInf;
    } else {
      levels[i] = idx.quantile_ceil(cum).k;
    }
  }
  return levels;
}

// Dual potentials generated by splitting levels: v_0 = 0 and
// v_{i+1} = v_i + k_i. Only meaningful when every level is finite.
inline std::vector<double> potentials_from_levels(const std::vector<double>& levels) {
  std::vector<double> v(levels.size() + 1, 0.0);
  for (std::size_t i = 0; i < levels.size(); ++i) v[i + 1] = v[i] + levels[i];
  return v;
}

// Largest k' with {g_pair >= k} contained in {g_{pair+1} >= k'};
// +inf when {g_pair >= k} is empty.
inline double k_max_level(const DensityField& density, const CostSpec& cost,
                          const TargetSet& targets, int pair, double k) {
  require_pair(targets, pair + 1);
  std::vector<double> g = cost_difference_field(density.grid, cost, targets, pair);
  std::vector<double> gn =
      cost_difference_field(density.grid, cost, targets, pair + 1);
  FieldIndex idx(density, g, gn);
  return idx.k_max_at(k);
}

// Unavoidable mass excess of the tightest containing superlevel set of the
// next field over {g_pair >= k}. Zero when the two fields share level lines.
inline double d_min_level(const DensityField& density, const CostSpec& cost,
                          const TargetSet& targets, int pair, double k) {
  require_pair(targets, pair + 1);
  std::vector<double> g = cost_difference_field(density.grid, cost, targets, pair);
  std::vector<double> gn =
      cost_difference_field(density.grid, cost, targets, pair + 1);
  FieldIndex idx(density, g, gn);
  FieldIndex idx_next(density, gn);
  double kq = idx.k_max_at(k);
  if (kq == kPlusInf) return 0.0;
  double d = idx_next.suffix_mass(kq) - idx.suffix_mass(k);
  return std::max(d, 0.0);
}

struct SupDminResult {
  double sup = 0.0;
  double arg_k = 0.0;
  int samples = 0;
};

// Supremum of d_min_level over k, estimated by sampling k at evenly spaced
// mass quantiles of g_pair. The defect is piecewise constant between jumps
// of both staircases, so quantile sampling covers the range where it can
// move.
inline SupDminResult sup_d_min(const DensityField& density, const CostSpec& cost,
                               const TargetSet& targets, int pair,
                               int samples = 256) {
  require_pair(targets, pair + 1);
  if (samples < 2) throw std::invalid_argument("sup_d_min: samples < 2");
  std::vector<double> g = cost_difference_field(density.grid, cost, targets, pair);
  std::vector<double> gn =
      cost_difference_field(density.grid, cost, targets, pair + 1);
  FieldIndex idx(density, g, gn);
  FieldIndex idx_next(density, gn);
  SupDminResult out;
  out.samples = samples;
  const std::size_t n = idx.size();
  for (int s = 0; s < samples; ++s) {
    const double frac = (s + 0.5) / samples;
    const std::size_t rank =
        std::min(n - 1, static_cast<std::size_t>(frac * n));
    const double k = idx.value_at_rank(rank);
    const double kq = idx.k_max_at(k);
    if (kq == kPlusInf) continue;
    const double d =
        std::max(idx_next.suffix_mass(kq) - idx.suffix_mass(k), 0.0);
    if (d > out.sup) {
      out.sup = d;
      out.arg_k = k;
    }
  }
  return out;
}

// Closed-form upper bound for the mass defect under the bilinear cost with a
// uniform source: the superlevel sets are halfplanes x1 + s x2 <= a with s
// the secant slope of F, and the defect region is a triangle of area at most
// half the secant slope gap. Throws for other cost families.
inline double analytic_sup_bound_bilinear(const CostSpec& cost,
                                          const TargetSet& targets, int pair) {
  require_pair(targets, pair + 1);
  if (cost.family != CostFamily::bilinear) {
    throw std::invalid_argument("analytic bound requires the bilinear cost");
  }
  const auto& t = targets.t;
  auto secant = [&](int i) {
    return (cost.bilinear_f(t[i + 1]) - cost.bilinear_f(t[i])) /
           (t[i + 1] - t[i]);
  };
  return 0.5 * std::abs(secant(pair + 1) - secant(pair));
}

// Largest ratio |c(x, y_j) - c(x, y_k)| / dist(y_j, y_k) over grid midpoints.
// The numerator is affine in x, so the maximum over the grid sits at one of
// the four corner midpoints.
inline double lipschitz_constant(const GridSpec& grid, const CostSpec& cost,
                                 const TargetSet& targets) {
  const int n = static_cast<int>(targets.t.size());
  if (n < 2) throw std::invalid_argument("lipschitz_constant: need 2 targets");
  const double lo = 0.5 * grid.h();
  const double hi = 1.0 - 0.5 * grid.h();
  const double cx[4] = {lo, hi, lo, hi};
  const double cy[4] = {lo, lo, hi, hi};
  double best = 0.0;
  const std::vector<AffineScore> scores = cost_scores(cost, targets);
  for (int j = 0; j < n; ++j) {
    const AffineScore& sj = scores[j];
    for (int k = j + 1; k < n; ++k) {
      const AffineScore& sk = scores[k];
      const double dist = target_distance(cost, targets, j, k);
      for (int c = 0; c < 4; ++c) {
        const double diff = (sj.ax - sk.ax) * cx[c] + (sj.ay - sk.ay) * cy[c] +
                            (sj.d - sk.d);
        best = std::max(best, std::abs(diff) / dist);
      }
    }
  }
  return best;
}

struct WeightBounds {
  std::vector<double> lower;
  std::vector<double> upper;
};

// A-priori sandwich for the optimal target weights of the congestion
// problem: shifting every dual value by at most mc * dist(y_i, y_0) around a
// common level constrains each weight between these bounds. For the entropy
// they reduce to exp(-mc d_i) / sum_p exp(mc d_p) and its mirror.
inline WeightBounds entropy_weight_bounds(const InternalEnergy& energy,
                                          const CostSpec& cost,
                                          const TargetSet& targets, double mc) {
  const int n = static_cast<int>(targets.t.size());
  std::vector<double> d(n);
  for (int i = 0; i < n; ++i) d[i] = target_distance(cost, targets, i, 0);
  std::vector<double> w_lo(n), w_hi(n);
  for (int i = 0; i < n; ++i) {
    w_lo[i] = -mc * d[i];
    w_hi[i] = mc * d[i];
  }
  const double s_lo = energy_level_for_unit_mass(energy, w_lo);
  const double s_hi = energy_level_for_unit_mass(energy, w_hi);
  WeightBounds out;
  out.lower.resize(n);
  out.upper.resize(n);
  for (int i = 0; i < n; ++i) {
    out.lower[i] = energy.fprime_inv(s_lo - mc * d[i]);
    out.upper[i] = energy.fprime_inv(s_hi + mc * d[i]);
  }
  return out;
}

struct NestCertificate {
  bool granted = false;
  bool analytic_sup = false;   // closed-form defect bound was applicable
  bool sampled_caveat = false; // defect sup only sampled, not exact
  bool uniform_density = false;
  double mc = 0.0;
  std::vector<double> lower;    // weight lower bounds, one per target
  std::vector<double> upper;
  std::vector<double> sup_dmin; // defect sup per pair i = 0..N-3
  std::vector<double> margin;   // lower[i+1] - sup_dmin[i]
};

// Decides, before solving anything, whether the congestion solution must be
// nested: the weight flowing to target i+1 always exceeds its lower bound,
// so if even that bound beats the largest possible containment defect of the
// pair (g_i, g_{i+1}), the splitting-level construction never clamps.
inline NestCertificate certify_nested_apriori(const DensityField& density,
                                              const CostSpec& cost,
                                              const TargetSet& targets,
                                              const InternalEnergy& energy,
                                              int samples = 256) {
  const int n = static_cast<int>(targets.t.size());
  NestCertificate cert;
  cert.mc = lipschitz_constant(density.grid, cost, targets);
  WeightBounds wb = entropy_weight_bounds(energy, cost, targets, cert.mc);
  cert.lower = std::move(wb.lower);
  cert.upper = std::move(wb.upper);
  double wmin = density.w[0], wmax = density.w[0];
  for (double w : density.w) {
    wmin = std::min(wmin, w);
    wmax = std::max(wmax, w);
  }
  cert.uniform_density = wmax - wmin <= 1e-14 * wmax;
  cert.analytic_sup =
      cost.family == CostFamily::bilinear && cert.uniform_density;
  cert.sampled_caveat = !cert.analytic_sup;
  cert.granted = true;
  for (int p = 0; p + 2 < n; ++p) {
    double sup = cert.analytic_sup
                     ? analytic_sup_bound_bilinear(cost, targets, p)
                     : sup_d_min(density, cost, targets, p, samples).sup;
    cert.sup_dmin.push_back(sup);
    const double margin = cert.lower[p + 1] - sup;
    cert.margin.push_back(margin);
    if (!(margin > 0.0)) cert.granted = false;
  }
  return cert;
}

// Whether the superlevel sets at the given levels form a nested chain.
// Containment of consecutive sets is equivalent to the next level staying
// at or below the containment threshold of the current one.
inline bool levels_nested(const DensityField& density, const CostSpec& cost,
                          const TargetSet& targets,
                          const std::vector<double>& levels) {
  const int n = static_cast<int>(targets.t.size());
  if (static_cast<int>(levels.size()) != n - 1) {
    throw std::invalid_argument("levels_nested: size mismatch");
  }
  for (int p = 0; p + 2 < n; ++p) {
    if (levels[p] == kPlusInf) continue;  // empty set, contained in anything
    const double kq = k_max_level(density, cost, targets, p, levels[p]);
    if (levels[p + 1] > kq) return false;
  }
  return true;
}

// Partition of the grid induced by superlevel thresholds: each cell gets the
// first field index whose threshold it passes, the last target collects the
// rest. For a nested chain this reproduces the transport plan of the
// splitting-level construction.
inline Tessellation tessellation_from_levels(const DensityField& density,
                                             const CostSpec& cost,
                                             const TargetSet& targets,
                                             const std::vector<double>& levels) {
  const int n = static_cast<int>(targets.t.size());
  if (static_cast<int>(levels.size()) != n - 1) {
    throw std::invalid_argument("tessellation_from_levels: size mismatch");
  }
  Tessellation tess;
  tess.grid = density.grid;
  tess.label.assign(density.w.size(), n - 1);
  for (int i = n - 2; i >= 0; --i) {
    if (levels[i] == kPlusInf) continue;
    std::vector<double> g = cost_difference_field(density.grid, cost, targets, i);
    for (std::size_t c = 0; c < g.size(); ++c) {
      if (g[c] >= levels[i]) tess.label[c] = i;
    }
  }
  tess.mass.assign(n, 0.0);
  for (std::size_t c = 0; c < density.w.size(); ++c) {
    tess.mass[tess.label[c]] += density.w[c];
  }
  return tess;
}

}  // namespace sdnest
