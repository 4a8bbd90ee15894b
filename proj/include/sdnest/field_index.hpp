#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "sdnest/grid.hpp"

namespace sdnest {

inline constexpr double kPlusInf = std::numeric_limits<double>::infinity();
inline constexpr double kMinusInf = -std::numeric_limits<double>::infinity();

// Sorted view of a scalar field against the source weights: cells ordered by
// decreasing field value (cell index breaks ties), with cumulative masses.
// Superlevel-set masses {g >= k} and their threshold quantiles become
// binary-search lookups, and an optional companion field recorded in the
// same order exposes, for every threshold k, the largest threshold k' with
// {g >= k} contained in {companion >= k'} (a prefix running minimum).
class FieldIndex {
 public:
  FieldIndex(const DensityField& density, const std::vector<double>& g)
      : FieldIndex(density, g, nullptr) {}

  FieldIndex(const DensityField& density, const std::vector<double>& g,
             const std::vector<double>& companion)
      : FieldIndex(density, g, &companion) {}

  // Mass of {g >= k}. Inclusive threshold, matching superlevel_mask.
  double suffix_mass(double k) const {
    std::size_t c = count_at_least(k);
    return c == 0 ? 0.0 : cum_[c - 1];
  }

  // Sum of w * g over {g >= k}. Lets transport costs of nested plans
  // telescope into per-field lookups.
  double suffix_weighted_sum(double k) const {
    std::size_t c = count_at_least(k);
    return c == 0 ? 0.0 : cum_wg_[c - 1];
  }

  double total_mass() const { return cum_.empty() ? 0.0 : cum_.back(); }

  struct Quantile {
    double k = kPlusInf;   // threshold, +inf when nothing is included
    double mass = 0.0;     // achieved mass of {g >= k}
  };

  // Smallest achievable superlevel mass >= target together with its
  // threshold. Lands exactly on a jump of the mass staircase; targets above
  // the total return the full set with a -inf threshold.
  Quantile quantile_ceil(double target) const {
    if (target <= 0.0) return Quantile{kPlusInf, 0.0};
    if (target > total_mass()) return Quantile{kMinusInf, total_mass()};
    std::size_t j = std::lower_bound(cum_.begin(), cum_.end(), target) -
                    cum_.begin();
    // Extend over ties so the reported mass is the actual superlevel mass at
    // the reported threshold.
    double k = value_[j];
    std::size_t c = count_at_least(k);
    return Quantile{k, cum_[c - 1]};
  }

  // Field value of the group that straddles the given superlevel mass, the
  // boundary a fractional split would cut through.
  double threshold_for_mass(double mass) const {
    if (value_.empty() || mass <= 0.0) return kPlusInf;
    if (mass >= total_mass()) return value_.back();
    std::size_t r =
        std::lower_bound(cum_.begin(), cum_.end(), mass) - cum_.begin();
    return value_[r];
  }

  // Sum of w * g over the top slice carrying the given mass, the boundary
  // group split fractionally. Exact at staircase corners, linear between
  // them; lets transport costs of nested plans telescope into lookups.
  double suffix_integral(double mass) const {
    if (value_.empty() || mass <= 0.0) return 0.0;
    if (mass >= total_mass()) return cum_wg_.back();
    std::size_t r =
        std::lower_bound(cum_.begin(), cum_.end(), mass) - cum_.begin();
    const double below = r == 0 ? 0.0 : cum_[r - 1];
    const double base = r == 0 ? 0.0 : cum_wg_[r - 1];
    return base + (mass - below) * value_[r];
  }

  // Largest k' such that {g >= k} is contained in {companion >= k'};
  // +inf when the set is empty.
  double k_max_at(double k) const {
    if (companion_min_.empty()) {
      throw std::logic_error("FieldIndex: no companion field recorded");
    }
    std::size_t c = count_at_least(k);
    return c == 0 ? kPlusInf : companion_min_[c - 1];
  }

  std::size_t size() const { return value_.size(); }
  double value_at_rank(std::size_t r) const { return value_[r]; }

 private:
  FieldIndex(const DensityField& density, const std::vector<double>& g,
             const std::vector<double>* companion) {
    if (g.size() != density.w.size() ||
        (companion && companion->size() != g.size())) {
      throw std::invalid_argument("FieldIndex: size mismatch");
    }
    const std::size_t n = g.size();
    std::vector<std::uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
      if (g[a] != g[b]) return g[a] > g[b];
      return a < b;
    });
    value_.resize(n);
    cum_.resize(n);
    cum_wg_.resize(n);
    if (companion) companion_min_.resize(n);
    double acc = 0.0;
    double acc_wg = 0.0;
    double run_min = kPlusInf;
    for (std::size_t r = 0; r < n; ++r) {
      const std::uint32_t c = order[r];
      value_[r] = g[c];
      acc += density.w[c];
      acc_wg += density.w[c] * g[c];
      cum_[r] = acc;
      cum_wg_[r] = acc_wg;
      if (companion) {
        run_min = std::min(run_min, (*companion)[c]);
        companion_min_[r] = run_min;
      }
    }
  }

  // Number of cells with value >= k (values are sorted descending).
  std::size_t count_at_least(double k) const {
    return std::upper_bound(value_.begin(), value_.end(), k,
                            [](double key, double v) { return key > v; }) -
           value_.begin();
  }

  std::vector<double> value_;          // field values, descending
  std::vector<double> cum_;            // cumulative mass in that order
  std::vector<double> cum_wg_;         // cumulative mass-weighted value
  std::vector<double> companion_min_;  // running min of the companion field
};

struct ThresholdSolve {
  double tau = 0.0;       // chosen threshold
  double mass = 0.0;      // achieved mass of {g >= tau}
  double residual = 0.0;  // mass - target
  bool empty_side = false;
  bool full_side = false;
  // Bracket of the staircase jump straddling the target, for callers that
  // split the tied group fractionally: mass_excl = mass{g > split_value} <
  // target <= mass_incl = mass{g >= split_value}. upper_value is the nearest
  // realized value above split_value, +inf when split_value is the maximum.
  bool has_split = false;
  double split_value = 0.0;
  double upper_value = kPlusInf;
  double mass_excl = 0.0;
  double mass_incl = 0.0;
};

// Resolves mass{g >= tau} = target over an explicit cell list, landing on the
// staircase jump with the smaller residual magnitude. A bucket histogram
// locates the crossing and only the crossing bucket is sorted, so the cost
// stays linear in the number of cells.
inline ThresholdSolve solve_suffix_mass(const std::vector<double>& g,
                                        const std::vector<double>& w,
                                        double target, int buckets = 4096) {
  if (g.size() != w.size()) {
    throw std::invalid_argument("solve_suffix_mass: size mismatch");
  }
  ThresholdSolve out;
  const std::size_t n = g.size();
  double total = 0.0;
  double gmin = kPlusInf, gmax = kMinusInf;
  for (std::size_t i = 0; i < n; ++i) {
    total += w[i];
    gmin = std::min(gmin, g[i]);
    gmax = std::max(gmax, g[i]);
  }
  if (n == 0 || target >= total) {
    // Even the full set cannot exceed the target (or there is nothing):
    // report the full set, the feasible anchor.
    out.tau = n == 0 ? 0.0 : gmin - 1.0;
    out.mass = total;
    out.residual = total - target;
    out.full_side = true;
    return out;
  }
  if (target <= 0.0) {
    out.tau = gmax + 1.0;
    out.mass = 0.0;
    out.residual = -target;
    out.empty_side = true;
    return out;
  }
  const double range = gmax - gmin;
  std::size_t b_star = 0;
  double suffix_above = 0.0;  // mass strictly above the crossing bucket
  if (range > 0.0) {
    const int nb = buckets;
    const double inv = nb / range;
    std::vector<double> bucket_mass(nb, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      int b = static_cast<int>((g[i] - gmin) * inv);
      b = std::clamp(b, 0, nb - 1);
      bucket_mass[b] += w[i];
    }
    double suffix = 0.0;
    int b = nb - 1;
    for (; b >= 0; --b) {
      if (suffix + bucket_mass[b] >= target) break;
      suffix += bucket_mass[b];
    }
    b_star = static_cast<std::size_t>(std::max(b, 0));
    suffix_above = suffix;
  }
  // Exact walk over the crossing bucket (or the whole list when the field is
  // flat): cells sorted by decreasing value, grouped by exact value. Bucket
  // assignment is monotone in the value, so every cell above the crossing
  // bucket has a strictly larger value than every cell inside it.
  std::vector<std::pair<double, double>> cells;  // (value, weight)
  double next_above = gmax + 1.0;  // smallest value above the crossing bucket
  if (range > 0.0) {
    const double inv = buckets / range;
    for (std::size_t i = 0; i < n; ++i) {
      int b = static_cast<int>((g[i] - gmin) * inv);
      b = std::clamp(b, 0, buckets - 1);
      if (static_cast<std::size_t>(b) == b_star) {
        cells.emplace_back(g[i], w[i]);
      } else if (static_cast<std::size_t>(b) > b_star) {
        next_above = std::min(next_above, g[i]);
      }
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) cells.emplace_back(g[i], w[i]);
  }
  std::sort(cells.begin(), cells.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });
  // Candidate just above the bucket: threshold next_above keeps exactly the
  // mass suffix_above.
  double best_tau = next_above;
  double best_mass = suffix_above;
  bool best_empty = suffix_above == 0.0;
  double run = suffix_above;
  double prev_val = suffix_above > 0.0 ? next_above : kPlusInf;
  std::size_t i = 0;
  while (i < cells.size()) {
    const double val = cells[i].first;
    double group = 0.0;
    while (i < cells.size() && cells[i].first == val) {
      group += cells[i].second;
      ++i;
    }
    run += group;
    if (std::abs(run - target) < std::abs(best_mass - target)) {
      best_tau = val;
      best_mass = run;
      best_empty = false;
    }
    if (run >= target) {  // residual only grows past this point
      out.has_split = true;
      out.split_value = val;
      out.upper_value = prev_val;
      out.mass_excl = run - group;
      out.mass_incl = run;
      break;
    }
    prev_val = val;
  }
  out.tau = best_tau;
  out.mass = best_mass;
  out.residual = best_mass - target;
  out.empty_side = best_empty;
  return out;
}

}  // namespace sdnest
