#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace sdnest {

// Strictly convex superlinear density cost f acting on the discrete target
// weights, described through f, its derivative and the inverse derivative.
// The entropy flag unlocks closed forms for the quantities below; a custom
// triple falls back to scalar root finds.
struct InternalEnergy {
  std::function<double(double)> f;
  std::function<double(double)> fprime;
  std::function<double(double)> fprime_inv;
  bool is_entropy = false;

  static InternalEnergy entropy() {
    InternalEnergy e;
    e.f = [](double s) { return s <= 0.0 ? 0.0 : s * std::log(s); };
    e.fprime = [](double s) { return std::log(s); };
    e.fprime_inv = [](double t) { return std::exp(t); };
    e.is_entropy = true;
    return e;
  }
};

// Level s with sum_i (f')^{-1}(s - w_i) = 1: the common dual offset that
// makes the implied weights a probability vector. For the entropy this is
// -log sum_i exp(-w_i), evaluated stably.
inline double energy_level_for_unit_mass(const InternalEnergy& energy,
                                         const std::vector<double>& w) {
  if (w.empty()) throw std::invalid_argument("energy level: empty weights");
  if (energy.is_entropy) {
    double wmin = w[0];
    for (double x : w) wmin = std::min(wmin, x);
    double acc = 0.0;
    for (double x : w) acc += std::exp(wmin - x);
    return wmin - std::log(acc);
  }
  auto total = [&](double s) {
    double acc = 0.0;
    for (double x : w) acc += energy.fprime_inv(s - x);
    return acc - 1.0;
  };
  // The sum is increasing in s; expand a bracket around 0 and bisect.
  double lo = 0.0, hi = 0.0, step = 1.0;
  for (int it = 0; it < 200 && total(lo) > 0.0; ++it, step *= 2.0) lo -= step;
  step = 1.0;
  for (int it = 0; it < 200 && total(hi) < 0.0; ++it, step *= 2.0) hi += step;
  if (!(total(lo) <= 0.0 && total(hi) >= 0.0)) {
    throw std::runtime_error("energy level: could not bracket");
  }
  for (int it = 0; it < 200 && hi - lo > 1e-14 * (1.0 + std::abs(hi)); ++it) {
    double mid = 0.5 * (lo + hi);
    (total(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace sdnest
