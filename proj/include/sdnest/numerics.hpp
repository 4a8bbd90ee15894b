#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

namespace sdnest {

inline double fd_step_scale() {
  return std::cbrt(std::numeric_limits<double>::epsilon());
}

enum class RootStatus { converged, no_sign_change, max_iterations };

struct ScalarRootResult {
  double x = 0.0;        // final estimate
  double f = 0.0;        // residual at x
  double lo = 0.0;       // final bracket
  double hi = 0.0;
  double f_lo = 0.0;
  double f_hi = 0.0;
  int iterations = 0;
  RootStatus status = RootStatus::converged;

  bool ok() const { return status == RootStatus::converged; }
};

// Bracketed bisection for a nonincreasing-or-nondecreasing f with
// f(lo) and f(hi) of opposite (non-strict) sign. Robust on staircase
// functions: the bracket converges to the jump containing the sign change
// and the endpoint with the smaller residual magnitude is reported.
inline ScalarRootResult bisect_root(const std::function<double(double)>& f,
                                    double lo, double hi, double xtol,
                                    int maxit = 200) {
  ScalarRootResult r;
  double flo = f(lo), fhi = f(hi);
  if (flo == 0.0) {
    r.x = lo; r.f = 0.0; r.lo = r.hi = lo; r.f_lo = r.f_hi = 0.0;
    return r;
  }
  if (fhi == 0.0) {
    r.x = hi; r.f = 0.0; r.lo = r.hi = hi; r.f_lo = r.f_hi = 0.0;
    return r;
  }
  if ((flo > 0.0) == (fhi > 0.0)) {
    r.status = RootStatus::no_sign_change;
    r.lo = lo; r.hi = hi; r.f_lo = flo; r.f_hi = fhi;
    r.x = std::abs(flo) <= std::abs(fhi) ? lo : hi;
    r.f = std::abs(flo) <= std::abs(fhi) ? flo : fhi;
    return r;
  }
  int it = 0;
  while (hi - lo > xtol && it < maxit) {
    double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;  // bracket at floating resolution
    double fmid = f(mid);
    ++it;
    if (fmid == 0.0) {
      r.x = mid; r.f = 0.0; r.lo = r.hi = mid; r.f_lo = r.f_hi = 0.0;
      r.iterations = it;
      return r;
    }
    if ((fmid > 0.0) == (flo > 0.0)) {
      lo = mid; flo = fmid;
    } else {
      hi = mid; fhi = fmid;
    }
  }
  r.iterations = it;
  r.lo = lo; r.hi = hi; r.f_lo = flo; r.f_hi = fhi;
  if (std::abs(flo) <= std::abs(fhi)) {
    r.x = lo; r.f = flo;
  } else {
    r.x = hi; r.f = fhi;
  }
  if (it >= maxit && hi - lo > xtol) r.status = RootStatus::max_iterations;
  return r;
}

// Newton iteration falling back to bisection whenever the Newton step leaves
// the bracket or fails to shrink it fast enough.
inline ScalarRootResult safeguarded_newton_root(
    const std::function<void(double, double&, double&)>& f_df, double lo,
    double hi, double xtol, int maxit = 100) {
  ScalarRootResult r;
  double flo, fhi, df;
  f_df(lo, flo, df);
  f_df(hi, fhi, df);
  if ((flo > 0.0) == (fhi > 0.0) && flo != 0.0 && fhi != 0.0) {
    r.status = RootStatus::no_sign_change;
    r.lo = lo; r.hi = hi; r.f_lo = flo; r.f_hi = fhi;
    r.x = lo; r.f = flo;
    return r;
  }
  if (flo > 0.0) std::swap(lo, hi);  // keep f(lo) <= 0 <= f(hi)
  double x = 0.5 * (lo + hi), fx, dfx;
  double step_old = std::abs(hi - lo);
  f_df(x, fx, dfx);
  for (int it = 1; it <= maxit; ++it) {
    r.iterations = it;
    bool newton_ok = dfx != 0.0;
    double x_next = newton_ok ? x - fx / dfx : x;
    if (!newton_ok || (x_next - lo) * (x_next - hi) >= 0.0 ||
        std::abs(2.0 * fx) > std::abs(step_old * dfx)) {
      step_old = 0.5 * std::abs(hi - lo);
      x_next = 0.5 * (lo + hi);
    } else {
      step_old = std::abs(x_next - x);
    }
    x = x_next;
    f_df(x, fx, dfx);
    if (fx <= 0.0) lo = x; else hi = x;
    if (std::abs(hi - lo) < xtol || fx == 0.0) {
      r.x = x; r.f = fx;
      r.lo = std::min(lo, hi); r.hi = std::max(lo, hi);
      return r;
    }
  }
  r.status = RootStatus::max_iterations;
  r.x = x; r.f = fx;
  return r;
}

// Softmin weights e^{-v_i} / sum_k e^{-v_k}, guarded against overflow.
inline std::vector<double> softmin_weights(const std::vector<double>& v) {
  double vmin = std::numeric_limits<double>::infinity();
  for (double x : v) vmin = std::min(vmin, x);
  std::vector<double> w(v.size());
  double z = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    w[i] = std::exp(vmin - v[i]);
    z += w[i];
  }
  for (double& x : w) x /= z;
  return w;
}

// d softmin_i / d v_j = softmin_i * softmin_j - delta_ij * softmin_i.
inline Eigen::MatrixXd softmin_jacobian(const std::vector<double>& v) {
  auto s = softmin_weights(v);
  const int n = static_cast<int>(v.size());
  Eigen::MatrixXd j(n, n);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      j(a, b) = s[a] * s[b] - (a == b ? s[a] : 0.0);
    }
  }
  return j;
}

// Centered finite-difference Jacobian with per-column step
// max(cbrt(eps) * (1 + |x_j|), step_floor). The floor lets callers widen the
// stencil when the residual is piecewise constant below a known resolution.
inline Eigen::MatrixXd fd_jacobian(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& x, double step_floor = 0.0) {
  const int n = static_cast<int>(x.size());
  Eigen::MatrixXd j;
  for (int col = 0; col < n; ++col) {
    double h = std::max(fd_step_scale() * (1.0 + std::abs(x[col])), step_floor);
    Eigen::VectorXd xp = x, xm = x;
    xp[col] += h;
    xm[col] -= h;
    Eigen::VectorXd diff = (f(xp) - f(xm)) / (2.0 * h);
    if (j.size() == 0) j.resize(diff.size(), n);
    j.col(col) = diff;
  }
  return j;
}

struct RestrictedSolveResult {
  Eigen::VectorXd step;
  double cond = 0.0;
  bool ok = false;
};

// Solves J s = r for residuals that are invariant under adding a constant to
// the unknowns (so J has the all-ones direction in its kernel): stack a row
// of ones with target zero, solve the augmented system by least squares and
// project the step back onto the mean-zero subspace. Rejects augmented
// systems with condition number above cond_limit.
inline RestrictedSolveResult restricted_solve(const Eigen::MatrixXd& j,
                                              const Eigen::VectorXd& r,
                                              double cond_limit = 1e12) {
  const int n = static_cast<int>(j.cols());
  Eigen::MatrixXd a(j.rows() + 1, n);
  a.topRows(j.rows()) = j;
  a.row(j.rows()).setOnes();
  Eigen::VectorXd b(r.size() + 1);
  b.head(r.size()) = r;
  b[r.size()] = 0.0;

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  RestrictedSolveResult out;
  const auto& sv = svd.singularValues();
  double smax = sv.size() ? sv[0] : 0.0;
  double smin = sv.size() ? sv[sv.size() - 1] : 0.0;
  out.cond = smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();
  if (!std::isfinite(out.cond) || out.cond > cond_limit) return out;
  out.step = svd.solve(b);
  out.step.array() -= out.step.mean();
  out.ok = out.step.allFinite();
  return out;
}

}  // namespace sdnest
