#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <vector>

namespace gridlearn::opt {

using Vec = std::vector<double>;

struct BoxLbfgsOptions {
  int max_iters = 500;
  double grad_tol = 1e-8;  // on the inf-norm of the projected quasi-Newton step
  int memory = 15;
  double armijo_c = 1e-4;
  int max_backtracks = 50;
  /// Optional diagonal of the initial inverse Hessian H0. A Jacobi
  /// preconditioner here is what makes stiff penalty terms tractable for the
  /// limited history; without it H0 = gamma I.
  const Vec* h0_diag = nullptr;
};

struct BoxLbfgsResult {
  double value = 0.0;
  double projected_grad_norm = 0.0;
  int iters = 0;
  int n_evals = 0;
  bool converged = false;
};

namespace detail {
inline double clampv(double x, double lo, double hi) {
  return x < lo ? lo : (x > hi ? hi : x);
}
}  // namespace detail

// Limited-memory BFGS over a box l <= z <= u. Bound handling: variables
// pinned at a bound with the gradient pushing outward are frozen out of the
// quasi-Newton direction; trial points are projected back onto the box and
// an Armijo backtracking test is applied against the actual displacement.
// Falls back to projected steepest descent whenever the quasi-Newton step
// fails to make progress. Deterministic: no randomness, fixed evaluation
// order.
//
// `fn(z, grad) -> value` must fill `grad` (same size as z) on every call.
template <class F>
BoxLbfgsResult box_lbfgs_minimize(F&& fn, Vec& z, const Vec& lo, const Vec& hi,
                                  const BoxLbfgsOptions& opts = {}) {
  const std::size_t n = z.size();
  BoxLbfgsResult res;

  auto project = [&](Vec& x) {
    for (std::size_t i = 0; i < n; ++i) x[i] = detail::clampv(x[i], lo[i], hi[i]);
  };
  project(z);

  Vec g(n), g_new(n), d(n), z_new(n), q(n);
  std::deque<Vec> s_hist, y_hist;
  std::deque<double> rho_hist;

  double f = fn(z, g);
  ++res.n_evals;

  // Convergence metric: length of the projected preconditioned gradient step.
  auto pg_norm = [&](const Vec& x, const Vec& grad) {
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double h0 = opts.h0_diag ? (*opts.h0_diag)[i] : 1.0;
      double step = detail::clampv(x[i] - h0 * grad[i], lo[i], hi[i]) - x[i];
      m = std::max(m, std::abs(step));
    }
    return m;
  };

  for (int iter = 0; iter < opts.max_iters; ++iter) {
    res.iters = iter;
    res.projected_grad_norm = pg_norm(z, g);
    if (res.projected_grad_norm <= opts.grad_tol) {
      res.converged = true;
      break;
    }

    // Reduced gradient: freeze variables pinned at an active bound.
    const double edge = 1e-12;
    auto blocked = [&](std::size_t i, const Vec& grad) {
      return (z[i] <= lo[i] + edge && grad[i] > 0.0) ||
             (z[i] >= hi[i] - edge && grad[i] < 0.0);
    };
    for (std::size_t i = 0; i < n; ++i) q[i] = blocked(i, g) ? 0.0 : g[i];

    // Two-loop recursion on the reduced gradient.
    std::vector<double> alpha(s_hist.size());
    d = q;
    for (int k = static_cast<int>(s_hist.size()) - 1; k >= 0; --k) {
      double a = 0.0;
      for (std::size_t i = 0; i < n; ++i) a += s_hist[k][i] * d[i];
      a *= rho_hist[k];
      alpha[k] = a;
      for (std::size_t i = 0; i < n; ++i) d[i] -= a * y_hist[k][i];
    }
    if (opts.h0_diag) {
      for (std::size_t i = 0; i < n; ++i) d[i] *= (*opts.h0_diag)[i];
    } else if (!s_hist.empty()) {
      double sy = 0.0, yy = 0.0;
      const Vec& s_last = s_hist.back();
      const Vec& y_last = y_hist.back();
      for (std::size_t i = 0; i < n; ++i) {
        sy += s_last[i] * y_last[i];
        yy += y_last[i] * y_last[i];
      }
      double gamma = yy > 0.0 ? sy / yy : 1.0;
      for (double& x : d) x *= gamma;
    }
    for (std::size_t k = 0; k < s_hist.size(); ++k) {
      double beta = 0.0;
      for (std::size_t i = 0; i < n; ++i) beta += y_hist[k][i] * d[i];
      beta *= rho_hist[k];
      for (std::size_t i = 0; i < n; ++i) d[i] += s_hist[k][i] * (alpha[k] - beta);
    }
    for (std::size_t i = 0; i < n; ++i) d[i] = blocked(i, g) ? 0.0 : -d[i];

    auto steepest = [&] {
      for (std::size_t i = 0; i < n; ++i)
        d[i] = -q[i] * (opts.h0_diag ? (*opts.h0_diag)[i] : 1.0);
    };
    double gd = 0.0;
    for (std::size_t i = 0; i < n; ++i) gd += g[i] * d[i];
    bool fell_back = false;
    if (!(gd < 0.0)) {  // not a descent direction
      steepest();
      fell_back = true;
    }

    // Armijo backtracking on the projection arc.
    double f_new = f;
    bool accepted = false;
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      double step = 1.0;
      for (int bt = 0; bt <= opts.max_backtracks; ++bt) {
        double descent = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          z_new[i] = detail::clampv(z[i] + step * d[i], lo[i], hi[i]);
          descent += g[i] * (z_new[i] - z[i]);
        }
        if (descent < 0.0) {
          f_new = fn(z_new, g_new);
          ++res.n_evals;
          if (f_new <= f + opts.armijo_c * descent) {
            accepted = true;
            break;
          }
        }
        step *= 0.5;
      }
      if (!accepted && !fell_back && attempt == 0) {
        steepest();
        fell_back = true;
      } else {
        break;
      }
    }
    if (!accepted) break;  // line-search stall: as converged as fp allows

    // Curvature pair from the accepted move.
    Vec s(n), y(n);
    double sy = 0.0, ss = 0.0, yy2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = z_new[i] - z[i];
      y[i] = g_new[i] - g[i];
      sy += s[i] * y[i];
      ss += s[i] * s[i];
      yy2 += y[i] * y[i];
    }
    if (sy > 1e-12 * std::sqrt(ss * yy2)) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > opts.memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    z.swap(z_new);
    g.swap(g_new);
    f = f_new;
  }

  res.value = f;
  res.projected_grad_norm = pg_norm(z, g);
  if (res.projected_grad_norm <= opts.grad_tol) res.converged = true;
  return res;
}

}  // namespace gridlearn::opt
