#pragma once

#include <chrono>
#include <cmath>
#include <optional>
#include <vector>

#include "gridlearn/lbfgs.hpp"
#include "gridlearn/violations.hpp"

namespace gridlearn::opt {

using grid::Network;
using pf::LoadPoint;
using pf::OperatingPoint;

struct SolverConfig {
  double feas_tol = 1e-6;       // p.u., on every constraint of the model
  double opt_tol = 1e-6;        // first-order stationarity of the inner problem
  int max_outer = 50;           // augmented-Lagrangian rounds
  int max_inner = 500;          // quasi-Newton iterations per round
  double penalty_init = 10.0;
  double penalty_growth = 10.0;
  pf::ViolationOptions violation;
};

enum class SolveStatus { OptimalLocal, Infeasible, MaxIterations };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::OptimalLocal: return "optimal_local";
    case SolveStatus::Infeasible: return "infeasible";
    default: return "max_iterations";
  }
}

struct SolveOutcome {
  SolveStatus status = SolveStatus::MaxIterations;
  std::optional<OperatingPoint> solution;  // present iff OptimalLocal
  double objective = std::numeric_limits<double>::quiet_NaN();
  int outer_iters = 0;
  int inner_iters = 0;
  double worst_violation = std::numeric_limits<double>::infinity();
  double wall_seconds = 0.0;  // informational; excluded from determinism
};

namespace detail {

// Variable packing: z = [v (n) | theta (n-1, reference excluded) | pg | qg].
struct AlProblem {
  const Network& net;
  Vec pd, qd;  // per-bus demand
  int n, m, e, ref;
  Vec lo, hi;

  bool loadflow = false;
  Vec target_pg, target_v;  // load-flow objective data
  double cost_scale = 1.0;

  // Multipliers: equalities per bus, inequalities per branch constraint.
  Vec lam_p, lam_q;    // n each
  Vec lam_ang_lo, lam_ang_hi;  // e each
  Vec lam_th;          // 2e (zero where the branch is unlimited)
  double mu;

  // Scratch reused across evaluations.
  mutable Vec pf_, qf_, rp_, rq_;

  AlProblem(const Network& network, const LoadPoint& load, const SolverConfig& cfg)
      : net(network),
        n(network.n_buses()),
        m(network.n_gens()),
        e(network.n_branches()),
        ref(network.reference_bus()),
        mu(cfg.penalty_init) {
    pf::bus_demand(net, load, pd, qd);
    lam_p.assign(n, 0.0);
    lam_q.assign(n, 0.0);
    lam_ang_lo.assign(e, 0.0);
    lam_ang_hi.assign(e, 0.0);
    lam_th.assign(2 * e, 0.0);
    pf_.resize(2 * e);
    qf_.resize(2 * e);
    rp_.resize(n);
    rq_.resize(n);

    const int nz = 2 * n - 1 + 2 * m;
    lo.resize(nz);
    hi.resize(nz);
    for (int i = 0; i < n; ++i) {
      lo[i] = net.buses[i].v_min;
      hi[i] = net.buses[i].v_max;
    }
    for (int i = 0; i < n - 1; ++i) {
      lo[n + i] = -std::numeric_limits<double>::infinity();
      hi[n + i] = std::numeric_limits<double>::infinity();
    }
    for (int g = 0; g < m; ++g) {
      lo[2 * n - 1 + g] = net.generators[g].p_min;
      hi[2 * n - 1 + g] = net.generators[g].p_max;
      lo[2 * n - 1 + m + g] = net.generators[g].q_min;
      hi[2 * n - 1 + m + g] = net.generators[g].q_max;
    }
  }

  int nz() const { return 2 * n - 1 + 2 * m; }

  int theta_slot(int bus) const { return bus < ref ? n + bus : n + bus - 1; }

  OperatingPoint unpack(const Vec& z) const {
    OperatingPoint op;
    op.v.assign(z.begin(), z.begin() + n);
    op.theta.assign(n, 0.0);
    for (int i = 0; i < n; ++i)
      if (i != ref) op.theta[i] = z[theta_slot(i)];
    op.pg.assign(z.begin() + 2 * n - 1, z.begin() + 2 * n - 1 + m);
    op.qg.assign(z.begin() + 2 * n - 1 + m, z.begin() + 2 * n - 1 + 2 * m);
    return op;
  }

  Vec pack(const OperatingPoint& op) const {
    Vec z(nz());
    for (int i = 0; i < n; ++i) z[i] = op.v[i];
    for (int i = 0; i < n; ++i)
      if (i != ref) z[theta_slot(i)] = op.theta[i];
    for (int g = 0; g < m; ++g) {
      z[2 * n - 1 + g] = op.pg[g];
      z[2 * n - 1 + m + g] = op.qg[g];
    }
    return z;
  }

  double thermal_sigma(double p, double q, double s_max,
                       const pf::ViolationOptions& vo) const {
    double limit = vo.thermal_squared ? s_max * s_max : s_max;
    return p * p + q * q - limit;
  }

  // Augmented-Lagrangian value and gradient. Equalities carry classic
  // multiplier + quadratic terms; inequality constraints use the smooth
  // one-sided penalty psi(s) = (max(0, lam + mu s)^2 - lam^2) / (2 mu).
  double eval(const Vec& z, Vec& grad, const pf::ViolationOptions& vo) const {
    const int nvars = nz();
    grad.assign(nvars, 0.0);

    // Unpack without allocating: view helpers.
    auto v = [&](int i) { return z[i]; };
    auto th = [&](int i) { return i == ref ? 0.0 : z[theta_slot(i)]; };

    // Flows.
    for (int k = 0; k < e; ++k) {
      const grid::Branch& br = net.branches[k];
      pf::LineFlow f = pf::line_flow(v(br.from_bus), v(br.to_bus), th(br.from_bus),
                                     th(br.to_bus), br.g, br.b);
      pf::LineFlow r = pf::line_flow(v(br.to_bus), v(br.from_bus), th(br.to_bus),
                                     th(br.from_bus), br.g, br.b);
      pf_[2 * k] = f.p;
      qf_[2 * k] = f.q;
      pf_[2 * k + 1] = r.p;
      qf_[2 * k + 1] = r.q;
    }

    // Balance residuals.
    for (int i = 0; i < n; ++i) {
      rp_[i] = -pd[i];
      rq_[i] = -qd[i];
    }
    for (int g = 0; g < m; ++g) {
      rp_[net.generators[g].bus] += z[2 * n - 1 + g];
      rq_[net.generators[g].bus] += z[2 * n - 1 + m + g];
    }
    for (int k = 0; k < e; ++k) {
      const grid::Branch& br = net.branches[k];
      rp_[br.from_bus] -= pf_[2 * k];
      rq_[br.from_bus] -= qf_[2 * k];
      rp_[br.to_bus] -= pf_[2 * k + 1];
      rq_[br.to_bus] -= qf_[2 * k + 1];
    }

    double value = 0.0;

    // Objective.
    if (loadflow) {
      for (int g = 0; g < m; ++g) {
        double dpg = z[2 * n - 1 + g] - target_pg[g];
        value += dpg * dpg;
        grad[2 * n - 1 + g] += 2.0 * dpg;
      }
      for (int i = 0; i < n; ++i) {
        double dv = z[i] - target_v[i];
        value += dv * dv;
        grad[i] += 2.0 * dv;
      }
    } else {
      const double base = net.base_mva;
      for (int g = 0; g < m; ++g) {
        const grid::Generator& gen = net.generators[g];
        double P = z[2 * n - 1 + g] * base;
        value += (gen.c2 * P * P + gen.c1 * P + gen.c0) / cost_scale;
        grad[2 * n - 1 + g] += (2.0 * gen.c2 * P + gen.c1) * base / cost_scale;
      }
    }

    // Equality terms and their pull on injections.
    for (int i = 0; i < n; ++i) {
      value += lam_p[i] * rp_[i] + 0.5 * mu * rp_[i] * rp_[i];
      value += lam_q[i] * rq_[i] + 0.5 * mu * rq_[i] * rq_[i];
    }
    for (int g = 0; g < m; ++g) {
      int b = net.generators[g].bus;
      grad[2 * n - 1 + g] += lam_p[b] + mu * rp_[b];
      grad[2 * n - 1 + m + g] += lam_q[b] + mu * rq_[b];
    }

    // Per-direction flow adjoints from balance and thermal terms, then chain
    // through Ohm's law into (v, theta).
    for (int k = 0; k < e; ++k) {
      const grid::Branch& br = net.branches[k];
      const bool limited = std::isfinite(br.s_max);
      for (int dir = 0; dir < 2; ++dir) {
        int a = dir == 0 ? br.from_bus : br.to_bus;
        int c = dir == 0 ? br.to_bus : br.from_bus;
        int idx = 2 * k + dir;
        double wp = -(lam_p[a] + mu * rp_[a]);
        double wq = -(lam_q[a] + mu * rq_[a]);
        if (limited) {
          double sig = thermal_sigma(pf_[idx], qf_[idx], br.s_max, vo);
          double t = lam_th[idx] + mu * sig;
          double active = t > 0.0 ? t : 0.0;
          value += (active * active - lam_th[idx] * lam_th[idx]) / (2.0 * mu);
          wp += active * 2.0 * pf_[idx];
          wq += active * 2.0 * qf_[idx];
        }
        pf::LineFlowGrad gfl = pf::line_flow_grad(v(a), v(c), th(a), th(c), br.g, br.b);
        grad[a] += wp * gfl.dp_dvi + wq * gfl.dq_dvi;
        grad[c] += wp * gfl.dp_dvj + wq * gfl.dq_dvj;
        double gd = wp * gfl.dp_dd + wq * gfl.dq_dd;
        if (a != ref) grad[theta_slot(a)] += gd;
        if (c != ref) grad[theta_slot(c)] -= gd;
      }
      // Angle-difference bounds: sigma_lo = -(d + delta), sigma_hi = d - delta.
      double d = th(br.from_bus) - th(br.to_bus);
      double t_lo = lam_ang_lo[k] + mu * (-d - br.theta_delta);
      double t_hi = lam_ang_hi[k] + mu * (d - br.theta_delta);
      double a_lo = t_lo > 0.0 ? t_lo : 0.0;
      double a_hi = t_hi > 0.0 ? t_hi : 0.0;
      value += (a_lo * a_lo - lam_ang_lo[k] * lam_ang_lo[k]) / (2.0 * mu);
      value += (a_hi * a_hi - lam_ang_hi[k] * lam_ang_hi[k]) / (2.0 * mu);
      double gd = a_hi - a_lo;
      if (br.from_bus != ref) grad[theta_slot(br.from_bus)] += gd;
      if (br.to_bus != ref) grad[theta_slot(br.to_bus)] -= gd;
    }

    return value;
  }

  // Jacobi diagonal of the Gauss-Newton model of the augmented Lagrangian,
  // H ~ diag(obj'') + mu J^T J, used as the inner solver's initial inverse
  // Hessian. This is what keeps the inner problem tractable as mu grows.
  void curvature_diag(const Vec& z, const pf::ViolationOptions& vo, Vec& h0) const {
    const int nvars = nz();
    Vec d(nvars, 0.0);
    auto v = [&](int i) { return z[i]; };
    auto th = [&](int i) { return i == ref ? 0.0 : z[theta_slot(i)]; };

    if (loadflow) {
      for (int g = 0; g < m; ++g) d[2 * n - 1 + g] += 2.0;
      for (int i = 0; i < n; ++i) d[i] += 2.0;
    } else {
      const double base = net.base_mva;
      for (int g = 0; g < m; ++g)
        d[2 * n - 1 + g] += 2.0 * net.generators[g].c2 * base * base / cost_scale;
    }
    for (int g = 0; g < m; ++g) {
      d[2 * n - 1 + g] += mu;      // d rp / d pg = 1
      d[2 * n - 1 + m + g] += mu;  // d rq / d qg = 1
    }
    for (int k = 0; k < e; ++k) {
      const grid::Branch& br = net.branches[k];
      const bool limited = std::isfinite(br.s_max);
      for (int dir = 0; dir < 2; ++dir) {
        int a = dir == 0 ? br.from_bus : br.to_bus;
        int c = dir == 0 ? br.to_bus : br.from_bus;
        int idx = 2 * k + dir;
        pf::LineFlowGrad gf = pf::line_flow_grad(v(a), v(c), th(a), th(c), br.g, br.b);
        d[a] += mu * (gf.dp_dvi * gf.dp_dvi + gf.dq_dvi * gf.dq_dvi);
        d[c] += mu * (gf.dp_dvj * gf.dp_dvj + gf.dq_dvj * gf.dq_dvj);
        double ang = mu * (gf.dp_dd * gf.dp_dd + gf.dq_dd * gf.dq_dd);
        if (a != ref) d[theta_slot(a)] += ang;
        if (c != ref) d[theta_slot(c)] += ang;
        if (limited) {
          double sig = thermal_sigma(pf_[idx], qf_[idx], br.s_max, vo);
          if (lam_th[idx] + mu * sig > 0.0) {
            double sp = 2.0 * pf_[idx], sq = 2.0 * qf_[idx];
            d[a] += mu * std::pow(sp * gf.dp_dvi + sq * gf.dq_dvi, 2);
            d[c] += mu * std::pow(sp * gf.dp_dvj + sq * gf.dq_dvj, 2);
            double t = mu * std::pow(sp * gf.dp_dd + sq * gf.dq_dd, 2);
            if (a != ref) d[theta_slot(a)] += t;
            if (c != ref) d[theta_slot(c)] += t;
          }
        }
      }
      double dd = th(br.from_bus) - th(br.to_bus);
      if (lam_ang_lo[k] + mu * (-dd - br.theta_delta) > 0.0 ||
          lam_ang_hi[k] + mu * (dd - br.theta_delta) > 0.0) {
        if (br.from_bus != ref) d[theta_slot(br.from_bus)] += mu;
        if (br.to_bus != ref) d[theta_slot(br.to_bus)] += mu;
      }
    }
    h0.resize(nvars);
    for (int i = 0; i < nvars; ++i) h0[i] = 1.0 / std::max(d[i], 1e-8);
  }

  void update_multipliers(const pf::ViolationOptions& vo) {
    // rp_/rq_/pf_/qf_ hold the values from the last eval() at the solution.
    for (int i = 0; i < n; ++i) {
      lam_p[i] += mu * rp_[i];
      lam_q[i] += mu * rq_[i];
    }
    for (int k = 0; k < e; ++k) {
      const grid::Branch& br = net.branches[k];
      if (std::isfinite(br.s_max)) {
        for (int dir = 0; dir < 2; ++dir) {
          int idx = 2 * k + dir;
          double sig = thermal_sigma(pf_[idx], qf_[idx], br.s_max, vo);
          lam_th[idx] = std::max(0.0, lam_th[idx] + mu * sig);
        }
      }
    }
  }

  void update_angle_multipliers(const Vec& z) {
    auto th = [&](int i) { return i == ref ? 0.0 : z[theta_slot(i)]; };
    for (int k = 0; k < e; ++k) {
      const grid::Branch& br = net.branches[k];
      double d = th(br.from_bus) - th(br.to_bus);
      lam_ang_lo[k] = std::max(0.0, lam_ang_lo[k] + mu * (-d - br.theta_delta));
      lam_ang_hi[k] = std::max(0.0, lam_ang_hi[k] + mu * (d - br.theta_delta));
    }
  }
};

inline Vec initial_point(const AlProblem& prob, const Network& net,
                         const std::optional<OperatingPoint>& warm) {
  if (warm) {
    Vec z = prob.pack(*warm);
    for (std::size_t i = 0; i < z.size(); ++i)
      z[i] = std::min(std::max(z[i], prob.lo[i]), prob.hi[i]);
    return z;
  }
  // Flat start: v = 1, theta = 0, pg at bound midpoints rescaled towards the
  // total demand, qg = 0.
  OperatingPoint op;
  op.v.assign(net.n_buses(), 1.0);
  op.theta.assign(net.n_buses(), 0.0);
  op.pg.resize(net.n_gens());
  op.qg.assign(net.n_gens(), 0.0);
  double total = 0.0;
  for (double p : prob.pd) total += p;
  double mid_sum = 0.0;
  for (const grid::Generator& g : net.generators) mid_sum += 0.5 * (g.p_min + g.p_max);
  double scale = mid_sum > 1e-12 ? std::min(1.0, total / mid_sum) : 0.0;
  for (int g = 0; g < net.n_gens(); ++g)
    op.pg[g] = 0.5 * (net.generators[g].p_min + net.generators[g].p_max) * scale;
  Vec z = prob.pack(op);
  for (std::size_t i = 0; i < z.size(); ++i)
    z[i] = std::min(std::max(z[i], prob.lo[i]), prob.hi[i]);
  return z;
}

inline SolveOutcome run_al(AlProblem& prob, const Network& net, const LoadPoint& load,
                           const SolverConfig& cfg,
                           const std::optional<OperatingPoint>& warm) {
  auto t0 = std::chrono::steady_clock::now();
  SolveOutcome out;

  Vec z = initial_point(prob, net, warm);
  Vec grad(prob.nz()), h0;
  constexpr double kMuCap = 1e10;
  double prev_worst = std::numeric_limits<double>::infinity();
  int stalled = 0;

  for (int outer = 0; outer < cfg.max_outer; ++outer) {
    out.outer_iters = outer + 1;
    // Refresh flows/residuals at the current point for the preconditioner.
    prob.eval(z, grad, cfg.violation);
    prob.curvature_diag(z, cfg.violation, h0);

    BoxLbfgsOptions lopts;
    lopts.max_iters = cfg.max_inner;
    lopts.h0_diag = &h0;
    // The inner solve must resolve steps well below feas_tol, otherwise the
    // multiplier updates chase residuals the inner solver never realized.
    lopts.grad_tol = std::max(std::min(cfg.opt_tol, cfg.feas_tol) * 1e-2,
                              1e-4 * std::pow(0.1, outer));
    auto fn = [&prob, &cfg](const Vec& x, Vec& g) {
      return prob.eval(x, g, cfg.violation);
    };
    BoxLbfgsResult ires = box_lbfgs_minimize(fn, z, prob.lo, prob.hi, lopts);
    out.inner_iters += ires.iters;
    bool stationary = ires.converged || ires.projected_grad_norm <= cfg.opt_tol;

    OperatingPoint op = prob.unpack(z);
    pf::ViolationReport rep = pf::violation_report(net, load, op, cfg.violation);
    out.worst_violation = rep.worst();

    if (out.worst_violation <= cfg.feas_tol && stationary) {
      out.status = SolveStatus::OptimalLocal;
      out.solution = std::move(op);
      break;
    }

    // First-order multiplier update (flows/residuals are current from the
    // last inner evaluation); grow the penalty when feasibility stops
    // improving fast enough and is not yet at tolerance.
    prob.eval(z, grad, cfg.violation);
    prob.update_multipliers(cfg.violation);
    prob.update_angle_multipliers(z);
    if (out.worst_violation > cfg.feas_tol && out.worst_violation > 0.25 * prev_worst) {
      prob.mu = std::min(prob.mu * cfg.penalty_growth, kMuCap);
      if (prob.mu >= kMuCap) ++stalled;
    }
    if (out.worst_violation >= prev_worst * 0.999 && prob.mu >= kMuCap) ++stalled;
    prev_worst = out.worst_violation;
    if (stalled >= 5) break;  // no further progress possible
  }

  if (out.status != SolveStatus::OptimalLocal) {
    out.status = out.worst_violation > 1e-4 ? SolveStatus::Infeasible
                                            : SolveStatus::MaxIterations;
  } else {
    out.objective = prob.loadflow ? [&] {
      double obj = 0.0;
      const OperatingPoint& op = *out.solution;
      for (int g = 0; g < prob.m; ++g) {
        double d = op.pg[g] - prob.target_pg[g];
        obj += d * d;
      }
      for (int i = 0; i < prob.n; ++i) {
        double d = op.v[i] - prob.target_v[i];
        obj += d * d;
      }
      return obj;
    }()
                                  : pf::dispatch_cost(net, out.solution->pg);
  }
  out.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

inline double acopf_cost_scale(const Network& net) {
  double s = 1.0;
  for (const grid::Generator& g : net.generators) {
    double marginal =
        std::abs(2.0 * g.c2 * net.base_mva * net.base_mva * g.p_max + g.c1 * net.base_mva);
    s = std::max(s, marginal);
  }
  return s;
}

}  // namespace detail

/// Solves Model 1 (AC-OPF) for one load snapshot. Deterministic for identical
/// inputs, config, and warm start.
inline SolveOutcome solve_acopf(const Network& net, const LoadPoint& load,
                                const SolverConfig& cfg = {},
                                const std::optional<OperatingPoint>& warm = std::nullopt) {
  detail::AlProblem prob(net, load, cfg);
  prob.loadflow = false;
  prob.cost_scale = detail::acopf_cost_scale(net);
  return detail::run_al(prob, net, load, cfg, warm);
}

/// Target setpoint for the load-flow projection (Model 2).
struct SetpointTarget {
  Vec pg;  // per generator, p.u.
  Vec v;   // per bus, p.u.
};

/// Solves Model 2: finds the AC-feasible point minimizing
/// ||pg - target.pg||^2 + ||v - target.v||^2 subject to the full constraint
/// set. The outcome's objective is that squared distance.
inline SolveOutcome solve_loadflow(const Network& net, const LoadPoint& load,
                                   const SetpointTarget& target,
                                   const SolverConfig& cfg = {}) {
  detail::AlProblem prob(net, load, cfg);
  prob.loadflow = true;
  prob.target_pg = target.pg;
  prob.target_v = target.v;

  // Start from the target itself, projected into bounds.
  OperatingPoint start;
  start.v = target.v;
  start.theta.assign(net.n_buses(), 0.0);
  start.pg = target.pg;
  start.qg.assign(net.n_gens(), 0.0);
  return detail::run_al(prob, net, load, cfg, start);
}

}  // namespace gridlearn::opt
