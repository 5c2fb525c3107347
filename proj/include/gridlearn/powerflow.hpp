#pragma once

#include <cmath>
#include <vector>

#include "gridlearn/grid.hpp"

namespace gridlearn::pf {

using Vec = std::vector<double>;
using grid::Network;

/// One demand snapshot: active/reactive power per Load entry, p.u.
struct LoadPoint {
  Vec p, q;
};

/// Full operating point: voltage magnitudes/angles per bus, dispatch per
/// generator, all p.u./rad.
struct OperatingPoint {
  Vec v, theta, pg, qg;
};

/// Directed branch flows: entries 2k (from->to) and 2k+1 (to->from) for
/// branch k.
struct FlowSet {
  Vec pf, qf;
};

struct LineFlow {
  double p, q;
};

/// Ohm's law for one directed branch end:
///   p = g vi^2 - vi vj (b sin d + g cos d),  d = ti - tj
///   q = -b vi^2 - vi vj (g sin d - b cos d)
inline LineFlow line_flow(double vi, double vj, double ti, double tj, double g,
                          double b) {
  const double d = ti - tj;
  const double s = std::sin(d), c = std::cos(d);
  return {g * vi * vi - vi * vj * (b * s + g * c),
          -b * vi * vi - vi * vj * (g * s - b * c)};
}

/// Partials of line_flow w.r.t. (vi, vj, d). Shared by the solver and the
/// training-loss backward pass.
struct LineFlowGrad {
  double dp_dvi, dp_dvj, dp_dd;
  double dq_dvi, dq_dvj, dq_dd;
};

inline LineFlowGrad line_flow_grad(double vi, double vj, double ti, double tj,
                                   double g, double b) {
  const double d = ti - tj;
  const double s = std::sin(d), c = std::cos(d);
  const double bs_gc = b * s + g * c;
  const double gs_bc = g * s - b * c;
  return {2.0 * g * vi - vj * bs_gc,
          -vi * bs_gc,
          -vi * vj * (b * c - g * s),
          -2.0 * b * vi - vj * gs_bc,
          -vi * gs_bc,
          -vi * vj * (g * c + b * s)};
}

inline FlowSet all_flows(const Network& net, const OperatingPoint& op) {
  const int e = net.n_branches();
  FlowSet fs;
  fs.pf.resize(2 * e);
  fs.qf.resize(2 * e);
  for (int k = 0; k < e; ++k) {
    const grid::Branch& br = net.branches[k];
    LineFlow fwd = line_flow(op.v[br.from_bus], op.v[br.to_bus],
                             op.theta[br.from_bus], op.theta[br.to_bus], br.g, br.b);
    LineFlow rev = line_flow(op.v[br.to_bus], op.v[br.from_bus],
                             op.theta[br.to_bus], op.theta[br.from_bus], br.g, br.b);
    fs.pf[2 * k] = fwd.p;
    fs.qf[2 * k] = fwd.q;
    fs.pf[2 * k + 1] = rev.p;
    fs.qf[2 * k + 1] = rev.q;
  }
  return fs;
}

/// Per-bus total demand implied by a LoadPoint.
inline void bus_demand(const Network& net, const LoadPoint& load, Vec& pd, Vec& qd) {
  pd.assign(net.n_buses(), 0.0);
  qd.assign(net.n_buses(), 0.0);
  for (int l = 0; l < net.n_loads(); ++l) {
    pd[net.loads[l].bus] += load.p[l];
    qd[net.loads[l].bus] += load.q[l];
  }
}

/// Kirchhoff balance residuals, signed:
///   r_p[i] = sum_{g at i} pg - pd_i - sum_{(ij) in E} pf_ij
inline void balance_residuals(const Network& net, const LoadPoint& load,
                              const OperatingPoint& op, const FlowSet& flows,
                              Vec& rp, Vec& rq) {
  bus_demand(net, load, rp, rq);
  for (double& x : rp) x = -x;
  for (double& x : rq) x = -x;
  for (int g = 0; g < net.n_gens(); ++g) {
    rp[net.generators[g].bus] += op.pg[g];
    rq[net.generators[g].bus] += op.qg[g];
  }
  for (int k = 0; k < net.n_branches(); ++k) {
    const grid::Branch& br = net.branches[k];
    rp[br.from_bus] -= flows.pf[2 * k];
    rq[br.from_bus] -= flows.qf[2 * k];
    rp[br.to_bus] -= flows.pf[2 * k + 1];
    rq[br.to_bus] -= flows.qf[2 * k + 1];
  }
}

/// Total dispatch cost in $/h; pg is p.u. and converted to MW internally.
/// Constant terms c0 are always included (idle-but-committed units).
inline double dispatch_cost(const Network& net, const Vec& pg) {
  double total = 0.0;
  for (int g = 0; g < net.n_gens(); ++g) {
    const grid::Generator& gen = net.generators[g];
    const double P = pg[g] * net.base_mva;
    total += gen.c2 * P * P + gen.c1 * P + gen.c0;
  }
  return total;
}

}  // namespace gridlearn::pf
