#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "gridlearn/powerflow.hpp"

namespace gridlearn::pf {

// Constraint families of the AC-OPF model: voltage bounds, angle-difference
// bounds, active/reactive dispatch bounds, thermal line limits, and the two
// Kirchhoff balance equalities. Ohm's-law families are structurally satisfied
// whenever flows are derived from (v, theta) and are therefore not tracked.
enum class Family : int { V2a = 0, Ang2b, Pg3a, Qg3b, Thermal4, BalP6a, BalQ6b };
inline constexpr int kNumFamilies = 7;

inline const char* family_name(Family f) {
  static const char* names[kNumFamilies] = {"2a", "2b", "3a", "3b", "4", "6a", "6b"};
  return names[static_cast<int>(f)];
}

inline Family family_from_name(const std::string& s) {
  for (int i = 0; i < kNumFamilies; ++i)
    if (s == family_name(static_cast<Family>(i))) return static_cast<Family>(i);
  throw GridlearnError("unknown constraint family '" + s + "'");
}

struct ViolationOptions {
  /// Tolerance under which a constraint counts as satisfied.
  double tau_sat = 1e-6;
  /// Thermal limit reading: true compares pf^2+qf^2 against s_max^2 (MVA
  /// rating squared); false takes the limit literally as pf^2+qf^2 <= s_max.
  bool thermal_squared = true;
};

/// Violation degree of an inequality constraint with satisfiability degree
/// sigma (sigma <= 0 means satisfied).
inline double violation_ineq(double sigma) { return sigma > 0.0 ? sigma : 0.0; }

/// Violation degree of an equality constraint with residual sigma.
inline double violation_eq(double sigma) { return std::abs(sigma); }

/// Two-sided bound violation: max(0, lo - x) + max(0, x - hi).
inline double violation_bounds(double x, double lo, double hi) {
  return violation_ineq(lo - x) + violation_ineq(x - hi);
}

struct FamilyStats {
  double mean_violation = 0.0;  // averaged over the family's constraint count
  double max_violation = 0.0;
  int n_satisfied = 0;
  int n_total = 0;
};

struct ViolationReport {
  std::array<FamilyStats, kNumFamilies> family;
  /// Per-constraint satisfaction flags, indexed like the family's constraints.
  std::array<std::vector<std::uint8_t>, kNumFamilies> satisfied;

  const FamilyStats& of(Family f) const { return family[static_cast<int>(f)]; }

  /// Largest single-constraint violation across all families.
  double worst() const {
    double w = 0.0;
    for (const FamilyStats& fs : family) w = std::max(w, fs.max_violation);
    return w;
  }

  /// True when every constraint in every family is within `tol`.
  bool feasible(double tol) const { return worst() <= tol; }
};

namespace detail {
struct FamilyAccum {
  FamilyStats* stats;
  std::vector<std::uint8_t>* flags;
  double tau;
  void add(double violation) {
    stats->mean_violation += violation;
    stats->max_violation = std::max(stats->max_violation, violation);
    bool ok = violation <= tau;
    stats->n_satisfied += ok ? 1 : 0;
    ++stats->n_total;
    flags->push_back(ok ? 1 : 0);
  }
  void finish() {
    if (stats->n_total > 0) stats->mean_violation /= stats->n_total;
  }
};
}  // namespace detail

/// Evaluates every constraint family of the model at an operating point.
/// Flows are derived from (v, theta) via Ohm's law. Each family's mean is
/// taken over its own constraint count; thermal constraints are counted per
/// branch direction and only for branches with a finite limit.
inline ViolationReport violation_report(const Network& net, const LoadPoint& load,
                                        const OperatingPoint& op,
                                        const ViolationOptions& opts = {}) {
  ViolationReport rep;
  std::array<detail::FamilyAccum, kNumFamilies> acc;
  for (int i = 0; i < kNumFamilies; ++i)
    acc[i] = {&rep.family[i], &rep.satisfied[i], opts.tau_sat};

  for (int i = 0; i < net.n_buses(); ++i)
    acc[static_cast<int>(Family::V2a)].add(
        violation_bounds(op.v[i], net.buses[i].v_min, net.buses[i].v_max));

  for (int k = 0; k < net.n_branches(); ++k) {
    const grid::Branch& br = net.branches[k];
    double d = op.theta[br.from_bus] - op.theta[br.to_bus];
    acc[static_cast<int>(Family::Ang2b)].add(
        violation_bounds(d, -br.theta_delta, br.theta_delta));
  }

  for (int g = 0; g < net.n_gens(); ++g) {
    const grid::Generator& gen = net.generators[g];
    acc[static_cast<int>(Family::Pg3a)].add(
        violation_bounds(op.pg[g], gen.p_min, gen.p_max));
    acc[static_cast<int>(Family::Qg3b)].add(
        violation_bounds(op.qg[g], gen.q_min, gen.q_max));
  }

  FlowSet flows = all_flows(net, op);
  for (int k = 0; k < net.n_branches(); ++k) {
    const grid::Branch& br = net.branches[k];
    if (!std::isfinite(br.s_max)) continue;
    double limit = opts.thermal_squared ? br.s_max * br.s_max : br.s_max;
    for (int d = 0; d < 2; ++d) {
      double p = flows.pf[2 * k + d], q = flows.qf[2 * k + d];
      acc[static_cast<int>(Family::Thermal4)].add(violation_ineq(p * p + q * q - limit));
    }
  }

  Vec rp, rq;
  balance_residuals(net, load, op, flows, rp, rq);
  for (int i = 0; i < net.n_buses(); ++i) {
    acc[static_cast<int>(Family::BalP6a)].add(violation_eq(rp[i]));
    acc[static_cast<int>(Family::BalQ6b)].add(violation_eq(rq[i]));
  }

  for (auto& a : acc) a.finish();
  return rep;
}

inline void write_violation_csv_header(std::ostream& os) {
  os << "instance_id,family,mean_violation,n_satisfied,n_total\n";
}

/// One CSV row per (instance, family).
inline void write_violation_csv_rows(std::ostream& os, const std::string& instance_id,
                                     const ViolationReport& rep) {
  for (int i = 0; i < kNumFamilies; ++i) {
    const FamilyStats& fs = rep.family[i];
    os << instance_id << ',' << family_name(static_cast<Family>(i)) << ','
       << fs.mean_violation << ',' << fs.n_satisfied << ',' << fs.n_total << '\n';
  }
}

}  // namespace gridlearn::pf
