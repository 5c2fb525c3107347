#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace gridlearn {

struct GridlearnError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Syntax-level failure while reading an input file; carries a location.
struct ParseError : GridlearnError {
  ParseError(const std::string& msg, int line, int col)
      : GridlearnError("parse error at line " + std::to_string(line) + ", col " +
                       std::to_string(col) + ": " + msg),
        line(line),
        col(col) {}
  int line;
  int col;
};

/// Semantically invalid case data (unknown bus, no reference, disconnected...).
struct CaseError : GridlearnError {
  using GridlearnError::GridlearnError;
};

namespace grid {

inline constexpr double kUnlimited = std::numeric_limits<double>::infinity();

struct Bus {
  int id = 0;           // dense internal index 0..n-1
  double v_min = 0.94;  // p.u.
  double v_max = 1.06;  // p.u.
  double base_kv = 100.0;
  bool is_reference = false;
};

struct Generator {
  int bus = 0;
  double p_min = 0.0, p_max = 0.0;  // p.u.
  double q_min = 0.0, q_max = 0.0;  // p.u.
  // cost(P) = c2 P^2 + c1 P + c0 with P in MW, result in $/h
  double c2 = 0.0, c1 = 0.0, c0 = 0.0;
};

struct Branch {
  int from_bus = 0, to_bus = 0;
  double g = 0.0, b = 0.0;          // series admittance, p.u.
  double s_max = kUnlimited;        // apparent-power limit, p.u.; inf = none
  double theta_delta = M_PI;        // |theta_i - theta_j| bound, rad
};

struct Load {
  int bus = 0;
  double p0 = 0.0, q0 = 0.0;  // nominal demand, p.u.
};

struct Diagnostic {
  std::string code;
  std::string message;
};

// Immutable per-unit network. Construct via Network::build (which indexes the
// topology) and treat as read-only afterwards; concurrent reads are safe.
struct Network {
  std::string name = "case";
  double base_mva = 100.0;
  std::vector<Bus> buses;
  std::vector<Generator> generators;
  std::vector<Branch> branches;
  std::vector<Load> loads;
  std::vector<int> original_bus_id;  // internal index -> source-file bus id

  // Derived topology, filled by build().
  std::vector<std::vector<int>> gens_at_bus;
  std::vector<std::vector<int>> loads_at_bus;
  // Directed flow indices leaving each bus; branch k owns entries 2k (from->to)
  // and 2k+1 (to->from).
  std::vector<std::vector<int>> out_edges;

  int n_buses() const { return static_cast<int>(buses.size()); }
  int n_gens() const { return static_cast<int>(generators.size()); }
  int n_branches() const { return static_cast<int>(branches.size()); }
  int n_loads() const { return static_cast<int>(loads.size()); }

  int reference_bus() const {
    for (const Bus& b : buses)
      if (b.is_reference) return b.id;
    return -1;
  }

  static Network build(Network net) {
    net.index_topology();
    std::vector<Diagnostic> diags = validate(net);
    if (!diags.empty()) {
      std::string msg = "invalid network:";
      for (const Diagnostic& d : diags) msg += "\n  [" + d.code + "] " + d.message;
      throw CaseError(msg);
    }
    return net;
  }

  void index_topology() {
    const int n = n_buses();
    gens_at_bus.assign(n, {});
    loads_at_bus.assign(n, {});
    out_edges.assign(n, {});
    for (int g = 0; g < n_gens(); ++g) {
      int b = generators[g].bus;
      if (b >= 0 && b < n) gens_at_bus[b].push_back(g);
    }
    for (int l = 0; l < n_loads(); ++l) {
      int b = loads[l].bus;
      if (b >= 0 && b < n) loads_at_bus[b].push_back(l);
    }
    for (int k = 0; k < n_branches(); ++k) {
      const Branch& br = branches[k];
      if (br.from_bus >= 0 && br.from_bus < n) out_edges[br.from_bus].push_back(2 * k);
      if (br.to_bus >= 0 && br.to_bus < n) out_edges[br.to_bus].push_back(2 * k + 1);
    }
  }

  /// All invariant breaches; empty iff the network is valid.
  static std::vector<Diagnostic> validate(const Network& net) {
    std::vector<Diagnostic> out;
    auto add = [&out](std::string code, std::string msg) {
      out.push_back({std::move(code), std::move(msg)});
    };
    const int n = net.n_buses();
    if (!(net.base_mva > 0.0))
      add("nonpositive_base", "base_mva must be > 0, got " + std::to_string(net.base_mva));
    if (n == 0) add("empty", "network has no buses");

    int n_ref = 0;
    for (int i = 0; i < n; ++i) {
      const Bus& b = net.buses[i];
      if (b.is_reference) ++n_ref;
      if (!(b.v_min > 0.0) || !(b.v_min <= b.v_max))
        add("bad_voltage_bounds", "bus " + std::to_string(src_id(net, i)) +
                                      ": need 0 < v_min <= v_max, got [" +
                                      std::to_string(b.v_min) + ", " +
                                      std::to_string(b.v_max) + "]");
      if (!(b.base_kv > 0.0))
        add("bad_base_kv", "bus " + std::to_string(src_id(net, i)) + ": base_kv must be > 0");
    }
    if (n_ref == 0) add("no_reference", "no reference bus (bus type 3)");
    if (n_ref > 1) add("multiple_reference", std::to_string(n_ref) + " reference buses");

    for (int g = 0; g < net.n_gens(); ++g) {
      const Generator& gen = net.generators[g];
      if (gen.bus < 0 || gen.bus >= n)
        add("unknown_bus", "generator " + std::to_string(g) + " references unknown bus");
      if (gen.p_min > gen.p_max || gen.q_min > gen.q_max)
        add("bad_gen_bounds", "generator " + std::to_string(g) + ": empty bound interval");
      if (gen.c2 < 0.0)
        add("negative_quadratic_cost", "generator " + std::to_string(g) + ": c2 < 0");
    }
    for (int k = 0; k < net.n_branches(); ++k) {
      const Branch& br = net.branches[k];
      if (br.from_bus < 0 || br.from_bus >= n || br.to_bus < 0 || br.to_bus >= n)
        add("unknown_bus", "branch " + std::to_string(k) + " references unknown bus");
      else if (br.from_bus == br.to_bus)
        add("self_loop", "branch " + std::to_string(k) + " connects a bus to itself");
      if (!(br.s_max > 0.0))
        add("bad_flow_limit", "branch " + std::to_string(k) + ": s_max must be > 0 or unlimited");
      if (!(br.theta_delta > 0.0))
        add("bad_angle_limit", "branch " + std::to_string(k) + ": theta_delta must be > 0");
    }
    for (int l = 0; l < net.n_loads(); ++l) {
      const Load& ld = net.loads[l];
      if (ld.bus < 0 || ld.bus >= n)
        add("unknown_bus", "load " + std::to_string(l) + " references unknown bus");
      if (ld.p0 < 0.0)
        add("negative_load", "load " + std::to_string(l) + ": p0 must be >= 0");
    }

    if (n > 0 && !connected(net)) add("disconnected", "network graph is not connected");
    return out;
  }

 private:
  static int src_id(const Network& net, int internal) {
    return internal < static_cast<int>(net.original_bus_id.size())
               ? net.original_bus_id[internal]
               : internal;
  }

  static bool connected(const Network& net) {
    const int n = net.n_buses();
    if (n == 0) return true;
    std::vector<std::vector<int>> adj(n);
    for (const Branch& br : net.branches) {
      if (br.from_bus < 0 || br.from_bus >= n || br.to_bus < 0 || br.to_bus >= n) continue;
      adj[br.from_bus].push_back(br.to_bus);
      adj[br.to_bus].push_back(br.from_bus);
    }
    std::vector<char> seen(n, 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    int count = 1;
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      for (int v : adj[u])
        if (!seen[v]) {
          seen[v] = 1;
          ++count;
          stack.push_back(v);
        }
    }
    return count == n;
  }
};

}  // namespace grid
}  // namespace gridlearn
