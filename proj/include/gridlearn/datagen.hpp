#pragma once

#include <atomic>
#include <cmath>
#include <thread>

#include "gridlearn/acopf.hpp"
#include "gridlearn/dataset.hpp"
#include "gridlearn/rng.hpp"

namespace gridlearn::data {

struct GenConfig {
  int n_points = 2000;  // target dataset size N; the ramp yields N+1 candidates
  std::uint64_t seed = 0;
  double lb_low = 0.8, lb_high = 0.9;  // lower-bound multiplier interval
  double ub_low = 1.1, ub_high = 1.2;  // upper-bound multiplier interval
  double noise_scale = 1.0;            // scales the per-load noise half-width
  int jobs = 1;

  void check() const {
    if (n_points < 1) throw GridlearnError("n_points must be >= 1");
    if (!(0.0 < lb_low && lb_low <= lb_high && lb_high < ub_low && ub_low <= ub_high))
      throw GridlearnError("multiplier intervals must satisfy 0 < lb <= ub ranges");
    if (noise_scale < 0.0) throw GridlearnError("noise_scale must be >= 0");
  }
};

/// Per-load ramp bounds, as multipliers on the nominal load so active and
/// reactive demand scale together (fixed power factor).
struct LoadBounds {
  std::vector<double> lb, ub;
};

/// Draws the per-load lower/upper multipliers; one draw per load, applied to
/// both p0 and q0.
inline LoadBounds sample_bounds(const grid::Network& net, const GenConfig& cfg,
                                Rng& rng) {
  if (net.n_loads() < 1) throw GridlearnError("network has no loads");
  LoadBounds b;
  b.lb.resize(net.n_loads());
  b.ub.resize(net.n_loads());
  for (int l = 0; l < net.n_loads(); ++l) {
    b.lb[l] = rng.uniform(cfg.lb_low, cfg.lb_high);
    b.ub[l] = rng.uniform(cfg.ub_low, cfg.ub_high);
  }
  return b;
}

/// One load snapshot at ramp position c: interpolate the multipliers, then
/// apply per-load multiplicative noise with half-width
/// noise_scale * (ub - lb) / (100 N).
inline LoadPoint snapshot(const grid::Network& net, const LoadBounds& bounds,
                          double c, const GenConfig& cfg, Rng& rng) {
  LoadPoint lp;
  lp.p.resize(net.n_loads());
  lp.q.resize(net.n_loads());
  for (int l = 0; l < net.n_loads(); ++l) {
    double mult = (1.0 - c) * bounds.lb[l] + c * bounds.ub[l];
    double hw = cfg.noise_scale * (bounds.ub[l] - bounds.lb[l]) / (100.0 * cfg.n_points);
    double xi = rng.uniform(1.0 - hw, 1.0 + hw);
    lp.p[l] = xi * mult * net.loads[l].p0;
    lp.q[l] = xi * mult * net.loads[l].q0;
  }
  return lp;
}

struct SnapshotRecord {
  int index = 0;
  double c = 0.0;
  opt::SolveStatus status = opt::SolveStatus::Infeasible;
  double solve_seconds = 0.0;
};

struct GenResult {
  Dataset dataset;
  std::vector<SnapshotRecord> provenance;  // all N+1 candidates, in index order
  int n_feasible = 0;
  int n_discarded = 0;
  double total_solve_seconds = 0.0;
};

/// Runs the load-ramp generation loop: candidates at c = 0, 1/N, ..., 1, one
/// AC-OPF solve each, infeasible snapshots discarded (not replaced). Snapshot
/// RNG streams are derived from (seed, index), so serial and parallel runs
/// produce identical datasets.
inline GenResult generate(const grid::Network& net, const GenConfig& cfg,
                          const opt::SolverConfig& solver) {
  cfg.check();
  Rng bounds_rng = Rng::stream(cfg.seed, "datagen-bounds");
  LoadBounds bounds = sample_bounds(net, cfg, bounds_rng);

  const int n_candidates = cfg.n_points + 1;
  std::vector<LoadPoint> loads(n_candidates);
  for (int k = 0; k < n_candidates; ++k) {
    Rng rng = Rng::stream(cfg.seed, "datagen-noise", static_cast<std::uint64_t>(k));
    loads[k] = snapshot(net, bounds, static_cast<double>(k) / cfg.n_points, cfg, rng);
  }

  std::vector<opt::SolveOutcome> outcomes(n_candidates);
  const int jobs = std::max(1, cfg.jobs);
  std::atomic<int> next{0};
  auto worker = [&] {
    while (true) {
      int k = next.fetch_add(1);
      if (k >= n_candidates) break;
      outcomes[k] = opt::solve_acopf(net, loads[k], solver);
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(jobs);
    for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  GenResult res;
  res.dataset.case_id = net.name;
  res.dataset.case_hash = grid::case_hash(net);
  res.dataset.feas_tol = solver.feas_tol;
  for (int k = 0; k < n_candidates; ++k) {
    const opt::SolveOutcome& out = outcomes[k];
    double c = static_cast<double>(k) / cfg.n_points;
    res.provenance.push_back({k, c, out.status, out.wall_seconds});
    res.total_solve_seconds += out.wall_seconds;
    if (out.status == opt::SolveStatus::OptimalLocal) {
      ++res.n_feasible;
      res.dataset.points.push_back(
          {loads[k], *out.solution, out.objective, c, k, opt::to_string(out.status)});
    } else {
      ++res.n_discarded;
    }
  }
  if (res.n_feasible < 2)
    throw DataError("generation produced " + std::to_string(res.n_feasible) +
                    " feasible point(s); at least 2 are required for a split");
  return res;
}

/// Seed-reproducible random partition; the test side takes
/// max(1, floor((1 - ratio) * size)) points.
inline std::pair<Dataset, Dataset> split(const Dataset& ds, double ratio,
                                         std::uint64_t seed) {
  if (!(0.0 < ratio && ratio < 1.0)) throw GridlearnError("split ratio must be in (0,1)");
  if (ds.size() < 2) throw GridlearnError("need at least 2 points to split");
  std::vector<int> idx(ds.points.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
  Rng rng = Rng::stream(seed, "split");
  rng.shuffle(idx);
  int n_test = std::max(1, static_cast<int>(std::floor((1.0 - ratio) * ds.size())));
  Dataset train{ds.case_id, ds.case_hash, ds.feas_tol, {}};
  Dataset test{ds.case_id, ds.case_hash, ds.feas_tol, {}};
  for (int i = 0; i < ds.size(); ++i) {
    (i < n_test ? test : train).points.push_back(ds.points[idx[i]]);
  }
  return {std::move(train), std::move(test)};
}

/// Sidecar manifest describing a generation run; deliberately free of wall
/// times so repeated runs are byte identical.
inline nlohmann::json manifest_json(const grid::Network& net, const GenConfig& cfg,
                                    const opt::SolverConfig& solver,
                                    const GenResult& res) {
  nlohmann::json prov = nlohmann::json::array();
  for (const SnapshotRecord& r : res.provenance)
    prov.push_back({{"index", r.index}, {"c", r.c}, {"status", opt::to_string(r.status)}});
  return nlohmann::json{
      {"schema_version", kDatasetSchemaVersion},
      {"case_id", net.name},
      {"case_hash", grid::case_hash(net)},
      {"gen_config",
       {{"n_points", cfg.n_points},
        {"seed", cfg.seed},
        {"lb_range", {cfg.lb_low, cfg.lb_high}},
        {"ub_range", {cfg.ub_low, cfg.ub_high}},
        {"noise_scale", cfg.noise_scale}}},
      {"solver_config",
       {{"feas_tol", solver.feas_tol},
        {"opt_tol", solver.opt_tol},
        {"max_outer", solver.max_outer},
        {"max_inner", solver.max_inner},
        {"penalty_init", solver.penalty_init},
        {"penalty_growth", solver.penalty_growth},
        {"thermal_squared", solver.violation.thermal_squared},
        {"tau_sat", solver.violation.tau_sat}}},
      {"n_candidates", static_cast<int>(res.provenance.size())},
      {"n_feasible", res.n_feasible},
      {"n_discarded", res.n_discarded},
      {"provenance", prov}};
}

}  // namespace gridlearn::data
