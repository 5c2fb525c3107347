#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gridlearn/grid_json.hpp"
#include "gridlearn/violations.hpp"

namespace gridlearn::data {

using pf::LoadPoint;
using pf::OperatingPoint;

inline constexpr int kDatasetSchemaVersion = 1;

/// One labeled training example: a load snapshot and its AC-OPF solution.
struct DataPoint {
  LoadPoint load;
  OperatingPoint solution;
  double objective = 0.0;     // $/h
  double ramp_c = 0.0;        // position on the lb->ub load ramp, in [0, 1]
  int seed_index = 0;         // snapshot index within the generation run
  std::string solver_status = "optimal_local";
};

struct Dataset {
  std::string case_id;
  std::string case_hash;
  double feas_tol = 1e-6;  // tolerance the stored solutions are certified to
  std::vector<DataPoint> points;

  int size() const { return static_cast<int>(points.size()); }
};

struct DataError : GridlearnError {
  using GridlearnError::GridlearnError;
};

inline nlohmann::json record_to_json(const Dataset& ds, const DataPoint& p) {
  return nlohmann::json{{"schema_version", kDatasetSchemaVersion},
                        {"case_id", ds.case_id},
                        {"c", p.ramp_c},
                        {"load", {{"p", p.load.p}, {"q", p.load.q}}},
                        {"solution",
                         {{"v", p.solution.v},
                          {"theta", p.solution.theta},
                          {"pg", p.solution.pg},
                          {"qg", p.solution.qg}}},
                        {"objective", p.objective},
                        {"solver_status", p.solver_status},
                        {"seed_index", p.seed_index}};
}

/// JSON-lines dataset file, one record per DataPoint.
inline void save_jsonl(const Dataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write dataset file " + path);
  for (const DataPoint& p : ds.points) out << record_to_json(ds, p).dump() << '\n';
}

/// Loads and re-verifies a JSON-lines dataset against a network. Every record
/// must parse, match the network's dimensions and hash, and pass
/// violation_report with all family means within feas_tol; anything else is
/// rejected. This is also the import gate for externally solved datasets.
inline Dataset load_jsonl(const std::string& path, const grid::Network& net,
                          double feas_tol = 1e-6) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open dataset file " + path);
  Dataset ds;
  ds.case_hash = grid::case_hash(net);
  ds.feas_tol = feas_tol;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DataError("dataset line " + std::to_string(lineno) + ": " + e.what());
    }
    if (j.value("schema_version", -1) != kDatasetSchemaVersion)
      throw DataError("dataset line " + std::to_string(lineno) +
                      ": unsupported schema_version");
    DataPoint p;
    p.load.p = j.at("load").at("p").get<std::vector<double>>();
    p.load.q = j.at("load").at("q").get<std::vector<double>>();
    const auto& sol = j.at("solution");
    p.solution.v = sol.at("v").get<std::vector<double>>();
    p.solution.theta = sol.at("theta").get<std::vector<double>>();
    p.solution.pg = sol.at("pg").get<std::vector<double>>();
    p.solution.qg = sol.at("qg").get<std::vector<double>>();
    p.objective = j.at("objective").get<double>();
    p.ramp_c = j.at("c").get<double>();
    p.seed_index = j.at("seed_index").get<int>();
    p.solver_status = j.value("solver_status", "optimal_local");
    if (ds.case_id.empty()) ds.case_id = j.value("case_id", "");

    const bool dims_ok =
        static_cast<int>(p.load.p.size()) == net.n_loads() &&
        static_cast<int>(p.load.q.size()) == net.n_loads() &&
        static_cast<int>(p.solution.v.size()) == net.n_buses() &&
        static_cast<int>(p.solution.theta.size()) == net.n_buses() &&
        static_cast<int>(p.solution.pg.size()) == net.n_gens() &&
        static_cast<int>(p.solution.qg.size()) == net.n_gens();
    if (!dims_ok)
      throw DataError("dataset line " + std::to_string(lineno) +
                      ": dimensions do not match the network");

    pf::ViolationReport rep = pf::violation_report(net, p.load, p.solution);
    for (int f = 0; f < pf::kNumFamilies; ++f)
      if (rep.family[f].mean_violation > feas_tol)
        throw DataError("dataset line " + std::to_string(lineno) +
                        ": stored solution violates family " +
                        pf::family_name(static_cast<pf::Family>(f)) + " by " +
                        std::to_string(rep.family[f].mean_violation));
    ds.points.push_back(std::move(p));
  }
  return ds;
}

}  // namespace gridlearn::data
