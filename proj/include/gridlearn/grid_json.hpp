#pragma once

#include <string>

#include <json.hpp>

#include "gridlearn/grid.hpp"
#include "gridlearn/rng.hpp"

namespace gridlearn::grid {

inline constexpr int kNetworkSchemaVersion = 1;

/// Canonical JSON form of a Network (schema versioned; field names match the
/// domain types). nlohmann::json sorts keys, so the dump is canonical and
/// doubles round-trip exactly.
inline nlohmann::json network_to_json(const Network& net) {
  nlohmann::json j;
  j["schema_version"] = kNetworkSchemaVersion;
  j["name"] = net.name;
  j["base_mva"] = net.base_mva;
  j["original_bus_id"] = net.original_bus_id;
  auto& buses = j["buses"] = nlohmann::json::array();
  for (const Bus& b : net.buses)
    buses.push_back({{"id", b.id},
                     {"v_min", b.v_min},
                     {"v_max", b.v_max},
                     {"base_kv", b.base_kv},
                     {"is_reference", b.is_reference}});
  auto& gens = j["generators"] = nlohmann::json::array();
  for (const Generator& g : net.generators)
    gens.push_back({{"bus", g.bus},
                    {"p_min", g.p_min},
                    {"p_max", g.p_max},
                    {"q_min", g.q_min},
                    {"q_max", g.q_max},
                    {"cost", {g.c2, g.c1, g.c0}}});
  auto& brs = j["branches"] = nlohmann::json::array();
  for (const Branch& br : net.branches) {
    nlohmann::json jb = {{"from_bus", br.from_bus},
                         {"to_bus", br.to_bus},
                         {"g", br.g},
                         {"b", br.b},
                         {"theta_delta", br.theta_delta}};
    if (std::isfinite(br.s_max)) jb["s_max"] = br.s_max;  // absent = unlimited
    brs.push_back(jb);
  }
  auto& loads = j["loads"] = nlohmann::json::array();
  for (const Load& l : net.loads)
    loads.push_back({{"bus", l.bus}, {"p0", l.p0}, {"q0", l.q0}});
  return j;
}

inline Network network_from_json(const nlohmann::json& j) {
  if (j.value("schema_version", -1) != kNetworkSchemaVersion)
    throw CaseError("unsupported network schema_version");
  Network net;
  net.name = j.value("name", "case");
  net.base_mva = j.at("base_mva").get<double>();
  net.original_bus_id = j.value("original_bus_id", std::vector<int>{});
  for (const auto& jb : j.at("buses")) {
    Bus b;
    b.id = jb.at("id").get<int>();
    b.v_min = jb.at("v_min").get<double>();
    b.v_max = jb.at("v_max").get<double>();
    b.base_kv = jb.at("base_kv").get<double>();
    b.is_reference = jb.at("is_reference").get<bool>();
    net.buses.push_back(b);
  }
  for (const auto& jg : j.at("generators")) {
    Generator g;
    g.bus = jg.at("bus").get<int>();
    g.p_min = jg.at("p_min").get<double>();
    g.p_max = jg.at("p_max").get<double>();
    g.q_min = jg.at("q_min").get<double>();
    g.q_max = jg.at("q_max").get<double>();
    g.c2 = jg.at("cost")[0].get<double>();
    g.c1 = jg.at("cost")[1].get<double>();
    g.c0 = jg.at("cost")[2].get<double>();
    net.generators.push_back(g);
  }
  for (const auto& jb : j.at("branches")) {
    Branch br;
    br.from_bus = jb.at("from_bus").get<int>();
    br.to_bus = jb.at("to_bus").get<int>();
    br.g = jb.at("g").get<double>();
    br.b = jb.at("b").get<double>();
    br.theta_delta = jb.at("theta_delta").get<double>();
    br.s_max = jb.contains("s_max") ? jb.at("s_max").get<double>() : kUnlimited;
    net.branches.push_back(br);
  }
  for (const auto& jl : j.at("loads"))
    net.loads.push_back({jl.at("bus").get<int>(), jl.at("p0").get<double>(),
                         jl.at("q0").get<double>()});
  return Network::build(std::move(net));
}

/// Stable content hash over the canonical serialization (name excluded, so a
/// renamed copy of the same grid hashes identically).
inline std::string case_hash(const Network& net) {
  nlohmann::json j = network_to_json(net);
  j.erase("name");
  std::uint64_t h = fnv1a64(j.dump());
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

}  // namespace gridlearn::grid
