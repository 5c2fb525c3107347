#include <cstdio>
#include <filesystem>

#include <gtest/gtest.h>

#include "gridlearn/datagen.hpp"
#include "support/test_grids.hpp"

using namespace gridlearn;
using data::Dataset;
using data::GenConfig;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

TEST(SampleBounds, MultipliersLandInConfiguredIntervals) {
  grid::Network net = fixtures::two_bus();
  GenConfig cfg;
  Rng rng = Rng::stream(1, "datagen-bounds");
  for (int rep = 0; rep < 200; ++rep) {
    data::LoadBounds b = data::sample_bounds(net, cfg, rng);
    ASSERT_EQ(b.lb.size(), 1u);
    EXPECT_GE(b.lb[0], 0.8);
    EXPECT_LT(b.lb[0], 0.9);
    EXPECT_GE(b.ub[0], 1.1);
    EXPECT_LT(b.ub[0], 1.2);
    EXPECT_LT(b.lb[0], b.ub[0]);
  }
}

TEST(SampleBounds, ZeroNominalLoadStaysZero) {
  grid::Network net = fixtures::two_bus();
  net.loads[0].p0 = 0.0;
  net.loads[0].q0 = 0.0;
  GenConfig cfg;
  cfg.n_points = 10;
  Rng brng = Rng::stream(3, "datagen-bounds");
  data::LoadBounds b = data::sample_bounds(net, cfg, brng);
  Rng nrng = Rng::stream(3, "datagen-noise", 0);
  pf::LoadPoint lp = data::snapshot(net, b, 0.5, cfg, nrng);
  EXPECT_DOUBLE_EQ(lp.p[0], 0.0);
  EXPECT_DOUBLE_EQ(lp.q[0], 0.0);
}

TEST(SampleBounds, SeedDeterminism) {
  grid::Network net = fixtures::synthetic_grid(20, 4, 12);
  GenConfig cfg;
  Rng r1 = Rng::stream(77, "datagen-bounds");
  Rng r2 = Rng::stream(77, "datagen-bounds");
  data::LoadBounds a = data::sample_bounds(net, cfg, r1);
  data::LoadBounds b = data::sample_bounds(net, cfg, r2);
  EXPECT_EQ(a.lb, b.lb);
  EXPECT_EQ(a.ub, b.ub);
}

TEST(Snapshot, EndpointsExactWithoutNoise) {
  grid::Network net = fixtures::two_bus();
  GenConfig cfg;
  cfg.noise_scale = 0.0;
  cfg.n_points = 100;
  data::LoadBounds b{{0.85}, {1.15}};
  Rng rng(0);
  pf::LoadPoint at0 = data::snapshot(net, b, 0.0, cfg, rng);
  pf::LoadPoint at1 = data::snapshot(net, b, 1.0, cfg, rng);
  EXPECT_DOUBLE_EQ(at0.p[0], 0.85 * net.loads[0].p0);
  EXPECT_DOUBLE_EQ(at1.p[0], 1.15 * net.loads[0].p0);
}

TEST(Snapshot, NoiseIntervalMatchesHandDerivation) {
  // lb = 0.8, ub = 1.2, N = 100, c = 0.5: multiplier 1.0 with noise
  // half-width (1.2 - 0.8) / (100 * 100) = 4e-5.
  grid::Network net = fixtures::two_bus();
  net.loads[0].p0 = 1.0;
  net.loads[0].q0 = 0.0;
  GenConfig cfg;
  cfg.n_points = 100;
  data::LoadBounds b{{0.8}, {1.2}};
  Rng rng(11);
  double lo = 2.0, hi = 0.0;
  for (int rep = 0; rep < 2000; ++rep) {
    pf::LoadPoint lp = data::snapshot(net, b, 0.5, cfg, rng);
    lo = std::min(lo, lp.p[0]);
    hi = std::max(hi, lp.p[0]);
    ASSERT_GE(lp.p[0], 1.0 * (1.0 - 4e-5));
    ASSERT_LE(lp.p[0], 1.0 * (1.0 + 4e-5));
  }
  EXPECT_LT(lo, 1.0 - 2e-5);  // the interval is actually exercised
  EXPECT_GT(hi, 1.0 + 2e-5);
}

TEST(Snapshot, MonotoneRampWithoutNoise) {
  grid::Network net = fixtures::synthetic_grid(12, 3, 7);
  GenConfig cfg;
  cfg.noise_scale = 0.0;
  cfg.n_points = 20;
  Rng brng = Rng::stream(5, "datagen-bounds");
  data::LoadBounds b = data::sample_bounds(net, cfg, brng);
  double prev = -1.0;
  for (int k = 0; k <= 20; ++k) {
    Rng rng(0);
    pf::LoadPoint lp = data::snapshot(net, b, k / 20.0, cfg, rng);
    double total = 0.0;
    for (double p : lp.p) total += p;
    EXPECT_GE(total, prev);
    prev = total;
  }
}

TEST(Generate, AllFeasibleYieldsNPlusOnePoints) {
  grid::Network net = fixtures::two_bus();
  GenConfig cfg;
  cfg.n_points = 8;
  cfg.seed = 3;
  data::GenResult res = data::generate(net, cfg, {});
  EXPECT_EQ(res.dataset.size(), 9);
  EXPECT_EQ(res.n_feasible, 9);
  EXPECT_EQ(res.n_discarded, 0);
  EXPECT_DOUBLE_EQ(res.dataset.points.front().ramp_c, 0.0);
  EXPECT_DOUBLE_EQ(res.dataset.points.back().ramp_c, 1.0);
}

TEST(Generate, InfeasibleSnapshotsDiscardedAndLogged) {
  grid::Network net = fixtures::two_bus();
  net.generators[0].p_max = 0.52;  // ramp top (~1.2 * 0.5) exceeds capacity
  net = grid::Network::build(std::move(net));
  GenConfig cfg;
  cfg.n_points = 12;
  cfg.seed = 9;
  data::GenResult res = data::generate(net, cfg, {});
  EXPECT_GT(res.n_discarded, 0);
  EXPECT_LT(res.dataset.size(), 13);
  EXPECT_EQ(res.n_feasible + res.n_discarded, 13);
  int prov_infeasible = 0;
  for (const auto& r : res.provenance)
    if (r.status != opt::SolveStatus::OptimalLocal) ++prov_infeasible;
  EXPECT_EQ(prov_infeasible, res.n_discarded);
}

TEST(Generate, HardErrorWhenFewerThanTwoFeasible) {
  grid::Network net = fixtures::two_bus();
  net.generators[0].p_max = 0.1;  // nothing on the ramp is feasible
  net = grid::Network::build(std::move(net));
  GenConfig cfg;
  cfg.n_points = 3;
  EXPECT_THROW(data::generate(net, cfg, {}), data::DataError);
}

TEST(Generate, ParallelMatchesSerialByteForByte) {
  grid::Network net = fixtures::two_bus_two_gen();
  GenConfig serial;
  serial.n_points = 10;
  serial.seed = 21;
  serial.jobs = 1;
  GenConfig parallel = serial;
  parallel.jobs = 4;
  data::GenResult a = data::generate(net, serial, {});
  data::GenResult b = data::generate(net, parallel, {});
  std::string pa = temp_path("gl_serial.jsonl"), pb = temp_path("gl_parallel.jsonl");
  data::save_jsonl(a.dataset, pa);
  data::save_jsonl(b.dataset, pb);
  std::ifstream fa(pa), fb(pb);
  std::stringstream sa, sb;
  sa << fa.rdbuf();
  sb << fb.rdbuf();
  EXPECT_EQ(sa.str(), sb.str());
  EXPECT_FALSE(sa.str().empty());
  std::filesystem::remove(pa);
  std::filesystem::remove(pb);
}

TEST(Generate, EveryStoredPointReverifiesThroughViolationReport) {
  grid::Network net = fixtures::two_bus_two_gen();
  GenConfig cfg;
  cfg.n_points = 6;
  cfg.seed = 2;
  opt::SolverConfig solver;
  data::GenResult res = data::generate(net, cfg, solver);
  for (const auto& p : res.dataset.points) {
    pf::ViolationReport rep = pf::violation_report(net, p.load, p.solution);
    EXPECT_TRUE(rep.feasible(solver.feas_tol));
  }
}

TEST(DatasetIo, RoundTripAndCorruptRecordRejected) {
  grid::Network net = fixtures::two_bus_two_gen();
  GenConfig cfg;
  cfg.n_points = 5;
  cfg.seed = 4;
  data::GenResult res = data::generate(net, cfg, {});
  std::string path = temp_path("gl_ds.jsonl");
  data::save_jsonl(res.dataset, path);
  Dataset loaded = data::load_jsonl(path, net);
  ASSERT_EQ(loaded.size(), res.dataset.size());
  for (int i = 0; i < loaded.size(); ++i) {
    EXPECT_EQ(loaded.points[i].solution.v, res.dataset.points[i].solution.v);
    EXPECT_EQ(loaded.points[i].objective, res.dataset.points[i].objective);
  }

  // Corrupt one solution entry: the feasibility re-verification must reject.
  std::ifstream in(path);
  std::string first;
  std::getline(in, first);
  std::string rest((std::istreambuf_iterator<char>(in)), {});
  in.close();
  nlohmann::json j = nlohmann::json::parse(first);
  j["solution"]["v"][0] = j["solution"]["v"][0].get<double>() + 0.02;
  std::ofstream out(path, std::ios::binary);
  out << j.dump() << '\n' << rest;
  out.close();
  EXPECT_THROW(data::load_jsonl(path, net), data::DataError);
  std::filesystem::remove(path);
}

TEST(Split, SpecRoundingRule) {
  Dataset ds;
  ds.points.resize(2001);
  for (int i = 0; i < 2001; ++i) ds.points[i].seed_index = i;
  auto [train, test] = data::split(ds, 0.8, 1);
  EXPECT_EQ(train.size(), 1601);
  EXPECT_EQ(test.size(), 400);

  Dataset two;
  two.points.resize(2);
  auto [t1, t2] = data::split(two, 0.5, 1);
  EXPECT_EQ(t1.size(), 1);
  EXPECT_EQ(t2.size(), 1);
}

TEST(Split, SeedReproducibleAndPartitioning) {
  Dataset ds;
  ds.points.resize(50);
  for (int i = 0; i < 50; ++i) ds.points[i].seed_index = i;
  auto [a_train, a_test] = data::split(ds, 0.8, 123);
  auto [b_train, b_test] = data::split(ds, 0.8, 123);
  auto idx = [](const Dataset& d) {
    std::vector<int> v;
    for (const auto& p : d.points) v.push_back(p.seed_index);
    return v;
  };
  EXPECT_EQ(idx(a_train), idx(b_train));
  EXPECT_EQ(idx(a_test), idx(b_test));

  std::vector<int> all = idx(a_train);
  for (int i : idx(a_test)) all.push_back(i);
  std::sort(all.begin(), all.end());
  for (int i = 0; i < 50; ++i) EXPECT_EQ(all[i], i);

  auto [c_train, c_test] = data::split(ds, 0.8, 124);
  EXPECT_NE(idx(c_test), idx(a_test));
}

}  // namespace
