#include <cmath>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "gridlearn/grid.hpp"
#include "gridlearn/grid_json.hpp"
#include "gridlearn/matpower.hpp"
#include "support/test_grids.hpp"

using namespace gridlearn;
using grid::Network;

namespace {

const char* kMinimalCase = R"(function mpc = mini
mpc.version = '2';
mpc.baseMVA = 100;
mpc.bus = [
  1 3 0  0 0 0 1 1 0 100 1 1.06 0.94;
  2 1 50 10 0 0 1 1 0 100 1 1.06 0.94;
];
mpc.gen = [
  1 0 0 300 -300 1 100 1 332.4 0;
];
mpc.branch = [
  1 2 0 0.1 0 0 0 0 0 0 1 -360 360;
];
mpc.gencost = [
  2 0 0 3 0.01 30 100;
];
)";

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  EXPECT_TRUE(in.good()) << "cannot open " << path;
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TEST(MatpowerParser, MinimalTwoBusConversions) {
  Network net = grid::parse_case(kMinimalCase, "mini");
  ASSERT_EQ(net.n_buses(), 2);
  ASSERT_EQ(net.n_branches(), 1);
  ASSERT_EQ(net.n_gens(), 1);
  ASSERT_EQ(net.n_loads(), 1);

  // r = 0, x = 0.1: g = 0, b = -x/(r^2+x^2) = -10 (to double rounding; the
  // parser must match the formula's own double evaluation exactly).
  EXPECT_EQ(net.branches[0].g, 0.0);
  EXPECT_EQ(net.branches[0].b, -0.1 / (0.1 * 0.1));
  EXPECT_DOUBLE_EQ(net.branches[0].b, -10.0);

  // PMAX = 332.4 MW under baseMVA = 100 -> 3.324 p.u.
  EXPECT_DOUBLE_EQ(net.generators[0].p_max, 332.4 / 100.0);
  EXPECT_DOUBLE_EQ(net.loads[0].p0, 0.5);
  EXPECT_DOUBLE_EQ(net.loads[0].q0, 0.1);

  // Angle bounds: 360 degrees means unconstrained.
  EXPECT_DOUBLE_EQ(net.branches[0].theta_delta, M_PI);

  EXPECT_TRUE(net.buses[0].is_reference);
  EXPECT_FALSE(net.buses[1].is_reference);
  EXPECT_DOUBLE_EQ(net.generators[0].c2, 0.01);
  EXPECT_DOUBLE_EQ(net.generators[0].c1, 30.0);
  EXPECT_DOUBLE_EQ(net.generators[0].c0, 100.0);
}

TEST(MatpowerParser, PerUnitConversionExactToFormula) {
  // The parser's conversion must match g = r/(r^2+x^2), b = -x/(r^2+x^2)
  // bit for bit.
  std::string text(kMinimalCase);
  auto pos = text.find("1 2 0 0.1");
  ASSERT_NE(pos, std::string::npos);
  text.replace(pos, 9, "1 2 0.01938 0.05917");
  Network net = grid::parse_case(text);
  double r = 0.01938, x = 0.05917;
  double d = r * r + x * x;
  EXPECT_EQ(net.branches[0].g, r / d);
  EXPECT_EQ(net.branches[0].b, -x / d);
}

TEST(MatpowerParser, StatusZeroBranchDroppedAndDisconnects) {
  std::string text(kMinimalCase);
  auto pos = text.find("1 2 0 0.1 0 0 0 0 0 0 1");
  ASSERT_NE(pos, std::string::npos);
  std::string row = "1 2 0 0.1 0 0 0 0 0 0 0";  // status -> 0
  text.replace(pos, row.size(), row);
  // Dropping the only branch disconnects the two-bus graph.
  EXPECT_THROW({ grid::parse_case(text); }, CaseError);
  try {
    grid::parse_case(text);
  } catch (const CaseError& e) {
    EXPECT_NE(std::string(e.what()).find("disconnected"), std::string::npos);
  }
}

TEST(MatpowerParser, SyntaxErrorReportsLocation) {
  try {
    grid::parse_case("function mpc = x\nmpc.baseMVA = oops;\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line, 2);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(MatpowerParser, RejectsPiecewiseLinearCost) {
  std::string text(kMinimalCase);
  auto pos = text.find("2 0 0 3 0.01 30 100");
  text.replace(pos, 3, "1 0");  // model=1 keeps column count
  try {
    grid::parse_case(text);
    FAIL() << "expected CaseError";
  } catch (const CaseError& e) {
    EXPECT_NE(std::string(e.what()).find("piecewise"), std::string::npos);
  }
}

TEST(MatpowerParser, UnknownBusReference) {
  std::string text(kMinimalCase);
  auto pos = text.find("1 0 0 300");
  text.replace(pos, 1, "9");
  EXPECT_THROW(grid::parse_case(text), CaseError);
}

TEST(MatpowerParser, MissingReferenceBus) {
  std::string text(kMinimalCase);
  auto pos = text.find("1 3 0  0");
  text.replace(pos, 8, "1 2 0  0");
  EXPECT_THROW(grid::parse_case(text), CaseError);
}

TEST(MatpowerParser, WarnsOnDroppedChargingAndTaps) {
  std::vector<std::string> warnings;
  std::string text = read_file(std::string(CASES_DIR) + "/case14.m");
  Network net = grid::parse_case(text, "case14", &warnings);
  EXPECT_EQ(net.n_buses(), 14);
  EXPECT_EQ(net.n_branches(), 20);
  EXPECT_EQ(net.n_gens(), 5);
  EXPECT_EQ(net.n_loads(), 11);
  bool charging = false, tap = false, shunt = false, basekv = false;
  for (const std::string& w : warnings) {
    charging |= w.find("charging") != std::string::npos;
    tap |= w.find("tap") != std::string::npos;
    shunt |= w.find("shunt") != std::string::npos;
    basekv |= w.find("baseKV") != std::string::npos;
  }
  EXPECT_TRUE(charging);
  EXPECT_TRUE(tap);
  EXPECT_TRUE(shunt);
  EXPECT_TRUE(basekv);  // case14 carries no voltage bases
}

TEST(Validate, CleanNetworkHasNoDiagnostics) {
  EXPECT_TRUE(Network::validate(fixtures::two_bus()).empty());
}

TEST(Validate, ReversedVoltageBoundsFlagged) {
  Network net = fixtures::two_bus();
  net.buses[1].v_min = 1.1;
  net.buses[1].v_max = 0.9;
  auto diags = Network::validate(net);
  ASSERT_EQ(diags.size(), 1u);
  EXPECT_EQ(diags[0].code, "bad_voltage_bounds");
  EXPECT_NE(diags[0].message.find("2"), std::string::npos);  // original bus id
}

TEST(Validate, TwoReferenceBusesFlagged) {
  Network net = fixtures::two_bus();
  net.buses[1].is_reference = true;
  auto diags = Network::validate(net);
  ASSERT_EQ(diags.size(), 1u);
  EXPECT_EQ(diags[0].code, "multiple_reference");
}

TEST(NetworkJson, RoundTripIsExact) {
  Network net = grid::parse_case(read_file(std::string(CASES_DIR) + "/case14.m"), "case14");
  nlohmann::json j = grid::network_to_json(net);
  Network back = grid::network_from_json(j);
  EXPECT_EQ(grid::network_to_json(back).dump(), j.dump());
  EXPECT_EQ(grid::case_hash(net), grid::case_hash(back));
}

TEST(NetworkJson, HashIgnoresNameButNotData) {
  Network a = fixtures::two_bus();
  Network b = fixtures::two_bus();
  b.name = "renamed";
  EXPECT_EQ(grid::case_hash(a), grid::case_hash(b));
  b.loads[0].p0 += 1e-9;
  EXPECT_NE(grid::case_hash(a), grid::case_hash(b));
}

TEST(MatpowerRoundTrip, ParseSerializeParseIsIdempotent) {
  Network n1 = grid::parse_case(read_file(std::string(CASES_DIR) + "/case14.m"), "case14");
  Network n2 = grid::parse_case(grid::to_matpower(n1), "case14");
  Network n3 = grid::parse_case(grid::to_matpower(n2), "case14");

  auto expect_structurally_equal = [](const Network& a, const Network& b) {
    ASSERT_EQ(a.n_buses(), b.n_buses());
    ASSERT_EQ(a.n_gens(), b.n_gens());
    ASSERT_EQ(a.n_branches(), b.n_branches());
    ASSERT_EQ(a.n_loads(), b.n_loads());
    for (int i = 0; i < a.n_buses(); ++i) {
      EXPECT_EQ(a.buses[i].v_min, b.buses[i].v_min);
      EXPECT_EQ(a.buses[i].v_max, b.buses[i].v_max);
      EXPECT_EQ(a.buses[i].is_reference, b.buses[i].is_reference);
    }
    for (int k = 0; k < a.n_branches(); ++k) {
      EXPECT_EQ(a.branches[k].from_bus, b.branches[k].from_bus);
      EXPECT_EQ(a.branches[k].to_bus, b.branches[k].to_bus);
      // g,b take one round trip through (r, x); allow a few ulp.
      EXPECT_NEAR(a.branches[k].g, b.branches[k].g, 4 * std::abs(a.branches[k].g) * 1e-16);
      EXPECT_NEAR(a.branches[k].b, b.branches[k].b, 4 * std::abs(a.branches[k].b) * 1e-16);
      EXPECT_EQ(std::isfinite(a.branches[k].s_max), std::isfinite(b.branches[k].s_max));
    }
    for (int g = 0; g < a.n_gens(); ++g) {
      EXPECT_EQ(a.generators[g].p_max, b.generators[g].p_max);
      EXPECT_EQ(a.generators[g].c1, b.generators[g].c1);
    }
    for (int l = 0; l < a.n_loads(); ++l) {
      EXPECT_EQ(a.loads[l].bus, b.loads[l].bus);
      EXPECT_EQ(a.loads[l].p0, b.loads[l].p0);
      EXPECT_EQ(a.loads[l].q0, b.loads[l].q0);
    }
  };
  expect_structurally_equal(n1, n2);
  expect_structurally_equal(n2, n3);
}

TEST(SyntheticGrid, BuildsConnectedAndValid) {
  Network net = fixtures::synthetic_grid(118, 54, 99);
  EXPECT_EQ(net.n_buses(), 118);
  EXPECT_EQ(net.n_gens(), 54);
  EXPECT_EQ(net.n_loads(), 99);
  EXPECT_TRUE(Network::validate(net).empty());
}

}  // namespace
