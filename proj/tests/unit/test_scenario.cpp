#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "oracles.hpp"
#include "safempc/error.hpp"
#include "safempc/pipeline.hpp"
#include "safempc/scenario.hpp"

using namespace safempc;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("safempc_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

const char* kMinimal = R"({
  "name": "mini",
  "network": {
    "links": [
      {"id": 1, "capacity": 10, "saturation": 4, "head": "A", "turns": [{"to": 2, "beta": 0.5}]},
      {"id": "2", "capacity": 10, "saturation": 4, "head": "B", "tail": "A"}
    ],
    "intersections": [{"id": "A"}, {"id": "B"}],
    "demand": [{"lower": {}, "upper": {"1": 2}}]
  }
})";

ErrorKind parse_kind(const std::string& text) {
  try {
    parse_scenario(text);
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::io;
}

}  // namespace

TEST(Scenario, MinimalDefaults) {
  auto sc = parse_scenario(kMinimal);
  EXPECT_EQ(sc.name, "mini");
  EXPECT_EQ(sc.network.links[0].name, "1");
  EXPECT_DOUBLE_EQ(sc.network.links[0].turns[0].alpha, 1.0);
  EXPECT_EQ(sc.network.demand[0].upper, (std::vector<double>{2, 0}));
  EXPECT_FALSE(sc.safety);
  EXPECT_EQ(sc.mpc.horizon, 3u);
  EXPECT_EQ(sc.initial_state, (State{0, 0}));
  EXPECT_EQ(sc.hash, parse_scenario(kMinimal).hash);
}

TEST(Scenario, RejectsInvalidInput) {
  EXPECT_EQ(parse_kind("{"), ErrorKind::validation);
  EXPECT_EQ(parse_kind("[]"), ErrorKind::validation);
  std::string s = kMinimal;
  EXPECT_EQ(parse_kind(std::string(s).replace(s.find("\"beta\": 0.5"), 11, "\"beta\": 1.5")), ErrorKind::validation);
  EXPECT_EQ(parse_kind(std::string(s).replace(s.find("\"head\": \"B\""), 11, "\"head\": \"Q\"")), ErrorKind::validation);
  auto with_x0 = std::string(s).insert(s.rfind('}'), R"(, "initial_state": [11, 0])");
  EXPECT_EQ(parse_kind(with_x0), ErrorKind::validation);
  auto bad_atom = std::string(s).insert(s.rfind('}'), R"(, "safety": {"link": "9", "le": 3})");
  EXPECT_EQ(parse_kind(bad_atom), ErrorKind::validation);
  auto bad_policy = std::string(s).insert(s.rfind('}'), R"(, "mpc": {"nominal": "oracle"})");
  EXPECT_EQ(parse_kind(bad_policy), ErrorKind::validation);
  EXPECT_THROW(load_scenario("/nonexistent/scenario.json"), Error);
}

TEST(Scenario, BundledScenariosLoad) {
  for (const char* name : {"desk2", "arterial4", "corridor9", "corridor9_mainline"}) {
    auto sc = oracle::load(name);
    EXPECT_EQ(sc.name, name);
    EXPECT_TRUE(sc.safety.has_value());
  }
  auto corridor = oracle::load("corridor9");
  EXPECT_EQ(corridor.mpc.horizon, 3u);
  EXPECT_EQ(corridor.network.demand[0].upper, (std::vector<double>{15, 0, 0, 15, 0, 0, 10, 10, 10}));
}

TEST(Pipeline, SynthesizeWritesArtifactsAndCache) {
  auto sc = oracle::load("desk2");
  auto out = scratch("synth");
  std::ostringstream log;
  auto res = cmd_synthesize(sc, out, log);
  EXPECT_TRUE(fs::exists(res.summary_path));
  EXPECT_TRUE(fs::exists(res.table_path));
  EXPECT_TRUE(fs::exists(res.cache_path));
  auto summary = slurp(res.summary_path);
  EXPECT_NE(summary.find("cells |Q|: 9"), std::string::npos);
  EXPECT_NE(summary.find("winning cells |Q^I|: 4"), std::string::npos);
  EXPECT_NE(summary.find("game_ms: "), std::string::npos);

  auto cached = load_cache(sc, res.cache_path);
  ASSERT_TRUE(cached);
  EXPECT_EQ(cached->win.member, res.synthesis.win.member);
  EXPECT_EQ(cached->win.admissible, res.synthesis.win.admissible);
  EXPECT_EQ(cached->approach.steps, res.synthesis.approach.steps);

  auto other = sc;
  other.hash ^= 1;
  EXPECT_FALSE(load_cache(other, res.cache_path));
}

TEST(Pipeline, RunIsByteIdenticalAcrossRepeats) {
  auto sc = oracle::load("arterial4");
  auto out = scratch("run");
  std::ostringstream log;
  auto first = cmd_run(sc, out, log);
  EXPECT_FALSE(first.used_cache);
  auto a = slurp(first.csv_path);
  auto second = cmd_run(sc, out, log);
  EXPECT_TRUE(second.used_cache);
  EXPECT_EQ(a, slurp(second.csv_path));
  auto summary = slurp(second.summary_path);
  EXPECT_NE(summary.find("infeasible_events: 0"), std::string::npos);
  EXPECT_NE(summary.find("min_rho: "), std::string::npos);
}

TEST(Pipeline, EmptyWinningSetCarriesHint) {
  auto sc = oracle::load("corridor9");
  auto out = scratch("empty");
  std::ostringstream log;
  try {
    cmd_synthesize(sc, out, log);
    FAIL() << "expected an empty winning set";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::empty_winning_set);
    EXPECT_NE(std::string(e.what()).find("refine"), std::string::npos);
  }
  EXPECT_NE(log.str().find("cells |Q|: 3888"), std::string::npos);
}

TEST(Pipeline, EmitMilpFileName) {
  auto sc = oracle::load("desk2");
  auto out = scratch("milp");
  std::ostringstream log;
  auto path = cmd_emit_milp(sc, 2, out, log);
  EXPECT_EQ(path.filename(), "desk2_H2.lp");
  auto text = slurp(path);
  EXPECT_EQ(text, slurp(cmd_emit_milp(sc, 2, out, log)));
  EXPECT_NE(text.find("Subject To"), std::string::npos);
}

#ifdef SAFEMPC_CLI
TEST(Cli, ExitCodes) {
  auto out = scratch("cli");
  auto call = [&](const std::string& args) {
    std::string cmd = std::string(SAFEMPC_CLI) + " " + args + " --out " + out.string() + " > /dev/null 2>&1";
    int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
  };
  auto path = [](const char* n) { return oracle::scenario_path(n).string(); };
  EXPECT_EQ(call("synthesize --scenario " + path("desk2")), 0);
  EXPECT_EQ(call("run --scenario " + path("desk2") + " --steps 5 --seed 3"), 0);
  EXPECT_TRUE(fs::exists(out / "desk2_seed3.csv"));
  EXPECT_EQ(call("emit-milp --scenario " + path("desk2") + " --horizon 1"), 0);
  EXPECT_TRUE(fs::exists(out / "desk2_H1.lp"));
  EXPECT_EQ(call("synthesize --scenario " + path("corridor9")), 3);

  auto bad = out / "bad.json";
  std::ofstream(bad) << "{\"name\": \"x\"}";
  EXPECT_EQ(call("synthesize --scenario " + bad.string()), 2);
  EXPECT_EQ(call("frobnicate"), 2);
}
#endif
