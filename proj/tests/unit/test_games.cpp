#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "safempc/error.hpp"
#include "safempc/games.hpp"
#include "safempc/pipeline.hpp"

using namespace safempc;

namespace {

struct Built {
  Network net;
  PartitionGrid grid;
  CellMask safe;
  TransitionSystem ts;
};

Built build(const NetworkSpec& spec, const SafeSet& safe, const std::vector<std::vector<double>>& extra) {
  auto net = Network::validate(spec);
  auto grid = build_partition(net, safe, extra);
  auto labels = label_cells(grid, safe);
  auto ts = build_transitions(net, grid, labels);
  return {std::move(net), std::move(grid), std::move(labels), std::move(ts)};
}

void expect_same(const WinningSet& a, const WinningSet& b) {
  ASSERT_EQ(a.member, b.member);
  ASSERT_EQ(a.admissible, b.admissible);
}

void expect_same(const Attractor& a, const Attractor& b) {
  ASSERT_EQ(a.steps, b.steps);
  ASSERT_EQ(a.control, b.control);
}

}  // namespace

TEST(SafetyGame, Desk2MatchesNaiveFixpoint) {
  auto sc = oracle::load("desk2");
  auto net = Network::validate(sc.network);
  auto b = build(sc.network, scenario_safe_set(sc, net), sc.extra_breakpoints);
  auto win = safety_game(b.ts, b.safe);
  expect_same(win, oracle::naive_safety(b.ts, b.safe));
  EXPECT_EQ(win.size(), 4u);
}

TEST(SafetyGame, TriviallySafeKeepsEveryCell) {
  auto sc = oracle::load("arterial4");
  sc.safety.reset();
  auto net = Network::validate(sc.network);
  auto b = build(sc.network, scenario_safe_set(sc, net), sc.extra_breakpoints);
  auto win = safety_game(b.ts, b.safe);
  EXPECT_EQ(win.size(), b.grid.cell_count());
  for (auto q : win.cells()) EXPECT_EQ(win.admissible[q].size(), net.controls().size());
}

TEST(SafetyGame, WinningCellsAreSafeAndClosed) {
  auto sc = oracle::load("corridor9_mainline");
  auto net = Network::validate(sc.network);
  auto b = build(sc.network, scenario_safe_set(sc, net), sc.extra_breakpoints);
  auto win = safety_game(b.ts, b.safe);
  EXPECT_FALSE(win.empty());
  for (auto q : win.cells()) {
    EXPECT_TRUE(b.safe[q]);
    ASSERT_FALSE(win.admissible[q].empty());
    for (auto u : win.admissible[q])
      for (auto s : b.ts.successors(q, u)) ASSERT_TRUE(win.contains(s));
  }
}

TEST(SafetyGame, RandomSmallAbstractionsMatchNaive) {
  std::mt19937_64 rng(42);
  int checked = 0;
  for (int trial = 0; trial < 40; ++trial) {
    std::size_t links = 2 + rng() % 3;
    auto spec = oracle::random_spec(rng, links);
    auto net = Network::validate(spec);
    // random conjunction of atoms with a random extra breakpoint per link
    std::vector<SafetyExpr> atoms;
    std::vector<std::vector<double>> extra(links);
    for (std::size_t l = 0; l < links; ++l) {
      double cap = net.capacity(l);
      double t = std::floor(cap * (0.4 + 0.5 * (rng() % 100) / 100.0));
      if (t <= 0 || t >= cap) continue;
      atoms.push_back(SafetyExpr::atom(net.name(l), t));
      if (t > 1 && rng() % 2) extra[l].push_back(std::floor(t / 2));
    }
    if (atoms.empty()) continue;
    auto safe = compile_safety_expr(SafetyExpr::all_of(atoms), net);
    auto b = build(spec, safe, extra);
    if (b.grid.cell_count() > 256) continue;
    expect_same(safety_game(b.ts, b.safe), oracle::naive_safety(b.ts, b.safe));
    auto win = safety_game(b.ts, b.safe);
    expect_same(reachability_game(b.ts, win.member), oracle::naive_reachability(b.ts, win.member));
    // arbitrary targets too
    CellMask target(b.grid.cell_count());
    for (auto& t : target) t = rng() % 4 == 0;
    expect_same(reachability_game(b.ts, target), oracle::naive_reachability(b.ts, target));
    ++checked;
  }
  EXPECT_GT(checked, 10);
}

TEST(ReachabilityGame, TargetCellsHaveZeroSteps) {
  auto sc = oracle::load("arterial4");
  auto net = Network::validate(sc.network);
  auto b = build(sc.network, scenario_safe_set(sc, net), sc.extra_breakpoints);
  auto win = safety_game(b.ts, b.safe);
  auto attr = reachability_game(b.ts, win.member);
  expect_same(attr, oracle::naive_reachability(b.ts, win.member));
  for (auto q : win.cells()) {
    EXPECT_EQ(attr.steps[q], 0);
    EXPECT_NE(attr.control[q], Attractor::kOutside);
  }
  // every attractor control leads to strictly smaller step counts
  for (CellId q = 0; q < b.grid.cell_count(); ++q) {
    if (!attr.contains(q) || attr.steps[q] == 0) continue;
    for (auto s : b.ts.successors(q, static_cast<std::size_t>(attr.control[q]))) {
      ASSERT_TRUE(attr.contains(s));
      ASSERT_LT(attr.steps[s], attr.steps[q]);
    }
  }
}

TEST(WinningBoxes, ThrowsOnEmptySet) {
  WinningSet empty;
  empty.member.assign(4, 0);
  empty.admissible.assign(4, {});
  PartitionGrid g({{0, 1, 2}, {0, 1, 2}});
  Box dom({0, 0}, {2, 2});
  try {
    winning_boxes(empty, g, dom);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::empty_winning_set);
  }
}

TEST(SafetyGame, CorridorGridCountsMatchIndependentRebuild) {
  auto sc = oracle::load("corridor9_mainline");
  auto syn = synthesize(sc);
  std::vector<std::vector<double>> breaks;
  for (std::size_t d = 0; d < syn.grid.dims(); ++d) breaks.push_back(syn.grid.breakpoints(d));
  auto ref = oracle::build_abstraction(sc.network, syn.net.controls(), breaks,
                                       [&](const State& x) { return sc.safety->evaluate(syn.net, x); });
  auto fix = oracle::safety_fixpoint(ref);
  EXPECT_EQ(CellMask(ref.safe.begin(), ref.safe.end()), syn.safe_cells);
  EXPECT_EQ(CellMask(fix.begin(), fix.end()), syn.win.member);
}
