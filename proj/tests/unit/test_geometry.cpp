#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "safempc/error.hpp"
#include "safempc/geometry.hpp"

using namespace safempc;

namespace {

bool corridor_phi(const State& x) {
  return x[0] <= 36 && x[3] <= 36 && (x[1] <= 44 || x[2] <= 44) && (x[4] <= 44 || x[5] <= 44) &&
         (x[6] <= 32 || x[7] <= 32 || x[8] <= 32);
}

std::vector<std::vector<double>> corridor_threshold_grid() {
  std::vector<std::vector<double>> b;
  for (int l = 0; l < 9; ++l) {
    if (l == 0 || l == 3) b.push_back({0, 36, 55});
    else if (l < 6) b.push_back({0, 44, 55});
    else b.push_back({0, 32, 40});
  }
  return b;
}

}  // namespace

TEST(Box, HalfOpenFaces) {
  Box b({0, 0}, {1, 1});
  b.set_lower(0, 0, true);
  EXPECT_FALSE(b.contains(std::vector<double>{0, 0.5}));
  EXPECT_TRUE(b.contains(std::vector<double>{1, 1}));
  EXPECT_DOUBLE_EQ(b.distance(std::vector<double>{2, 2}), std::sqrt(2.0));
  EXPECT_DOUBLE_EQ(b.volume(), 1.0);

  Box c({1, 0}, {2, 1});
  auto meet = box_intersect(b, c);
  ASSERT_TRUE(meet);
  EXPECT_DOUBLE_EQ(meet->lower(0), 1.0);
  c.set_lower(0, 1, true);
  EXPECT_FALSE(box_intersect(b, c));
}

TEST(SafeSet, CorridorExpressionCompilesToTwelveBoxes) {
  auto sc = oracle::load("corridor9");
  auto net = Network::validate(sc.network);
  auto safe = compile_safety_expr(*sc.safety, net, false);
  EXPECT_EQ(safe.boxes().size(), 12u);
  auto pruned = compile_safety_expr(*sc.safety, net, true);
  EXPECT_LE(pruned.boxes().size(), 12u);
  auto th = pruned.thresholds();
  EXPECT_EQ(th[0], std::vector<double>{36});
  EXPECT_EQ(th[1], std::vector<double>{44});
  EXPECT_EQ(th[8], std::vector<double>{32});
}

TEST(SafeSet, MembershipMatchesExpressionOnSamples) {
  auto sc = oracle::load("corridor9");
  auto net = Network::validate(sc.network);
  auto safe = compile_safety_expr(*sc.safety, net);
  std::mt19937_64 rng(11);
  std::size_t inside = 0;
  for (int i = 0; i < 100000; ++i) {
    State x(9);
    for (std::size_t l = 0; l < 9; ++l) {
      // bias samples toward the thresholds so both sides are exercised
      double cap = net.capacity(l);
      x[l] = (rng() % 4 == 0) ? std::round(std::uniform_real_distribution<double>(0, cap)(rng))
                              : std::uniform_real_distribution<double>(0, cap)(rng);
    }
    bool want = corridor_phi(x);
    ASSERT_EQ(safe_contains(safe, x), want);
    ASSERT_EQ(sc.safety->evaluate(net, x), want);
    inside += want;
  }
  EXPECT_GT(inside, 1000u);
  EXPECT_LT(inside, 99000u);
}

TEST(SafeSet, MidCorridorBothHeavyIsUnsafe) {
  auto sc = oracle::load("corridor9");
  auto net = Network::validate(sc.network);
  auto safe = compile_safety_expr(*sc.safety, net);
  State x{10, 50, 50, 10, 10, 10, 10, 10, 10};
  EXPECT_FALSE(safe_contains(safe, x));
  x[2] = 44;
  EXPECT_TRUE(safe_contains(safe, x));
}

TEST(SafeSet, RejectsBadAtoms) {
  auto net = Network::validate(oracle::desk2_spec());
  EXPECT_THROW(compile_safety_expr(SafetyExpr::atom("7", 3), net), Error);
  EXPECT_THROW(compile_safety_expr(SafetyExpr::atom("1", 12), net), Error);
  EXPECT_THROW(compile_safety_expr(SafetyExpr::atom("1", 0), net), Error);
}

TEST(Robustness, MatchesCellOracle) {
  auto sc = oracle::load("corridor9");
  auto net = Network::validate(sc.network);
  auto safe = compile_safety_expr(*sc.safety, net);
  auto grid = corridor_threshold_grid();
  std::mt19937_64 rng(5);
  for (int i = 0; i < 3000; ++i) {
    State x(9);
    for (std::size_t l = 0; l < 9; ++l) x[l] = std::uniform_real_distribution<double>(0, net.capacity(l))(rng);
    double want = oracle::robustness(grid, corridor_phi, x);
    double got = robustness(safe, x);
    ASSERT_NEAR(got, want, 1e-9) << i;
  }
}

TEST(Robustness, SignAndExamples) {
  auto net = Network::validate(oracle::desk2_spec());
  auto safe = compile_safety_expr(SafetyExpr::all_of({SafetyExpr::atom("1", 8), SafetyExpr::atom("2", 8)}), net);
  EXPECT_DOUBLE_EQ(robustness(safe, {5, 7}), 1.0);
  EXPECT_DOUBLE_EQ(robustness(safe, {9, 5}), -1.0);
  EXPECT_DOUBLE_EQ(robustness(safe, {10, 10}), -std::sqrt(8.0));
  // S = X: no unsafe point anywhere
  Box x = state_space_box(net);
  SafeSet all(x, {x});
  EXPECT_TRUE(std::isinf(robustness(all, {1, 1})));
}
