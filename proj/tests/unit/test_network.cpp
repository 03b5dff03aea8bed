#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "safempc/error.hpp"
#include "safempc/network.hpp"

using namespace safempc;

namespace {

ControlPattern pattern(std::vector<std::uint8_t> bits) { return ControlPattern(std::move(bits)); }

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::io;
}

}  // namespace

TEST(Network, Desk2HandDerivedStep) {
  auto net = Network::validate(oracle::desk2_spec());
  // f1 = min(6, 4, 2*(10-8)) = 4, f2 = min(8, 4) = 4
  auto x = net.step({6, 8}, pattern({1, 1}), {0, 0});
  EXPECT_NEAR(x[0], 2.0, 1e-12);
  EXPECT_NEAR(x[1], 6.0, 1e-12);
}

TEST(Network, Desk2SaturationClamp) {
  auto net = Network::validate(oracle::desk2_spec());
  auto x = net.step({10, 10}, pattern({1, 0}), {2, 0});
  EXPECT_NEAR(x[0], 10.0, 1e-12);
  EXPECT_NEAR(x[1], 10.0, 1e-12);
}

TEST(Network, ZeroDemandAllRedIsStationary) {
  auto net = Network::validate(oracle::desk2_spec());
  State x{3.5, 7.25};
  EXPECT_EQ(net.step(x, pattern({0, 0}), {0, 0}), x);
}

TEST(Network, CorridorNetworkStructure) {
  auto sc = oracle::load("corridor9");
  auto net = Network::validate(sc.network);
  EXPECT_EQ(net.size(), 9u);
  EXPECT_EQ(net.controls().size(), 8u);
  auto l2 = net.index_of("2");
  std::vector<std::string> up;
  for (const auto& t : net.upstream(l2)) up.push_back(net.name(t.link));
  EXPECT_EQ(up, (std::vector<std::string>{"1", "7"}));
  for (std::size_t l = 0; l < net.size(); ++l) {
    std::vector<std::string> adj;
    for (auto k : net.adjacent(l)) adj.push_back(net.name(k));
    if (net.name(l) == "3")
      EXPECT_EQ(adj, std::vector<std::string>{"6"});
    else if (net.name(l) == "6")
      EXPECT_EQ(adj, std::vector<std::string>{"3"});
    else
      EXPECT_TRUE(adj.empty()) << "link " << net.name(l);
  }
  EXPECT_TRUE(net.flow_bound_holds());
  EXPECT_TRUE(net.monotone_roles_consistent());
}

TEST(Network, ControlsAreLexicographicAndAdmissible) {
  auto net = Network::validate(oracle::load("corridor9").network);
  const auto& u = net.controls();
  for (std::size_t i = 1; i < u.size(); ++i) EXPECT_LT(u[i - 1].str(), u[i].str());
  for (const auto& p : u) {
    EXPECT_EQ(p.green(0) + p.green(6), 1);
    EXPECT_EQ(p.green(5) + p.green(6), 1);
    EXPECT_EQ(p.green(1) + p.green(7), 1);
    EXPECT_EQ(p.green(4) + p.green(7), 1);
    EXPECT_EQ(p.green(2) + p.green(8), 1);
    EXPECT_EQ(p.green(3) + p.green(8), 1);
  }
}

TEST(Network, MatchesDirectEvaluation) {
  for (const char* name : {"corridor9", "arterial4", "desk2"}) {
    auto sc = oracle::load(name);
    auto net = Network::validate(sc.network);
    oracle::Dynamics dyn(sc.network);
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 5000; ++trial) {
      State x(net.size()), d(net.size());
      for (std::size_t l = 0; l < net.size(); ++l) {
        x[l] = std::uniform_real_distribution<double>(0.0, net.capacity(l))(rng);
        const auto& box = net.demand().front();
        d[l] = std::uniform_real_distribution<double>(box.lower[l], box.upper[l])(rng);
      }
      const auto& u = net.controls()[rng() % net.controls().size()];
      auto got = net.step(x, u, d);
      auto want = dyn.step(x, oracle::bits(u), d);
      for (std::size_t l = 0; l < net.size(); ++l) ASSERT_NEAR(got[l], want[l], 1e-12) << name;
      ASSERT_TRUE(net.in_state_space(got));
    }
  }
}

TEST(Network, RejectsTurnRatiosAboveOne) {
  auto spec = oracle::desk2_spec();
  spec.links[1].turns.clear();
  spec.links.push_back(spec.links[1]);
  spec.links[2].name = "3";
  spec.links[0].turns = {{"2", 0.6, 1.0}, {"3", 0.6, 1.0}};
  EXPECT_EQ(kind_of([&] { Network::validate(spec); }), ErrorKind::validation);
  try {
    Network::validate(spec);
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("turn ratios exceed 1"), std::string::npos);
  }
}

TEST(Network, RejectsCapacityRatiosAboveOneUnderSomeControl) {
  auto spec = oracle::desk2_spec();
  safempc::LinkSpec extra;
  extra.name = "3";
  extra.capacity = 10;
  extra.saturation = 4;
  extra.head = "A";
  extra.turns = {{"2", 0.5, 1.0}};
  spec.links.push_back(extra);
  for (auto& box : spec.demand) {
    box.lower.push_back(0);
    box.upper.push_back(0);
  }
  // 1 and 3 may be green together: 1 + 1 > 1
  EXPECT_EQ(kind_of([&] { Network::validate(spec); }), ErrorKind::validation);
  // exclusive phases make it valid
  spec.intersections[0].constraints.push_back({{"1", "3"}, Relation::less_equal, 1});
  EXPECT_NO_THROW(Network::validate(spec));
}

TEST(Network, RejectsStructuralErrors) {
  auto bad_head = oracle::desk2_spec();
  bad_head.links[0].head = "Z";
  EXPECT_EQ(kind_of([&] { Network::validate(bad_head); }), ErrorKind::validation);

  auto bad_turn = oracle::desk2_spec();
  bad_turn.links[0].turns[0].to = "9";
  EXPECT_EQ(kind_of([&] { Network::validate(bad_turn); }), ErrorKind::validation);

  auto wrong_node = oracle::desk2_spec();
  wrong_node.links[1].tail = "B";  // target does not leave the head of link 1
  EXPECT_EQ(kind_of([&] { Network::validate(wrong_node); }), ErrorKind::validation);

  auto empty_u = oracle::desk2_spec();
  empty_u.intersections[0].constraints = {{{"1"}, Relation::equal, 1}, {{"1"}, Relation::equal, 0}};
  EXPECT_EQ(kind_of([&] { Network::validate(empty_u); }), ErrorKind::validation);

  auto neg_cap = oracle::desk2_spec();
  neg_cap.links[0].capacity = -1;
  EXPECT_EQ(kind_of([&] { Network::validate(neg_cap); }), ErrorKind::validation);
}

TEST(Network, FlowBoundReport) {
  auto spec = oracle::desk2_spec();
  auto net = Network::validate(spec);
  auto rep = net.check_flow_bound_assumption();
  ASSERT_EQ(rep.checks.size(), 1u);
  EXPECT_DOUBLE_EQ(rep.checks[0].required, 4.0 + 4.0 * 0.5);
  EXPECT_TRUE(rep.all_pass());

  spec.links[1].capacity = 5;  // 5 < 4 + 2
  auto tight = Network::validate(spec);
  EXPECT_FALSE(tight.flow_bound_holds());
}

TEST(Network, EmptyDemandMeansZeroBox) {
  auto spec = oracle::desk2_spec();
  spec.demand.clear();
  auto net = Network::validate(spec);
  ASSERT_EQ(net.demand().size(), 1u);
  EXPECT_EQ(net.demand()[0].upper, (std::vector<double>{0, 0}));
}
