#include "safempc/reach.hpp"

#include <algorithm>

#include "safempc/error.hpp"

namespace safempc {

bool ReachBox::contains(const State& x, double tol) const {
  for (std::size_t l = 0; l < x.size(); ++l)
    if (x[l] < lower[l] - tol || x[l] > upper[l] + tol) return false;
  return true;
}

void require_monotone_bounds(const Network& net) {
  if (!net.flow_bound_holds())
    throw Error(ErrorKind::assumption,
                "flow-bound assumption cap_l >= c_l + c_i beta_il/alpha_il fails; interval reach would be unsound");
  if (!net.monotone_roles_consistent())
    throw Error(ErrorKind::assumption, "a link is both adjacent and local to another; monotone bounds undefined");
}

namespace {

// x_l' is increasing in x_l, its downstream and upstream links and
// decreasing in its adjacent links. The bound for link l evaluates the exact
// update at the corner that pushes every local link the same way.
double corner_bound(const Network& net, const ReachBox& in, const ControlPattern& u, const Demand& d,
                    std::size_t l, bool upper, State& scratch) {
  const State& hi = upper ? in.upper : in.lower;
  const State& lo = upper ? in.lower : in.upper;
  scratch[l] = hi[l];
  for (const auto& t : net.downstream(l)) scratch[t.link] = hi[t.link];
  for (const auto& t : net.upstream(l)) scratch[t.link] = hi[t.link];
  for (auto j : net.adjacent(l)) scratch[j] = lo[j];
  double v = net.step_link(scratch, u, d, l);
  return std::clamp(v, 0.0, net.capacity(l));
}

}  // namespace

ReachBox reach_one_box(const Network& net, const ReachBox& in, const ControlPattern& u,
                       std::size_t demand_box) {
  require_monotone_bounds(net);
  const auto& dbox = net.demand().at(demand_box);
  const std::size_t n = net.size();
  ReachBox out{State(n), State(n)};
  State scratch = in.lower;
  for (std::size_t l = 0; l < n; ++l) {
    out.upper[l] = corner_bound(net, in, u, dbox.upper, l, true, scratch);
    out.lower[l] = corner_bound(net, in, u, dbox.lower, l, false, scratch);
  }
  return out;
}

ReachUnion reach_one(const Network& net, const ReachBox& in, const ControlPattern& u) {
  ReachUnion out;
  out.reserve(net.demand().size());
  for (std::size_t b = 0; b < net.demand().size(); ++b) out.push_back(reach_one_box(net, in, u, b));
  return out;
}

std::vector<ReachUnion> reach_h(const Network& net, const ReachBox& start,
                                std::span<const ControlPattern> seq, std::size_t branch_cap) {
  std::vector<ReachUnion> out;
  out.reserve(seq.size());
  ReachUnion frontier{start};
  for (const auto& u : seq) {
    if (frontier.size() * net.demand().size() > branch_cap)
      throw Error(ErrorKind::reach_explosion,
                  "reach explosion: " + std::to_string(frontier.size() * net.demand().size()) +
                      " branches exceed the cap; describe the demand set by a single box");
    ReachUnion next;
    next.reserve(frontier.size() * net.demand().size());
    for (const auto& box : frontier) {
      auto step = reach_one(net, box, u);
      next.insert(next.end(), step.begin(), step.end());
    }
    out.push_back(next);
    frontier = std::move(next);
  }
  return out;
}

State reach_upper_monotone(const Network& net, const State& upper, const ControlPattern& u,
                           std::size_t demand_box) {
  require_monotone_bounds(net);
  if (net.has_adjacency())
    throw Error(ErrorKind::assumption, "upper-only reach requires a network without adjacent links");
  State next = net.step(upper, u, net.demand().at(demand_box).upper);
  for (std::size_t l = 0; l < next.size(); ++l) next[l] = std::clamp(next[l], 0.0, net.capacity(l));
  return next;
}

}  // namespace safempc
