#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "safempc/geometry.hpp"
#include "safempc/network.hpp"

namespace safempc {

/// Closed interval hull [lower, upper] of a set of states.
struct ReachBox {
  State lower;
  State upper;

  static ReachBox point(const State& x) { return {x, x}; }
  bool contains(const State& x, double tol = 0.0) const;
  Box to_box() const { return Box(lower, upper); }
};

using ReachUnion = std::vector<ReachBox>;

inline constexpr std::size_t kDefaultBranchCap = 4096;

/// Interval bounds of the one-step image of `in` under `u` for demand box
/// `demand_box`, from the componentwise monotonicity of the dynamics.
/// Throws Error(assumption) when the bounds are not known to be sound.
ReachBox reach_one_box(const Network& net, const ReachBox& in, const ControlPattern& u,
                       std::size_t demand_box);

/// One box per demand box.
ReachUnion reach_one(const Network& net, const ReachBox& in, const ControlPattern& u);

/// Reach unions after 1..H steps of `seq`; entry k holds n_D^(k+1) boxes.
std::vector<ReachUnion> reach_h(const Network& net, const ReachBox& start,
                                std::span<const ControlPattern> seq,
                                std::size_t branch_cap = kDefaultBranchCap);

/// Upper profile alone, valid when no link has an adjacent link.
State reach_upper_monotone(const Network& net, const State& upper, const ControlPattern& u,
                           std::size_t demand_box);

/// Throws unless the monotone interval bounds are sound for this network.
void require_monotone_bounds(const Network& net);

}  // namespace safempc
