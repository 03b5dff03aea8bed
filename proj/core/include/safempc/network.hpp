#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace safempc {

/// Vehicles per link, indexed by link position.
using State = std::vector<double>;
/// Exogenous arrivals per link for one step.
using Demand = std::vector<double>;

/// One binary traffic-light decision per link (1 = green).
class ControlPattern {
 public:
  ControlPattern() = default;
  explicit ControlPattern(std::vector<std::uint8_t> green) : green_(std::move(green)) {}

  std::size_t size() const noexcept { return green_.size(); }
  bool green(std::size_t link) const { return green_[link] != 0; }
  std::span<const std::uint8_t> bits() const noexcept { return green_; }

  /// "0110..." with link 0 first.
  std::string str() const;

  friend bool operator==(const ControlPattern&, const ControlPattern&) = default;
  friend auto operator<=>(const ControlPattern&, const ControlPattern&) = default;

 private:
  std::vector<std::uint8_t> green_;
};

struct TurnSpec {
  std::string to;  // downstream link name
  double beta = 0.0;   // share of the outflow turning into `to`
  double alpha = 1.0;  // share of `to`'s free space granted to this link
};

struct LinkSpec {
  std::string name;
  double capacity = 0.0;
  double saturation = 0.0;
  std::string head;                // intersection the link flows into
  std::optional<std::string> tail; // intersection it leaves, or an entry link
  std::vector<TurnSpec> turns;
};

enum class Relation { less_equal, equal, greater_equal };

/// sum_{l in links} u_l  (relation)  rhs
struct PhaseConstraint {
  std::vector<std::string> links;
  Relation relation = Relation::less_equal;
  int rhs = 1;
};

struct IntersectionSpec {
  std::string name;
  std::vector<PhaseConstraint> constraints;
};

/// Axis-aligned demand box lower <= d <= upper.
struct DemandBox {
  std::vector<double> lower;
  std::vector<double> upper;
};

struct NetworkSpec {
  std::vector<LinkSpec> links;
  std::vector<IntersectionSpec> intersections;
  std::vector<DemandBox> demand;
  double tolerance = 1e-9;
};

struct Turn {
  std::size_t link;  // the other end of the turn
  double beta;
  double alpha;
  double ratio() const { return alpha / beta; }
};

/// One pair (l, i) of the flow-bound inequality cap_l >= c_l + c_i beta_il / alpha_il.
struct FlowBoundCheck {
  std::size_t link;
  std::size_t upstream;
  double capacity;
  double required;
  bool pass;
};

struct FlowBoundReport {
  std::vector<FlowBoundCheck> checks;
  bool all_pass() const;
};

/// Validated, immutable traffic network. Links are addressed by position.
class Network {
 public:
  /// Checks every structural invariant and precomputes adjacency. Throws Error.
  static Network validate(NetworkSpec spec);

  std::size_t size() const noexcept { return links_.size(); }
  const LinkSpec& link(std::size_t l) const { return links_[l]; }
  const std::string& name(std::size_t l) const { return links_[l].name; }
  std::optional<std::size_t> find(const std::string& name) const;
  std::size_t index_of(const std::string& name) const;  // throws on unknown

  double capacity(std::size_t l) const { return links_[l].capacity; }
  double saturation(std::size_t l) const { return links_[l].saturation; }
  const std::vector<double>& capacities() const noexcept { return caps_; }
  double tolerance() const noexcept { return tolerance_; }

  /// Turns out of l (to its downstream links).
  std::span<const Turn> downstream(std::size_t l) const { return down_[l]; }
  /// Turns into l; Turn::link is the upstream link.
  std::span<const Turn> upstream(std::size_t l) const { return up_[l]; }
  /// Links sharing an upstream feeder with l (excluding l).
  std::span<const std::size_t> adjacent(std::size_t l) const { return adj_[l]; }
  bool has_adjacency() const noexcept;
  /// False when some link is adjacent to l and also l itself, upstream or
  /// downstream of l; the corner-based interval bounds need these disjoint.
  bool monotone_roles_consistent() const noexcept { return roles_consistent_; }

  /// Admissible signal patterns, lexicographic in the bit string.
  const std::vector<ControlPattern>& controls() const noexcept { return controls_; }
  const std::vector<DemandBox>& demand() const noexcept { return demand_; }
  const std::vector<IntersectionSpec>& intersections() const noexcept { return intersections_; }

  bool in_state_space(const State& x) const;

  double outflow(const State& x, const ControlPattern& u, std::size_t l) const;
  State step(const State& x, const ControlPattern& u, const Demand& d) const;
  /// x_l' only; used by the interval bounds which evaluate one link per corner.
  double step_link(const State& x, const ControlPattern& u, const Demand& d, std::size_t l) const;

  FlowBoundReport check_flow_bound_assumption() const;
  bool flow_bound_holds() const noexcept { return flow_bound_holds_; }

 private:
  Network() = default;

  std::vector<LinkSpec> links_;
  std::vector<double> caps_;
  std::vector<std::vector<Turn>> down_;
  std::vector<std::vector<Turn>> up_;
  std::vector<std::vector<std::size_t>> adj_;
  std::vector<ControlPattern> controls_;
  std::vector<DemandBox> demand_;
  std::vector<IntersectionSpec> intersections_;
  double tolerance_ = 1e-9;
  bool flow_bound_holds_ = false;
  bool roles_consistent_ = true;
};

/// Enumerates {0,1}^n filtered by the intersections' phase constraints.
std::vector<ControlPattern> admissible_controls(const NetworkSpec& spec);

}  // namespace safempc
