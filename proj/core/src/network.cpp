#include "safempc/network.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "safempc/error.hpp"

namespace safempc {

namespace {

constexpr std::size_t kMaxEnumeratedLinks = 24;

[[noreturn]] void invalid(const std::string& msg) { throw Error(ErrorKind::validation, msg); }

bool positive_finite(double v) { return std::isfinite(v) && v > 0.0; }

bool satisfies(const PhaseConstraint& c, const std::vector<std::size_t>& idx,
               const std::vector<std::uint8_t>& bits) {
  int sum = 0;
  for (auto l : idx) sum += bits[l];
  switch (c.relation) {
    case Relation::less_equal: return sum <= c.rhs;
    case Relation::equal: return sum == c.rhs;
    case Relation::greater_equal: return sum >= c.rhs;
  }
  return false;
}

}  // namespace

std::string ControlPattern::str() const {
  std::string s;
  s.reserve(green_.size());
  for (auto b : green_) s.push_back(b ? '1' : '0');
  return s;
}

bool FlowBoundReport::all_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const FlowBoundCheck& c) { return c.pass; });
}

std::vector<ControlPattern> admissible_controls(const NetworkSpec& spec) {
  const std::size_t n = spec.links.size();
  if (n > kMaxEnumeratedLinks) invalid("control enumeration supports at most 24 links");

  std::map<std::string, std::size_t> index;
  for (std::size_t l = 0; l < n; ++l) index[spec.links[l].name] = l;

  std::vector<std::pair<const PhaseConstraint*, std::vector<std::size_t>>> constraints;
  for (const auto& v : spec.intersections) {
    for (const auto& c : v.constraints) {
      std::vector<std::size_t> idx;
      for (const auto& name : c.links) {
        auto it = index.find(name);
        if (it == index.end())
          invalid("phase constraint at intersection '" + v.name + "' names unknown link '" + name + "'");
        idx.push_back(it->second);
      }
      constraints.emplace_back(&c, std::move(idx));
    }
  }

  std::vector<ControlPattern> out;
  std::vector<std::uint8_t> bits(n);
  const std::uint64_t total = std::uint64_t{1} << n;
  for (std::uint64_t code = 0; code < total; ++code) {
    // link 0 is the most significant bit so that codes enumerate lexicographically
    for (std::size_t l = 0; l < n; ++l) bits[l] = (code >> (n - 1 - l)) & 1U;
    bool ok = std::all_of(constraints.begin(), constraints.end(),
                          [&](const auto& c) { return satisfies(*c.first, c.second, bits); });
    if (ok) out.emplace_back(bits);
  }
  if (out.empty()) invalid("empty control set: phase constraints are contradictory");
  return out;
}

Network Network::validate(NetworkSpec spec) {
  const std::size_t n = spec.links.size();
  if (n == 0) invalid("network has no links");
  if (!(spec.tolerance >= 0.0)) invalid("tolerance must be non-negative");

  Network net;
  net.tolerance_ = spec.tolerance;
  const double tol = spec.tolerance;

  std::set<std::string> intersections;
  for (const auto& v : spec.intersections) {
    if (!intersections.insert(v.name).second) invalid("duplicate intersection '" + v.name + "'");
  }

  std::map<std::string, std::size_t> index;
  for (std::size_t l = 0; l < n; ++l) {
    const auto& link = spec.links[l];
    if (!index.emplace(link.name, l).second) invalid("duplicate link '" + link.name + "'");
    if (!positive_finite(link.capacity)) invalid("link '" + link.name + "': capacity must be positive");
    if (!positive_finite(link.saturation))
      invalid("link '" + link.name + "': saturation flow must be positive");
    if (!intersections.count(link.head))
      invalid("link '" + link.name + "': head references unknown intersection '" + link.head + "'");
    if (link.tail && !intersections.count(*link.tail))
      invalid("link '" + link.name + "': tail references unknown intersection '" + *link.tail + "'");
  }

  net.down_.assign(n, {});
  net.up_.assign(n, {});
  for (std::size_t l = 0; l < n; ++l) {
    const auto& link = spec.links[l];
    double beta_sum = 0.0;
    std::set<std::size_t> seen;
    for (const auto& t : link.turns) {
      auto it = index.find(t.to);
      if (it == index.end()) invalid("link '" + link.name + "': turn to unknown link '" + t.to + "'");
      const std::size_t k = it->second;
      if (k == l) invalid("link '" + link.name + "': turn into itself");
      if (!seen.insert(k).second) invalid("link '" + link.name + "': duplicate turn to '" + t.to + "'");
      const auto& tail = spec.links[k].tail;
      if (!tail || *tail != link.head)
        invalid("link '" + link.name + "': turn target '" + t.to + "' does not leave intersection '" +
                link.head + "'");
      if (!(t.beta > 0.0 && t.beta <= 1.0))
        invalid("link '" + link.name + "': turn ratio to '" + t.to + "' must lie in (0,1]");
      if (!(t.alpha > 0.0 && t.alpha <= 1.0))
        invalid("link '" + link.name + "': capacity ratio to '" + t.to + "' must lie in (0,1]");
      beta_sum += t.beta;
      net.down_[l].push_back({k, t.beta, t.alpha});
      net.up_[k].push_back({l, t.beta, t.alpha});
    }
    if (beta_sum > 1.0 + tol) invalid("link '" + link.name + "': turn ratios exceed 1");
  }
  for (auto& v : net.down_) std::sort(v.begin(), v.end(), [](auto& a, auto& b) { return a.link < b.link; });
  for (auto& v : net.up_) std::sort(v.begin(), v.end(), [](auto& a, auto& b) { return a.link < b.link; });

  net.adj_.assign(n, {});
  for (std::size_t l = 0; l < n; ++l) {
    std::set<std::size_t> adj;
    for (const auto& in : net.up_[l])
      for (const auto& sibling : net.down_[in.link])
        if (sibling.link != l) adj.insert(sibling.link);
    net.adj_[l].assign(adj.begin(), adj.end());
    for (auto j : net.adj_[l]) {
      bool clash = j == l;
      for (const auto& t : net.down_[l]) clash = clash || t.link == j;
      for (const auto& t : net.up_[l]) clash = clash || t.link == j;
      if (clash) net.roles_consistent_ = false;
    }
  }

  net.controls_ = admissible_controls(spec);

  // Capacity ratios only count for green upstream links, so they must sum to
  // at most one under every admissible pattern.
  for (const auto& u : net.controls_) {
    for (std::size_t l = 0; l < n; ++l) {
      double alpha_sum = 0.0;
      for (const auto& in : net.up_[l])
        if (u.green(in.link)) alpha_sum += in.alpha;
      if (alpha_sum > 1.0 + tol)
        invalid("link '" + spec.links[l].name + "': capacity ratios exceed 1 under control " + u.str());
    }
  }

  if (spec.demand.empty()) spec.demand.push_back({State(n, 0.0), State(n, 0.0)});
  for (std::size_t b = 0; b < spec.demand.size(); ++b) {
    const auto& box = spec.demand[b];
    if (box.lower.size() != n || box.upper.size() != n)
      invalid("demand box " + std::to_string(b) + " has wrong dimension");
    for (std::size_t l = 0; l < n; ++l) {
      if (!std::isfinite(box.lower[l]) || !std::isfinite(box.upper[l]) || box.lower[l] < 0.0 ||
          box.lower[l] > box.upper[l])
        invalid("demand box " + std::to_string(b) + ": bad bounds on link '" + spec.links[l].name + "'");
    }
  }

  net.links_ = std::move(spec.links);
  net.demand_ = std::move(spec.demand);
  net.intersections_ = spec.intersections;
  net.caps_.resize(n);
  for (std::size_t l = 0; l < n; ++l) net.caps_[l] = net.links_[l].capacity;
  net.flow_bound_holds_ = net.check_flow_bound_assumption().all_pass();
  return net;
}

std::optional<std::size_t> Network::find(const std::string& name) const {
  for (std::size_t l = 0; l < links_.size(); ++l)
    if (links_[l].name == name) return l;
  return std::nullopt;
}

std::size_t Network::index_of(const std::string& name) const {
  auto l = find(name);
  if (!l) invalid("unknown link '" + name + "'");
  return *l;
}

bool Network::has_adjacency() const noexcept {
  return std::any_of(adj_.begin(), adj_.end(), [](const auto& a) { return !a.empty(); });
}

bool Network::in_state_space(const State& x) const {
  if (x.size() != size()) return false;
  for (std::size_t l = 0; l < size(); ++l)
    if (!(x[l] >= -tolerance_ && x[l] <= caps_[l] + tolerance_)) return false;
  return true;
}

double Network::outflow(const State& x, const ControlPattern& u, std::size_t l) const {
  if (!u.green(l)) return 0.0;
  double f = std::min(x[l], saturation(l));
  for (const auto& t : down_[l]) f = std::min(f, t.ratio() * (caps_[t.link] - x[t.link]));
  return f;
}

double Network::step_link(const State& x, const ControlPattern& u, const Demand& d,
                          std::size_t l) const {
  double next = x[l] - outflow(x, u, l) + d[l];
  for (const auto& in : up_[l]) next += in.beta * outflow(x, u, in.link);
  return std::min(next, caps_[l]);
}

State Network::step(const State& x, const ControlPattern& u, const Demand& d) const {
  const std::size_t n = size();
  std::vector<double> f(n);
  for (std::size_t l = 0; l < n; ++l) f[l] = outflow(x, u, l);
  State next(n);
  for (std::size_t l = 0; l < n; ++l) {
    double v = x[l] - f[l] + d[l];
    for (const auto& in : up_[l]) v += in.beta * f[in.link];
    next[l] = std::min(v, caps_[l]);
  }
  return next;
}

FlowBoundReport Network::check_flow_bound_assumption() const {
  FlowBoundReport report;
  for (std::size_t l = 0; l < size(); ++l) {
    for (const auto& in : up_[l]) {
      const double required = saturation(l) + saturation(in.link) * in.beta / in.alpha;
      report.checks.push_back({l, in.link, caps_[l], required, caps_[l] >= required - tolerance_});
    }
  }
  return report;
}

}  // namespace safempc
