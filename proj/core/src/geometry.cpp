#include "safempc/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "safempc/error.hpp"

namespace safempc {

Box::Box(std::vector<double> lower, std::vector<double> upper)
    : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.size() != upper_.size()) throw Error(ErrorKind::validation, "box bound dimensions differ");
  lower_open_.assign(lower_.size(), 0);
  upper_open_.assign(lower_.size(), 0);
}

void Box::set_lower(std::size_t d, double v, bool open) {
  lower_[d] = v;
  lower_open_[d] = open;
}

void Box::set_upper(std::size_t d, double v, bool open) {
  upper_[d] = v;
  upper_open_[d] = open;
}

bool Box::empty() const {
  for (std::size_t d = 0; d < dims(); ++d) {
    if (lower_[d] > upper_[d]) return true;
    if (lower_[d] == upper_[d] && (lower_open_[d] || upper_open_[d])) return true;
  }
  return false;
}

bool Box::contains(std::span<const double> x) const {
  for (std::size_t d = 0; d < dims(); ++d) {
    if (lower_open_[d] ? !(x[d] > lower_[d]) : !(x[d] >= lower_[d])) return false;
    if (upper_open_[d] ? !(x[d] < upper_[d]) : !(x[d] <= upper_[d])) return false;
  }
  return true;
}

double Box::distance(std::span<const double> x) const {
  double sq = 0.0;
  for (std::size_t d = 0; d < dims(); ++d) {
    double gap = 0.0;
    if (x[d] < lower_[d]) gap = lower_[d] - x[d];
    else if (x[d] > upper_[d]) gap = x[d] - upper_[d];
    sq += gap * gap;
  }
  return std::sqrt(sq);
}

bool Box::subset_of(const Box& other) const {
  if (empty()) return true;
  for (std::size_t d = 0; d < dims(); ++d) {
    if (lower_[d] < other.lower_[d]) return false;
    if (lower_[d] == other.lower_[d] && other.lower_open_[d] && !lower_open_[d]) return false;
    if (upper_[d] > other.upper_[d]) return false;
    if (upper_[d] == other.upper_[d] && other.upper_open_[d] && !upper_open_[d]) return false;
  }
  return true;
}

double Box::volume() const {
  if (empty()) return 0.0;
  double v = 1.0;
  for (std::size_t d = 0; d < dims(); ++d) v *= upper_[d] - lower_[d];
  return v;
}

std::string Box::str() const {
  std::ostringstream os;
  for (std::size_t d = 0; d < dims(); ++d) {
    if (d) os << " x ";
    os << (lower_open_[d] ? '(' : '[') << lower_[d] << ',' << upper_[d] << (upper_open_[d] ? ')' : ']');
  }
  return os.str();
}

std::optional<Box> box_intersect(const Box& a, const Box& b) {
  Box out = a;
  for (std::size_t d = 0; d < a.dims(); ++d) {
    if (b.lower(d) > a.lower(d)) out.set_lower(d, b.lower(d), b.lower_open(d));
    else if (b.lower(d) == a.lower(d)) out.set_lower(d, a.lower(d), a.lower_open(d) || b.lower_open(d));
    if (b.upper(d) < a.upper(d)) out.set_upper(d, b.upper(d), b.upper_open(d));
    else if (b.upper(d) == a.upper(d)) out.set_upper(d, a.upper(d), a.upper_open(d) || b.upper_open(d));
  }
  if (out.empty()) return std::nullopt;
  return out;
}

SafetyExpr SafetyExpr::atom(std::string link, double bound) {
  SafetyExpr e;
  e.kind_ = Kind::atom;
  e.link_ = std::move(link);
  e.bound_ = bound;
  return e;
}

SafetyExpr SafetyExpr::all_of(std::vector<SafetyExpr> children) {
  SafetyExpr e;
  e.kind_ = Kind::all;
  e.children_ = std::move(children);
  return e;
}

SafetyExpr SafetyExpr::any_of(std::vector<SafetyExpr> children) {
  SafetyExpr e;
  e.kind_ = Kind::any;
  e.children_ = std::move(children);
  return e;
}

bool SafetyExpr::evaluate(const Network& net, const State& x) const {
  switch (kind_) {
    case Kind::atom: return x[net.index_of(link_)] <= bound_;
    case Kind::all:
      return std::all_of(children_.begin(), children_.end(), [&](const auto& c) { return c.evaluate(net, x); });
    case Kind::any:
      return std::any_of(children_.begin(), children_.end(), [&](const auto& c) { return c.evaluate(net, x); });
  }
  return false;
}

SafeSet::SafeSet(Box domain, std::vector<Box> boxes) : domain_(std::move(domain)), boxes_(std::move(boxes)) {
  for (const auto& b : boxes_) {
    if (b.dims() != domain_.dims()) throw Error(ErrorKind::validation, "safe-set box has wrong dimension");
    if (!b.subset_of(domain_)) throw Error(ErrorKind::validation, "safe-set box " + b.str() + " leaves the state space");
  }
}

bool SafeSet::contains(std::span<const double> x) const {
  return std::any_of(boxes_.begin(), boxes_.end(), [&](const Box& b) { return b.contains(x); });
}

std::vector<std::vector<double>> SafeSet::thresholds() const {
  std::vector<std::vector<double>> out(domain_.dims());
  for (const auto& b : boxes_) {
    for (std::size_t d = 0; d < b.dims(); ++d) {
      if (b.lower(d) > domain_.lower(d)) out[d].push_back(b.lower(d));
      if (b.upper(d) < domain_.upper(d)) out[d].push_back(b.upper(d));
    }
  }
  for (auto& v : out) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }
  return out;
}

void SafeSet::prune_subsumed() {
  std::vector<Box> kept;
  for (std::size_t i = 0; i < boxes_.size(); ++i) {
    bool dominated = false;
    for (std::size_t j = 0; j < boxes_.size() && !dominated; ++j) {
      if (i == j || !boxes_[i].subset_of(boxes_[j])) continue;
      // identical boxes: keep the first copy only
      dominated = !boxes_[j].subset_of(boxes_[i]) || j < i;
    }
    if (!dominated) kept.push_back(boxes_[i]);
  }
  boxes_ = std::move(kept);
}

Box state_space_box(const Network& net) {
  return Box(std::vector<double>(net.size(), 0.0), net.capacities());
}

namespace {

using Conjunct = std::vector<std::pair<std::size_t, double>>;

std::vector<Conjunct> to_dnf(const SafetyExpr& e, const Network& net) {
  switch (e.kind()) {
    case SafetyExpr::Kind::atom: {
      auto l = net.find(e.link());
      if (!l) throw Error(ErrorKind::validation, "safety atom on unknown link '" + e.link() + "'");
      if (!(e.bound() > 0.0 && e.bound() < net.capacity(*l)))
        throw Error(ErrorKind::validation, "safety atom on link '" + e.link() + "' must have bound in (0, capacity)");
      return {Conjunct{{*l, e.bound()}}};
    }
    case SafetyExpr::Kind::any: {
      std::vector<Conjunct> out;
      for (const auto& c : e.children()) {
        auto sub = to_dnf(c, net);
        out.insert(out.end(), sub.begin(), sub.end());
      }
      return out;
    }
    case SafetyExpr::Kind::all: {
      std::vector<Conjunct> out{Conjunct{}};
      for (const auto& c : e.children()) {
        auto sub = to_dnf(c, net);
        std::vector<Conjunct> next;
        next.reserve(out.size() * sub.size());
        for (const auto& a : out) {
          for (const auto& b : sub) {
            Conjunct merged = a;
            merged.insert(merged.end(), b.begin(), b.end());
            next.push_back(std::move(merged));
          }
        }
        out = std::move(next);
      }
      return out;
    }
  }
  return {};
}

}  // namespace

SafeSet compile_safety_expr(const SafetyExpr& expr, const Network& net, bool prune) {
  std::vector<Box> boxes;
  for (const auto& conj : to_dnf(expr, net)) {
    Box b = state_space_box(net);
    for (auto [l, r] : conj) b.set_upper(l, std::min(b.upper(l), r));
    boxes.push_back(std::move(b));
  }
  SafeSet out(state_space_box(net), std::move(boxes));
  if (prune) out.prune_subsumed();
  return out;
}

bool safe_contains(const SafeSet& safe, const State& x) { return safe.contains(x); }

namespace {

// Depth-first enumeration of the cells of domain \ S. A region is refined by
// the complement half-spaces of the first box it still meets; once it meets
// none it is an unsafe piece.
void nearest_unsafe(const SafeSet& safe, const Box& region, std::span<const double> x, double& best) {
  if (region.distance(x) >= best) return;
  const auto& boxes = safe.boxes();
  const Box* hit = nullptr;
  for (const auto& b : boxes) {
    if (box_intersect(region, b)) {
      hit = &b;
      break;
    }
  }
  if (!hit) {
    best = std::min(best, region.distance(x));
    return;
  }
  const Box& dom = safe.domain();
  for (std::size_t d = 0; d < region.dims(); ++d) {
    if (hit->upper(d) < dom.upper(d) || (hit->upper(d) == dom.upper(d) && hit->upper_open(d) && !dom.upper_open(d))) {
      Box half = region;
      // complement of (.. <= h] is (h, ..), of (.. < h) is [h, ..)
      half.set_lower(d, hit->upper(d), !hit->upper_open(d));
      if (auto next = box_intersect(region, half)) nearest_unsafe(safe, *next, x, best);
    }
    if (hit->lower(d) > dom.lower(d) || (hit->lower(d) == dom.lower(d) && hit->lower_open(d) && !dom.lower_open(d))) {
      Box half = region;
      half.set_upper(d, hit->lower(d), !hit->lower_open(d));
      if (auto next = box_intersect(region, half)) nearest_unsafe(safe, *next, x, best);
    }
  }
}

}  // namespace

double robustness(const SafeSet& safe, const State& x) {
  if (safe.contains(x)) {
    double best = std::numeric_limits<double>::infinity();
    nearest_unsafe(safe, safe.domain(), x, best);
    return best;
  }
  double best = std::numeric_limits<double>::infinity();
  for (const auto& b : safe.boxes()) best = std::min(best, b.distance(x));
  return -best;
}

}  // namespace safempc
