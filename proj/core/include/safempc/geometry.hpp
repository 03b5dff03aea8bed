#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "safempc/network.hpp"

namespace safempc {

/// Axis-aligned hyper-rectangle with per-face openness.
class Box {
 public:
  Box() = default;
  /// Closed box [lower, upper].
  Box(std::vector<double> lower, std::vector<double> upper);

  std::size_t dims() const noexcept { return lower_.size(); }
  double lower(std::size_t d) const { return lower_[d]; }
  double upper(std::size_t d) const { return upper_[d]; }
  bool lower_open(std::size_t d) const { return lower_open_[d] != 0; }
  bool upper_open(std::size_t d) const { return upper_open_[d] != 0; }
  const std::vector<double>& lowers() const noexcept { return lower_; }
  const std::vector<double>& uppers() const noexcept { return upper_; }

  void set_lower(std::size_t d, double v, bool open = false);
  void set_upper(std::size_t d, double v, bool open = false);

  bool empty() const;
  bool contains(std::span<const double> x) const;
  /// Euclidean distance from x to the closure of the box.
  double distance(std::span<const double> x) const;
  /// Point-set inclusion, respecting openness.
  bool subset_of(const Box& other) const;
  double volume() const;

  std::string str() const;

  friend bool operator==(const Box&, const Box&) = default;

 private:
  std::vector<double> lower_, upper_;
  std::vector<std::uint8_t> lower_open_, upper_open_;
};

/// Intersection; nullopt when empty. Coinciding faces keep the stricter flag.
std::optional<Box> box_intersect(const Box& a, const Box& b);

/// Boolean combination of atoms x_link <= bound.
class SafetyExpr {
 public:
  enum class Kind { atom, all, any };

  static SafetyExpr atom(std::string link, double bound);
  static SafetyExpr all_of(std::vector<SafetyExpr> children);
  static SafetyExpr any_of(std::vector<SafetyExpr> children);

  Kind kind() const noexcept { return kind_; }
  const std::string& link() const noexcept { return link_; }
  double bound() const noexcept { return bound_; }
  const std::vector<SafetyExpr>& children() const noexcept { return children_; }

  /// Direct truth value at x (no compilation).
  bool evaluate(const Network& net, const State& x) const;

 private:
  Kind kind_ = Kind::atom;
  std::string link_;
  double bound_ = 0.0;
  std::vector<SafetyExpr> children_;
};

/// Finite union of boxes inside the state space `domain`.
class SafeSet {
 public:
  SafeSet(Box domain, std::vector<Box> boxes);

  const Box& domain() const noexcept { return domain_; }
  const std::vector<Box>& boxes() const noexcept { return boxes_; }
  bool empty() const noexcept { return boxes_.empty(); }

  bool contains(std::span<const double> x) const;
  /// Finite box faces strictly inside the domain, per dimension, sorted.
  std::vector<std::vector<double>> thresholds() const;
  /// Drops boxes contained in another box of the union.
  void prune_subsumed();

 private:
  Box domain_;
  std::vector<Box> boxes_;
};

/// Box of the whole state space [0, cap].
Box state_space_box(const Network& net);

/// DNF expansion of the expression into one box per conjunct.
SafeSet compile_safety_expr(const SafetyExpr& expr, const Network& net, bool prune = true);

bool safe_contains(const SafeSet& safe, const State& x);

/// Signed distance to violation: positive inside (distance to the closest
/// unsafe point of the domain, +inf when none exists), negative outside.
double robustness(const SafeSet& safe, const State& x);

}  // namespace safempc
