#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "safempc/geometry.hpp"
#include "safempc/network.hpp"
#include "safempc/reach.hpp"

namespace safempc {

using CellId = std::uint32_t;
/// Membership flag per cell.
using CellMask = std::vector<std::uint8_t>;

/// Product grid over the state space. Along each link the intervals are
/// [b0,b1], (b1,b2], ..., (b_{N-1}, cap].
class PartitionGrid {
 public:
  explicit PartitionGrid(std::vector<std::vector<double>> breakpoints);

  std::size_t dims() const noexcept { return breaks_.size(); }
  std::size_t intervals(std::size_t d) const { return breaks_[d].size() - 1; }
  const std::vector<double>& breakpoints(std::size_t d) const { return breaks_[d]; }
  std::size_t cell_count() const noexcept { return count_; }

  std::size_t locate_coord(std::size_t d, double v) const;
  CellId locate(std::span<const double> x) const;

  std::vector<std::size_t> coords(CellId q) const;
  CellId id(std::span<const std::size_t> coords) const;

  /// P(q) with its half-open faces.
  Box cell_box(CellId q) const;
  /// Topological closure of P(q).
  ReachBox cell_closure(CellId q) const;

  /// Calls fn(q) for every cell whose coordinates lie in [lo, hi]; stops early
  /// when fn returns false. Returns false iff stopped early.
  bool for_each_in_range(std::span<const std::size_t> lo, std::span<const std::size_t> hi,
                         const std::function<bool(CellId)>& fn) const;
  /// Cells meeting the closed box.
  bool for_each_meeting(const ReachBox& box, const std::function<bool(CellId)>& fn) const;

 private:
  std::vector<std::vector<double>> breaks_;
  std::vector<std::size_t> stride_;
  std::size_t count_ = 0;
};

/// Grid whose breakpoints are the safe set's thresholds plus `extra` (one
/// list per link, may be empty).
PartitionGrid build_partition(const Network& net, const SafeSet& safe,
                              const std::vector<std::vector<double>>& extra = {});

/// Cells whose whole box lies in the safe set. Requires every threshold of
/// the safe set to be a grid breakpoint.
CellMask label_cells(const PartitionGrid& grid, const SafeSet& safe);

/// Non-deterministic finite abstraction: successors(q, u) over-approximates
/// every one-step behaviour from P(q) under control index u.
class TransitionSystem {
 public:
  struct Edge {
    CellId cell;
    std::uint32_t control;
  };

  std::size_t num_cells() const noexcept { return cells_; }
  std::size_t num_controls() const noexcept { return controls_; }
  std::size_t num_transitions() const noexcept { return succ_.size(); }

  bool built(CellId q) const { return built_[q] != 0; }
  std::span<const CellId> successors(CellId q, std::size_t u) const;
  /// (q, u) pairs with q' among successors(q, u).
  std::span<const Edge> predecessors(CellId target) const;
  const CellMask& safe() const noexcept { return safe_; }

  /// "cell control succ..." lines, one per built (cell, control).
  void write_edge_list(std::ostream& os, const std::vector<ControlPattern>& controls) const;

 private:
  friend TransitionSystem build_transitions(const Network&, const PartitionGrid&, const CellMask&, bool);

  std::size_t cells_ = 0;
  std::size_t controls_ = 0;
  std::vector<std::size_t> offset_;  // (q * controls + u) -> begin in succ_
  std::vector<CellId> succ_;
  std::vector<std::size_t> pred_offset_;
  std::vector<Edge> pred_;
  CellMask built_;
  CellMask safe_;
};

/// Builds successors for every cell (or only for safe cells when
/// `safe_only`) from the interval reach of each cell's closure.
TransitionSystem build_transitions(const Network& net, const PartitionGrid& grid, const CellMask& safe,
                                   bool safe_only = false);

}  // namespace safempc
