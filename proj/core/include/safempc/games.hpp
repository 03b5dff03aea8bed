#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "safempc/abstraction.hpp"

namespace safempc {

/// Greatest robust controlled invariant cell set together with every control
/// that keeps each member inside it.
struct WinningSet {
  CellMask member;
  std::vector<std::vector<std::uint32_t>> admissible;  // per cell, ascending control indices

  std::size_t size() const;
  bool empty() const { return size() == 0; }
  bool contains(CellId q) const { return member[q] != 0; }
  std::vector<CellId> cells() const;
  /// "cell: u u u" lines for every winning cell.
  void write_table(std::ostream& os) const;
};

/// Cells forced into a target set, with a worst-case step count and the
/// control realizing it.
struct Attractor {
  static constexpr int kOutside = -1;
  std::vector<int> steps;    // kOutside when the target cannot be forced
  std::vector<int> control;  // kOutside when none is recorded

  bool contains(CellId q) const { return steps[q] != kOutside; }
  std::size_t size() const;
};

/// Safety game inside the cells flagged in `safe`.
WinningSet safety_game(const TransitionSystem& ts, const CellMask& safe);

/// Union of the winning cells' boxes. Throws Error(empty_winning_set) when
/// there is nothing to return.
SafeSet winning_boxes(const WinningSet& win, const PartitionGrid& grid, const Box& domain);

/// Reachability game towards `target`.
Attractor reachability_game(const TransitionSystem& ts, const CellMask& target);

}  // namespace safempc
