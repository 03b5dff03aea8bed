#include "safempc/abstraction.hpp"

#include <algorithm>
#include <limits>
#include <ostream>

#include "safempc/error.hpp"

namespace safempc {

PartitionGrid::PartitionGrid(std::vector<std::vector<double>> breakpoints) : breaks_(std::move(breakpoints)) {
  stride_.assign(breaks_.size(), 1);
  std::size_t count = 1;
  for (std::size_t d = breaks_.size(); d-- > 0;) {
    const auto& b = breaks_[d];
    if (b.size() < 2) throw Error(ErrorKind::validation, "partition needs at least one interval per link");
    for (std::size_t i = 1; i < b.size(); ++i)
      if (!(b[i] > b[i - 1])) throw Error(ErrorKind::validation, "partition breakpoints must increase strictly");
    stride_[d] = count;
    if (count > std::numeric_limits<CellId>::max() / (b.size() - 1))
      throw Error(ErrorKind::validation, "partition has too many cells");
    count *= b.size() - 1;
  }
  count_ = count;
}

std::size_t PartitionGrid::locate_coord(std::size_t d, double v) const {
  const auto& b = breaks_[d];
  auto it = std::lower_bound(b.begin() + 1, b.end(), v);
  auto k = static_cast<std::size_t>(it - (b.begin() + 1));
  return std::min(k, b.size() - 2);
}

CellId PartitionGrid::locate(std::span<const double> x) const {
  std::size_t q = 0;
  for (std::size_t d = 0; d < dims(); ++d) q += locate_coord(d, x[d]) * stride_[d];
  return static_cast<CellId>(q);
}

std::vector<std::size_t> PartitionGrid::coords(CellId q) const {
  std::vector<std::size_t> c(dims());
  std::size_t rest = q;
  for (std::size_t d = 0; d < dims(); ++d) {
    c[d] = rest / stride_[d];
    rest %= stride_[d];
  }
  return c;
}

CellId PartitionGrid::id(std::span<const std::size_t> c) const {
  std::size_t q = 0;
  for (std::size_t d = 0; d < dims(); ++d) q += c[d] * stride_[d];
  return static_cast<CellId>(q);
}

Box PartitionGrid::cell_box(CellId q) const {
  auto c = coords(q);
  Box box{std::vector<double>(dims()), std::vector<double>(dims())};
  for (std::size_t d = 0; d < dims(); ++d) {
    box.set_lower(d, breaks_[d][c[d]], c[d] > 0);
    box.set_upper(d, breaks_[d][c[d] + 1], false);
  }
  return box;
}

ReachBox PartitionGrid::cell_closure(CellId q) const {
  auto c = coords(q);
  ReachBox box{State(dims()), State(dims())};
  for (std::size_t d = 0; d < dims(); ++d) {
    box.lower[d] = breaks_[d][c[d]];
    box.upper[d] = breaks_[d][c[d] + 1];
  }
  return box;
}

bool PartitionGrid::for_each_in_range(std::span<const std::size_t> lo, std::span<const std::size_t> hi,
                                      const std::function<bool(CellId)>& fn) const {
  std::vector<std::size_t> c(lo.begin(), lo.end());
  const std::size_t n = dims();
  while (true) {
    if (!fn(id(c))) return false;
    std::size_t d = n;
    while (d-- > 0) {
      if (c[d] < hi[d]) {
        ++c[d];
        break;
      }
      c[d] = lo[d];
    }
    if (d == static_cast<std::size_t>(-1)) return true;
  }
}

bool PartitionGrid::for_each_meeting(const ReachBox& box, const std::function<bool(CellId)>& fn) const {
  std::vector<std::size_t> lo(dims()), hi(dims());
  for (std::size_t d = 0; d < dims(); ++d) {
    lo[d] = locate_coord(d, box.lower[d]);
    hi[d] = locate_coord(d, box.upper[d]);
  }
  return for_each_in_range(lo, hi, fn);
}

PartitionGrid build_partition(const Network& net, const SafeSet& safe,
                              const std::vector<std::vector<double>>& extra) {
  const std::size_t n = net.size();
  if (!extra.empty() && extra.size() != n)
    throw Error(ErrorKind::validation, "extra breakpoints must list one entry per link");
  auto thresholds = safe.thresholds();
  std::vector<std::vector<double>> breaks(n);
  for (std::size_t l = 0; l < n; ++l) {
    const double cap = net.capacity(l);
    auto& b = breaks[l];
    b.push_back(0.0);
    b.push_back(cap);
    for (double t : thresholds[l]) b.push_back(t);
    if (!extra.empty()) {
      for (double t : extra[l]) {
        if (!(t > 0.0 && t < cap))
          throw Error(ErrorKind::validation,
                      "breakpoint " + std::to_string(t) + " outside the range of link '" + net.name(l) + "'");
        b.push_back(t);
      }
    }
    std::sort(b.begin(), b.end());
    b.erase(std::unique(b.begin(), b.end()), b.end());
  }
  return PartitionGrid(std::move(breaks));
}

CellMask label_cells(const PartitionGrid& grid, const SafeSet& safe) {
  auto thresholds = safe.thresholds();
  for (std::size_t d = 0; d < grid.dims(); ++d) {
    const auto& b = grid.breakpoints(d);
    for (double t : thresholds[d])
      if (!std::binary_search(b.begin(), b.end(), t))
        throw Error(ErrorKind::validation, "partition is missing safe-set threshold " + std::to_string(t) +
                                               " on dimension " + std::to_string(d));
  }
  CellMask mask(grid.cell_count(), 0);
  for (CellId q = 0; q < grid.cell_count(); ++q) {
    Box cell = grid.cell_box(q);
    // aligned faces: a cell is inside the union iff it is inside one box
    mask[q] = std::any_of(safe.boxes().begin(), safe.boxes().end(),
                          [&](const Box& b) { return cell.subset_of(b); });
  }
  return mask;
}

std::span<const CellId> TransitionSystem::successors(CellId q, std::size_t u) const {
  const std::size_t k = q * controls_ + u;
  return {succ_.data() + offset_[k], offset_[k + 1] - offset_[k]};
}

std::span<const TransitionSystem::Edge> TransitionSystem::predecessors(CellId target) const {
  return {pred_.data() + pred_offset_[target], pred_offset_[target + 1] - pred_offset_[target]};
}

void TransitionSystem::write_edge_list(std::ostream& os, const std::vector<ControlPattern>& controls) const {
  os << "# cells " << cells_ << " controls " << controls_ << " transitions " << succ_.size() << '\n';
  for (std::size_t u = 0; u < controls.size(); ++u) os << "# control " << u << ' ' << controls[u].str() << '\n';
  for (CellId q = 0; q < cells_; ++q) {
    if (!built(q)) continue;
    for (std::size_t u = 0; u < controls_; ++u) {
      os << q << ' ' << u;
      for (auto s : successors(q, u)) os << ' ' << s;
      os << '\n';
    }
  }
}

TransitionSystem build_transitions(const Network& net, const PartitionGrid& grid, const CellMask& safe,
                                   bool safe_only) {
  require_monotone_bounds(net);
  if (safe.size() != grid.cell_count()) throw Error(ErrorKind::validation, "label mask does not match grid");

  TransitionSystem ts;
  ts.cells_ = grid.cell_count();
  ts.controls_ = net.controls().size();
  ts.safe_ = safe;
  ts.built_.assign(ts.cells_, 0);
  ts.offset_.assign(ts.cells_ * ts.controls_ + 1, 0);

  std::vector<CellId> scratch;
  for (CellId q = 0; q < ts.cells_; ++q) {
    const bool build = !safe_only || safe[q];
    ts.built_[q] = build;
    const ReachBox closure = grid.cell_closure(q);
    for (std::size_t u = 0; u < ts.controls_; ++u) {
      const std::size_t k = q * ts.controls_ + u;
      if (build) {
        scratch.clear();
        for (const auto& box : reach_one(net, closure, net.controls()[u])) {
          grid.for_each_meeting(box, [&](CellId s) {
            scratch.push_back(s);
            return true;
          });
        }
        std::sort(scratch.begin(), scratch.end());
        scratch.erase(std::unique(scratch.begin(), scratch.end()), scratch.end());
        ts.succ_.insert(ts.succ_.end(), scratch.begin(), scratch.end());
      }
      ts.offset_[k + 1] = ts.succ_.size();
    }
  }

  std::vector<std::size_t> count(ts.cells_ + 1, 0);
  for (auto s : ts.succ_) ++count[s + 1];
  for (std::size_t i = 0; i < ts.cells_; ++i) count[i + 1] += count[i];
  ts.pred_offset_ = count;
  ts.pred_.resize(ts.succ_.size());
  for (CellId q = 0; q < ts.cells_; ++q) {
    for (std::uint32_t u = 0; u < ts.controls_; ++u) {
      for (auto s : ts.successors(q, u)) ts.pred_[count[s]++] = {q, u};
    }
  }
  return ts;
}

}  // namespace safempc
