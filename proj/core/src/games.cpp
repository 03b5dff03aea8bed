#include "safempc/games.hpp"

#include <algorithm>
#include <ostream>

#include "safempc/error.hpp"

namespace safempc {

std::size_t WinningSet::size() const { return static_cast<std::size_t>(std::count(member.begin(), member.end(), 1)); }

std::vector<CellId> WinningSet::cells() const {
  std::vector<CellId> out;
  for (CellId q = 0; q < member.size(); ++q)
    if (member[q]) out.push_back(q);
  return out;
}

void WinningSet::write_table(std::ostream& os) const {
  os << "# cell: admissible control indices\n";
  for (CellId q = 0; q < member.size(); ++q) {
    if (!member[q]) continue;
    os << q << ':';
    for (auto u : admissible[q]) os << ' ' << u;
    os << '\n';
  }
}

std::size_t Attractor::size() const {
  return static_cast<std::size_t>(std::count_if(steps.begin(), steps.end(), [](int s) { return s != kOutside; }));
}

WinningSet safety_game(const TransitionSystem& ts, const CellMask& safe) {
  const std::size_t cells = ts.num_cells();
  const std::size_t controls = ts.num_controls();
  if (safe.size() != cells) throw Error(ErrorKind::validation, "safe mask does not match the transition system");

  WinningSet win;
  win.member.assign(cells, 0);
  for (CellId q = 0; q < cells; ++q) win.member[q] = safe[q] && ts.built(q);

  // escapes[q,u]: successors of (q,u) outside the current set;
  // good[q]: controls with no escape.
  std::vector<std::uint32_t> escapes(cells * controls, 0);
  std::vector<std::uint32_t> good(cells, 0);
  std::vector<CellId> removed;
  for (CellId q = 0; q < cells; ++q) {
    if (!win.member[q]) continue;
    for (std::size_t u = 0; u < controls; ++u) {
      auto succ = ts.successors(q, u);
      auto out = std::count_if(succ.begin(), succ.end(), [&](CellId s) { return !win.member[s]; });
      escapes[q * controls + u] = static_cast<std::uint32_t>(out);
      if (out == 0) ++good[q];
    }
    if (good[q] == 0) removed.push_back(q);
  }
  for (auto q : removed) win.member[q] = 0;

  // Each removal can only break controls of its predecessors.
  while (!removed.empty()) {
    CellId gone = removed.back();
    removed.pop_back();
    for (const auto& e : ts.predecessors(gone)) {
      if (!win.member[e.cell]) continue;
      if (escapes[e.cell * controls + e.control]++ == 0 && --good[e.cell] == 0) {
        win.member[e.cell] = 0;
        removed.push_back(e.cell);
      }
    }
  }

  win.admissible.assign(cells, {});
  for (CellId q = 0; q < cells; ++q) {
    if (!win.member[q]) continue;
    for (std::uint32_t u = 0; u < controls; ++u)
      if (escapes[q * controls + u] == 0) win.admissible[q].push_back(u);
  }
  return win;
}

SafeSet winning_boxes(const WinningSet& win, const PartitionGrid& grid, const Box& domain) {
  if (win.empty())
    throw Error(ErrorKind::empty_winning_set, "no terminal set: the safety game is empty; refine the partition");
  std::vector<Box> boxes;
  for (auto q : win.cells()) boxes.push_back(grid.cell_box(q));
  return SafeSet(domain, std::move(boxes));
}

Attractor reachability_game(const TransitionSystem& ts, const CellMask& target) {
  const std::size_t cells = ts.num_cells();
  const std::size_t controls = ts.num_controls();
  if (target.size() != cells) throw Error(ErrorKind::validation, "target mask does not match the transition system");

  Attractor attr;
  attr.steps.assign(cells, Attractor::kOutside);
  attr.control.assign(cells, Attractor::kOutside);

  // missing[q,u]: successors of (q,u) not yet in the attractor. Unbuilt
  // cells never qualify.
  std::vector<std::uint32_t> missing(cells * controls, 0);
  for (CellId q = 0; q < cells; ++q)
    for (std::size_t u = 0; u < controls; ++u)
      missing[q * controls + u] = ts.built(q) ? static_cast<std::uint32_t>(ts.successors(q, u).size()) : 1;

  std::vector<CellId> layer;
  for (CellId q = 0; q < cells; ++q) {
    if (!target[q]) continue;
    attr.steps[q] = 0;
    for (std::size_t u = 0; u < controls && ts.built(q); ++u) {
      auto succ = ts.successors(q, u);
      if (std::all_of(succ.begin(), succ.end(), [&](CellId s) { return target[s] != 0; })) {
        attr.control[q] = static_cast<int>(u);
        break;
      }
    }
    layer.push_back(q);
  }

  // Layer k+1 collects cells whose last missing successor joined in layer k,
  // so every successor of the chosen control has step <= k.
  for (int k = 0; !layer.empty(); ++k) {
    std::vector<CellId> next;
    for (auto s : layer) {
      for (const auto& e : ts.predecessors(s)) {
        if (attr.steps[e.cell] != Attractor::kOutside) continue;
        if (--missing[e.cell * controls + e.control] == 0) next.push_back(e.cell);
      }
    }
    std::sort(next.begin(), next.end());
    next.erase(std::unique(next.begin(), next.end()), next.end());
    for (auto q : next) {
      attr.steps[q] = k + 1;
      for (std::size_t u = 0; u < controls; ++u) {
        if (missing[q * controls + u] == 0) {
          attr.control[q] = static_cast<int>(u);
          break;
        }
      }
    }
    layer = std::move(next);
  }
  return attr;
}

}  // namespace safempc
