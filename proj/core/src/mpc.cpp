#include "safempc/mpc.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <ostream>

#include "safempc/error.hpp"

namespace safempc {

bool box_in_cellunion(const ReachBox& box, const PartitionGrid& grid, const CellMask& cells) {
  return grid.for_each_meeting(box, [&](CellId q) { return cells[q] != 0; });
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) v = 0.0;  // no "-0"
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

Planner::Planner(const Network& net, const PartitionGrid& grid, CellMask safe_cells, CellMask terminal_cells,
                 MpcConfig cfg)
    : net_(&net), grid_(&grid), safe_(std::move(safe_cells)), terminal_(std::move(terminal_cells)),
      cfg_(std::move(cfg)) {
  if (cfg_.horizon < 1) throw Error(ErrorKind::validation, "horizon must be at least 1");
  if (safe_.size() != grid.cell_count() || terminal_.size() != grid.cell_count())
    throw Error(ErrorKind::validation, "cell masks do not match the grid");
  double sequences = std::pow(static_cast<double>(net.controls().size()), static_cast<double>(cfg_.horizon));
  if (sequences > static_cast<double>(cfg_.enumeration_cap))
    throw Error(ErrorKind::validation, "|U|^H = " + format_number(sequences) + " exceeds the enumeration cap of " +
                                           std::to_string(cfg_.enumeration_cap));
  require_monotone_bounds(net);
}

bool Planner::admissible_union(const ReachUnion& boxes, bool terminal) const {
  const CellMask& mask = terminal ? terminal_ : safe_;
  return std::all_of(boxes.begin(), boxes.end(),
                     [&](const ReachBox& b) { return box_in_cellunion(b, *grid_, mask); });
}

struct Planner::Search {
  std::span<const Demand> nominal;
  std::vector<std::uint32_t> prefix;
  std::optional<Plan> best;
  std::size_t deepest = 0;  // longest feasible prefix seen
};

void Planner::search(Search& s, std::size_t depth, const ReachUnion& frontier, const State& nominal_state,
                     double cost) const {
  const auto& controls = net_->controls();
  const bool last = depth + 1 == cfg_.horizon;
  for (std::uint32_t u = 0; u < controls.size(); ++u) {
    if (frontier.size() * net_->demand().size() > cfg_.branch_cap)
      throw Error(ErrorKind::reach_explosion, "reach explosion: demand branches exceed the cap; use a single demand box");
    ReachUnion next;
    for (const auto& box : frontier) {
      auto step = reach_one(*net_, box, controls[u]);
      next.insert(next.end(), step.begin(), step.end());
    }
    if (!admissible_union(next, last)) continue;
    s.prefix.push_back(u);
    s.deepest = std::max(s.deepest, depth + 1);
    State nominal_next = net_->step(nominal_state, controls[u], s.nominal[depth]);
    double c = cost;
    for (double v : nominal_next) c += v;
    if (last) {
      if (!s.best || c < s.best->cost - cfg_.tolerance) s.best = Plan{s.prefix, c};
    } else {
      search(s, depth + 1, next, nominal_next, c);
    }
    s.prefix.pop_back();
  }
}

std::optional<Plan> Planner::try_plan(const State& x, std::span<const Demand> nominal) const {
  if (nominal.size() < cfg_.horizon) throw Error(ErrorKind::validation, "nominal demand shorter than the horizon");
  Search s{nominal, {}, std::nullopt, 0};
  search(s, 0, ReachUnion{ReachBox::point(x)}, x, 0.0);
  return s.best;
}

Plan Planner::plan(const State& x, std::span<const Demand> nominal) const {
  if (nominal.size() < cfg_.horizon) throw Error(ErrorKind::validation, "nominal demand shorter than the horizon");
  Search s{nominal, {}, std::nullopt, 0};
  search(s, 0, ReachUnion{ReachBox::point(x)}, x, 0.0);
  if (!s.best) {
    std::string why = s.deepest == 0
                          ? "every control leaves the safe cells within one step"
                          : "longest robustly safe prefix has " + std::to_string(s.deepest) + " of " +
                                std::to_string(cfg_.horizon) + " steps";
    throw Error(ErrorKind::infeasible, "infeasible: " + why);
  }
  return *s.best;
}

bool Planner::feasible(const State& x, std::span<const std::uint32_t> sequence) const {
  if (sequence.size() != cfg_.horizon) return false;
  std::vector<ControlPattern> seq;
  for (auto u : sequence) seq.push_back(net_->controls().at(u));
  auto reach = reach_h(*net_, ReachBox::point(x), seq, cfg_.branch_cap);
  for (std::size_t k = 0; k < reach.size(); ++k)
    if (!admissible_union(reach[k], k + 1 == reach.size())) return false;
  return true;
}

double Planner::nominal_cost(const State& x, std::span<const std::uint32_t> sequence,
                             std::span<const Demand> nominal) const {
  State xe = x;
  double cost = 0.0;
  for (std::size_t k = 0; k < sequence.size(); ++k) {
    xe = net_->step(xe, net_->controls().at(sequence[k]), nominal[k]);
    for (double v : xe) cost += v;
  }
  return cost;
}

namespace {

Demand uniform_in(const DemandBox& box, std::mt19937_64& rng) {
  Demand d(box.lower.size());
  for (std::size_t l = 0; l < d.size(); ++l) {
    std::uniform_real_distribution<double> dist(box.lower[l], box.upper[l]);
    d[l] = box.lower[l] == box.upper[l] ? box.lower[l] : dist(rng);
  }
  return d;
}

std::size_t pick_box(const Network& net, std::mt19937_64& rng) {
  const auto& boxes = net.demand();
  if (boxes.size() == 1) return 0;
  std::vector<double> weight;
  for (const auto& b : boxes) {
    double v = 1.0;
    for (std::size_t l = 0; l < b.lower.size(); ++l)
      if (b.upper[l] > b.lower[l]) v *= b.upper[l] - b.lower[l];
    weight.push_back(v);
  }
  std::discrete_distribution<std::size_t> dist(weight.begin(), weight.end());
  return dist(rng);
}

}  // namespace

Demand sample_demand(const Network& net, DemandSampler sampler, std::mt19937_64& rng) {
  const auto& boxes = net.demand();
  switch (sampler) {
    case DemandSampler::uniform: return uniform_in(boxes[pick_box(net, rng)], rng);
    case DemandSampler::corner: {
      const auto& box = boxes[pick_box(net, rng)];
      Demand d(box.lower.size());
      std::bernoulli_distribution coin(0.5);
      for (std::size_t l = 0; l < d.size(); ++l) d[l] = coin(rng) ? box.upper[l] : box.lower[l];
      return d;
    }
    case DemandSampler::greedy: {
      // heaviest arrivals: the upper corner of the box with the largest total
      std::size_t best = 0;
      double total = -1.0;
      for (std::size_t b = 0; b < boxes.size(); ++b) {
        double s = 0.0;
        for (double v : boxes[b].upper) s += v;
        if (s > total) {
          total = s;
          best = b;
        }
      }
      return boxes[best].upper;
    }
  }
  return boxes.front().lower;
}

std::vector<Demand> nominal_demands(const Network& net, const MpcConfig& cfg, std::size_t t, std::mt19937_64& rng) {
  std::vector<Demand> out;
  out.reserve(cfg.horizon);
  const auto& box = net.demand().front();
  for (std::size_t k = 0; k < cfg.horizon; ++k) {
    switch (cfg.nominal) {
      case NominalPolicy::midpoint: {
        Demand d(box.lower.size());
        for (std::size_t l = 0; l < d.size(); ++l) d[l] = 0.5 * (box.lower[l] + box.upper[l]);
        out.push_back(std::move(d));
        break;
      }
      case NominalPolicy::constant:
        if (cfg.nominal_values.empty()) throw Error(ErrorKind::validation, "constant nominal demand needs a value");
        out.push_back(cfg.nominal_values.front());
        break;
      case NominalPolicy::sequence:
        if (cfg.nominal_values.empty()) throw Error(ErrorKind::validation, "nominal demand sequence is empty");
        out.push_back(cfg.nominal_values[(t + k) % cfg.nominal_values.size()]);
        break;
      case NominalPolicy::random: out.push_back(sample_demand(net, DemandSampler::uniform, rng)); break;
    }
    if (out.back().size() != net.size()) throw Error(ErrorKind::validation, "nominal demand has wrong dimension");
  }
  return out;
}

double Trace::min_rho() const {
  double m = final_rho;
  for (const auto& s : steps) m = std::min(m, s.rho);
  return m;
}

double Trace::total_cost() const {
  double c = 0.0;
  for (std::size_t k = 1; k < steps.size(); ++k)
    for (double v : steps[k].x) c += v;
  for (double v : final_state) c += v;
  return c;
}

void Trace::write_csv(std::ostream& os, const Network& net) const {
  const std::size_t n = net.size();
  os << "step";
  for (std::size_t l = 0; l < n; ++l) os << ",x_" << net.name(l);
  for (std::size_t l = 0; l < n; ++l) os << ",u_" << net.name(l);
  for (std::size_t l = 0; l < n; ++l) os << ",d_" << net.name(l);
  os << ",cost,rho,feasible\n";
  for (const auto& s : steps) {
    os << s.t;
    for (double v : s.x) os << ',' << format_number(v);
    for (std::size_t l = 0; l < n; ++l) os << ',' << (s.u.green(l) ? 1 : 0);
    for (double v : s.d) os << ',' << format_number(v);
    os << ',' << format_number(s.cost) << ',' << format_number(s.rho) << ',' << (s.feasible ? 1 : 0) << '\n';
  }
}

namespace {

std::vector<std::uint32_t> shifted(const std::vector<std::uint32_t>& seq, std::uint32_t tail) {
  std::vector<std::uint32_t> out(seq.begin() + 1, seq.end());
  out.push_back(tail);
  return out;
}

}  // namespace

Trace closed_loop(const Network& net, const SafeSet& safe, const PartitionGrid& grid, const CellMask& safe_cells,
                  const WinningSet& win, const MpcConfig& cfg, const State& x0, const ClosedLoopOptions& opts,
                  const Attractor* approach) {
  if (!net.in_state_space(x0)) throw Error(ErrorKind::validation, "initial state outside the state space");
  if (win.empty()) throw Error(ErrorKind::empty_winning_set, "closed loop needs a non-empty terminal set");
  Planner planner(net, grid, safe_cells, win.member, cfg);

  std::mt19937_64 demand_rng(opts.seed);
  std::mt19937_64 nominal_rng(opts.seed ^ 0x9e3779b97f4a7c15ULL);

  Trace trace;
  State x = x0;
  std::optional<Plan> previous;
  const std::uint32_t num_controls = static_cast<std::uint32_t>(net.controls().size());

  for (std::size_t t = 0; t < opts.steps; ++t) {
    TraceStep step;
    step.t = t;
    step.x = x;
    step.rho = robustness(safe, x);

    auto nominal = nominal_demands(net, cfg, t, nominal_rng);

    std::optional<std::vector<std::uint32_t>> witness;
    if (previous) {
      for (std::uint32_t u = 0; u < num_controls && !witness; ++u) {
        auto cand = shifted(previous->sequence, u);
        if (planner.feasible(x, cand)) witness = std::move(cand);
      }
      step.witness = witness.has_value();
      if (!witness) ++trace.witness_failures;
    }

    auto plan = planner.try_plan(x, nominal);
    if (plan) {
      step.feasible = true;
      step.mode = StepMode::mpc;
      step.control = plan->sequence.front();
      step.cost = plan->cost;
      trace.started_feasible = true;
      previous = plan;
    } else {
      step.feasible = false;
      step.cost = std::numeric_limits<double>::quiet_NaN();
      const CellId q = grid.locate(x);
      if (trace.started_feasible) {
        ++trace.infeasible_events;
        step.mode = StepMode::fallback;
      } else {
        step.mode = StepMode::approach;
        ++trace.approach_steps;
      }
      if (witness) {
        step.control = witness->front();
        previous = Plan{*witness, planner.nominal_cost(x, *witness, nominal)};
      } else if (win.contains(q)) {
        step.control = win.admissible[q].front();
        previous.reset();
      } else if (approach && approach->contains(q) && approach->control[q] != Attractor::kOutside) {
        step.control = static_cast<std::uint32_t>(approach->control[q]);
        previous.reset();
      } else {
        throw Error(ErrorKind::unrecoverable,
                    "unrecoverable state at step " + std::to_string(t) +
                        ": no feasible plan and the cell is outside the terminal set and its attractor");
      }
    }
    step.u = net.controls()[step.control];
    step.d = sample_demand(net, opts.sampler, demand_rng);
    x = net.step(x, step.u, step.d);
    trace.steps.push_back(std::move(step));
  }
  trace.final_state = x;
  trace.final_rho = robustness(safe, x);
  return trace;
}

}  // namespace safempc
