#include "safempc/pipeline.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "safempc/error.hpp"
#include "safempc/milp.hpp"

namespace safempc {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::string fixed3(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string hex(std::uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::io, "cannot create output directory " + dir.string() + ": " + ec.message());
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw Error(ErrorKind::io, "cannot write " + p.string());
  return os;
}

Synthesis prepare(const Scenario& sc) {
  auto t0 = Clock::now();
  Network net = Network::validate(sc.network);
  SafeSet safe = scenario_safe_set(sc, net);
  PartitionGrid grid = build_partition(net, safe, sc.extra_breakpoints);
  CellMask safe_cells = label_cells(grid, safe);
  Synthesis syn{std::move(net), std::move(safe), std::move(grid), std::move(safe_cells), {}, {}, 0, 0.0, 0.0, 0.0,
                false};
  syn.partition_ms = ms_since(t0);
  return syn;
}

void write_summary(std::ostream& os, const Scenario& sc, const Synthesis& syn) {
  os << "scenario: " << sc.name << '\n';
  os << "links: " << syn.net.size() << '\n';
  os << "controls: " << syn.net.controls().size() << '\n';
  os << "cells |Q|: " << syn.grid.cell_count() << '\n';
  os << "safe cells |Q^S|: " << syn.safe_count() << '\n';
  os << "winning cells |Q^I|: " << syn.win.size() << '\n';
  os << "attractor cells: " << syn.approach.size() << '\n';
  os << "transitions: " << syn.transitions << '\n';
  os << "partition_ms: " << fixed3(syn.partition_ms) << '\n';
  os << "transitions_ms: " << fixed3(syn.transitions_ms) << '\n';
  os << "game_ms: " << fixed3(syn.game_ms) << '\n';
}

}  // namespace

std::size_t Synthesis::safe_count() const {
  std::size_t n = 0;
  for (auto f : safe_cells) n += f != 0;
  return n;
}

SafeSet scenario_safe_set(const Scenario& sc, const Network& net) {
  if (sc.safety) return compile_safety_expr(*sc.safety, net);
  Box x = state_space_box(net);
  return SafeSet(x, {x});
}

Synthesis synthesize(const Scenario& sc) {
  Synthesis syn = prepare(sc);
  auto t0 = Clock::now();
  TransitionSystem ts = build_transitions(syn.net, syn.grid, syn.safe_cells);
  syn.transitions = ts.num_transitions();
  syn.transitions_ms = ms_since(t0);
  t0 = Clock::now();
  syn.win = safety_game(ts, syn.safe_cells);
  syn.approach = reachability_game(ts, syn.win.member);
  syn.game_ms = ms_since(t0);
  return syn;
}

fs::path cache_path(const Scenario& sc, const fs::path& out) { return out / (sc.name + ".synthesis.json"); }

void write_cache(const Synthesis& syn, std::uint64_t scenario_hash, const fs::path& path) {
  json j;
  j["hash"] = hex(scenario_hash);
  j["cells"] = syn.grid.cell_count();
  j["transitions"] = syn.transitions;
  json cells = json::array(), controls = json::array();
  for (CellId q : syn.win.cells()) {
    cells.push_back(q);
    controls.push_back(syn.win.admissible[q]);
  }
  j["winning"] = {{"cells", cells}, {"controls", controls}};
  j["approach"] = {{"steps", syn.approach.steps}, {"control", syn.approach.control}};
  j["timings_ms"] = {{"partition", syn.partition_ms}, {"transitions", syn.transitions_ms}, {"game", syn.game_ms}};
  auto os = open_out(path);
  os << j.dump(1) << '\n';
}

std::optional<Synthesis> load_cache(const Scenario& sc, const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  json j;
  try {
    j = json::parse(in);
    if (j.at("hash").get<std::string>() != hex(sc.hash)) return std::nullopt;
    Synthesis syn = prepare(sc);
    const std::size_t n = syn.grid.cell_count();
    if (j.at("cells").get<std::size_t>() != n) return std::nullopt;
    syn.win.member.assign(n, 0);
    syn.win.admissible.assign(n, {});
    const auto& cells = j.at("winning").at("cells");
    const auto& controls = j.at("winning").at("controls");
    if (cells.size() != controls.size()) return std::nullopt;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      auto q = cells[i].get<CellId>();
      if (q >= n) return std::nullopt;
      syn.win.member[q] = 1;
      syn.win.admissible[q] = controls[i].get<std::vector<std::uint32_t>>();
    }
    syn.approach.steps = j.at("approach").at("steps").get<std::vector<int>>();
    syn.approach.control = j.at("approach").at("control").get<std::vector<int>>();
    if (syn.approach.steps.size() != n || syn.approach.control.size() != n) return std::nullopt;
    syn.transitions = j.at("transitions").get<std::size_t>();
    syn.transitions_ms = j.at("timings_ms").at("transitions").get<double>();
    syn.game_ms = j.at("timings_ms").at("game").get<double>();
    syn.from_cache = true;
    return syn;
  } catch (const json::exception&) {
    return std::nullopt;
  }
}

SynthesizeResult cmd_synthesize(const Scenario& sc, const fs::path& out, std::ostream& log) {
  ensure_dir(out);
  Synthesis syn = synthesize(sc);
  SynthesizeResult res{std::move(syn), out / (sc.name + ".summary.txt"), out / (sc.name + ".winning.txt"),
                       cache_path(sc, out)};
  std::ostringstream summary;
  write_summary(summary, sc, res.synthesis);
  {
    auto os = open_out(res.summary_path);
    os << summary.str();
  }
  log << summary.str();
  if (res.synthesis.win.empty())
    throw Error(ErrorKind::empty_winning_set,
                "winning set is empty for scenario '" + sc.name +
                    "'; refine the partition (add breakpoints) or relax the safety expression");
  {
    auto os = open_out(res.table_path);
    os << "# cell: admissible control indices\n";
    os << "# controls:";
    for (const auto& u : res.synthesis.net.controls()) os << ' ' << u.str();
    os << '\n';
    res.synthesis.win.write_table(os);
  }
  write_cache(res.synthesis, sc.hash, res.cache_path);
  return res;
}

RunResult cmd_run(const Scenario& sc, const fs::path& out, std::ostream& log) {
  ensure_dir(out);
  RunResult res{};
  std::optional<Synthesis> syn = load_cache(sc, cache_path(sc, out));
  if (syn) {
    res.used_cache = true;
  } else {
    log << "no matching synthesis cache in " << out.string() << "; synthesizing\n";
    syn = cmd_synthesize(sc, out, log).synthesis;
  }
  if (syn->win.empty())
    throw Error(ErrorKind::empty_winning_set, "winning set is empty; refine the partition");

  ClosedLoopOptions opts;
  opts.steps = sc.steps;
  opts.seed = sc.seed;
  opts.sampler = sc.sampler;
  res.trace = closed_loop(syn->net, syn->safe, syn->grid, syn->safe_cells, syn->win, sc.mpc, sc.initial_state, opts,
                          &syn->approach);

  const std::string stem = sc.name + "_seed" + std::to_string(sc.seed);
  res.csv_path = out / (stem + ".csv");
  res.summary_path = out / (stem + ".summary.txt");
  {
    auto os = open_out(res.csv_path);
    res.trace.write_csv(os, syn->net);
  }
  std::ostringstream summary;
  summary << "scenario: " << sc.name << '\n';
  summary << "seed: " << sc.seed << '\n';
  summary << "steps: " << res.trace.steps.size() << '\n';
  summary << "horizon: " << sc.mpc.horizon << '\n';
  summary << "min_rho: " << format_number(res.trace.min_rho()) << '\n';
  summary << "total_cost: " << format_number(res.trace.total_cost()) << '\n';
  summary << "infeasible_events: " << res.trace.infeasible_events << '\n';
  summary << "witness_failures: " << res.trace.witness_failures << '\n';
  summary << "approach_steps: " << res.trace.approach_steps << '\n';
  if (!res.trace.started_feasible)
    summary << "note: no feasible plan was found during the run\n";
  else if (res.trace.approach_steps > 0)
    summary << "note: initial state infeasible; " << res.trace.approach_steps
            << " pre-phase steps steered by the reachability game\n";
  summary << "synthesis: " << (res.used_cache ? "cache" : "fresh") << '\n';
  {
    auto os = open_out(res.summary_path);
    os << summary.str();
  }
  log << summary.str();
  if (res.trace.infeasible_events > 0)
    throw Error(ErrorKind::infeasible, std::to_string(res.trace.infeasible_events) +
                                           " infeasible plans after a feasible start; see " +
                                           res.summary_path.string());
  return res;
}

fs::path cmd_emit_milp(const Scenario& sc, std::size_t horizon, const fs::path& out, std::ostream& log) {
  ensure_dir(out);
  Network net = Network::validate(sc.network);
  MldOptions opts;
  opts.name = sc.name;
  opts.initial_state = sc.initial_state;
  MldModel model = build_mld(net, horizon, opts);
  const fs::path path = out / (sc.name + "_H" + std::to_string(horizon) + ".lp");
  auto os = open_out(path);
  os << emit_lp(model);
  log << "wrote " << path.string() << " (" << model.variables().size() << " variables, " << model.binary_count()
      << " binary, " << model.rows().size() << " rows)\n";
  return path;
}

}  // namespace safempc
