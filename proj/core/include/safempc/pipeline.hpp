#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>

#include "safempc/abstraction.hpp"
#include "safempc/games.hpp"
#include "safempc/geometry.hpp"
#include "safempc/mpc.hpp"
#include "safempc/network.hpp"
#include "safempc/scenario.hpp"

namespace safempc {

/// Offline artifacts: grid, labels, abstraction, terminal set.
struct Synthesis {
  Network net;
  SafeSet safe;
  PartitionGrid grid;
  CellMask safe_cells;
  WinningSet win;
  Attractor approach;  // cells that can be forced into the winning set
  std::size_t transitions = 0;
  double partition_ms = 0.0;
  double transitions_ms = 0.0;
  double game_ms = 0.0;
  bool from_cache = false;

  std::size_t safe_count() const;
};

/// Safe set of the scenario; S = X when it has no safety expression.
SafeSet scenario_safe_set(const Scenario& sc, const Network& net);

/// Runs the whole offline pipeline in memory.
Synthesis synthesize(const Scenario& sc);

struct SynthesizeResult {
  Synthesis synthesis;
  std::filesystem::path summary_path;
  std::filesystem::path table_path;
  std::filesystem::path cache_path;
};

/// synthesize + write the winning table, a summary and the cache file into
/// `out`. Throws Error(empty_winning_set) with a refinement hint.
SynthesizeResult cmd_synthesize(const Scenario& sc, const std::filesystem::path& out, std::ostream& log);

struct RunResult {
  Trace trace;
  std::filesystem::path csv_path;
  std::filesystem::path summary_path;
  bool used_cache = false;
};

/// Closed loop from the scenario's initial state; reuses a matching cache in
/// `out` or synthesizes first. Throws Error(infeasible) if an infeasible plan
/// occurs after a feasible start.
RunResult cmd_run(const Scenario& sc, const std::filesystem::path& out, std::ostream& log);

/// Writes `<scenario>_H<h>.lp` into `out` and returns its path.
std::filesystem::path cmd_emit_milp(const Scenario& sc, std::size_t horizon, const std::filesystem::path& out,
                                    std::ostream& log);

/// Cache I/O; load returns nullopt when the file is missing or stale.
void write_cache(const Synthesis& syn, std::uint64_t scenario_hash, const std::filesystem::path& path);
std::optional<Synthesis> load_cache(const Scenario& sc, const std::filesystem::path& path);

std::filesystem::path cache_path(const Scenario& sc, const std::filesystem::path& out);

}  // namespace safempc
