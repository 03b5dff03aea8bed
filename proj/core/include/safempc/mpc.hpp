#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "safempc/abstraction.hpp"
#include "safempc/games.hpp"
#include "safempc/geometry.hpp"
#include "safempc/network.hpp"
#include "safempc/reach.hpp"

namespace safempc {

/// True iff every grid cell meeting the closed box is flagged in `cells`.
/// Cells partition the state space, so this is exact containment in the
/// union of flagged cells.
bool box_in_cellunion(const ReachBox& box, const PartitionGrid& grid, const CellMask& cells);

/// How the planner predicts demand for the nominal cost.
enum class NominalPolicy { midpoint, constant, sequence, random };

struct MpcConfig {
  std::size_t horizon = 3;
  NominalPolicy nominal = NominalPolicy::midpoint;
  std::vector<Demand> nominal_values;  // constant: one entry; sequence: cycled per time step
  std::uint64_t nominal_seed = 0;
  double tolerance = 1e-9;
  std::size_t enumeration_cap = 100000;
  std::size_t branch_cap = kDefaultBranchCap;
};

struct Plan {
  std::vector<std::uint32_t> sequence;  // control indices, length H
  double cost = 0.0;
};

/// Robust finite-horizon planner over full enumeration of U^H.
class Planner {
 public:
  Planner(const Network& net, const PartitionGrid& grid, CellMask safe_cells, CellMask terminal_cells,
          MpcConfig cfg);

  const MpcConfig& config() const noexcept { return cfg_; }

  /// Cheapest feasible sequence, lexicographically first among ties, or
  /// nullopt when none exists. `nominal` holds H demand predictions.
  std::optional<Plan> try_plan(const State& x, std::span<const Demand> nominal) const;
  /// As try_plan but throws Error(infeasible) with a diagnosis.
  Plan plan(const State& x, std::span<const Demand> nominal) const;

  /// Every reach box at steps 1..H-1 inside the safe cells and every final
  /// box inside the terminal cells.
  bool feasible(const State& x, std::span<const std::uint32_t> sequence) const;
  /// J^e along the nominal prediction.
  double nominal_cost(const State& x, std::span<const std::uint32_t> sequence,
                      std::span<const Demand> nominal) const;

 private:
  struct Search;
  void search(Search& s, std::size_t depth, const ReachUnion& frontier, const State& nominal_state,
              double cost) const;
  bool admissible_union(const ReachUnion& boxes, bool terminal) const;

  const Network* net_;
  const PartitionGrid* grid_;
  CellMask safe_;
  CellMask terminal_;
  MpcConfig cfg_;
};

enum class DemandSampler { uniform, corner, greedy };

enum class StepMode { mpc, fallback, approach };

struct TraceStep {
  std::size_t t = 0;
  State x;
  std::uint32_t control = 0;
  ControlPattern u;
  Demand d;
  double cost = 0.0;  // nominal cost-to-go of the applied plan (NaN off-MPC)
  double rho = 0.0;
  bool feasible = false;
  bool witness = false;  // shifted previous plan was feasible here
  StepMode mode = StepMode::mpc;
};

struct Trace {
  std::vector<TraceStep> steps;
  State final_state;
  double final_rho = std::numeric_limits<double>::infinity();
  std::size_t infeasible_events = 0;  // infeasible plans after a feasible one
  std::size_t witness_failures = 0;   // shifted-plan certificate missing after a feasible step
  std::size_t approach_steps = 0;     // steps before the first feasible plan
  bool started_feasible = false;

  double min_rho() const;  // over visited states including the final one
  double total_cost() const;  // sum of realized vehicles over steps 1..N
  /// step,x_*,u_*,d_*,cost,rho,feasible
  void write_csv(std::ostream& os, const Network& net) const;
};

struct ClosedLoopOptions {
  std::size_t steps = 20;
  std::uint64_t seed = 0;
  DemandSampler sampler = DemandSampler::uniform;
};

/// Demand predictions for time t over the horizon.
std::vector<Demand> nominal_demands(const Network& net, const MpcConfig& cfg, std::size_t t,
                                    std::mt19937_64& rng);

/// One demand draw from the network's demand set.
Demand sample_demand(const Network& net, DemandSampler sampler, std::mt19937_64& rng);

/// Receding-horizon simulation. When the first plans are infeasible the
/// state is steered by the winning-set controls or `approach` until a plan
/// exists. Throws Error(unrecoverable) if neither applies.
Trace closed_loop(const Network& net, const SafeSet& safe, const PartitionGrid& grid, const CellMask& safe_cells,
                  const WinningSet& win, const MpcConfig& cfg, const State& x0, const ClosedLoopOptions& opts,
                  const Attractor* approach = nullptr);

/// Shortest round-trip decimal text for a double.
std::string format_number(double v);

}  // namespace safempc
