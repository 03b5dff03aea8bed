#pragma once

// Reference implementations used by the tests. They work from the raw
// NetworkSpec and the transition relation only and share no code with the
// library's algorithms.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "safempc/abstraction.hpp"
#include "safempc/games.hpp"
#include "safempc/network.hpp"
#include "safempc/scenario.hpp"

namespace oracle {

using safempc::State;

/// Dynamics evaluated straight from the NetworkSpec.
class Dynamics {
 public:
  explicit Dynamics(const safempc::NetworkSpec& spec);

  std::size_t size() const { return cap_.size(); }
  double outflow(const State& x, const std::vector<int>& u, std::size_t l) const;
  State step(const State& x, const std::vector<int>& u, const State& d) const;
  double step_link(const State& x, const std::vector<int>& u, const State& d, std::size_t l) const;
  /// Links sharing an upstream feeder with l.
  const std::vector<std::size_t>& adjacent(std::size_t l) const { return adj_[l]; }
  const std::vector<double>& capacity() const { return cap_; }

  /// Corner bounds of the one-step image of [lo, hi] under u and demand [dlo, dhi].
  void image_bounds(const State& lo, const State& hi, const std::vector<int>& u, const State& dlo, const State& dhi,
                    State& out_lo, State& out_hi) const;

 private:
  struct Edge {
    std::size_t other;
    double beta;
    double alpha;
  };
  std::vector<double> cap_, sat_;
  std::vector<std::vector<Edge>> down_, up_;
  std::vector<std::vector<std::size_t>> adj_;
};

std::vector<int> bits(const safempc::ControlPattern& u);

/// Greatest fixpoint by repeated sweeps: keep q while some control keeps
/// every successor inside.
safempc::WinningSet naive_safety(const safempc::TransitionSystem& ts, const safempc::CellMask& safe);

/// Attractor by layers: layer k+1 = cells outside with a control whose
/// successors all lie in layers <= k; the lowest such control is recorded.
safempc::Attractor naive_reachability(const safempc::TransitionSystem& ts, const safempc::CellMask& target);

/// Cells of the grid (given by breakpoints) meeting the closed box, by
/// linear scan of every dimension.
std::vector<std::uint32_t> cells_meeting(const std::vector<std::vector<double>>& breaks, const State& lo,
                                         const State& hi);

/// Whole abstraction rebuilt from scratch: successor lists per (cell,
/// control) and safe labels from corner evaluation of the expression.
struct Abstraction {
  std::vector<std::vector<double>> breaks;
  std::size_t cells = 0;
  std::size_t controls = 0;
  std::vector<std::uint8_t> safe;
  std::vector<std::vector<std::uint32_t>> succ;  // index q * controls + u
};

Abstraction build_abstraction(const safempc::NetworkSpec& spec, const std::vector<safempc::ControlPattern>& controls,
                              const std::vector<std::vector<double>>& breaks,
                              const std::function<bool(const State&)>& safe_point);

/// Safety fixpoint on the rebuilt abstraction.
std::vector<std::uint8_t> safety_fixpoint(const Abstraction& a);

/// Signed distance to the unsafe region of a safe set that is a union of
/// cells of the grid spanned by `breaks`: min over unsafe cells of the
/// distance to their closure (inside), minus distance to the nearest safe
/// cell (outside).
double robustness(const std::vector<std::vector<double>>& breaks, const std::function<bool(const State&)>& safe_point,
                  const State& x);

/// Path of a bundled scenario file.
std::filesystem::path scenario_path(const std::string& name);
safempc::Scenario load(const std::string& name);

/// The two-link example used throughout the tests.
safempc::NetworkSpec desk2_spec();

/// Small random network: entry links feeding one or two internal links.
safempc::NetworkSpec random_spec(std::mt19937_64& rng, std::size_t links);

}  // namespace oracle
