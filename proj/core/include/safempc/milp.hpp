#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "safempc/mpc.hpp"
#include "safempc/network.hpp"

namespace safempc {

enum class VarKind { state, control, demand, zmin, flow, znext, selector, clamp };

struct MldVariable {
  std::string name;
  VarKind kind;
  std::size_t link;
  std::size_t step;
  bool binary;
  double lower;
  double upper;
};

enum class Sense { le, ge, eq };

struct MldRow {
  std::string name;
  std::string block;  // zmin, flow, znext, clamp, control, box, init
  std::size_t step;
  std::vector<std::pair<std::size_t, double>> terms;
  Sense sense;
  double rhs;
};

/// Optional linear restrictions on the predicted states.
struct MldOptions {
  std::optional<State> initial_state;  // pins x[0]
  std::optional<ReachBox> safe_box;    // x[1..H] inside
  std::optional<ReachBox> terminal_box;  // x[H] inside
  std::string name = "model";
};

/// Mixed logical dynamical encoding of the network over a horizon.
class MldModel {
 public:
  std::size_t horizon() const noexcept { return horizon_; }
  const std::string& name() const noexcept { return name_; }
  double big_m() const noexcept { return big_m_; }
  double big_m_clamp() const noexcept { return big_m_clamp_; }
  const std::vector<MldVariable>& variables() const noexcept { return vars_; }
  const std::vector<MldRow>& rows() const noexcept { return rows_; }
  const std::vector<std::size_t>& objective() const noexcept { return objective_; }

  std::size_t index(const std::string& var) const;  // throws on unknown
  std::size_t count(VarKind kind) const;
  std::size_t binary_count() const;

  std::size_t state(std::size_t l, std::size_t step) const { return state_.at(step).at(l); }
  std::size_t control(std::size_t l, std::size_t step) const { return control_.at(step).at(l); }
  std::size_t demand(std::size_t l, std::size_t step) const { return demand_.at(step).at(l); }
  std::size_t zmin(std::size_t l, std::size_t step) const { return zmin_.at(step).at(l); }
  std::size_t flow(std::size_t l, std::size_t step) const { return flow_.at(step).at(l); }
  std::size_t znext(std::size_t l, std::size_t step) const { return znext_.at(step).at(l); }
  std::size_t clamp(std::size_t l, std::size_t step) const { return clamp_.at(step).at(l); }
  /// Selector binaries of link l: [x, c, downstream...] in that order.
  const std::vector<std::size_t>& selectors(std::size_t l, std::size_t step) const { return sel_.at(step).at(l); }

 private:
  friend MldModel build_mld(const Network&, std::size_t, const MldOptions&);
  std::size_t add_var(std::string name, VarKind kind, std::size_t link, std::size_t step, bool binary, double lo,
                      double hi);
  void add_row(std::string name, std::string block, std::size_t step,
               std::vector<std::pair<std::size_t, double>> terms, Sense sense, double rhs);

  std::string name_;
  std::size_t horizon_ = 0;
  double big_m_ = 0.0;
  double big_m_clamp_ = 0.0;
  std::vector<MldVariable> vars_;
  std::vector<MldRow> rows_;
  std::vector<std::size_t> objective_;
  std::map<std::string, std::size_t> lookup_;
  std::vector<std::vector<std::size_t>> state_, control_, demand_, zmin_, flow_, znext_, clamp_;
  std::vector<std::vector<std::vector<std::size_t>>> sel_;
};

MldModel build_mld(const Network& net, std::size_t horizon, const MldOptions& opts = {});

/// CPLEX-LP text: objective, constraints, bounds, binaries. Deterministic.
std::string emit_lp(const MldModel& model);

/// Smallest big-M constants for which every relaxed row stays slack over
/// the state space and the demand hull.
struct BigMRequirement {
  double big_m;
  double big_m_clamp;
};
BigMRequirement required_big_m(const Network& net);

struct RowViolation {
  std::size_t step;  // trace step
  std::string row;
  double slack;  // negative amount by which the row fails
};

struct SubstitutionReport {
  std::vector<RowViolation> violations;
  std::size_t transitions = 0;
  std::size_t rows_checked = 0;
  double max_pinning_width = 0.0;   // widest interval left for x[t+1]
  std::vector<std::size_t> unpinned;  // steps whose x[t+1] is not forced to the simulator's value
  bool ok() const { return violations.empty() && unpinned.empty(); }
};

/// Values for every step-0 variable implied by one simulated transition.
/// Ties in the min select the first candidate, unless `selector_choice`
/// names another achieving candidate for link l.
std::vector<double> substitution_assignment(const MldModel& model, const Network& net, const State& x,
                                            const ControlPattern& u, const Demand& d, const State& next,
                                            const std::map<std::size_t, std::size_t>& selector_choice = {});

/// Rows of step 0 violated by `values` beyond `tol` (box/init rows excluded).
std::vector<RowViolation> violated_rows(const MldModel& model, const std::vector<double>& values, double tol);

/// Substitutes every transition of the trace into the step-0 rows and checks
/// that the fixed binaries pin x[t+1] to the simulated value.
SubstitutionReport check_substitution(const MldModel& model, const Network& net, const Trace& trace,
                                      double tol = 1e-9);

SubstitutionReport check_transition(const MldModel& model, const Network& net, const State& x,
                                    const ControlPattern& u, const Demand& d, const State& next,
                                    double tol = 1e-9);

}  // namespace safempc
