#include "safempc/milp.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "safempc/error.hpp"

namespace safempc {

namespace {

std::string sanitize(const std::string& name) {
  std::string out;
  for (char c : name) out.push_back(std::isalnum(static_cast<unsigned char>(c)) ? c : '_');
  return out.empty() ? std::string("_") : out;
}

/// Tags used in variable names; positional when sanitized names collide.
std::vector<std::string> link_tags(const Network& net) {
  std::vector<std::string> tags;
  std::set<std::string> seen;
  bool clash = false;
  for (std::size_t l = 0; l < net.size(); ++l) {
    tags.push_back(sanitize(net.name(l)));
    clash = clash || !seen.insert(tags.back()).second;
  }
  if (clash)
    for (std::size_t l = 0; l < net.size(); ++l) tags[l] = "l" + std::to_string(l + 1);
  return tags;
}

DemandBox demand_hull(const Network& net) {
  DemandBox hull = net.demand().front();
  for (const auto& b : net.demand()) {
    for (std::size_t l = 0; l < net.size(); ++l) {
      hull.lower[l] = std::min(hull.lower[l], b.lower[l]);
      hull.upper[l] = std::max(hull.upper[l], b.upper[l]);
    }
  }
  return hull;
}

double inflow_bound(const Network& net, std::size_t l) {
  double s = 0.0;
  for (const auto& in : net.upstream(l)) s += in.beta * net.saturation(in.link);
  return s;
}

}  // namespace

BigMRequirement required_big_m(const Network& net) {
  const DemandBox hull = demand_hull(net);
  double m = 0.0, mc = 0.0;
  for (std::size_t l = 0; l < net.size(); ++l) {
    // a relaxed lower bound z >= v - M must hold for the largest candidate value v
    m = std::max({m, net.capacity(l), net.saturation(l)});
    for (const auto& t : net.downstream(l)) m = std::max(m, t.ratio() * net.capacity(t.link));
    // z' ranges over [0, cap + inflow + d]; both clamp rows must relax
    mc = std::max({mc, net.capacity(l), inflow_bound(net, l) + hull.upper[l]});
  }
  return {m, mc};
}

std::size_t MldModel::add_var(std::string name, VarKind kind, std::size_t link, std::size_t step, bool binary,
                              double lo, double hi) {
  std::size_t idx = vars_.size();
  lookup_.emplace(name, idx);
  vars_.push_back({std::move(name), kind, link, step, binary, lo, hi});
  return idx;
}

void MldModel::add_row(std::string name, std::string block, std::size_t step,
                       std::vector<std::pair<std::size_t, double>> terms, Sense sense, double rhs) {
  rows_.push_back({std::move(name), std::move(block), step, std::move(terms), sense, rhs});
}

std::size_t MldModel::index(const std::string& var) const {
  auto it = lookup_.find(var);
  if (it == lookup_.end()) throw Error(ErrorKind::validation, "unknown model variable '" + var + "'");
  return it->second;
}

std::size_t MldModel::count(VarKind kind) const {
  return static_cast<std::size_t>(
      std::count_if(vars_.begin(), vars_.end(), [&](const MldVariable& v) { return v.kind == kind; }));
}

std::size_t MldModel::binary_count() const {
  return static_cast<std::size_t>(
      std::count_if(vars_.begin(), vars_.end(), [](const MldVariable& v) { return v.binary; }));
}

MldModel build_mld(const Network& net, std::size_t horizon, const MldOptions& opts) {
  const std::size_t n = net.size();
  const auto tags = link_tags(net);
  const DemandBox hull = demand_hull(net);
  const auto req = required_big_m(net);

  MldModel m;
  m.name_ = opts.name;
  m.horizon_ = horizon;
  m.big_m_ = req.big_m;
  m.big_m_clamp_ = req.big_m_clamp;
  const double M = m.big_m_;
  const double Mc = m.big_m_clamp_;

  auto tag = [&](const char* kind, std::size_t l, std::size_t t) {
    return std::string(kind) + "_" + tags[l] + "_" + std::to_string(t);
  };

  m.state_.resize(horizon + 1);
  for (std::size_t t = 0; t <= horizon; ++t)
    for (std::size_t l = 0; l < n; ++l)
      m.state_[t].push_back(m.add_var(tag("x", l, t), VarKind::state, l, t, false, 0.0, net.capacity(l)));

  m.control_.resize(horizon);
  m.demand_.resize(horizon);
  m.zmin_.resize(horizon);
  m.flow_.resize(horizon);
  m.znext_.resize(horizon);
  m.clamp_.resize(horizon);
  m.sel_.resize(horizon);
  for (std::size_t t = 0; t < horizon; ++t) {
    for (std::size_t l = 0; l < n; ++l) {
      const double c = net.saturation(l);
      m.control_[t].push_back(m.add_var(tag("u", l, t), VarKind::control, l, t, true, 0.0, 1.0));
      m.demand_[t].push_back(m.add_var(tag("d", l, t), VarKind::demand, l, t, false, hull.lower[l], hull.upper[l]));
      m.zmin_[t].push_back(m.add_var(tag("z", l, t), VarKind::zmin, l, t, false, 0.0, c));
      m.flow_[t].push_back(m.add_var(tag("f", l, t), VarKind::flow, l, t, false, 0.0, c));
      m.znext_[t].push_back(m.add_var(tag("zn", l, t), VarKind::znext, l, t, false, 0.0,
                                      net.capacity(l) + inflow_bound(net, l) + hull.upper[l]));
      m.clamp_[t].push_back(m.add_var(tag("w", l, t), VarKind::clamp, l, t, true, 0.0, 1.0));
      std::vector<std::size_t> sel;
      sel.push_back(m.add_var(tag("sx", l, t), VarKind::selector, l, t, true, 0.0, 1.0));
      sel.push_back(m.add_var(tag("sc", l, t), VarKind::selector, l, t, true, 0.0, 1.0));
      for (const auto& k : net.downstream(l))
        sel.push_back(m.add_var("sk_" + tags[l] + "_" + tags[k.link] + "_" + std::to_string(t), VarKind::selector, l,
                                t, true, 0.0, 1.0));
      m.sel_[t].push_back(std::move(sel));
    }

    for (std::size_t l = 0; l < n; ++l) {
      const double c = net.saturation(l);
      const double cap = net.capacity(l);
      const auto x = m.state_[t][l];
      const auto z = m.zmin_[t][l];
      const auto f = m.flow_[t][l];
      const auto u = m.control_[t][l];
      const auto zn = m.znext_[t][l];
      const auto w = m.clamp_[t][l];
      const auto next = m.state_[t + 1][l];
      const auto& sel = m.sel_[t][l];
      const std::string id = tags[l] + "_" + std::to_string(t);

      // z = min{x, c, ratio_k (cap_k - x_k)}: below every candidate, above the selected one
      m.add_row("zx_ub_" + id, "zmin", t, {{z, 1.0}, {x, -1.0}}, Sense::le, 0.0);
      m.add_row("zx_lb_" + id, "zmin", t, {{z, 1.0}, {x, -1.0}, {sel[0], M}}, Sense::ge, 0.0);
      m.add_row("zc_ub_" + id, "zmin", t, {{z, 1.0}}, Sense::le, c);
      m.add_row("zc_lb_" + id, "zmin", t, {{z, 1.0}, {sel[1], M}}, Sense::ge, c);
      std::size_t j = 2;
      for (const auto& k : net.downstream(l)) {
        const auto xk = m.state_[t][k.link];
        const double r = k.ratio();
        const double rhs = r * net.capacity(k.link);
        const std::string kid = tags[l] + "_" + tags[k.link] + "_" + std::to_string(t);
        m.add_row("zk_ub_" + kid, "zmin", t, {{z, 1.0}, {xk, r}}, Sense::le, rhs);
        m.add_row("zk_lb_" + kid, "zmin", t, {{z, 1.0}, {xk, r}, {sel[j], M}}, Sense::ge, rhs);
        ++j;
      }
      std::vector<std::pair<std::size_t, double>> pick;
      for (auto s : sel) pick.emplace_back(s, 1.0);
      m.add_row("zsel_" + id, "zmin", t, std::move(pick), Sense::eq, static_cast<double>(sel.size() - 1));

      // f = u z
      m.add_row("f_u_" + id, "flow", t, {{f, 1.0}, {u, -c}}, Sense::le, 0.0);
      m.add_row("f_z_" + id, "flow", t, {{f, 1.0}, {z, -1.0}}, Sense::le, 0.0);
      m.add_row("f_lb_" + id, "flow", t, {{f, 1.0}, {z, -1.0}, {u, -c}}, Sense::ge, -c);

      // z' = x - f + sum beta_il f_i + d
      std::vector<std::pair<std::size_t, double>> bal{{zn, 1.0}, {x, -1.0}, {f, 1.0}, {m.demand_[t][l], -1.0}};
      for (const auto& in : net.upstream(l)) bal.emplace_back(m.flow_[t][in.link], -in.beta);
      m.add_row("zn_" + id, "znext", t, std::move(bal), Sense::eq, 0.0);

      // x[t+1] = min{z', cap}
      m.add_row("F_zn_" + id, "clamp", t, {{next, 1.0}, {zn, -1.0}}, Sense::le, 0.0);
      m.add_row("F_lo_" + id, "clamp", t, {{next, 1.0}, {zn, -1.0}, {w, Mc}}, Sense::ge, 0.0);
      m.add_row("F_cap_" + id, "clamp", t, {{next, 1.0}, {w, -Mc}}, Sense::ge, cap - Mc);
    }
  }

  // admissible signal patterns, one copy of each phase constraint per step
  for (std::size_t t = 0; t < horizon; ++t) {
    std::size_t count = 0;
    for (const auto& isec : net.intersections()) {
      for (const auto& pc : isec.constraints) {
        std::vector<std::pair<std::size_t, double>> terms;
        for (const auto& name : pc.links) terms.emplace_back(m.control_[t][net.index_of(name)], 1.0);
        Sense s = pc.relation == Relation::less_equal ? Sense::le
                  : pc.relation == Relation::equal    ? Sense::eq
                                                      : Sense::ge;
        m.add_row("phase_" + std::to_string(count++) + "_" + std::to_string(t), "control", t, std::move(terms), s,
                  static_cast<double>(pc.rhs));
      }
    }
  }

  if (opts.initial_state && horizon > 0) {
    if (opts.initial_state->size() != n) throw Error(ErrorKind::validation, "initial state has wrong dimension");
    for (std::size_t l = 0; l < n; ++l)
      m.add_row("init_" + tags[l], "init", 0, {{m.state_[0][l], 1.0}}, Sense::eq, (*opts.initial_state)[l]);
  }
  auto box_rows = [&](const ReachBox& box, std::size_t t, const std::string& prefix) {
    for (std::size_t l = 0; l < n; ++l) {
      const std::string id = tags[l] + "_" + std::to_string(t);
      if (box.upper[l] < net.capacity(l))
        m.add_row(prefix + "_ub_" + id, "box", t, {{m.state_[t][l], 1.0}}, Sense::le, box.upper[l]);
      if (box.lower[l] > 0.0)
        m.add_row(prefix + "_lb_" + id, "box", t, {{m.state_[t][l], 1.0}}, Sense::ge, box.lower[l]);
    }
  };
  if (opts.safe_box)
    for (std::size_t t = 1; t <= horizon; ++t) box_rows(*opts.safe_box, t, "safe");
  if (opts.terminal_box && horizon > 0) box_rows(*opts.terminal_box, horizon, "term");

  for (std::size_t t = 1; t <= horizon; ++t)
    for (std::size_t l = 0; l < n; ++l) m.objective_.push_back(m.state_[t][l]);
  return m;
}

namespace {

void write_terms(std::ostringstream& os, const MldModel& model,
                 const std::vector<std::pair<std::size_t, double>>& terms) {
  std::size_t on_line = 0;
  bool first = true;
  for (const auto& [var, coef] : terms) {
    if (on_line == 8) {
      os << "\n   ";
      on_line = 0;
    }
    const double a = std::abs(coef);
    if (coef < 0)
      os << " -";
    else if (!first)
      os << " +";
    os << ' ';
    if (a != 1.0) os << format_number(a) << ' ';
    os << model.variables()[var].name;
    first = false;
    ++on_line;
  }
}

const char* sense_text(Sense s) {
  switch (s) {
    case Sense::le: return "<=";
    case Sense::ge: return ">=";
    case Sense::eq: return "=";
  }
  return "=";
}

}  // namespace

std::string emit_lp(const MldModel& model) {
  std::ostringstream os;
  os << "\\ " << model.name() << ": mixed logical dynamical traffic model, horizon " << model.horizon() << '\n';
  os << "\\ M = " << format_number(model.big_m()) << ", M' = " << format_number(model.big_m_clamp()) << '\n';
  os << "Minimize\n obj:";
  std::vector<std::pair<std::size_t, double>> obj;
  for (auto v : model.objective()) obj.emplace_back(v, 1.0);
  write_terms(os, model, obj);
  os << "\nSubject To\n";
  for (const auto& row : model.rows()) {
    os << ' ' << row.name << ':';
    write_terms(os, model, row.terms);
    os << ' ' << sense_text(row.sense) << ' ' << format_number(row.rhs) << '\n';
  }
  os << "Bounds\n";
  for (const auto& v : model.variables()) {
    if (v.binary) continue;
    os << ' ' << format_number(v.lower) << " <= " << v.name << " <= " << format_number(v.upper) << '\n';
  }
  bool any_binary = false;
  std::size_t on_line = 0;
  for (const auto& v : model.variables()) {
    if (!v.binary) continue;
    if (!any_binary) os << "Binaries\n";
    any_binary = true;
    os << ' ' << v.name;
    if (++on_line == 10) {
      os << '\n';
      on_line = 0;
    }
  }
  if (any_binary && on_line != 0) os << '\n';
  os << "End\n";
  return os.str();
}

std::vector<double> substitution_assignment(const MldModel& model, const Network& net, const State& x,
                                            const ControlPattern& u, const Demand& d, const State& next,
                                            const std::map<std::size_t, std::size_t>& selector_choice) {
  if (model.horizon() == 0) throw Error(ErrorKind::validation, "substitution needs a model with horizon >= 1");
  const std::size_t n = net.size();
  std::vector<double> v(model.variables().size(), 0.0);
  std::vector<double> z(n), f(n);
  for (std::size_t l = 0; l < n; ++l) {
    std::vector<double> cand{x[l], net.saturation(l)};
    for (const auto& k : net.downstream(l)) cand.push_back(k.ratio() * (net.capacity(k.link) - x[k.link]));
    z[l] = *std::min_element(cand.begin(), cand.end());
    std::size_t pick = static_cast<std::size_t>(std::min_element(cand.begin(), cand.end()) - cand.begin());
    if (auto it = selector_choice.find(l); it != selector_choice.end()) pick = it->second;
    const auto& sel = model.selectors(l, 0);
    for (std::size_t j = 0; j < sel.size(); ++j) v[sel[j]] = j == pick ? 0.0 : 1.0;
    f[l] = u.green(l) ? z[l] : 0.0;
    v[model.state(l, 0)] = x[l];
    v[model.state(l, 1)] = next[l];
    v[model.control(l, 0)] = u.green(l) ? 1.0 : 0.0;
    v[model.demand(l, 0)] = d[l];
    v[model.zmin(l, 0)] = z[l];
    v[model.flow(l, 0)] = f[l];
  }
  for (std::size_t l = 0; l < n; ++l) {
    double zn = x[l] - f[l] + d[l];
    for (const auto& in : net.upstream(l)) zn += in.beta * f[in.link];
    v[model.znext(l, 0)] = zn;
    v[model.clamp(l, 0)] = zn > net.capacity(l) ? 1.0 : 0.0;
  }
  return v;
}

namespace {

bool dynamics_row(const MldRow& r) { return r.step == 0 && r.block != "box" && r.block != "init"; }

double row_slack(const MldRow& row, const std::vector<double>& values) {
  double lhs = 0.0;
  for (const auto& [var, coef] : row.terms) lhs += coef * values[var];
  switch (row.sense) {
    case Sense::le: return row.rhs - lhs;
    case Sense::ge: return lhs - row.rhs;
    case Sense::eq: return -std::abs(lhs - row.rhs);
  }
  return 0.0;
}

struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
};

struct Propagation {
  std::vector<Interval> iv;
  bool conflict = false;  // some interval emptied beyond the tolerance
};

// Bound propagation over the step-0 rows with inputs and binaries fixed.
// Round-off can cross an interval by a few ulps; such intervals collapse to
// a point instead of feeding the crossing back through the rows.
Propagation propagate(const MldModel& model, const std::vector<double>& values, double tol) {
  const auto& vars = model.variables();
  Propagation p;
  auto& iv = p.iv;
  iv.resize(vars.size());
  std::vector<std::uint8_t> fixed(vars.size(), 0);
  for (std::size_t i = 0; i < vars.size(); ++i) {
    const auto& var = vars[i];
    const bool input = var.binary || var.kind == VarKind::demand || (var.kind == VarKind::state && var.step == 0);
    if (input) {
      iv[i] = {values[i], values[i]};
      fixed[i] = 1;
    } else {
      iv[i] = {var.lower, var.upper};
    }
  }
  for (int pass = 0; pass < 100; ++pass) {
    double change = 0.0;
    for (const auto& row : model.rows()) {
      if (!dynamics_row(row)) continue;
      for (const auto& [k, ak] : row.terms) {
        if (fixed[k]) continue;
        double rest_lo = 0.0, rest_hi = 0.0;
        for (const auto& [j, aj] : row.terms) {
          if (j == k) continue;
          rest_lo += aj > 0 ? aj * iv[j].lo : aj * iv[j].hi;
          rest_hi += aj > 0 ? aj * iv[j].hi : aj * iv[j].lo;
        }
        Interval& t = iv[k];
        auto raise_lo = [&](double lo) {
          if (lo <= t.lo) return;
          change = std::max(change, std::isinf(t.lo) ? 1.0 : lo - t.lo);
          t.lo = lo;
        };
        auto cut_hi = [&](double hi) {
          if (hi >= t.hi) return;
          change = std::max(change, std::isinf(t.hi) ? 1.0 : t.hi - hi);
          t.hi = hi;
        };
        // ak * v  (sense)  rhs - rest
        if (row.sense == Sense::le || row.sense == Sense::eq) {
          const double bound = row.rhs - rest_lo;
          ak > 0 ? cut_hi(bound / ak) : raise_lo(bound / ak);
        }
        if (row.sense == Sense::ge || row.sense == Sense::eq) {
          const double bound = row.rhs - rest_hi;
          ak > 0 ? raise_lo(bound / ak) : cut_hi(bound / ak);
        }
        if (t.lo > t.hi) {
          if (t.lo - t.hi > tol * std::max(1.0, std::abs(t.hi))) {
            p.conflict = true;
            return p;
          }
          t.lo = t.hi = 0.5 * (t.lo + t.hi);
        }
      }
    }
    if (change < 1e-13) break;
  }
  return p;
}

}  // namespace

std::vector<RowViolation> violated_rows(const MldModel& model, const std::vector<double>& values, double tol) {
  std::vector<RowViolation> out;
  for (const auto& row : model.rows()) {
    if (!dynamics_row(row)) continue;
    double slack = row_slack(row, values);
    if (slack < -tol) out.push_back({0, row.name, slack});
  }
  for (const auto& var : model.variables()) {
    if (var.step > 1 || (var.step == 1 && var.kind != VarKind::state)) continue;
    double v = values[model.index(var.name)];
    if (v < var.lower - tol) out.push_back({0, "bound:" + var.name, v - var.lower});
    if (v > var.upper + tol) out.push_back({0, "bound:" + var.name, var.upper - v});
  }
  return out;
}

SubstitutionReport check_transition(const MldModel& model, const Network& net, const State& x,
                                    const ControlPattern& u, const Demand& d, const State& next, double tol) {
  SubstitutionReport report;
  report.transitions = 1;
  auto values = substitution_assignment(model, net, x, u, d, next);
  report.violations = violated_rows(model, values, tol);
  report.rows_checked = static_cast<std::size_t>(
      std::count_if(model.rows().begin(), model.rows().end(), [](const MldRow& r) { return dynamics_row(r); }));

  auto prop = propagate(model, values, tol);
  const auto& iv = prop.iv;
  bool pinned = !prop.conflict;
  for (std::size_t l = 0; l < net.size(); ++l) {
    const auto& b = iv[model.state(l, 1)];
    const double width = b.hi - b.lo;
    report.max_pinning_width = std::max(report.max_pinning_width, width);
    const double expect = net.step(x, u, d)[l];
    if (!(width <= tol * std::max(1.0, std::abs(expect))) || expect < b.lo - tol || expect > b.hi + tol)
      pinned = false;
  }
  if (!pinned) report.unpinned.push_back(0);
  return report;
}

SubstitutionReport check_substitution(const MldModel& model, const Network& net, const Trace& trace, double tol) {
  SubstitutionReport report;
  for (std::size_t t = 0; t < trace.steps.size(); ++t) {
    const auto& s = trace.steps[t];
    const State& next = t + 1 < trace.steps.size() ? trace.steps[t + 1].x : trace.final_state;
    auto one = check_transition(model, net, s.x, s.u, s.d, next, tol);
    for (auto& v : one.violations) {
      v.step = t;
      report.violations.push_back(std::move(v));
    }
    if (!one.unpinned.empty()) report.unpinned.push_back(t);
    report.rows_checked += one.rows_checked;
    report.max_pinning_width = std::max(report.max_pinning_width, one.max_pinning_width);
    ++report.transitions;
  }
  return report;
}

}  // namespace safempc
