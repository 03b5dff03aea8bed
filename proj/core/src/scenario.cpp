#include "safempc/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "safempc/error.hpp"

namespace safempc {

using nlohmann::json;

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

[[noreturn]] void fail(const std::string& what) { throw Error(ErrorKind::validation, "scenario: " + what); }

std::string as_name(const json& j, const std::string& what) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number_integer()) return std::to_string(j.get<long long>());
  fail(what + " must be a string or an integer");
}

double as_number(const json& j, const std::string& what) {
  if (!j.is_number()) fail(what + " must be a number");
  return j.get<double>();
}

const json* member(const json& obj, const char* key) {
  auto it = obj.find(key);
  return it == obj.end() || it->is_null() ? nullptr : &*it;
}

const json& required(const json& obj, const char* key, const std::string& where) {
  const json* v = member(obj, key);
  if (!v) fail(where + " is missing '" + key + "'");
  return *v;
}

/// Per-link vector given either as an array in link order or an object keyed
/// by link name (missing links default to `fill`).
std::vector<double> per_link(const json& j, const std::vector<std::string>& names, const std::string& what,
                             double fill = 0.0) {
  std::vector<double> out(names.size(), fill);
  if (j.is_array()) {
    if (j.size() != names.size()) fail(what + " has " + std::to_string(j.size()) + " entries for " +
                                       std::to_string(names.size()) + " links");
    for (std::size_t l = 0; l < names.size(); ++l) out[l] = as_number(j[l], what);
    return out;
  }
  if (!j.is_object()) fail(what + " must be an array or an object keyed by link");
  for (const auto& [key, value] : j.items()) {
    auto it = std::find(names.begin(), names.end(), key);
    if (it == names.end()) fail(what + " names unknown link '" + key + "'");
    out[static_cast<std::size_t>(it - names.begin())] = as_number(value, what);
  }
  return out;
}

Relation parse_relation(const std::string& r) {
  if (r == "<=" || r == "le") return Relation::less_equal;
  if (r == "=" || r == "==" || r == "eq") return Relation::equal;
  if (r == ">=" || r == "ge") return Relation::greater_equal;
  fail("unknown relation '" + r + "'");
}

SafetyExpr parse_safety(const json& j) {
  if (!j.is_object()) fail("safety expression nodes must be objects");
  if (const json* all = member(j, "all")) {
    std::vector<SafetyExpr> kids;
    for (const auto& c : *all) kids.push_back(parse_safety(c));
    return SafetyExpr::all_of(std::move(kids));
  }
  if (const json* any = member(j, "any")) {
    std::vector<SafetyExpr> kids;
    for (const auto& c : *any) kids.push_back(parse_safety(c));
    return SafetyExpr::any_of(std::move(kids));
  }
  return SafetyExpr::atom(as_name(required(j, "link", "safety atom"), "safety link"),
                          as_number(required(j, "le", "safety atom"), "safety bound"));
}

NetworkSpec parse_network(const json& j) {
  NetworkSpec spec;
  const json& links = required(j, "links", "network");
  if (!links.is_array() || links.empty()) fail("network.links must be a non-empty array");
  for (const auto& lj : links) {
    LinkSpec link;
    link.name = as_name(required(lj, "id", "link"), "link id");
    const std::string where = "link " + link.name;
    link.capacity = as_number(required(lj, "capacity", where), where + " capacity");
    link.saturation = as_number(required(lj, "saturation", where), where + " saturation");
    link.head = as_name(required(lj, "head", where), where + " head");
    if (const json* tail = member(lj, "tail")) link.tail = as_name(*tail, where + " tail");
    if (const json* turns = member(lj, "turns")) {
      for (const auto& tj : *turns) {
        TurnSpec t;
        t.to = as_name(required(tj, "to", where + " turn"), where + " turn target");
        t.beta = as_number(required(tj, "beta", where + " turn"), where + " beta");
        if (const json* a = member(tj, "alpha")) t.alpha = as_number(*a, where + " alpha");
        link.turns.push_back(std::move(t));
      }
    }
    spec.links.push_back(std::move(link));
  }
  std::vector<std::string> names;
  for (const auto& l : spec.links) names.push_back(l.name);

  if (const json* isecs = member(j, "intersections")) {
    for (const auto& ij : *isecs) {
      IntersectionSpec is;
      is.name = as_name(required(ij, "id", "intersection"), "intersection id");
      if (const json* cons = member(ij, "constraints")) {
        for (const auto& cj : *cons) {
          PhaseConstraint pc;
          for (const auto& n : required(cj, "links", "phase constraint")) pc.links.push_back(as_name(n, "phase link"));
          if (const json* r = member(cj, "relation")) pc.relation = parse_relation(r->get<std::string>());
          if (const json* rhs = member(cj, "rhs")) pc.rhs = rhs->get<int>();
          is.constraints.push_back(std::move(pc));
        }
      }
      spec.intersections.push_back(std::move(is));
    }
  }
  if (const json* demand = member(j, "demand")) {
    for (const auto& dj : *demand) {
      DemandBox box;
      box.lower = per_link(required(dj, "lower", "demand box"), names, "demand lower");
      box.upper = per_link(required(dj, "upper", "demand box"), names, "demand upper");
      spec.demand.push_back(std::move(box));
    }
  }
  if (const json* tol = member(j, "tolerance")) spec.tolerance = as_number(*tol, "tolerance");
  return spec;
}

NominalPolicy parse_policy(const std::string& s) {
  if (s == "midpoint") return NominalPolicy::midpoint;
  if (s == "constant") return NominalPolicy::constant;
  if (s == "sequence") return NominalPolicy::sequence;
  if (s == "random") return NominalPolicy::random;
  fail("unknown nominal demand policy '" + s + "'");
}

DemandSampler parse_sampler(const std::string& s) {
  if (s == "uniform") return DemandSampler::uniform;
  if (s == "corner") return DemandSampler::corner;
  if (s == "greedy") return DemandSampler::greedy;
  fail("unknown demand sampler '" + s + "'");
}

}  // namespace

Scenario parse_scenario(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    fail(std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) fail("top level must be an object");

  Scenario sc;
  try {
    sc.name = as_name(required(j, "name", "scenario"), "name");
    sc.network = parse_network(required(j, "network", "scenario"));
    std::vector<std::string> names;
    for (const auto& l : sc.network.links) names.push_back(l.name);

    if (const json* s = member(j, "safety")) sc.safety = parse_safety(*s);

    sc.extra_breakpoints.assign(names.size(), {});
    if (const json* part = member(j, "partition")) {
      if (const json* extra = member(*part, "breakpoints")) {
        if (!extra->is_object()) fail("partition.breakpoints must be an object keyed by link");
        for (const auto& [key, value] : extra->items()) {
          auto it = std::find(names.begin(), names.end(), key);
          if (it == names.end()) fail("partition names unknown link '" + key + "'");
          auto& dst = sc.extra_breakpoints[static_cast<std::size_t>(it - names.begin())];
          for (const auto& b : value) dst.push_back(as_number(b, "breakpoint"));
        }
      }
    }

    if (const json* mpc = member(j, "mpc")) {
      if (const json* h = member(*mpc, "horizon")) sc.mpc.horizon = h->get<std::size_t>();
      if (const json* p = member(*mpc, "nominal")) sc.mpc.nominal = parse_policy(p->get<std::string>());
      if (const json* v = member(*mpc, "nominal_values"))
        for (const auto& e : *v) sc.mpc.nominal_values.push_back(per_link(e, names, "nominal demand"));
      if (const json* s = member(*mpc, "seed")) sc.mpc.nominal_seed = s->get<std::uint64_t>();
      if (const json* c = member(*mpc, "enumeration_cap")) sc.mpc.enumeration_cap = c->get<std::size_t>();
      if (const json* t = member(*mpc, "tolerance")) sc.mpc.tolerance = as_number(*t, "mpc tolerance");
    }
    if (sc.mpc.horizon == 0) fail("mpc.horizon must be at least 1");
    if ((sc.mpc.nominal == NominalPolicy::constant || sc.mpc.nominal == NominalPolicy::sequence) &&
        sc.mpc.nominal_values.empty())
      fail("nominal policy needs mpc.nominal_values");

    if (const json* x0 = member(j, "initial_state"))
      sc.initial_state = per_link(*x0, names, "initial_state");
    else
      sc.initial_state.assign(names.size(), 0.0);

    if (const json* run = member(j, "run")) {
      if (const json* s = member(*run, "steps")) sc.steps = s->get<std::size_t>();
      if (const json* s = member(*run, "seed")) sc.seed = s->get<std::uint64_t>();
      if (const json* s = member(*run, "sampler")) sc.sampler = parse_sampler(s->get<std::string>());
    }
    if (const json* out = member(j, "output")) sc.output_dir = out->get<std::string>();
  } catch (const json::exception& e) {
    fail(std::string("wrong value type: ") + e.what());
  }

  // cross-module preconditions, checked up front
  Network net = Network::validate(sc.network);
  if (!net.in_state_space(sc.initial_state)) fail("initial_state lies outside the state space");
  for (const auto& v : sc.mpc.nominal_values)
    if (v.size() != net.size()) fail("nominal demand has the wrong dimension");
  if (sc.safety) compile_safety_expr(*sc.safety, net);

  sc.hash = fnv1a(j.dump());
  return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open scenario file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

}  // namespace safempc
