#pragma once

// Reference implementations used only by the tests. They work on explicit
// sets of label tuples and share no code with the bitset engine.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "tbm/tbm.hpp"

namespace oracle {

struct Var {
  std::string id;
  std::vector<std::string> frame;
};

using Tuple = std::vector<std::string>;
using TupleSet = std::set<Tuple>;

// Mass function over an explicit, caller-ordered list of variables.
struct Mass {
  std::vector<Var> vars;
  std::map<TupleSet, double> focal;
};

inline std::vector<Tuple> all_tuples(const std::vector<Var>& vars) {
  std::vector<Tuple> out{Tuple{}};
  for (const auto& v : vars) {
    std::vector<Tuple> next;
    for (const auto& t : out)
      for (const auto& l : v.frame) {
        auto u = t;
        u.push_back(l);
        next.push_back(std::move(u));
      }
    out = std::move(next);
  }
  return out;
}

inline TupleSet whole(const std::vector<Var>& vars) {
  auto all = all_tuples(vars);
  return TupleSet(all.begin(), all.end());
}

inline std::optional<std::size_t> index_in(const std::vector<Var>& vars, const std::string& id) {
  for (std::size_t i = 0; i < vars.size(); ++i)
    if (vars[i].id == id) return i;
  return std::nullopt;
}

inline Mass extend(const Mass& m, const std::vector<Var>& super) {
  Mass out{super, {}};
  const auto all = all_tuples(super);
  for (const auto& [set, mass] : m.focal) {
    TupleSet s;
    for (const auto& t : all) {
      Tuple proj;
      for (const auto& v : m.vars) proj.push_back(t[*index_in(super, v.id)]);
      if (set.count(proj)) s.insert(t);
    }
    out.focal[s] += mass;
  }
  return out;
}

inline Mass project(const Mass& m, const std::vector<std::string>& keep) {
  Mass out;
  for (const auto& id : keep) out.vars.push_back(m.vars[*index_in(m.vars, id)]);
  for (const auto& [set, mass] : m.focal) {
    TupleSet s;
    for (const auto& t : set) {
      Tuple p;
      for (const auto& id : keep) p.push_back(t[*index_in(m.vars, id)]);
      s.insert(p);
    }
    out.focal[s] += mass;
  }
  return out;
}

// Unnormalized conjunctive rule on identical variable lists.
inline Mass combine(const Mass& a, const Mass& b) {
  Mass out{a.vars, {}};
  for (const auto& [sa, ma] : a.focal)
    for (const auto& [sb, mb] : b.focal) {
      TupleSet c;
      std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(), std::inserter(c, c.begin()));
      out.focal[c] += ma * mb;
    }
  return out;
}

inline Mass condition(const Mass& m, const std::string& id, const std::string& label) {
  const auto k = *index_in(m.vars, id);
  Mass out{m.vars, {}};
  for (const auto& [set, mass] : m.focal) {
    TupleSet s;
    for (const auto& t : set)
      if (t[k] == label) s.insert(t);
    out.focal[s] += mass;
  }
  return out;
}

// BetP over a single-variable mass, normalized by 1 - m(empty).
inline std::map<std::string, double> bet_p(const Mass& m) {
  std::map<std::string, double> p;
  for (const auto& l : m.vars.at(0).frame) p[l] = 0.0;
  double conflict = 0.0;
  for (const auto& [set, mass] : m.focal) {
    if (set.empty()) {
      conflict += mass;
      continue;
    }
    for (const auto& t : set) p[t[0]] += mass / static_cast<double>(set.size());
  }
  for (auto& [l, v] : p) v /= (1.0 - conflict);
  return p;
}

// Engine mass function -> oracle form (variables in the engine's canonical order).
inline Mass from_engine(const tbm::MassFunction& m) {
  Mass out;
  for (const auto& v : m.domain().variables()) out.vars.push_back({v.id(), v.frame()});
  for (const auto& [set, mass] : m.focal()) {
    TupleSet s;
    set.for_each([&](std::size_t c) { s.insert(m.domain().labels_at(c)); });
    out.focal[s] += mass;
  }
  return out;
}

// Max per-focal-set difference between an engine result and an oracle result
// on the same variables (oracle tuples are reordered to canonical order).
inline double max_difference(const tbm::MassFunction& engine, const Mass& ref) {
  const auto canon = from_engine(engine);
  std::vector<std::string> ids;
  for (const auto& v : canon.vars) ids.push_back(v.id);
  const Mass aligned = project(ref, ids);
  double worst = 0.0;
  for (const auto& [s, m] : canon.focal) {
    auto it = aligned.focal.find(s);
    worst = std::max(worst, std::abs(m - (it == aligned.focal.end() ? 0.0 : it->second)));
  }
  for (const auto& [s, m] : aligned.focal) {
    auto it = canon.focal.find(s);
    worst = std::max(worst, std::abs(m - (it == canon.focal.end() ? 0.0 : it->second)));
  }
  return worst;
}

// Joint of all relations and evidence of a network, over its declared variables.
inline Mass joint(const tbm::ValuationNetwork& net) {
  std::vector<Var> vars;
  for (const auto& v : net.variables) vars.push_back({v.id(), v.frame()});
  Mass acc{vars, {{whole(vars), 1.0}}};
  for (const auto& r : net.relations) acc = combine(acc, extend(from_engine(r), vars));
  for (const auto& [id, label] : net.evidence) acc = condition(acc, id, label);
  return acc;
}

// ---- Random instances -------------------------------------------------------

inline tbm::Variable random_variable(std::mt19937_64& rng, const std::string& id, std::size_t max_outcomes = 3) {
  std::uniform_int_distribution<std::size_t> n(2, max_outcomes);
  const std::size_t k = n(rng);
  std::vector<std::string> frame;
  for (std::size_t i = 0; i < k; ++i) frame.push_back(id + "_" + std::to_string(i));
  return tbm::Variable(id, frame);
}

inline tbm::Subset random_subset(std::mt19937_64& rng, std::size_t size, bool allow_empty = false) {
  std::bernoulli_distribution coin(0.5);
  for (;;) {
    tbm::Subset s(size);
    for (std::size_t i = 0; i < size; ++i)
      if (coin(rng)) s.set(i);
    if (allow_empty || !s.empty()) return s;
  }
}

inline tbm::MassFunction random_mass(std::mt19937_64& rng, const tbm::Domain& d, std::size_t max_focal = 3) {
  std::uniform_int_distribution<std::size_t> count(1, max_focal);
  std::uniform_real_distribution<double> weight(0.05, 1.0);
  const std::size_t k = count(rng);
  std::vector<std::pair<tbm::Subset, double>> entries;
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    entries.emplace_back(random_subset(rng, d.size()), weight(rng));
    total += entries.back().second;
  }
  for (auto& e : entries) e.second /= total;
  return tbm::MassFunction(d, entries);
}

// A network of `n_vars` binary/ternary variables with up to `max_rel`
// relations over 1-3 variables each, plus optional random evidence.
inline tbm::ValuationNetwork random_network(std::mt19937_64& rng, std::size_t n_vars, std::size_t max_rel,
                                            bool with_evidence) {
  tbm::ValuationNetwork net;
  for (std::size_t i = 0; i < n_vars; ++i) net.variables.push_back(random_variable(rng, "v" + std::to_string(i)));
  std::uniform_int_distribution<std::size_t> rel_count(0, max_rel);
  std::uniform_int_distribution<std::size_t> arity(1, std::min<std::size_t>(3, n_vars));
  std::uniform_int_distribution<std::size_t> pick(0, n_vars - 1);
  const std::size_t r = rel_count(rng);
  for (std::size_t i = 0; i < r; ++i) {
    std::set<std::size_t> chosen;
    const std::size_t a = arity(rng);
    while (chosen.size() < a) chosen.insert(pick(rng));
    std::vector<tbm::Variable> vs;
    for (auto c : chosen) vs.push_back(net.variables[c]);
    net.relations.push_back(random_mass(rng, tbm::Domain(vs)));
  }
  if (with_evidence) {
    std::bernoulli_distribution coin(0.25);
    for (const auto& v : net.variables)
      if (coin(rng)) {
        std::uniform_int_distribution<std::size_t> l(0, v.frame_size() - 1);
        net.evidence[v.id()] = v.frame()[l(rng)];
      }
  }
  return net;
}

// ---- Strategy enumeration ---------------------------------------------------

struct DecisionTable {
  std::string diagnosis;
  std::vector<std::string> treatments;
  std::vector<std::vector<double>> utility;  // [treatment][diagnosis frame index]
  std::vector<std::pair<std::string, double>> tests;
};

// Best expected utility of acting now, from the oracle joint.
inline std::optional<double> act_now(const tbm::ValuationNetwork& net, const DecisionTable& table) {
  const Mass m = project(joint(net), {table.diagnosis});
  double conflict = 0.0;
  for (const auto& [s, mass] : m.focal)
    if (s.empty()) conflict += mass;
  if (conflict >= 1.0 - 1e-9) return std::nullopt;
  const auto p = bet_p(m);
  double best = -std::numeric_limits<double>::infinity();
  const auto& frame = m.vars[0].frame;
  for (const auto& row : table.utility) {
    double eu = 0.0;
    for (std::size_t d = 0; d < frame.size(); ++d) eu += p.at(frame[d]) * row[d];
    best = std::max(best, eu);
  }
  return best;
}

// Value of the best strategy using at most `depth` further tests, scoring
// each test the same way a single greedy step does. Also reports the
// first move(s) attaining it ("NO_TEST" or a test id).
struct StrategyValue {
  double value = 0.0;
  std::vector<std::string> best_first_moves;
};

inline StrategyValue optimal_strategy(const tbm::ValuationNetwork& net, const DecisionTable& table, int depth,
                                      double tie_tol = 1e-9) {
  StrategyValue out;
  const auto now = act_now(net, table);
  out.value = now.value_or(0.0);
  out.best_first_moves = {"NO_TEST"};
  if (!now || depth == 0) return out;
  std::vector<std::pair<std::string, double>> moves{{"NO_TEST", *now}};
  for (const auto& [test, cost] : table.tests) {
    if (net.evidence.count(test)) continue;
    const Mass tm = project(joint(net), {test});
    const auto p = bet_p(tm);
    const auto& frame = tm.vars[0].frame;
    double v = -cost;
    for (const auto& label : frame) {
      if (p.at(label) == 0.0) continue;
      const auto sub = optimal_strategy(net.with_evidence(test, label), table, depth - 1, tie_tol);
      v += p.at(label) * sub.value;
    }
    moves.emplace_back(test, v);
  }
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& [m, v] : moves) best = std::max(best, v);
  out.value = best;
  out.best_first_moves.clear();
  for (const auto& [m, v] : moves)
    if (v >= best - tie_tol) out.best_first_moves.push_back(m);
  return out;
}

// Value of following a greedy plan tree, with the same scoring.
inline double tree_value(const tbm::PlanNode& node) {
  if (node.contradiction) return 0.0;
  // A depth-limit leaf still performs its selected test, then treats.
  if (node.is_leaf()) return node.max_u_selected;
  const auto* s = node.score_of(node.selected);
  double v = -s->cost;
  if (node.positive && s->betp_pos > 0.0) v += s->betp_pos * tree_value(*node.positive);
  if (node.negative && s->betp_neg > 0.0) v += s->betp_neg * tree_value(*node.negative);
  return v;
}

}  // namespace oracle
