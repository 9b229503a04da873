#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "tbm/domain.hpp"
#include "tbm/error.hpp"
#include "tbm/mass_function.hpp"

namespace tbm {

// Variables, local belief relations and categorical evidence.
struct ValuationNetwork {
  std::vector<Variable> variables;
  std::vector<MassFunction> relations;
  std::map<std::string, std::string> evidence;

  const Variable* find(const std::string& id) const {
    for (const auto& v : variables)
      if (v.id() == id) return &v;
    return nullptr;
  }

  const Variable& variable(const std::string& id) const {
    if (const auto* v = find(id)) return *v;
    throw DomainError("unknown variable '" + id + "'");
  }

  ValuationNetwork with_evidence(const std::string& id, const std::string& label) const {
    ValuationNetwork copy = *this;
    copy.evidence[id] = label;
    return copy;
  }

  void validate() const {
    std::set<std::string> ids;
    for (const auto& v : variables)
      if (!ids.insert(v.id()).second) throw DomainError("variable '" + v.id() + "' declared twice");
    for (std::size_t r = 0; r < relations.size(); ++r)
      for (const auto& v : relations[r].domain().variables()) {
        const auto* decl = find(v.id());
        if (!decl) throw DomainError("relation " + std::to_string(r) + " uses undeclared variable '" + v.id() + "'");
        if (*decl != v)
          throw DomainError("relation " + std::to_string(r) + " uses variable '" + v.id() + "' with a different frame");
      }
    for (const auto& [id, label] : evidence) variable(id).index_of(label);
  }
};

struct Clique {
  Domain domain;
  std::vector<std::size_t> neighbors;  // ascending
};

// A tree of cliques with the running-intersection property. Disconnected
// parts of the interaction graph are linked through empty separators so
// that conflict mass still reaches every clique.
struct JoinTree {
  std::vector<Clique> cliques;
  std::vector<std::size_t> assignment;  // relation index -> clique

  static constexpr std::size_t root = 0;

  std::vector<std::pair<std::size_t, std::size_t>> edges() const {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t i = 0; i < cliques.size(); ++i)
      for (std::size_t j : cliques[i].neighbors)
        if (i < j) out.emplace_back(i, j);
    return out;
  }

  Domain separator(std::size_t i, std::size_t j) const {
    std::vector<Variable> shared;
    for (const auto& v : cliques[i].domain.variables())
      if (cliques[j].domain.contains(v.id())) shared.push_back(v);
    return Domain(std::move(shared));
  }

  std::optional<std::size_t> clique_containing(const Domain& d) const {
    for (std::size_t i = 0; i < cliques.size(); ++i)
      if (d.is_subdomain_of(cliques[i].domain)) return i;
    return std::nullopt;
  }

  std::size_t clique_of(const Variable& v) const {
    if (auto c = clique_containing(Domain{v})) return *c;
    throw DomainError("variable '" + v.id() + "' is not covered by the join tree");
  }

  std::size_t max_clique_arity() const {
    std::size_t n = 0;
    for (const auto& c : cliques) n = std::max(n, c.domain.arity());
    return n;
  }

  // Connected, acyclic, and each variable's cliques form a subtree.
  bool is_valid() const {
    if (cliques.empty()) return true;
    if (edges().size() != cliques.size() - 1) return false;
    std::vector<bool> seen(cliques.size(), false);
    std::vector<std::size_t> stack{0};
    seen[0] = true;
    std::size_t reached = 1;
    while (!stack.empty()) {
      const auto c = stack.back();
      stack.pop_back();
      for (auto n : cliques[c].neighbors)
        if (!seen[n]) {
          seen[n] = true;
          ++reached;
          stack.push_back(n);
        }
    }
    if (reached != cliques.size()) return false;
    std::set<std::string> ids;
    for (const auto& c : cliques)
      for (const auto& v : c.domain.variables()) ids.insert(v.id());
    for (const auto& id : ids) {
      // Cliques holding `id` must induce a connected subgraph.
      std::vector<std::size_t> holders;
      for (std::size_t i = 0; i < cliques.size(); ++i)
        if (cliques[i].domain.contains(id)) holders.push_back(i);
      std::vector<bool> vis(cliques.size(), false);
      std::vector<std::size_t> st{holders.front()};
      vis[holders.front()] = true;
      std::size_t n = 1;
      while (!st.empty()) {
        const auto c = st.back();
        st.pop_back();
        for (auto nb : cliques[c].neighbors)
          if (!vis[nb] && cliques[nb].domain.contains(id)) {
            vis[nb] = true;
            ++n;
            st.push_back(nb);
          }
      }
      if (n != holders.size()) return false;
    }
    return true;
  }
};

// Min-degree elimination with lexicographic tie-break. The tree covers every
// declared variable and does not depend on the evidence.
inline JoinTree build_join_tree(const ValuationNetwork& net) {
  net.validate();
  std::vector<Variable> vars = net.variables;
  std::sort(vars.begin(), vars.end(), [](const Variable& a, const Variable& b) { return a.id() < b.id(); });
  const std::size_t n = vars.size();
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < n; ++i) index[vars[i].id()] = i;

  std::vector<std::set<std::size_t>> adj(n);
  for (const auto& rel : net.relations) {
    const auto ids = rel.domain().ids();
    for (const auto& a : ids)
      for (const auto& b : ids)
        if (a != b) adj[index[a]].insert(index[b]);
  }

  // Elimination cliques, in elimination order.
  std::vector<std::size_t> order;
  std::vector<std::vector<std::size_t>> members;
  std::vector<bool> gone(n, false);
  for (std::size_t step = 0; step < n; ++step) {
    std::size_t best = n;
    for (std::size_t v = 0; v < n; ++v)
      if (!gone[v] && (best == n || adj[v].size() < adj[best].size())) best = v;
    std::vector<std::size_t> clique(adj[best].begin(), adj[best].end());
    clique.push_back(best);
    for (auto a : adj[best])
      for (auto b : adj[best])
        if (a != b) adj[a].insert(b);
    for (auto a : adj[best]) adj[a].erase(best);
    adj[best].clear();
    gone[best] = true;
    order.push_back(best);
    members.push_back(std::move(clique));
  }

  std::vector<std::size_t> step_of(n);
  for (std::size_t s = 0; s < n; ++s) step_of[order[s]] = s;

  // Parent of clique s is the clique of the earliest-eliminated other member.
  std::vector<std::set<std::size_t>> links(n);
  std::optional<std::size_t> last_root;
  for (std::size_t s = 0; s < n; ++s) {
    std::optional<std::size_t> parent;
    for (auto v : members[s])
      if (v != order[s] && (!parent || step_of[v] < *parent)) parent = step_of[v];
    if (!parent) {
      if (last_root) parent = *last_root;
      last_root = s;
    }
    if (parent) {
      links[s].insert(*parent);
      links[*parent].insert(s);
    }
  }

  // Contract cliques contained in a neighbour.
  std::vector<std::set<std::size_t>> sets(n);
  for (std::size_t s = 0; s < n; ++s) sets[s] = std::set<std::size_t>(members[s].begin(), members[s].end());
  std::vector<bool> alive(n, true);
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t s = 0; s < n && !changed; ++s) {
      if (!alive[s]) continue;
      for (auto t : links[s]) {
        if (!std::includes(sets[t].begin(), sets[t].end(), sets[s].begin(), sets[s].end())) continue;
        for (auto u : links[s])
          if (u != t) {
            links[u].erase(s);
            links[u].insert(t);
            links[t].insert(u);
          }
        links[t].erase(s);
        links[s].clear();
        alive[s] = false;
        changed = true;
        break;
      }
    }
  }

  JoinTree tree;
  std::vector<std::size_t> renumber(n, 0);
  for (std::size_t s = 0; s < n; ++s)
    if (alive[s]) {
      renumber[s] = tree.cliques.size();
      std::vector<Variable> cv;
      for (auto v : sets[s]) cv.push_back(vars[v]);
      tree.cliques.push_back(Clique{Domain(std::move(cv)), {}});
    }
  for (std::size_t s = 0; s < n; ++s)
    if (alive[s]) {
      auto& nb = tree.cliques[renumber[s]].neighbors;
      for (auto t : links[s]) nb.push_back(renumber[t]);
      std::sort(nb.begin(), nb.end());
    }
  if (tree.cliques.empty()) tree.cliques.push_back(Clique{Domain{}, {}});

  for (const auto& rel : net.relations) {
    auto c = tree.clique_containing(rel.domain());
    if (!c) throw DomainError("relation on " + rel.domain().to_string() + " is not covered by any clique");
    tree.assignment.push_back(*c);
  }
  return tree;
}

namespace detail {

class ShaferShenoy {
 public:
  ShaferShenoy(const JoinTree& tree, const ValuationNetwork& net) : tree_(tree) {
    const std::size_t k = tree.cliques.size();
    if (tree.assignment.size() != net.relations.size())
      throw DomainError("join tree was built for a different network");
    potentials_.reserve(k);
    for (const auto& c : tree.cliques) potentials_.emplace_back(c.domain);
    for (std::size_t r = 0; r < net.relations.size(); ++r) {
      auto& phi = potentials_[tree.assignment[r]];
      phi = combine(phi, vacuous_extension(net.relations[r], phi.domain()));
    }
    for (const auto& [id, label] : net.evidence) {
      const Variable& v = net.variable(id);
      const Domain single{v};
      auto& phi = potentials_[tree.clique_of(v)];
      phi = combine(phi, vacuous_extension(categorical(single, single.cylinder(id, label)), phi.domain()));
    }
    parent_.assign(k, k);
    messages_.resize(k);
    // Preorder from the root.
    std::vector<bool> seen(k, false);
    std::vector<std::size_t> stack{JoinTree::root};
    seen[JoinTree::root] = true;
    while (!stack.empty()) {
      const auto c = stack.back();
      stack.pop_back();
      preorder_.push_back(c);
      for (auto it = tree.cliques[c].neighbors.rbegin(); it != tree.cliques[c].neighbors.rend(); ++it)
        if (!seen[*it]) {
          seen[*it] = true;
          parent_[*it] = c;
          stack.push_back(*it);
        }
    }
  }

  // Marginal on each target variable.
  std::map<std::string, MassFunction> run(const std::vector<Variable>& targets) {
    const std::size_t k = tree_.cliques.size();
    std::vector<std::size_t> target_clique;
    std::vector<bool> needed(k, false);
    for (const auto& t : targets) {
      target_clique.push_back(tree_.clique_of(t));
      // Mark the path from the target clique to the root.
      for (auto c = target_clique.back(); c != k; c = parent_[c]) needed[c] = true;
    }
    // Collect: children before parents.
    for (auto it = preorder_.rbegin(); it != preorder_.rend(); ++it)
      if (parent_[*it] != k) send(*it, parent_[*it]);
    // Distribute towards cliques that host a target.
    for (auto c : preorder_)
      if (parent_[c] != k && needed[c]) send(parent_[c], c);

    std::map<std::size_t, MassFunction> beliefs;
    std::map<std::string, MassFunction> out;
    for (std::size_t i = 0; i < targets.size(); ++i) {
      const auto c = target_clique[i];
      auto it = beliefs.find(c);
      if (it == beliefs.end()) it = beliefs.emplace(c, absorb(c, k)).first;
      out.insert_or_assign(targets[i].id(), marginalize(it->second, Domain{targets[i]}));
    }
    return out;
  }

 private:
  // Potential of `c` combined with every incoming message except from `skip`.
  MassFunction absorb(std::size_t c, std::size_t skip) const {
    MassFunction acc = potentials_[c];
    for (auto n : tree_.cliques[c].neighbors) {
      if (n == skip) continue;
      const auto& msg = messages_[n].at(c);
      if (!msg.is_vacuous()) acc = combine(acc, vacuous_extension(msg, acc.domain()));
    }
    return acc;
  }

  void send(std::size_t from, std::size_t to) {
    messages_[from].insert_or_assign(to, marginalize(absorb(from, to), tree_.separator(from, to)));
  }

  const JoinTree& tree_;
  std::vector<MassFunction> potentials_;
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> preorder_;
  std::vector<std::map<std::size_t, MassFunction>> messages_;  // messages_[from][to]
};

inline std::vector<Variable> resolve_targets(const ValuationNetwork& net, const std::vector<std::string>& targets) {
  std::vector<Variable> out;
  for (const auto& id : targets) {
    const auto* v = net.find(id);
    if (!v) throw DomainError("unknown target variable '" + id + "'");
    out.push_back(*v);
  }
  return out;
}

}  // namespace detail

// Marginals of the conjunctive combination of all relations and evidence,
// computed by message passing on a tree built for `net`.
inline std::map<std::string, MassFunction> propagate(const JoinTree& tree, const ValuationNetwork& net,
                                                     const std::vector<std::string>& targets) {
  net.validate();
  const auto vars = detail::resolve_targets(net, targets);
  detail::ShaferShenoy engine(tree, net);
  return engine.run(vars);
}

inline std::map<std::string, MassFunction> propagate(const ValuationNetwork& net, const std::vector<std::string>& targets) {
  return propagate(build_join_tree(net), net, targets);
}

// Reference computation on the full joint frame.
inline MassFunction brute_force_marginal(const ValuationNetwork& net, const std::string& target) {
  net.validate();
  const Variable& tv = net.variable(target);
  const Domain joint(net.variables);
  MassFunction acc = vacuous(joint);
  for (const auto& rel : net.relations) acc = combine(acc, vacuous_extension(rel, joint));
  for (const auto& [id, label] : net.evidence) acc = condition_on(acc, id, label);
  return marginalize(acc, Domain{tv});
}

}  // namespace tbm
