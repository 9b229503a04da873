#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tbm/error.hpp"
#include "tbm/mass_function.hpp"
#include "tbm/pignistic.hpp"
#include "tbm/propagation.hpp"

namespace tbm {

inline const std::string kNoTest = "NO_TEST";

struct PlanConfig {
  int max_depth = 5;
};

// One candidate's score at a node. Test-only fields are empty for NO_TEST;
// a branch whose outcome has zero pignistic probability has no MaxU.
struct CandidateScore {
  std::string candidate;
  double max_u = 0.0;
  double cost = 0.0;
  double betp_pos = 0.0;
  double betp_neg = 0.0;
  std::optional<double> max_u_pos;
  std::optional<double> max_u_neg;
  std::optional<std::string> treatment_pos;
  std::optional<std::string> treatment_neg;

  bool is_no_test() const { return candidate == kNoTest; }
};

struct EvidenceItem {
  std::string variable;
  std::string value;

  friend bool operator==(const EvidenceItem&, const EvidenceItem&) = default;
};

struct PlanNode {
  std::string selected;  // test id or kNoTest; empty for contradiction leaves
  double max_u_selected = 0.0;
  std::vector<CandidateScore> explanation;  // NO_TEST first, then tests in declaration order
  TreatmentRanking ranking;
  std::vector<EvidenceItem> evidence_path;  // root evidence, then tests decided on the way down
  bool contradiction = false;
  std::unique_ptr<PlanNode> positive;
  std::unique_ptr<PlanNode> negative;

  bool is_leaf() const { return !positive && !negative; }

  const CandidateScore* score_of(const std::string& candidate) const {
    for (const auto& s : explanation)
      if (s.candidate == candidate) return &s;
    return nullptr;
  }
};

struct NoTestEvaluation {
  double max_u = 0.0;
  TreatmentRanking ranking;
};

namespace detail {

class Planner {
 public:
  Planner(const ValuationNetwork& net, const DecisionModel& model)
      : net_(net), model_(model), tree_(build_join_tree(net)) {
    model_.validate();
    const Variable& diag = net_.variable(model_.diagnosis.id());
    if (diag != model_.diagnosis) throw DomainError("diagnosis frame differs between network and decision model");
    for (const auto& [id, cost] : model_.test_costs) net_.variable(id);
  }

  // Ranking of the diagnosis marginal under `evidence`; nullopt on total conflict.
  std::optional<TreatmentRanking> ranking(const std::map<std::string, std::string>& evidence) const {
    ValuationNetwork net = net_;
    net.evidence = evidence;
    const auto marginals = propagate(tree_, net, {model_.diagnosis.id()});
    const auto& m = marginals.at(model_.diagnosis.id());
    try {
      return rank_treatments(bet_p(m), model_);
    } catch (const ContradictoryEvidence&) {
      return std::nullopt;
    }
  }

  NoTestEvaluation no_test(const std::map<std::string, std::string>& evidence) const {
    auto r = ranking(evidence);
    if (!r) throw ContradictoryEvidence("contradictory evidence: the diagnosis marginal is totally conflicting");
    return {r->best().expected_utility, *r};
  }

  CandidateScore test(const std::map<std::string, std::string>& evidence, const std::string& test_id,
                      const MassFunction* test_marginal = nullptr) const {
    const Variable& tv = net_.variable(test_id);
    if (tv.frame_size() != 2)
      throw PlanError("test '" + test_id + "' has " + std::to_string(tv.frame_size()) +
                      " outcomes; only binary tests can be scored");
    if (evidence.contains(test_id)) throw PlanError("test '" + test_id + "' has already been performed");

    std::optional<MassFunction> own;
    if (!test_marginal) {
      ValuationNetwork net = net_;
      net.evidence = evidence;
      own = propagate(tree_, net, {test_id}).at(test_id);
      test_marginal = &*own;
    }
    const auto betp = bet_p(*test_marginal);

    CandidateScore s;
    s.candidate = test_id;
    s.cost = model_.cost_of(test_id);
    s.betp_pos = betp.probabilities[0];
    s.betp_neg = betp.probabilities[1];
    double value = 0.0;
    for (std::size_t k = 0; k < 2; ++k) {
      const double p = betp.probabilities[k];
      if (p == 0.0) continue;
      auto branch = evidence;
      branch[test_id] = tv.frame()[k];
      const auto r = ranking(branch);
      if (!r) continue;  // only reachable when p is numerically zero
      (k == 0 ? s.max_u_pos : s.max_u_neg) = r->best().expected_utility;
      (k == 0 ? s.treatment_pos : s.treatment_neg) = r->best().treatment;
      value += p * r->best().expected_utility;
    }
    s.max_u = value - s.cost;
    return s;
  }

  std::unique_ptr<PlanNode> build(const std::map<std::string, std::string>& evidence,
                                  std::vector<EvidenceItem> path, int depth, int max_depth) const {
    auto node = std::make_unique<PlanNode>();
    node->evidence_path = std::move(path);

    try {
      if (!score(*node, evidence)) return node;
    } catch (const Error& e) {
      throw PlanError("at evidence " + describe(node->evidence_path) + ": " + e.what());
    }
    if (node->selected == kNoTest || depth >= max_depth) return node;

    const Variable& tv = net_.variable(node->selected);
    for (std::size_t k = 0; k < 2; ++k) {
      auto child_evidence = evidence;
      child_evidence[tv.id()] = tv.frame()[k];
      auto child_path = node->evidence_path;
      child_path.push_back({tv.id(), tv.frame()[k]});
      auto child = build(child_evidence, std::move(child_path), depth + 1, max_depth);
      (k == 0 ? node->positive : node->negative) = std::move(child);
    }
    return node;
  }

  const ValuationNetwork& network() const { return net_; }

 private:
  static std::string describe(const std::vector<EvidenceItem>& path) {
    std::string s = "{";
    for (std::size_t i = 0; i < path.size(); ++i) s += (i ? ", " : "") + path[i].variable + "=" + path[i].value;
    return s + "}";
  }

  // Fills ranking, explanation and selection; false for a contradiction leaf.
  bool score(PlanNode& node, const std::map<std::string, std::string>& evidence) const {
    std::vector<std::string> targets{model_.diagnosis.id()};
    std::vector<std::string> open;
    for (const auto& [id, cost] : model_.test_costs)
      if (!evidence.contains(id)) {
        open.push_back(id);
        targets.push_back(id);
      }
    ValuationNetwork net = net_;
    net.evidence = evidence;
    const auto marginals = propagate(tree_, net, targets);

    const auto& diag = marginals.at(model_.diagnosis.id());
    if (diag.conflict() >= 1.0 - kMassTolerance) {
      node.contradiction = true;
      return false;
    }
    node.ranking = rank_treatments(bet_p(diag), model_);

    CandidateScore none;
    none.candidate = kNoTest;
    none.max_u = node.ranking.best().expected_utility;
    node.explanation.push_back(none);
    for (const auto& id : open) node.explanation.push_back(test(evidence, id, &marginals.at(id)));

    // Strictly greater wins, so NO_TEST and earlier tests keep exact ties.
    const CandidateScore* best = &node.explanation.front();
    for (const auto& s : node.explanation)
      if (s.max_u > best->max_u) best = &s;
    node.selected = best->candidate;
    node.max_u_selected = best->max_u;
    return true;
  }

  ValuationNetwork net_;
  DecisionModel model_;
  JoinTree tree_;
};

inline std::vector<EvidenceItem> evidence_items(const std::map<std::string, std::string>& evidence) {
  std::vector<EvidenceItem> out;
  for (const auto& [k, v] : evidence) out.push_back({k, v});
  return out;
}

}  // namespace detail

// MaxU(0): best expected utility without further testing.
inline NoTestEvaluation evaluate_no_test(const ValuationNetwork& net, const DecisionModel& model) {
  return detail::Planner(net, model).no_test(net.evidence);
}

// MaxU(i) = BetP(i+) MaxU(i+) + BetP(i-) MaxU(i-) - Cost(i).
inline CandidateScore evaluate_test(const ValuationNetwork& net, const DecisionModel& model, const std::string& test) {
  detail::Planner planner(net, model);
  planner.no_test(net.evidence);
  return planner.test(net.evidence, test);
}

// Greedy suggested-test tree. The positive child follows the first frame
// label of the selected test, the negative child the second.
inline std::unique_ptr<PlanNode> build_tree(const ValuationNetwork& net, const DecisionModel& model,
                                            const PlanConfig& config) {
  if (config.max_depth < 1) throw PlanError("plan depth must be at least 1");
  const detail::Planner planner(net, model);
  auto root = planner.build(net.evidence, detail::evidence_items(net.evidence), 1, config.max_depth);
  if (root->contradiction)
    throw ContradictoryEvidence("contradictory evidence: the entered results are totally conflicting");
  return root;
}

}  // namespace tbm
