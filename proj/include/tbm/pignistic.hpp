#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "tbm/domain.hpp"
#include "tbm/error.hpp"
#include "tbm/mass_function.hpp"

namespace tbm {

// Probabilities over one variable's frame, in frame order.
struct PignisticDistribution {
  Variable variable;
  std::vector<double> probabilities;

  double operator[](const std::string& label) const { return probabilities.at(variable.index_of(label)); }
};

// BetP(w) = sum over A containing w of m(A) / (|A| (1 - m(empty))).
inline PignisticDistribution bet_p(const MassFunction& m) {
  const Domain& d = m.domain();
  if (d.arity() != 1)
    throw DomainError("pignistic transformation needs a single-variable domain, got " + d.to_string());
  const double conflict = m.conflict();
  if (conflict >= 1.0 - kMassTolerance)
    throw ContradictoryEvidence("contradictory evidence: all belief mass on the empty set of '" +
                                d.variables()[0].id() + "'");
  PignisticDistribution out{d.variables()[0], std::vector<double>(d.size(), 0.0)};
  for (const auto& [set, mass] : m.focal()) {
    const std::size_t n = set.count();
    if (n == 0) continue;
    const double share = mass / static_cast<double>(n);
    set.for_each([&](std::size_t w) { out.probabilities[w] += share; });
  }
  if (conflict > 0.0)
    for (double& p : out.probabilities) p /= (1.0 - conflict);
  return out;
}

// Treatments x diagnoses utilities plus per-test costs.
struct DecisionModel {
  std::vector<std::string> treatments;
  Variable diagnosis;
  std::vector<std::vector<double>> utility;               // [treatment][diagnosis]
  std::vector<std::pair<std::string, double>> test_costs;  // declaration order

  void validate() const {
    if (treatments.empty()) throw DomainError("decision model has no treatments");
    if (utility.size() != treatments.size())
      throw DomainError("utility matrix has " + std::to_string(utility.size()) + " rows for " +
                        std::to_string(treatments.size()) + " treatments");
    for (std::size_t t = 0; t < utility.size(); ++t) {
      if (utility[t].size() != diagnosis.frame_size())
        throw DomainError("utility row '" + treatments[t] + "' has " + std::to_string(utility[t].size()) +
                          " cells, diagnosis frame has " + std::to_string(diagnosis.frame_size()));
      for (double u : utility[t])
        if (!std::isfinite(u)) throw DomainError("utility row '" + treatments[t] + "' has a non-finite cell");
    }
    for (const auto& [id, cost] : test_costs)
      if (!(cost >= 0.0) || !std::isfinite(cost)) throw DomainError("test '" + id + "' has a negative cost");
  }

  double cost_of(const std::string& test) const {
    for (const auto& [id, cost] : test_costs)
      if (id == test) return cost;
    throw DomainError("no cost declared for test '" + test + "'");
  }

  double utility_of(const std::string& treatment, const std::string& diagnosis_label) const {
    auto it = std::find(treatments.begin(), treatments.end(), treatment);
    if (it == treatments.end()) throw DomainError("unknown treatment '" + treatment + "'");
    return utility[static_cast<std::size_t>(it - treatments.begin())][diagnosis.index_of(diagnosis_label)];
  }
};

struct RankedTreatment {
  std::string treatment;
  double expected_utility = 0.0;

  friend bool operator==(const RankedTreatment&, const RankedTreatment&) = default;
};

// Descending by expected utility; ties keep declaration order.
struct TreatmentRanking {
  std::vector<RankedTreatment> entries;

  const RankedTreatment& best() const { return entries.front(); }
};

inline TreatmentRanking rank_treatments(const PignisticDistribution& dist, const DecisionModel& model) {
  if (dist.variable != model.diagnosis)
    throw DomainError("distribution over '" + dist.variable.id() + "' does not match the diagnosis frame of '" +
                      model.diagnosis.id() + "'");
  model.validate();
  TreatmentRanking ranking;
  for (std::size_t t = 0; t < model.treatments.size(); ++t) {
    double eu = 0.0;
    for (std::size_t d = 0; d < dist.probabilities.size(); ++d) eu += dist.probabilities[d] * model.utility[t][d];
    ranking.entries.push_back({model.treatments[t], eu});
  }
  std::stable_sort(ranking.entries.begin(), ranking.entries.end(),
                   [](const RankedTreatment& a, const RankedTreatment& b) { return a.expected_utility > b.expected_utility; });
  return ranking;
}

// Payoff of acting at a site: the dig cost, plus the delay cost when the site is wrong.
inline double payoff_from_costs(double dig_cost, double delay_cost, bool is_correct_site) {
  if (!(dig_cost >= 0.0) || !(delay_cost >= 0.0))
    throw DomainError("dig and delay costs must be nonnegative");
  const double total = is_correct_site ? dig_cost : dig_cost + delay_cost;
  return total == 0.0 ? 0.0 : -total;
}

}  // namespace tbm
