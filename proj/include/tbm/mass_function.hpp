#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "tbm/domain.hpp"
#include "tbm/error.hpp"
#include "tbm/subset.hpp"

namespace tbm {

inline constexpr double kMassTolerance = 1e-9;
// Masses below this after a combination are dropped and the rest rescaled.
inline constexpr double kPruneThreshold = 1e-12;

// Basic belief masses over subsets of a domain's product frame.
//
// Invariants: every stored mass is > 0, the masses sum to 1 within
// kMassTolerance, and the empty set may carry mass (open world).
class MassFunction {
 public:
  using FocalMap = std::map<Subset, double>;

  MassFunction() : MassFunction(Domain{}) {}

  // Vacuous mass function on `domain`.
  explicit MassFunction(Domain domain) : domain_(std::move(domain)) { focal_.emplace(domain_.full(), 1.0); }

  // Duplicate subsets are summed; zero masses are dropped.
  MassFunction(Domain domain, const std::vector<std::pair<Subset, double>>& entries) : domain_(std::move(domain)) {
    for (const auto& [set, mass] : entries) {
      if (set.size() != domain_.size())
        throw MassError("focal set sized for " + std::to_string(set.size()) + " configurations, domain " +
                        domain_.to_string() + " has " + std::to_string(domain_.size()));
      if (!std::isfinite(mass) || mass < 0.0 || mass > 1.0 + kMassTolerance)
        throw MassError("mass " + std::to_string(mass) + " on " + domain_.format(set) + " is outside [0,1]");
      if (mass == 0.0) continue;
      focal_[set] += mass;
    }
    check_total();
  }

  const Domain& domain() const noexcept { return domain_; }
  const FocalMap& focal() const noexcept { return focal_; }
  std::size_t focal_count() const noexcept { return focal_.size(); }

  double mass(const Subset& set) const {
    auto it = focal_.find(set);
    return it == focal_.end() ? 0.0 : it->second;
  }

  double conflict() const { return mass(domain_.empty_set()); }

  bool is_vacuous() const { return focal_.size() == 1 && focal_.begin()->first.is_full(); }

  double total() const {
    double s = 0.0;
    for (const auto& [set, m] : focal_) s += m;
    return s;
  }

  std::string to_string() const {
    std::string s = domain_.to_string() + " [";
    bool first = true;
    for (const auto& [set, m] : focal_) {
      s += (first ? "" : ", ") + domain_.format(set) + ": " + std::to_string(m);
      first = false;
    }
    return s + "]";
  }

  friend bool operator==(const MassFunction& a, const MassFunction& b) {
    return a.domain_ == b.domain_ && a.focal_ == b.focal_;
  }

  // Builds from an accumulated map, applying the pruning rule.
  static MassFunction from_accumulated(Domain domain, FocalMap focal) {
    bool pruned = false;
    for (auto it = focal.begin(); it != focal.end();) {
      if (it->second < kPruneThreshold) {
        it = focal.erase(it);
        pruned = true;
      } else {
        ++it;
      }
    }
    if (focal.empty()) throw MassError("all masses pruned on " + domain.to_string());
    if (pruned) {
      double total = 0.0;
      for (const auto& [set, m] : focal) total += m;
      for (auto& [set, m] : focal) m /= total;
    }
    MassFunction out(std::move(domain), Unchecked{});
    out.focal_ = std::move(focal);
    out.check_total();
    return out;
  }

 private:
  struct Unchecked {};
  MassFunction(Domain domain, Unchecked) : domain_(std::move(domain)) {}

  void check_total() const {
    if (focal_.empty()) throw MassError("mass function on " + domain_.to_string() + " has no focal sets");
    const double t = total();
    if (std::abs(t - 1.0) > kMassTolerance)
      throw MassError("masses on " + domain_.to_string() + " sum to " + std::to_string(t) + ", expected 1");
  }

  Domain domain_;
  FocalMap focal_;
};

// True when both live on the same domain and every focal mass agrees within `tol`.
inline bool approx_equal(const MassFunction& a, const MassFunction& b, double tol = kMassTolerance) {
  if (!(a.domain() == b.domain())) return false;
  for (const auto& [set, m] : a.focal())
    if (std::abs(m - b.mass(set)) > tol) return false;
  for (const auto& [set, m] : b.focal())
    if (std::abs(m - a.mass(set)) > tol) return false;
  return true;
}

inline MassFunction vacuous(const Domain& domain) { return MassFunction(domain); }

inline MassFunction categorical(const Domain& domain, const Subset& set) {
  return MassFunction(domain, {{set, 1.0}});
}

// m(support) = weight, m(frame) = 1 - weight.
inline MassFunction simple_support(const Domain& domain, const Subset& support, double weight) {
  if (!(weight > 0.0 && weight <= 1.0))
    throw MassError("simple support weight " + std::to_string(weight) + " is outside (0,1]");
  if (support.size() != domain.size()) throw MassError("support set does not match domain " + domain.to_string());
  if (support.empty()) throw MassError("simple support set must not be empty");
  if (support.is_full()) throw MassError("simple support set must be a proper subset of the frame");
  if (weight == 1.0) return categorical(domain, support);
  return MassFunction(domain, {{support, weight}, {domain.full(), 1.0 - weight}});
}

// Unnormalized conjunctive rule: m(C) = sum over A & B = C of m1(A) m2(B).
inline MassFunction combine(const MassFunction& m1, const MassFunction& m2) {
  if (!(m1.domain() == m2.domain()))
    throw DomainError("cannot combine " + m1.domain().to_string() + " with " + m2.domain().to_string() +
                      "; extend both to a common domain first");
  if (m1.is_vacuous()) return m2;
  if (m2.is_vacuous()) return m1;
  std::unordered_map<Subset, double, SubsetHash> acc;
  acc.reserve(m1.focal_count() * m2.focal_count());
  for (const auto& [a, ma] : m1.focal())
    for (const auto& [b, mb] : m2.focal()) acc[a & b] += ma * mb;
  return MassFunction::from_accumulated(m1.domain(), MassFunction::FocalMap(acc.begin(), acc.end()));
}

// Dempster's rule: the conjunctive combination with conflict renormalized away.
inline MassFunction combine_normalized(const MassFunction& m1, const MassFunction& m2) {
  const MassFunction joint = combine(m1, m2);
  const double k = joint.conflict();
  if (k >= 1.0 - kMassTolerance) throw ContradictoryEvidence("total conflict between the combined mass functions");
  MassFunction::FocalMap focal;
  for (const auto& [set, m] : joint.focal())
    if (!set.empty()) focal.emplace(set, m / (1.0 - k));
  return MassFunction::from_accumulated(joint.domain(), std::move(focal));
}

// Projects every focal set onto `target` and sums masses of equal projections.
inline MassFunction marginalize(const MassFunction& m, const Domain& target) {
  if (target == m.domain()) return m;
  const auto map = projection_map(m.domain(), target);
  MassFunction::FocalMap acc;
  for (const auto& [set, mass] : m.focal()) {
    Subset proj(target.size());
    set.for_each([&](std::size_t c) { proj.set(map[c]); });
    acc[proj] += mass;
  }
  return MassFunction::from_accumulated(target, std::move(acc));
}

// Cylindrical extension: A becomes A x (frames of the added variables).
inline MassFunction vacuous_extension(const MassFunction& m, const Domain& superdomain) {
  if (superdomain == m.domain()) return m;
  const auto map = projection_map(superdomain, m.domain());
  MassFunction::FocalMap out;
  for (const auto& [set, mass] : m.focal()) {
    Subset ext(superdomain.size());
    for (std::size_t c = 0; c < superdomain.size(); ++c)
      if (set.test(map[c])) ext.set(c);
    out.emplace(std::move(ext), mass);
  }
  return MassFunction::from_accumulated(superdomain, std::move(out));
}

// Extends both operands to the union of their domains, then combines.
inline MassFunction combine_extended(const MassFunction& m1, const MassFunction& m2) {
  const Domain joint = m1.domain().union_with(m2.domain());
  return combine(vacuous_extension(m1, joint), vacuous_extension(m2, joint));
}

// Belief on a target domain given that `condition` takes `value`.
struct ConditionalBelief {
  Variable condition;
  std::string value;
  MassFunction masses;  // on the target domain

  ConditionalBelief(Variable condition_variable, std::string condition_value, MassFunction conditional_masses)
      : condition(std::move(condition_variable)), value(std::move(condition_value)), masses(std::move(conditional_masses)) {
    condition.index_of(value);
    if (masses.domain().contains(condition.id()))
      throw DomainError("conditioning variable '" + condition.id() + "' also appears in the target domain " +
                        masses.domain().to_string());
  }

  const Domain& target() const noexcept { return masses.domain(); }
};

// Ballooning extension: B becomes ({x0} x B) u ({x0}^c x target frame).
inline MassFunction balloon(const ConditionalBelief& cond) {
  const Domain joint = cond.target().union_with(Domain{cond.condition});
  const auto map = projection_map(joint, cond.target());
  const Subset slice = joint.cylinder(cond.condition.id(), cond.value);
  const Subset elsewhere = slice.complement();
  MassFunction::FocalMap out;
  for (const auto& [set, mass] : cond.masses.focal()) {
    Subset s = elsewhere;
    slice.for_each([&](std::size_t c) {
      if (set.test(map[c])) s.set(c);
    });
    out[s] += mass;
  }
  return MassFunction::from_accumulated(joint, std::move(out));
}

// Combination with the categorical mass on `variable = label`.
inline MassFunction condition_on(const MassFunction& m, const std::string& variable, const std::string& label) {
  const Subset slice = m.domain().cylinder(variable, label);
  MassFunction::FocalMap acc;
  for (const auto& [set, mass] : m.focal()) acc[set & slice] += mass;
  return MassFunction::from_accumulated(m.domain(), std::move(acc));
}

}  // namespace tbm
