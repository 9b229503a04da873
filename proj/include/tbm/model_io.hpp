#pragma once

#include <cmath>
#include <cstddef>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "tbm/domain.hpp"
#include "tbm/error.hpp"
#include "tbm/mass_function.hpp"
#include "tbm/pignistic.hpp"
#include "tbm/propagation.hpp"

// Model documents: the JSON schema in docs/format.md, its validation, and
// compilation into a valuation network plus a decision model.

namespace tbm {

inline constexpr const char* kModelFormat = "tbm-model/1";

struct TestSpec {
  std::string id;
  double cost = 0.0;
  std::vector<std::string> frame{"+", "-"};

  friend bool operator==(const TestSpec&, const TestSpec&) = default;
};

struct SymptomSpec {
  std::string id;
  std::vector<std::string> frame{"yes", "no"};

  friend bool operator==(const SymptomSpec&, const SymptomSpec&) = default;
};

struct DiagnosisSpec {
  std::string id;
  std::vector<std::string> frame;

  friend bool operator==(const DiagnosisSpec&, const DiagnosisSpec&) = default;
};

// A focal set written as configurations over the owning rule's variable
// list (in that list's order), or the whole frame.
struct FocalSpec {
  bool whole = false;
  std::vector<std::vector<std::string>> configurations;
  double mass = 0.0;

  friend bool operator==(const FocalSpec&, const FocalSpec&) = default;
};

enum class RuleKind { Joint, SimpleSupport, Conditional };

inline const char* to_string(RuleKind k) {
  switch (k) {
    case RuleKind::Joint: return "joint";
    case RuleKind::SimpleSupport: return "simple_support";
    case RuleKind::Conditional: return "conditional";
  }
  return "?";
}

struct BeliefRule {
  std::string id;
  RuleKind kind = RuleKind::Joint;
  std::vector<std::string> variables;  // domain, or the target of a conditional
  std::vector<FocalSpec> focal;        // joint and conditional
  FocalSpec support;                   // simple_support; `mass` is the weight
  std::string condition_variable;      // conditional
  std::string condition_value;

  friend bool operator==(const BeliefRule&, const BeliefRule&) = default;
};

// Derivation of the utility matrix from dig and delay costs.
struct PayoffCosts {
  std::vector<std::pair<std::string, double>> dig_cost;            // per treatment
  std::vector<std::pair<std::string, std::string>> correct_site;  // treatment -> diagnosis label
  std::vector<std::pair<std::string, double>> delay_cost;          // per diagnosis label

  friend bool operator==(const PayoffCosts&, const PayoffCosts&) = default;
};

struct ModelDocument {
  std::string name;
  std::vector<TestSpec> tests;
  std::vector<SymptomSpec> symptoms;
  DiagnosisSpec diagnosis;
  std::vector<std::string> treatments;
  std::vector<std::vector<double>> utility;  // [treatment][diagnosis]
  std::optional<PayoffCosts> payoff_costs;
  std::vector<FocalSpec> prior;  // on the diagnosis; empty means vacuous
  std::vector<BeliefRule> rules;

  friend bool operator==(const ModelDocument&, const ModelDocument&) = default;
};

struct CompiledModel {
  ValuationNetwork network;
  DecisionModel decision;
  std::vector<std::string> relation_ids;  // one per network relation
};

namespace detail {

using Json = nlohmann::ordered_json;

inline std::string pointer_child(const std::string& at, const std::string& key) { return at + "/" + key; }
inline std::string pointer_child(const std::string& at, std::size_t i) { return at + "/" + std::to_string(i); }

class DocumentReader {
 public:
  ModelDocument read(const Json& root) {
    expect_object(root, "");
    only_keys(root, "", {"format", "name", "tests", "symptoms", "diagnosis", "treatments", "utility",
                         "payoff_costs", "prior", "rules"});
    const std::string format = string_at(root, "", "format");
    if (format != kModelFormat)
      throw ModelError("/format", "unsupported format '" + format + "', expected '" + kModelFormat + "'");

    ModelDocument doc;
    if (root.contains("name")) doc.name = string_value(root["name"], "/name");

    if (root.contains("tests")) {
      const auto& arr = array_at(root, "", "tests");
      for (std::size_t i = 0; i < arr.size(); ++i) {
        const auto at = pointer_child("/tests", i);
        expect_object(arr[i], at);
        only_keys(arr[i], at, {"id", "cost", "frame"});
        TestSpec t;
        t.id = declare(string_at(arr[i], at, "id"), pointer_child(at, "id"));
        if (!arr[i].contains("cost")) throw ModelError(pointer_child(at, "cost"), "missing test cost");
        t.cost = number_value(arr[i]["cost"], pointer_child(at, "cost"));
        if (t.cost < 0.0) throw ModelError(pointer_child(at, "cost"), "test cost must be nonnegative");
        if (arr[i].contains("frame")) t.frame = frame_value(arr[i]["frame"], pointer_child(at, "frame"));
        doc.tests.push_back(std::move(t));
      }
    }

    if (root.contains("symptoms")) {
      const auto& arr = array_at(root, "", "symptoms");
      for (std::size_t i = 0; i < arr.size(); ++i) {
        const auto at = pointer_child("/symptoms", i);
        expect_object(arr[i], at);
        only_keys(arr[i], at, {"id", "frame"});
        SymptomSpec s;
        s.id = declare(string_at(arr[i], at, "id"), pointer_child(at, "id"));
        if (arr[i].contains("frame")) s.frame = frame_value(arr[i]["frame"], pointer_child(at, "frame"));
        doc.symptoms.push_back(std::move(s));
      }
    }

    if (!root.contains("diagnosis")) throw ModelError("/diagnosis", "exactly one diagnosis node is required");
    const auto& dg = root["diagnosis"];
    if (dg.is_array()) throw ModelError("/diagnosis", "exactly one diagnosis node is allowed, found a list");
    expect_object(dg, "/diagnosis");
    only_keys(dg, "/diagnosis", {"id", "frame"});
    doc.diagnosis.id = declare(string_at(dg, "/diagnosis", "id"), "/diagnosis/id");
    if (!dg.contains("frame")) throw ModelError("/diagnosis/frame", "the diagnosis has no default frame; list its outcomes");
    doc.diagnosis.frame = frame_value(dg["frame"], "/diagnosis/frame");

    const auto& tr = array_at(root, "", "treatments");
    if (tr.empty()) throw ModelError("/treatments", "at least one treatment is required");
    std::set<std::string> seen_treatments;
    for (std::size_t i = 0; i < tr.size(); ++i) {
      const auto at = pointer_child("/treatments", i);
      auto t = string_value(tr[i], at);
      if (!seen_treatments.insert(t).second) throw ModelError(at, "duplicate treatment '" + t + "'");
      doc.treatments.push_back(std::move(t));
    }

    if (root.contains("payoff_costs")) doc.payoff_costs = read_payoff_costs(root["payoff_costs"], doc);

    if (root.contains("utility")) {
      doc.utility = read_utility(root["utility"], doc);
      if (doc.payoff_costs) check_derived(doc);
    } else if (doc.payoff_costs) {
      doc.utility = derive_utility(*doc.payoff_costs, doc);
    } else {
      throw ModelError("/utility", "missing utility matrix (or payoff_costs to derive it from)");
    }

    bind(doc);
    if (root.contains("prior")) {
      const Variable diag(doc.diagnosis.id, doc.diagnosis.frame);
      doc.prior = focal_list(root["prior"], "/prior", {diag}, true);
    }

    if (root.contains("rules")) {
      const auto& arr = array_at(root, "", "rules");
      std::set<std::string> rule_ids;
      for (std::size_t i = 0; i < arr.size(); ++i) {
        auto rule = read_rule(arr[i], pointer_child("/rules", i));
        if (!rule_ids.insert(rule.id).second)
          throw ModelError(pointer_child(pointer_child("/rules", i), "id"), "duplicate rule id '" + rule.id + "'");
        doc.rules.push_back(std::move(rule));
      }
    }
    return doc;
  }

 private:
  static void expect_object(const Json& j, const std::string& at) {
    if (!j.is_object()) throw ModelError(at.empty() ? "/" : at, "expected an object");
  }

  static void only_keys(const Json& j, const std::string& at, std::initializer_list<const char*> allowed) {
    for (const auto& [key, value] : j.items()) {
      bool ok = false;
      for (const char* a : allowed) ok = ok || key == a;
      if (!ok) throw ModelError(pointer_child(at, key), "unknown field '" + key + "'");
    }
  }

  static std::string string_value(const Json& j, const std::string& at) {
    if (!j.is_string()) throw ModelError(at, "expected a string");
    auto s = j.get<std::string>();
    if (s.empty()) throw ModelError(at, "must not be empty");
    return s;
  }

  static std::string string_at(const Json& obj, const std::string& at, const char* key) {
    if (!obj.contains(key)) throw ModelError(pointer_child(at, key), std::string("missing field '") + key + "'");
    return string_value(obj[key], pointer_child(at, key));
  }

  static double number_value(const Json& j, const std::string& at) {
    if (!j.is_number()) throw ModelError(at, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw ModelError(at, "expected a finite number");
    return v;
  }

  static const Json& array_at(const Json& obj, const std::string& at, const char* key) {
    if (!obj.contains(key)) throw ModelError(pointer_child(at, key), std::string("missing field '") + key + "'");
    const auto& j = obj[key];
    if (!j.is_array()) throw ModelError(pointer_child(at, key), "expected a list");
    return j;
  }

  static std::vector<std::string> frame_value(const Json& j, const std::string& at) {
    if (!j.is_array()) throw ModelError(at, "expected a list of outcome labels");
    std::vector<std::string> frame;
    std::set<std::string> seen;
    for (std::size_t i = 0; i < j.size(); ++i) {
      auto label = string_value(j[i], pointer_child(at, i));
      if (!seen.insert(label).second) throw ModelError(pointer_child(at, i), "duplicate outcome '" + label + "'");
      frame.push_back(std::move(label));
    }
    if (frame.size() < 2) throw ModelError(at, "a frame needs at least two outcomes");
    return frame;
  }

  std::string declare(std::string id, const std::string& at) {
    if (!ids_.insert(id).second) throw ModelError(at, "duplicate variable id '" + id + "'");
    return id;
  }

  PayoffCosts read_payoff_costs(const Json& j, const ModelDocument& doc) const {
    const std::string at = "/payoff_costs";
    expect_object(j, at);
    only_keys(j, at, {"dig_cost", "correct_site", "delay_cost"});
    PayoffCosts pc;
    auto table = [&](const char* key) -> const Json& {
      if (!j.contains(key)) throw ModelError(pointer_child(at, key), std::string("missing field '") + key + "'");
      expect_object(j[key], pointer_child(at, key));
      return j[key];
    };
    const auto& dig = table("dig_cost");
    for (const auto& t : doc.treatments) {
      const auto p = pointer_child(pointer_child(at, "dig_cost"), t);
      if (!dig.contains(t)) throw ModelError(p, "missing dig cost for treatment '" + t + "'");
      const double c = number_value(dig[t], p);
      if (c < 0.0) throw ModelError(p, "dig cost must be nonnegative");
      pc.dig_cost.emplace_back(t, c);
    }
    for (const auto& [key, value] : dig.items())
      if (std::find(doc.treatments.begin(), doc.treatments.end(), key) == doc.treatments.end())
        throw ModelError(pointer_child(pointer_child(at, "dig_cost"), key), "unknown treatment '" + key + "'");

    const auto& site = table("correct_site");
    for (const auto& [key, value] : site.items()) {
      const auto p = pointer_child(pointer_child(at, "correct_site"), key);
      if (std::find(doc.treatments.begin(), doc.treatments.end(), key) == doc.treatments.end())
        throw ModelError(p, "unknown treatment '" + key + "'");
      auto label = string_value(value, p);
      if (std::find(doc.diagnosis.frame.begin(), doc.diagnosis.frame.end(), label) == doc.diagnosis.frame.end())
        throw ModelError(p, "'" + label + "' is not a diagnosis outcome");
      pc.correct_site.emplace_back(key, std::move(label));
    }

    const auto& delay = table("delay_cost");
    for (const auto& d : doc.diagnosis.frame) {
      const auto p = pointer_child(pointer_child(at, "delay_cost"), d);
      if (!delay.contains(d)) throw ModelError(p, "missing delay cost for diagnosis '" + d + "'");
      const double c = number_value(delay[d], p);
      if (c < 0.0) throw ModelError(p, "delay cost must be nonnegative");
      pc.delay_cost.emplace_back(d, c);
    }
    for (const auto& [key, value] : delay.items())
      if (std::find(doc.diagnosis.frame.begin(), doc.diagnosis.frame.end(), key) == doc.diagnosis.frame.end())
        throw ModelError(pointer_child(pointer_child(at, "delay_cost"), key), "unknown diagnosis '" + key + "'");
    return pc;
  }

  static std::vector<std::vector<double>> derive_utility(const PayoffCosts& pc, const ModelDocument& doc) {
    std::vector<std::vector<double>> u;
    for (std::size_t t = 0; t < doc.treatments.size(); ++t) {
      std::optional<std::string> site;
      for (const auto& [tr, s] : pc.correct_site)
        if (tr == doc.treatments[t]) site = s;
      std::vector<double> row;
      for (std::size_t d = 0; d < doc.diagnosis.frame.size(); ++d)
        row.push_back(payoff_from_costs(pc.dig_cost[t].second, pc.delay_cost[d].second,
                                        site && *site == doc.diagnosis.frame[d]));
      u.push_back(std::move(row));
    }
    return u;
  }

  static void check_derived(const ModelDocument& doc) {
    const auto derived = derive_utility(*doc.payoff_costs, doc);
    for (std::size_t t = 0; t < derived.size(); ++t)
      for (std::size_t d = 0; d < derived[t].size(); ++d)
        if (derived[t][d] != doc.utility[t][d])
          throw ModelError("/utility/" + doc.treatments[t] + "/" + std::to_string(d),
                           "utility " + std::to_string(doc.utility[t][d]) + " disagrees with payoff_costs (" +
                               std::to_string(derived[t][d]) + ")");
  }

  static std::vector<std::vector<double>> read_utility(const Json& j, const ModelDocument& doc) {
    expect_object(j, "/utility");
    for (const auto& [key, value] : j.items())
      if (std::find(doc.treatments.begin(), doc.treatments.end(), key) == doc.treatments.end())
        throw ModelError(pointer_child("/utility", key), "unknown treatment '" + key + "'");
    std::vector<std::vector<double>> u;
    for (const auto& t : doc.treatments) {
      const auto at = pointer_child("/utility", t);
      if (!j.contains(t)) throw ModelError(at, "utility matrix has no row for treatment '" + t + "'");
      const auto& row = j[t];
      if (!row.is_array() || row.size() != doc.diagnosis.frame.size())
        throw ModelError(at, "expected " + std::to_string(doc.diagnosis.frame.size()) +
                                 " utilities, one per diagnosis outcome");
      std::vector<double> r;
      for (std::size_t d = 0; d < row.size(); ++d) r.push_back(number_value(row[d], pointer_child(at, d)));
      u.push_back(std::move(r));
    }
    return u;
  }

  const std::vector<std::string>* frame_of(const std::string& id) const {
    for (const auto& t : doc_tests_) if (t.id == id) return &t.frame;
    for (const auto& s : doc_symptoms_) if (s.id == id) return &s.frame;
    if (doc_diagnosis_ && doc_diagnosis_->id == id) return &doc_diagnosis_->frame;
    return nullptr;
  }

  // Validates configurations and masses against `vars` (in list order).
  static std::vector<FocalSpec> focal_list(const Json& j, const std::string& at, const std::vector<Variable>& vars,
                                           bool must_sum_to_one) {
    if (!j.is_array() || j.empty()) throw ModelError(at, "expected a non-empty list of focal sets");
    std::vector<FocalSpec> out;
    double total = 0.0;
    for (std::size_t i = 0; i < j.size(); ++i) {
      const auto p = pointer_child(at, i);
      expect_object(j[i], p);
      only_keys(j[i], p, {"set", "mass"});
      if (!j[i].contains("set")) throw ModelError(pointer_child(p, "set"), "missing field 'set'");
      FocalSpec f = set_value(j[i]["set"], pointer_child(p, "set"), vars);
      if (!j[i].contains("mass")) throw ModelError(pointer_child(p, "mass"), "missing field 'mass'");
      f.mass = number_value(j[i]["mass"], pointer_child(p, "mass"));
      if (!(f.mass > 0.0 && f.mass <= 1.0)) throw ModelError(pointer_child(p, "mass"), "mass must lie in (0,1]");
      total += f.mass;
      out.push_back(std::move(f));
    }
    if (must_sum_to_one && std::abs(total - 1.0) > kMassTolerance)
      throw ModelError(at, "masses sum to " + std::to_string(total) + ", expected 1");
    return out;
  }

  static FocalSpec set_value(const Json& j, const std::string& at, const std::vector<Variable>& vars) {
    FocalSpec f;
    if (j.is_string() && j.get<std::string>() == "*") {
      f.whole = true;
      return f;
    }
    if (!j.is_array()) throw ModelError(at, "expected \"*\" or a list of configurations");
    for (std::size_t i = 0; i < j.size(); ++i) {
      const auto p = pointer_child(at, i);
      std::vector<std::string> config;
      if (j[i].is_string() && vars.size() == 1) {
        config.push_back(j[i].get<std::string>());
      } else if (j[i].is_array()) {
        for (std::size_t k = 0; k < j[i].size(); ++k) config.push_back(string_value(j[i][k], pointer_child(p, k)));
      } else {
        throw ModelError(p, "expected a configuration (list of labels)");
      }
      if (config.size() != vars.size())
        throw ModelError(p, "configuration has " + std::to_string(config.size()) + " labels for " +
                                std::to_string(vars.size()) + " variables");
      for (std::size_t k = 0; k < config.size(); ++k)
        if (!vars[k].find(config[k]))
          throw ModelError(p, "'" + config[k] + "' is not an outcome of '" + vars[k].id() + "'");
      f.configurations.push_back(std::move(config));
    }
    return f;
  }

  std::vector<Variable> variables_at(const Json& j, const std::string& at) const {
    if (!j.is_array() || j.empty()) throw ModelError(at, "expected a non-empty list of variable ids");
    std::vector<Variable> vars;
    std::set<std::string> seen;
    for (std::size_t i = 0; i < j.size(); ++i) {
      auto id = string_value(j[i], pointer_child(at, i));
      const auto* frame = frame_of(id);
      if (!frame) throw ModelError(pointer_child(at, i), "undeclared variable '" + id + "'");
      if (!seen.insert(id).second) throw ModelError(pointer_child(at, i), "variable '" + id + "' listed twice");
      vars.emplace_back(id, *frame);
    }
    return vars;
  }

  static std::vector<std::string> ids_of(const std::vector<Variable>& vars) {
    std::vector<std::string> out;
    for (const auto& v : vars) out.push_back(v.id());
    return out;
  }

  BeliefRule read_rule(const Json& j, const std::string& at) const {
    expect_object(j, at);
    BeliefRule rule;
    rule.id = string_at(j, at, "id");
    const std::string kind = string_at(j, at, "kind");
    if (kind == "joint") {
      only_keys(j, at, {"id", "kind", "variables", "focal"});
      rule.kind = RuleKind::Joint;
      if (!j.contains("variables")) throw ModelError(pointer_child(at, "variables"), "missing field 'variables'");
      const auto vars = variables_at(j["variables"], pointer_child(at, "variables"));
      rule.variables = ids_of(vars);
      if (!j.contains("focal")) throw ModelError(pointer_child(at, "focal"), "missing field 'focal'");
      rule.focal = focal_list(j["focal"], pointer_child(at, "focal"), vars, true);
    } else if (kind == "simple_support") {
      only_keys(j, at, {"id", "kind", "variables", "support", "weight"});
      rule.kind = RuleKind::SimpleSupport;
      if (!j.contains("variables")) throw ModelError(pointer_child(at, "variables"), "missing field 'variables'");
      const auto vars = variables_at(j["variables"], pointer_child(at, "variables"));
      rule.variables = ids_of(vars);
      if (!j.contains("support")) throw ModelError(pointer_child(at, "support"), "missing field 'support'");
      rule.support = set_value(j["support"], pointer_child(at, "support"), vars);
      if (rule.support.whole || rule.support.configurations.empty())
        throw ModelError(pointer_child(at, "support"), "support must be a non-empty proper subset of the frame");
      if (!j.contains("weight")) throw ModelError(pointer_child(at, "weight"), "missing field 'weight'");
      rule.support.mass = number_value(j["weight"], pointer_child(at, "weight"));
      if (!(rule.support.mass > 0.0 && rule.support.mass <= 1.0))
        throw ModelError(pointer_child(at, "weight"), "weight must lie in (0,1]");
    } else if (kind == "conditional") {
      only_keys(j, at, {"id", "kind", "if", "then"});
      rule.kind = RuleKind::Conditional;
      const auto ifat = pointer_child(at, "if");
      if (!j.contains("if")) throw ModelError(ifat, "missing field 'if'");
      expect_object(j["if"], ifat);
      only_keys(j["if"], ifat, {"variable", "value"});
      rule.condition_variable = string_at(j["if"], ifat, "variable");
      const auto* cframe = frame_of(rule.condition_variable);
      if (!cframe)
        throw ModelError(pointer_child(ifat, "variable"), "undeclared variable '" + rule.condition_variable + "'");
      rule.condition_value = string_at(j["if"], ifat, "value");
      if (std::find(cframe->begin(), cframe->end(), rule.condition_value) == cframe->end())
        throw ModelError(pointer_child(ifat, "value"),
                         "'" + rule.condition_value + "' is not an outcome of '" + rule.condition_variable + "'");
      const auto thenat = pointer_child(at, "then");
      if (!j.contains("then")) throw ModelError(thenat, "missing field 'then'");
      expect_object(j["then"], thenat);
      only_keys(j["then"], thenat, {"variables", "focal"});
      if (!j["then"].contains("variables"))
        throw ModelError(pointer_child(thenat, "variables"), "missing field 'variables'");
      const auto vars = variables_at(j["then"]["variables"], pointer_child(thenat, "variables"));
      for (const auto& v : vars)
        if (v.id() == rule.condition_variable)
          throw ModelError(pointer_child(thenat, "variables"), "the conditioning variable cannot also be a target");
      rule.variables = ids_of(vars);
      if (!j["then"].contains("focal")) throw ModelError(pointer_child(thenat, "focal"), "missing field 'focal'");
      rule.focal = focal_list(j["then"]["focal"], pointer_child(thenat, "focal"), vars, true);
    } else {
      throw ModelError(pointer_child(at, "kind"), "unknown rule kind '" + kind + "'");
    }
    return rule;
  }

  void bind(const ModelDocument& partial) {
    doc_tests_ = partial.tests;
    doc_symptoms_ = partial.symptoms;
    doc_diagnosis_ = partial.diagnosis;
  }

  std::set<std::string> ids_;
  std::vector<TestSpec> doc_tests_;
  std::vector<SymptomSpec> doc_symptoms_;
  std::optional<DiagnosisSpec> doc_diagnosis_;
};

inline std::string line_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < text.size() && i + 1 < byte; ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

inline Json focal_json(const FocalSpec& f, std::size_t arity) {
  if (f.whole) return "*";
  Json arr = Json::array();
  for (const auto& c : f.configurations) {
    if (arity == 1) {
      arr.push_back(c[0]);
    } else {
      arr.push_back(c);
    }
  }
  return arr;
}

inline Json focal_list_json(const std::vector<FocalSpec>& list, std::size_t arity) {
  Json arr = Json::array();
  for (const auto& f : list) arr.push_back(Json{{"set", focal_json(f, arity)}, {"mass", f.mass}});
  return arr;
}

// Subset of `domain` described by `f`, whose tuples follow `order`.
inline Subset to_subset(const FocalSpec& f, const std::vector<std::string>& order, const Domain& domain) {
  if (f.whole) return domain.full();
  std::vector<std::size_t> slot(order.size());
  for (std::size_t k = 0; k < order.size(); ++k) slot[k] = *domain.position(order[k]);
  Subset s(domain.size());
  for (const auto& config : f.configurations) {
    std::vector<std::string> canonical(order.size());
    for (std::size_t k = 0; k < order.size(); ++k) canonical[slot[k]] = config[k];
    s.set(domain.index_of(canonical));
  }
  return s;
}

}  // namespace detail

// Parses and validates a model document. Errors name the offending field.
inline ModelDocument parse_model(const std::string& text) {
  detail::Json root;
  try {
    root = detail::Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ModelError(detail::line_column(text, e.byte), "malformed document");
  }
  return detail::DocumentReader{}.read(root);
}

inline ModelDocument load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelError(path, "cannot open model file");
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_model(ss.str());
  } catch (const ModelError& e) {
    throw ModelError(path + ": " + e.where(), std::string(e.what()).substr(e.where().empty() ? 0 : e.where().size() + 2));
  }
}

inline std::string serialize_model(const ModelDocument& doc) {
  using detail::Json;
  Json root;
  root["format"] = kModelFormat;
  if (!doc.name.empty()) root["name"] = doc.name;
  Json tests = Json::array();
  for (const auto& t : doc.tests) tests.push_back(Json{{"id", t.id}, {"cost", t.cost}, {"frame", t.frame}});
  root["tests"] = tests;
  Json symptoms = Json::array();
  for (const auto& s : doc.symptoms) symptoms.push_back(Json{{"id", s.id}, {"frame", s.frame}});
  root["symptoms"] = symptoms;
  root["diagnosis"] = Json{{"id", doc.diagnosis.id}, {"frame", doc.diagnosis.frame}};
  root["treatments"] = doc.treatments;
  Json utility = Json::object();
  for (std::size_t t = 0; t < doc.treatments.size(); ++t) utility[doc.treatments[t]] = doc.utility[t];
  root["utility"] = utility;
  if (doc.payoff_costs) {
    Json dig = Json::object(), site = Json::object(), delay = Json::object();
    for (const auto& [k, v] : doc.payoff_costs->dig_cost) dig[k] = v;
    for (const auto& [k, v] : doc.payoff_costs->correct_site) site[k] = v;
    for (const auto& [k, v] : doc.payoff_costs->delay_cost) delay[k] = v;
    root["payoff_costs"] = Json{{"dig_cost", dig}, {"correct_site", site}, {"delay_cost", delay}};
  }
  if (!doc.prior.empty()) root["prior"] = detail::focal_list_json(doc.prior, 1);
  Json rules = Json::array();
  for (const auto& r : doc.rules) {
    Json j;
    j["id"] = r.id;
    j["kind"] = to_string(r.kind);
    switch (r.kind) {
      case RuleKind::Joint:
        j["variables"] = r.variables;
        j["focal"] = detail::focal_list_json(r.focal, r.variables.size());
        break;
      case RuleKind::SimpleSupport:
        j["variables"] = r.variables;
        j["support"] = detail::focal_json(r.support, r.variables.size());
        j["weight"] = r.support.mass;
        break;
      case RuleKind::Conditional:
        j["if"] = Json{{"variable", r.condition_variable}, {"value", r.condition_value}};
        j["then"] = Json{{"variables", r.variables}, {"focal", detail::focal_list_json(r.focal, r.variables.size())}};
        break;
    }
    rules.push_back(std::move(j));
  }
  root["rules"] = rules;
  return root.dump(2) + "\n";
}

// Builds the credal-level network and the pignistic-level decision model.
// Relations are ordered: prior (when present), then rules in document order.
inline CompiledModel compile_network(const ModelDocument& doc) {
  CompiledModel out;
  auto& net = out.network;
  for (const auto& t : doc.tests) net.variables.emplace_back(t.id, t.frame);
  for (const auto& s : doc.symptoms) net.variables.emplace_back(s.id, s.frame);
  const Variable diagnosis(doc.diagnosis.id, doc.diagnosis.frame);
  net.variables.push_back(diagnosis);

  auto lookup = [&](const std::string& id) -> const Variable& { return net.variable(id); };
  auto domain_of = [&](const std::vector<std::string>& ids) {
    std::vector<Variable> vs;
    for (const auto& id : ids) vs.push_back(lookup(id));
    return Domain(std::move(vs));
  };
  auto focal_entries = [](const std::vector<FocalSpec>& list, const std::vector<std::string>& order, const Domain& d) {
    std::vector<std::pair<Subset, double>> entries;
    for (const auto& f : list) entries.emplace_back(detail::to_subset(f, order, d), f.mass);
    return entries;
  };

  if (!doc.prior.empty()) {
    const Domain d{diagnosis};
    net.relations.emplace_back(d, focal_entries(doc.prior, {diagnosis.id()}, d));
    out.relation_ids.push_back("prior");
  }
  for (std::size_t i = 0; i < doc.rules.size(); ++i) {
    const auto& r = doc.rules[i];
    try {
      switch (r.kind) {
        case RuleKind::Joint: {
          const Domain d = domain_of(r.variables);
          net.relations.emplace_back(d, focal_entries(r.focal, r.variables, d));
          break;
        }
        case RuleKind::SimpleSupport: {
          const Domain d = domain_of(r.variables);
          net.relations.push_back(simple_support(d, detail::to_subset(r.support, r.variables, d), r.support.mass));
          break;
        }
        case RuleKind::Conditional: {
          const Domain target = domain_of(r.variables);
          ConditionalBelief cond(lookup(r.condition_variable), r.condition_value,
                                 MassFunction(target, focal_entries(r.focal, r.variables, target)));
          net.relations.push_back(balloon(cond));
          break;
        }
      }
    } catch (const Error& e) {
      throw ModelError("/rules/" + std::to_string(i) + " (" + r.id + ")", e.what());
    }
    out.relation_ids.push_back(r.id);
  }

  auto& dm = out.decision;
  dm.treatments = doc.treatments;
  dm.diagnosis = diagnosis;
  dm.utility = doc.utility;
  for (const auto& t : doc.tests) dm.test_costs.emplace_back(t.id, t.cost);
  dm.validate();
  return out;
}

}  // namespace tbm
