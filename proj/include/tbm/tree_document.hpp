#pragma once

#include <algorithm>
#include <cstddef>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tbm/error.hpp"
#include "tbm/planner.hpp"

// Rendering of plan trees: the versioned structured document shared by the
// CLI and the session service, plus an indented text view.

namespace tbm {

inline constexpr const char* kSchemaVersion = "v1";

using Json = nlohmann::ordered_json;

// "", "+", "+,-", ... One step per level: "+" follows the positive child.
using NodePath = std::vector<char>;

inline NodePath parse_node_path(const std::string& text) {
  NodePath path;
  if (text.empty() || text == "root") return path;
  std::string token;
  std::istringstream in(text);
  while (std::getline(in, token, ',')) {
    token.erase(std::remove(token.begin(), token.end(), ' '), token.end());
    if (token == "+") {
      path.push_back('+');
    } else if (token == "-") {
      path.push_back('-');
    } else {
      throw SessionError("invalid_path", "node path '" + text + "' must be a comma-separated list of + and -");
    }
  }
  return path;
}

inline std::string format_node_path(const NodePath& path) {
  std::string s;
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (i) s += ",";
    s += path[i];
  }
  return s;
}

inline const PlanNode& find_node(const PlanNode& root, const NodePath& path) {
  const PlanNode* node = &root;
  for (std::size_t i = 0; i < path.size(); ++i) {
    const PlanNode* next = path[i] == '+' ? node->positive.get() : node->negative.get();
    if (!next)
      throw SessionError("invalid_path", "no node at '" + format_node_path(path) + "' (tree ends after step " +
                                             std::to_string(i) + ")");
    node = next;
  }
  return *node;
}

inline const char* node_status(const PlanNode& node) {
  if (node.contradiction) return "contradiction";
  if (node.selected == kNoTest) return "no_test";
  if (node.is_leaf()) return "depth_limit";
  return "test";
}

inline Json candidate_json(const CandidateScore& s) {
  Json j;
  j["candidate"] = s.candidate;
  j["max_u"] = s.max_u;
  if (s.is_no_test()) return j;
  j["cost"] = s.cost;
  j["betp_pos"] = s.betp_pos;
  j["betp_neg"] = s.betp_neg;
  j["max_u_pos"] = s.max_u_pos ? Json(*s.max_u_pos) : Json(nullptr);
  j["max_u_neg"] = s.max_u_neg ? Json(*s.max_u_neg) : Json(nullptr);
  j["treatment_pos"] = s.treatment_pos ? Json(*s.treatment_pos) : Json(nullptr);
  j["treatment_neg"] = s.treatment_neg ? Json(*s.treatment_neg) : Json(nullptr);
  return j;
}

inline Json explanation_json(const PlanNode& node) {
  Json arr = Json::array();
  for (const auto& s : node.explanation) arr.push_back(candidate_json(s));
  return arr;
}

inline Json ranking_json(const TreatmentRanking& r) {
  Json arr = Json::array();
  for (const auto& e : r.entries) arr.push_back(Json{{"treatment", e.treatment}, {"expected_utility", e.expected_utility}});
  return arr;
}

inline Json evidence_json(const std::vector<EvidenceItem>& items) {
  Json arr = Json::array();
  for (const auto& e : items) arr.push_back(Json{{"variable", e.variable}, {"value", e.value}});
  return arr;
}

inline Json node_json(const PlanNode& node, NodePath& path) {
  Json j;
  j["path"] = format_node_path(path);
  j["status"] = node_status(node);
  j["evidence_path"] = evidence_json(node.evidence_path);
  if (node.contradiction) return j;
  j["selected"] = node.selected;
  j["max_u"] = node.max_u_selected;
  j["treatment"] = node.ranking.best().treatment;
  j["explanation"] = explanation_json(node);
  j["ranking"] = ranking_json(node.ranking);
  if (!node.is_leaf()) {
    Json children;
    path.push_back('+');
    children["+"] = node_json(*node.positive, path);
    path.back() = '-';
    children["-"] = node_json(*node.negative, path);
    path.pop_back();
    j["children"] = std::move(children);
  }
  return j;
}

inline Json tree_document(const std::string& model_name, const std::map<std::string, std::string>& evidence,
                          int depth, const PlanNode& root) {
  Json doc;
  doc["version"] = kSchemaVersion;
  doc["model"] = model_name;
  doc["depth"] = depth;
  doc["evidence"] = evidence_json(detail::evidence_items(evidence));
  NodePath path;
  doc["root"] = node_json(root, path);
  return doc;
}

namespace detail {

inline std::string fixed(double v, int digits = 3) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << (v == 0.0 ? 0.0 : v);
  return os.str();
}

inline void render(std::ostringstream& os, const PlanNode& node, const std::string& edge, int level) {
  os << std::string(static_cast<std::size_t>(level) * 2, ' ') << edge;
  if (node.contradiction) {
    os << "CONTRADICTION\n";
    return;
  }
  os << node.selected << "  MaxU=" << fixed(node.max_u_selected) << "  best=" << node.ranking.best().treatment
     << " (EU " << fixed(node.ranking.best().expected_utility) << ")";
  if (node.selected != kNoTest && node.is_leaf()) os << "  [depth limit]";
  os << "\n";
  if (!node.is_leaf()) {
    render(os, *node.positive, "+ ", level + 1);
    render(os, *node.negative, "- ", level + 1);
  }
}

}  // namespace detail

inline std::string render_tree(const PlanNode& root) {
  std::ostringstream os;
  detail::render(os, root, "", 0);
  return os.str();
}

// Candidates by MaxU descending with NO_TEST pinned first; '*' marks the selection.
inline std::string render_explanation(const PlanNode& node) {
  std::ostringstream os;
  if (node.contradiction) return "contradictory evidence on this branch\n";
  std::vector<const CandidateScore*> order;
  for (const auto& s : node.explanation)
    if (!s.is_no_test()) order.push_back(&s);
  std::stable_sort(order.begin(), order.end(), [](auto* a, auto* b) { return a->max_u > b->max_u; });
  order.insert(order.begin(), &node.explanation.front());
  os << "selected: " << node.selected << " (MaxU " << detail::fixed(node.max_u_selected) << ")\n";
  os << "candidates:\n";
  for (const auto* s : order) {
    os << (s->candidate == node.selected ? " * " : "   ") << std::left << std::setw(12) << s->candidate << std::right
       << " MaxU=" << detail::fixed(s->max_u);
    if (!s->is_no_test()) {
      os << "  BetP(+)=" << detail::fixed(s->betp_pos, 4) << " MaxU(+)="
         << (s->max_u_pos ? detail::fixed(*s->max_u_pos) : std::string("n/a")) << "  BetP(-)="
         << detail::fixed(s->betp_neg, 4) << " MaxU(-)="
         << (s->max_u_neg ? detail::fixed(*s->max_u_neg) : std::string("n/a")) << "  cost=" << detail::fixed(s->cost);
    }
    os << "\n";
  }
  os << "treatment ranking:\n";
  for (const auto& e : node.ranking.entries)
    os << "   " << std::left << std::setw(12) << e.treatment << std::right << " EU=" << detail::fixed(e.expected_utility)
       << "\n";
  return os.str();
}

}  // namespace tbm
