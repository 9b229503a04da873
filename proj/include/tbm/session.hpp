#pragma once

#include <chrono>
#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "tbm/error.hpp"
#include "tbm/model_io.hpp"
#include "tbm/planner.hpp"
#include "tbm/tree_document.hpp"

// Interactive sessions over a compiled model and the v1 request/response
// protocol that the front end and the `serve` command speak.

namespace tbm {

inline constexpr int kDefaultPlanDepth = 5;

struct EvidenceEntry {
  std::string variable;
  std::string value;
  std::string kind;  // "test" or "symptom"
  std::int64_t timestamp_ms = 0;
};

// One user's evidence and lazily computed plan tree. Every public member
// locks the session, so calls on one session are serialized.
class Session {
 public:
  Session(std::string id, std::string model_text, int depth = kDefaultPlanDepth)
      : id_(std::move(id)), model_text_(std::move(model_text)), doc_(parse_model(model_text_)),
        compiled_(compile_network(doc_)), depth_(check_depth(depth)) {}

  const std::string& id() const { return id_; }
  const std::string& model_text() const { return model_text_; }
  const ModelDocument& document() const { return doc_; }

  void set_result(const std::string& test, const std::string& outcome, bool override_existing = false) {
    std::lock_guard lock(mutex_);
    if (!is_test(test)) throw SessionError("unknown_variable", "'" + test + "' is not a test of this model");
    enter(test, outcome, "test", override_existing);
  }

  void set_symptom(const std::string& symptom, const std::string& value, bool override_existing = false) {
    std::lock_guard lock(mutex_);
    if (!is_symptom(symptom)) throw SessionError("unknown_variable", "'" + symptom + "' is not a symptom of this model");
    enter(symptom, value, "symptom", override_existing);
  }

  void reset() {
    std::lock_guard lock(mutex_);
    evidence_.clear();
    tree_.reset();
  }

  std::vector<EvidenceEntry> evidence() const {
    std::lock_guard lock(mutex_);
    return evidence_;
  }

  std::map<std::string, std::string> evidence_map() const {
    std::lock_guard lock(mutex_);
    return evidence_map_locked();
  }

  int depth() const {
    std::lock_guard lock(mutex_);
    return depth_;
  }

  // Tree document for `depth` (or the session depth), recomputed when stale.
  Json tree(std::optional<int> depth = std::nullopt) {
    std::lock_guard lock(mutex_);
    const PlanNode& root = current_tree(depth);
    return tree_document(doc_.name, evidence_map_locked(), depth_, root);
  }

  Json explain(const std::string& node_path, std::optional<int> depth = std::nullopt) {
    std::lock_guard lock(mutex_);
    const PlanNode& node = find_node(current_tree(depth), parse_node_path(node_path));
    Json j;
    j["node"] = format_node_path(parse_node_path(node_path));
    j["status"] = node_status(node);
    if (!node.contradiction) {
      j["selected"] = node.selected;
      j["max_u"] = node.max_u_selected;
      j["explanation"] = explanation_json(node);
    }
    return j;
  }

  Json ranking(const std::string& node_path, std::optional<int> depth = std::nullopt) {
    std::lock_guard lock(mutex_);
    const PlanNode& node = find_node(current_tree(depth), parse_node_path(node_path));
    Json j;
    j["node"] = format_node_path(parse_node_path(node_path));
    j["status"] = node_status(node);
    if (!node.contradiction) {
      j["treatment"] = node.ranking.best().treatment;
      j["ranking"] = ranking_json(node.ranking);
    }
    return j;
  }

  Json snapshot() const {
    std::lock_guard lock(mutex_);
    Json ev = Json::array();
    for (const auto& e : evidence_)
      ev.push_back(Json{{"variable", e.variable}, {"value", e.value}, {"kind", e.kind}, {"timestamp_ms", e.timestamp_ms}});
    return Json{{"id", id_}, {"depth", depth_}, {"model_text", model_text_}, {"evidence", ev}};
  }

  void restore_evidence(const Json& entries) {
    std::lock_guard lock(mutex_);
    evidence_.clear();
    tree_.reset();
    for (const auto& e : entries) {
      EvidenceEntry entry{e.at("variable").get<std::string>(), e.at("value").get<std::string>(),
                          e.at("kind").get<std::string>(), e.value("timestamp_ms", std::int64_t{0})};
      if (entry.kind == "test" ? !is_test(entry.variable) : !is_symptom(entry.variable))
        throw SessionError("bad_snapshot", "snapshot names unknown " + entry.kind + " '" + entry.variable + "'");
      compiled_.network.variable(entry.variable).index_of(entry.value);
      evidence_.push_back(std::move(entry));
    }
  }

 private:
  static int check_depth(int depth) {
    if (depth < 1) throw SessionError("bad_request", "plan depth must be at least 1");
    return depth;
  }

  bool is_test(const std::string& id) const {
    for (const auto& t : doc_.tests)
      if (t.id == id) return true;
    return false;
  }

  bool is_symptom(const std::string& id) const {
    for (const auto& s : doc_.symptoms)
      if (s.id == id) return true;
    return false;
  }

  void enter(const std::string& variable, const std::string& value, const char* kind, bool override_existing) {
    const Variable& v = compiled_.network.variable(variable);
    if (!v.find(value))
      throw SessionError("bad_outcome", "'" + value + "' is not an outcome of '" + variable + "'");
    for (auto it = evidence_.begin(); it != evidence_.end(); ++it) {
      if (it->variable != variable) continue;
      if (!override_existing)
        throw SessionError("conflict", "'" + variable + "' already has the result '" + it->value +
                                           "'; reset the session or set override");
      evidence_.erase(it);
      break;
    }
    const auto now = std::chrono::duration_cast<std::chrono::milliseconds>(
                         std::chrono::system_clock::now().time_since_epoch())
                         .count();
    evidence_.push_back({variable, value, kind, static_cast<std::int64_t>(now)});
    tree_.reset();
  }

  std::map<std::string, std::string> evidence_map_locked() const {
    std::map<std::string, std::string> m;
    for (const auto& e : evidence_) m[e.variable] = e.value;
    return m;
  }

  const PlanNode& current_tree(std::optional<int> depth) {
    if (depth && check_depth(*depth) != depth_) {
      depth_ = *depth;
      tree_.reset();
    }
    if (!tree_) {
      ValuationNetwork net = compiled_.network;
      net.evidence = evidence_map_locked();
      try {
        tree_ = build_tree(net, compiled_.decision, PlanConfig{depth_});
      } catch (const ContradictoryEvidence& e) {
        throw SessionError("contradiction", e.what());
      }
    }
    return *tree_;
  }

  std::string id_;
  std::string model_text_;
  ModelDocument doc_;
  CompiledModel compiled_;
  mutable std::mutex mutex_;
  std::vector<EvidenceEntry> evidence_;
  int depth_;
  std::unique_ptr<PlanNode> tree_;
};

// Dispatches v1 requests to sessions. Thread-safe; sessions are independent.
class Service {
 public:
  Json handle(const Json& request) {
    try {
      if (!request.is_object()) throw SessionError("bad_request", "request must be an object");
      if (!request.contains("version") || request["version"] != kSchemaVersion)
        throw SessionError("bad_version", std::string("request must carry \"version\": \"") + kSchemaVersion + "\"");
      Json body = dispatch(request);
      Json response;
      response["version"] = kSchemaVersion;
      response["ok"] = true;
      for (auto& [k, v] : body.items()) response[k] = std::move(v);
      return response;
    } catch (const SessionError& e) {
      return failure(e.code(), e.what());
    } catch (const ModelError& e) {
      return failure("model_error", e.what());
    } catch (const Error& e) {
      return failure("engine_error", e.what());
    } catch (const nlohmann::json::exception& e) {
      return failure("bad_request", e.what());
    }
  }

  std::string handle_text(const std::string& text) {
    Json request;
    try {
      request = Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      return failure("bad_request", std::string("malformed request: ") + e.what()).dump();
    }
    return handle(request).dump();
  }

  Json snapshot() const {
    std::lock_guard lock(mutex_);
    Json sessions = Json::array();
    for (const auto& [id, s] : sessions_) sessions.push_back(s->snapshot());
    return Json{{"version", kSchemaVersion}, {"next_id", next_id_}, {"sessions", sessions}};
  }

  void restore(const Json& snap) {
    std::map<std::string, std::shared_ptr<Session>> restored;
    for (const auto& s : snap.at("sessions")) {
      auto session = std::make_shared<Session>(s.at("id").get<std::string>(), s.at("model_text").get<std::string>(),
                                               s.value("depth", kDefaultPlanDepth));
      session->restore_evidence(s.at("evidence"));
      restored.emplace(session->id(), std::move(session));
    }
    std::lock_guard lock(mutex_);
    sessions_ = std::move(restored);
    next_id_ = snap.value("next_id", static_cast<std::uint64_t>(sessions_.size() + 1));
  }

 private:
  static Json failure(const std::string& code, const std::string& message) {
    return Json{{"version", kSchemaVersion}, {"ok", false}, {"error", Json{{"code", code}, {"message", message}}}};
  }

  static std::string required_string(const Json& req, const char* key) {
    if (!req.contains(key) || !req[key].is_string())
      throw SessionError("bad_request", std::string("missing string field '") + key + "'");
    return req[key].get<std::string>();
  }

  static std::optional<int> optional_depth(const Json& req) {
    if (!req.contains("depth")) return std::nullopt;
    if (!req["depth"].is_number_integer()) throw SessionError("bad_request", "'depth' must be an integer");
    return req["depth"].get<int>();
  }

  static std::string node_of(const Json& req) {
    if (!req.contains("node")) return "";
    if (!req["node"].is_string()) throw SessionError("bad_request", "'node' must be a path string");
    return req["node"].get<std::string>();
  }

  std::shared_ptr<Session> session(const Json& req) {
    const auto id = required_string(req, "session");
    std::lock_guard lock(mutex_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw SessionError("unknown_session", "no session '" + id + "'");
    return it->second;
  }

  Json dispatch(const Json& req) {
    const auto op = required_string(req, "op");
    if (op == "create") {
      std::string text;
      if (req.contains("model_text")) {
        text = required_string(req, "model_text");
      } else if (req.contains("model_path")) {
        const auto path = required_string(req, "model_path");
        std::ifstream in(path, std::ios::binary);
        if (!in) throw SessionError("model_error", "cannot open model file '" + path + "'");
        std::ostringstream ss;
        ss << in.rdbuf();
        text = ss.str();
      } else {
        throw SessionError("bad_request", "create needs 'model_text' or 'model_path'");
      }
      std::string id;
      {
        std::lock_guard lock(mutex_);
        id = "s" + std::to_string(next_id_++);
      }
      auto s = std::make_shared<Session>(id, std::move(text), optional_depth(req).value_or(kDefaultPlanDepth));
      Json body{{"session", id}, {"model", s->document().name}};
      std::lock_guard lock(mutex_);
      sessions_.emplace(id, std::move(s));
      return body;
    }
    if (op == "set_result") {
      session(req)->set_result(required_string(req, "test"), required_string(req, "outcome"),
                               req.value("override", false));
      return Json::object();
    }
    if (op == "set_symptom") {
      session(req)->set_symptom(required_string(req, "symptom"), required_string(req, "value"),
                                req.value("override", false));
      return Json::object();
    }
    if (op == "get_tree") {
      auto tree = session(req)->tree(optional_depth(req));
      return Json{{"tree", std::move(tree)}};
    }
    if (op == "explain") return session(req)->explain(node_of(req), optional_depth(req));
    if (op == "ranking") return session(req)->ranking(node_of(req), optional_depth(req));
    if (op == "reset") {
      session(req)->reset();
      return Json::object();
    }
    if (op == "evidence") {
      Json ev = Json::array();
      for (const auto& e : session(req)->evidence())
        ev.push_back(Json{{"variable", e.variable}, {"value", e.value}, {"kind", e.kind}, {"timestamp_ms", e.timestamp_ms}});
      return Json{{"evidence", ev}};
    }
    if (op == "close") {
      const auto id = required_string(req, "session");
      std::lock_guard lock(mutex_);
      if (sessions_.erase(id) == 0) throw SessionError("unknown_session", "no session '" + id + "'");
      return Json::object();
    }
    if (op == "snapshot") return Json{{"snapshot", snapshot()}};
    if (op == "restore") {
      if (!req.contains("snapshot")) throw SessionError("bad_request", "restore needs a 'snapshot'");
      restore(req["snapshot"]);
      return Json::object();
    }
    throw SessionError("unknown_op", "unknown operation '" + op + "'");
  }

  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::uint64_t next_id_ = 1;
};

}  // namespace tbm
