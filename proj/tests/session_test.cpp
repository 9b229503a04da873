#include <fstream>
#include <sstream>
#include <thread>

#include <gtest/gtest.h>

#include "httplib.h"
#include "tbm/session.hpp"

namespace {

using tbm::Json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const std::string kWaste = TBM_MODELS_DIR "/waste_disposal.json";
const std::string kMinimal = TBM_MODELS_DIR "/minimal.json";

Json request(const std::string& op, Json fields = Json::object()) {
  Json r{{"version", "v1"}, {"op", op}};
  for (auto& [k, v] : fields.items()) r[k] = v;
  return r;
}

class ServiceTest : public ::testing::Test {
 protected:
  tbm::Service service;

  Json ok(const Json& req) {
    const auto res = service.handle(req);
    EXPECT_EQ(res.at("version"), "v1");
    EXPECT_TRUE(res.at("ok").get<bool>()) << res.dump();
    return res;
  }

  std::string error_code(const Json& req) {
    const auto res = service.handle(req);
    EXPECT_EQ(res.at("version"), "v1");
    EXPECT_FALSE(res.at("ok").get<bool>()) << res.dump();
    return res.at("error").at("code").get<std::string>();
  }

  std::string create(const std::string& path, int depth) {
    return ok(request("create", {{"model_path", path}, {"depth", depth}})).at("session");
  }
};

std::vector<std::string> candidates(const Json& node) {
  std::vector<std::string> out;
  for (const auto& c : node.at("explanation")) out.push_back(c.at("candidate"));
  return out;
}

TEST_F(ServiceTest, FreshSessionCoversAllTests) {
  const auto id = create(kWaste, 1);
  EXPECT_EQ(id, "s1");
  const auto tree = ok(request("get_tree", {{"session", id}})).at("tree");
  EXPECT_EQ(tree.at("version"), "v1");
  const auto& root = tree.at("root");
  const auto c = candidates(root);
  ASSERT_EQ(c.size(), 22u);
  EXPECT_EQ(c.front(), "NO_TEST");
  for (int i = 1; i <= 21; ++i) EXPECT_EQ(c[static_cast<std::size_t>(i)], "test-" + std::to_string(i));
  EXPECT_FALSE(root.contains("children"));
}

TEST_F(ServiceTest, EnteredResultAppearsInEvidencePathAndLeavesCandidates) {
  const auto id = create(kWaste, 2);
  ok(request("set_result", {{"session", id}, {"test", "test-12"}, {"outcome", "+"}}));
  const auto tree = ok(request("get_tree", {{"session", id}})).at("tree");
  const auto& path = tree.at("root").at("evidence_path");
  ASSERT_EQ(path.size(), 1u);
  EXPECT_EQ(path[0], (Json{{"variable", "test-12"}, {"value", "+"}}));
  const auto c = candidates(tree.at("root"));
  EXPECT_EQ(std::count(c.begin(), c.end(), "test-12"), 0);
  EXPECT_EQ(c.size(), 21u);
}

void expect_absent_everywhere(const Json& node, const std::string& test) {
  if (node.contains("explanation")) {
    const auto c = candidates(node);
    EXPECT_EQ(std::count(c.begin(), c.end(), test), 0) << node.at("path");
  }
  if (node.contains("children"))
    for (const auto& [edge, child] : node.at("children").items()) expect_absent_everywhere(child, test);
}

TEST_F(ServiceTest, EnteredTestsNeverReappear) {
  const auto id = create(kWaste, 4);
  ok(request("set_result", {{"session", id}, {"test", "test-1"}, {"outcome", "-"}}));
  ok(request("set_result", {{"session", id}, {"test", "test-16"}, {"outcome", "-"}}));
  const auto tree = ok(request("get_tree", {{"session", id}})).at("tree");
  expect_absent_everywhere(tree.at("root"), "test-1");
  expect_absent_everywhere(tree.at("root"), "test-16");
}

TEST_F(ServiceTest, ExplainMaximumIsTheSelectedValue) {
  const auto id = create(kWaste, 3);
  for (const std::string node : {"", "+", "-"}) {
    const auto ex = ok(request("explain", {{"session", id}, {"node", node}}));
    if (ex.at("status") == "contradiction") continue;
    double best = -1e300;
    for (const auto& c : ex.at("explanation")) best = std::max(best, c.at("max_u").get<double>());
    EXPECT_EQ(best, ex.at("max_u").get<double>()) << node;
  }
  const auto rk = ok(request("ranking", {{"session", id}}));
  EXPECT_EQ(rk.at("ranking").size(), 8u);
  EXPECT_EQ(rk.at("treatment"), rk.at("ranking")[0].at("treatment"));
}

TEST_F(ServiceTest, ConflictingResultIsRejectedUnlessOverridden) {
  const auto id = create(kWaste, 1);
  ok(request("set_result", {{"session", id}, {"test", "test-3"}, {"outcome", "-"}}));
  EXPECT_EQ(error_code(request("set_result", {{"session", id}, {"test", "test-3"}, {"outcome", "-"}})), "conflict");
  EXPECT_EQ(error_code(request("set_result", {{"session", id}, {"test", "test-3"}, {"outcome", "+"}})), "conflict");
  ok(request("set_result", {{"session", id}, {"test", "test-3"}, {"outcome", "+"}, {"override", true}}));
  const auto ev = ok(request("evidence", {{"session", id}})).at("evidence");
  ASSERT_EQ(ev.size(), 1u);
  EXPECT_EQ(ev[0].at("value"), "+");
}

TEST_F(ServiceTest, ErrorCodes) {
  const auto id = create(kWaste, 1);
  EXPECT_EQ(error_code(request("set_result", {{"session", id}, {"test", "symp-1"}, {"outcome", "+"}})),
            "unknown_variable");
  EXPECT_EQ(error_code(request("set_result", {{"session", id}, {"test", "test-1"}, {"outcome", "yes"}})), "bad_outcome");
  EXPECT_EQ(error_code(request("set_symptom", {{"session", id}, {"symptom", "symp-1"}, {"value", "+"}})), "bad_outcome");
  EXPECT_EQ(error_code(request("get_tree", {{"session", "s99"}})), "unknown_session");
  EXPECT_EQ(error_code(request("explain", {{"session", id}, {"node", "+,x"}})), "invalid_path");
  EXPECT_EQ(error_code(request("explain", {{"session", id}, {"node", "+,+,+,+,+,+,+,+"}})), "invalid_path");
  EXPECT_EQ(error_code(request("frobnicate")), "unknown_op");
  EXPECT_EQ(error_code(request("create")), "bad_request");
  EXPECT_EQ(error_code(request("create", {{"model_text", "{}"}})), "model_error");
  EXPECT_EQ(error_code(request("get_tree", {{"session", id}, {"depth", 0}})), "bad_request");
  EXPECT_EQ(error_code(Json{{"op", "create"}}), "bad_version");
  EXPECT_EQ(error_code(Json{{"version", "v2"}, {"op", "create"}}), "bad_version");
  const auto res = Json::parse(service.handle_text("{not json"));
  EXPECT_EQ(res.at("error").at("code"), "bad_request");
  EXPECT_EQ(res.at("version"), "v1");
}

TEST_F(ServiceTest, ContradictoryEvidenceIsReported) {
  const auto text = read_file(kMinimal);
  auto doc = Json::parse(text);
  doc["rules"][0]["then"]["focal"] = Json::parse(R"([{"set": ["+"], "mass": 1}])");
  doc["prior"] = Json::parse(R"([{"set": ["faulty"], "mass": 1}])");
  const auto id = ok(request("create", {{"model_text", doc.dump()}})).at("session").get<std::string>();
  ok(request("set_result", {{"session", id}, {"test", "probe"}, {"outcome", "-"}}));
  EXPECT_EQ(error_code(request("get_tree", {{"session", id}})), "contradiction");
}

TEST_F(ServiceTest, ResetAndClose) {
  const auto id = create(kWaste, 1);
  ok(request("set_symptom", {{"session", id}, {"symptom", "symp-4"}, {"value", "yes"}}));
  EXPECT_EQ(ok(request("evidence", {{"session", id}})).at("evidence").size(), 1u);
  ok(request("reset", {{"session", id}}));
  EXPECT_TRUE(ok(request("evidence", {{"session", id}})).at("evidence").empty());
  ok(request("close", {{"session", id}}));
  EXPECT_EQ(error_code(request("evidence", {{"session", id}})), "unknown_session");
}

TEST_F(ServiceTest, ReplayIsDeterministic) {
  auto run = [&]() {
    const auto id = create(kWaste, 3);
    ok(request("set_result", {{"session", id}, {"test", "test-1"}, {"outcome", "-"}}));
    ok(request("set_symptom", {{"session", id}, {"symptom", "symp-5"}, {"value", "yes"}}));
    return ok(request("get_tree", {{"session", id}})).at("tree").dump();
  };
  EXPECT_EQ(run(), run());
}

TEST_F(ServiceTest, SnapshotRestoresSessions) {
  const auto id = create(kWaste, 2);
  ok(request("set_result", {{"session", id}, {"test", "test-1"}, {"outcome", "-"}}));
  const auto before = ok(request("get_tree", {{"session", id}})).at("tree");
  const auto snap = ok(request("snapshot")).at("snapshot");

  tbm::Service fresh;
  EXPECT_TRUE(fresh.handle(request("restore", {{"snapshot", snap}})).at("ok").get<bool>());
  const auto after = fresh.handle(request("get_tree", {{"session", id}}));
  EXPECT_EQ(after.at("tree"), before);
  // New ids continue after the restored ones.
  EXPECT_EQ(fresh.handle(request("create", {{"model_path", kMinimal}})).at("session"), "s2");
}

TEST_F(ServiceTest, MatchesDirectPlanning) {
  const auto id = create(kWaste, 3);
  ok(request("set_result", {{"session", id}, {"test", "test-12"}, {"outcome", "+"}}));
  const auto via_service = ok(request("get_tree", {{"session", id}})).at("tree");

  const auto doc = tbm::load_model(kWaste);
  auto model = tbm::compile_network(doc);
  model.network.evidence = {{"test-12", "+"}};
  const auto root = tbm::build_tree(model.network, model.decision, {3});
  EXPECT_EQ(via_service, tbm::tree_document(doc.name, model.network.evidence, 3, *root));
}

TEST_F(ServiceTest, ConcurrentSessionsAreIndependent) {
  std::vector<std::string> ids;
  for (int i = 0; i < 4; ++i) ids.push_back(create(kWaste, 2));
  std::vector<std::string> out(4);
  std::vector<std::thread> threads;
  for (int i = 0; i < 4; ++i)
    threads.emplace_back([&, i] {
      service.handle(request("set_result", {{"session", ids[static_cast<std::size_t>(i)]}, {"test", "test-1"}, {"outcome", i % 2 ? "+" : "-"}}));
      out[static_cast<std::size_t>(i)] = service.handle(request("get_tree", {{"session", ids[static_cast<std::size_t>(i)]}})).at("tree").at("root").dump();
    });
  for (auto& t : threads) t.join();
  EXPECT_EQ(out[0], out[2]);
  EXPECT_EQ(out[1], out[3]);
  EXPECT_NE(out[0], out[1]);
}

TEST(NodePath, ParseAndFormat) {
  EXPECT_TRUE(tbm::parse_node_path("").empty());
  EXPECT_TRUE(tbm::parse_node_path("root").empty());
  EXPECT_EQ(tbm::parse_node_path("+, -"), (tbm::NodePath{'+', '-'}));
  EXPECT_EQ(tbm::format_node_path({'+', '-', '+'}), "+,-,+");
  EXPECT_THROW(tbm::parse_node_path("+,,"), tbm::SessionError);
}

TEST(HttpTransport, PostV1AndHealth) {
  tbm::Service service;
  httplib::Server server;
  server.Post("/v1", [&](const httplib::Request& req, httplib::Response& res) {
    res.set_content(service.handle_text(req.body), "application/json");
  });
  server.Get("/v1/health", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"version":"v1","ok":true})", "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  ASSERT_GT(port, 0);
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  httplib::Client client("127.0.0.1", port);
  auto health = client.Get("/v1/health");
  ASSERT_TRUE(health);
  EXPECT_EQ(Json::parse(health->body).at("ok"), true);
  auto created = client.Post("/v1", request("create", {{"model_path", kMinimal}, {"depth", 1}}).dump(), "application/json");
  ASSERT_TRUE(created);
  const auto body = Json::parse(created->body);
  EXPECT_EQ(body.at("session"), "s1");
  auto tree = client.Post("/v1", request("get_tree", {{"session", "s1"}}).dump(), "application/json");
  ASSERT_TRUE(tree);
  EXPECT_EQ(Json::parse(tree->body).at("tree").at("root").at("path"), "");
  server.stop();
  t.join();
}

}  // namespace
