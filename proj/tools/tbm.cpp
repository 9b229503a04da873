// tbm: command-line front end for planning, validation and the session service.

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "httplib.h"

#include "tbm/tbm.hpp"

namespace {

std::map<std::string, std::string> parse_evidence(const tbm::CompiledModel& model,
                                                  const std::vector<std::string>& assignments) {
  std::map<std::string, std::string> evidence;
  for (const auto& a : assignments) {
    const auto eq = a.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == a.size())
      throw tbm::ModelError("--evidence " + a, "expected VARIABLE=VALUE");
    const std::string var = a.substr(0, eq);
    const std::string value = a.substr(eq + 1);
    const auto* v = model.network.find(var);
    if (!v) throw tbm::ModelError("--evidence " + a, "unknown variable '" + var + "'");
    if (!v->find(value)) throw tbm::ModelError("--evidence " + a, "'" + value + "' is not an outcome of '" + var + "'");
    if (!evidence.emplace(var, value).second)
      throw tbm::ModelError("--evidence " + a, "'" + var + "' is given more than once");
  }
  return evidence;
}

std::unique_ptr<tbm::PlanNode> plan(const tbm::CompiledModel& model, const std::map<std::string, std::string>& evidence,
                                    int depth) {
  tbm::ValuationNetwork net = model.network;
  net.evidence = evidence;
  return tbm::build_tree(net, model.decision, tbm::PlanConfig{depth});
}

void save_snapshot(const tbm::Service& service, const std::string& path) {
  if (path.empty()) return;
  std::ofstream out(path + ".tmp", std::ios::binary);
  out << service.snapshot().dump(2) << "\n";
  out.close();
  std::rename((path + ".tmp").c_str(), path.c_str());
}

bool mutates(const std::string& request_text) {
  try {
    const auto op = tbm::Json::parse(request_text).value("op", "");
    return op == "create" || op == "set_result" || op == "set_symptom" || op == "reset" || op == "close" ||
           op == "restore";
  } catch (const std::exception&) {
    return false;
  }
}

httplib::Server* g_server = nullptr;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Belief-function decision support: suggested-test trees with explanations"};
  app.require_subcommand(1);

  std::string model_path;
  int depth = tbm::kDefaultPlanDepth;
  std::vector<std::string> evidence_args;
  std::string out_path;
  std::string node_path;
  bool quiet = false;

  auto* plan_cmd = app.add_subcommand("plan", "Build the suggested-test tree");
  plan_cmd->add_option("model", model_path, "Model document")->required()->check(CLI::ExistingFile);
  plan_cmd->add_option("--depth", depth, "Tree depth")->check(CLI::PositiveNumber);
  plan_cmd->add_option("--evidence", evidence_args, "Entered results, VAR=VALUE")->take_all();
  plan_cmd->add_option("--out", out_path, "Write the tree document here");
  plan_cmd->add_flag("--quiet", quiet, "Do not print the text tree");

  auto* validate_cmd = app.add_subcommand("validate", "Check a model document");
  validate_cmd->add_option("model", model_path, "Model document")->required()->check(CLI::ExistingFile);

  auto* explain_cmd = app.add_subcommand("explain", "Why a node's test is suggested, and the treatment ranking");
  explain_cmd->add_option("model", model_path, "Model document")->required()->check(CLI::ExistingFile);
  explain_cmd->add_option("--node", node_path, "Node path from the root, e.g. \"+,-\"")->required();
  explain_cmd->add_option("--depth", depth, "Tree depth")->check(CLI::PositiveNumber);
  explain_cmd->add_option("--evidence", evidence_args, "Entered results, VAR=VALUE")->take_all();

  std::string host = "127.0.0.1";
  int port = 8765;
  bool stdio = false;
  std::string snapshot_path;
  auto* serve_cmd = app.add_subcommand("serve", "Run the v1 session service");
  serve_cmd->add_option("--host", host, "Listen address");
  serve_cmd->add_option("--port", port, "Listen port (0 picks a free one)");
  serve_cmd->add_flag("--stdio", stdio, "Line-delimited JSON on stdin/stdout instead of HTTP");
  serve_cmd->add_option("--snapshot", snapshot_path, "Restore sessions from, and save them to, this file");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*plan_cmd || *explain_cmd || *validate_cmd) {
      const auto doc = tbm::load_model(model_path);
      const auto model = tbm::compile_network(doc);

      if (*validate_cmd) {
        const auto tree = tbm::build_join_tree(model.network);
        std::cout << "ok: " << doc.tests.size() << " tests, " << doc.symptoms.size() << " symptoms, diagnosis '"
                  << doc.diagnosis.id << "' with " << doc.diagnosis.frame.size() << " outcomes, "
                  << doc.treatments.size() << " treatments, " << doc.rules.size() << " rules\n"
                  << "join tree: " << tree.cliques.size() << " cliques, largest has " << tree.max_clique_arity()
                  << " variables\n";
        return 0;
      }

      const auto evidence = parse_evidence(model, evidence_args);
      if (*explain_cmd) {
        const auto path = tbm::parse_node_path(node_path);
        const int needed = static_cast<int>(path.size()) + 1;
        const auto root = plan(model, evidence, std::max(depth, needed));
        std::cout << "node: " << (path.empty() ? std::string("root") : tbm::format_node_path(path)) << "\n"
                  << tbm::render_explanation(tbm::find_node(*root, path));
        return 0;
      }

      const auto root = plan(model, evidence, depth);
      if (!quiet) std::cout << tbm::render_tree(*root);
      if (!out_path.empty()) {
        std::ofstream out(out_path, std::ios::binary);
        if (!out) throw tbm::Error("cannot write '" + out_path + "'");
        out << tbm::tree_document(doc.name, evidence, depth, *root).dump(2) << "\n";
      }
      return 0;
    }

    tbm::Service service;
    if (!snapshot_path.empty()) {
      std::ifstream in(snapshot_path, std::ios::binary);
      if (in) service.restore(tbm::Json::parse(in));
    }
    std::mutex snapshot_mutex;

    if (stdio) {
      std::string line;
      while (std::getline(std::cin, line)) {
        if (line.empty()) continue;
        std::cout << service.handle_text(line) << std::endl;
        if (mutates(line)) save_snapshot(service, snapshot_path);
      }
      return 0;
    }

    httplib::Server server;
    server.Post("/v1", [&](const httplib::Request& req, httplib::Response& res) {
      res.set_content(service.handle_text(req.body), "application/json");
      if (mutates(req.body)) {
        std::lock_guard lock(snapshot_mutex);
        save_snapshot(service, snapshot_path);
      }
    });
    server.Get("/v1/health", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"version":"v1","ok":true})", "application/json");
    });
    g_server = &server;
    std::signal(SIGINT, [](int) {
      if (g_server) g_server->stop();
    });
    std::signal(SIGTERM, [](int) {
      if (g_server) g_server->stop();
    });
    const int bound = port == 0 ? server.bind_to_any_port(host) : (server.bind_to_port(host, port) ? port : -1);
    if (bound < 0) throw tbm::Error("cannot listen on " + host + ":" + std::to_string(port));
    std::cout << "listening on http://" << host << ":" << bound << "/v1" << std::endl;
    server.listen_after_bind();
    return 0;
  } catch (const tbm::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
