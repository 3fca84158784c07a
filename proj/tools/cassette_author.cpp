// Builds replay cassettes from hand-written agent scripts.
//
// A suite manifest names the data files and, per cassette, the trial and a
// script with the scripted assistant turns for each role. The real pipeline
// runs against a scripted backend wrapped in a RecordingBackend, so every
// recorded request is exactly what replay will later send. With --check the
// regenerated cassettes are compared to the files on disk instead of written.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>

#include "clinagent/agents.hpp"
#include "clinagent/cassette.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace clinagent;

namespace {

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  return json::parse(in);
}

// Replies to each request with the next scripted turn for the role whose
// system prompt opens the conversation.
class ScriptedBackend : public LLMBackend {
 public:
  ScriptedBackend(json script, const KnowledgeBundle& bundle, const TrialRecord& record)
      : script_(std::move(script)) {
    for (auto role : {AgentRole::kPlanning, AgentRole::kEnrollment, AgentRole::kSafety,
                      AgentRole::kEfficacy, AgentRole::kReasoning}) {
      prompts_.emplace(make_agent_config(role, bundle, record).full_system_prompt(), role);
    }
  }

  ChatMessage complete(const CompletionRequest& request) override {
    const auto it = prompts_.find(request.messages.at(0).content);
    if (it == prompts_.end()) throw Error("request does not open with a known system prompt");
    const auto key = role_key(it->second);
    std::size_t turn = 0;
    for (const auto& m : request.messages) turn += m.role == Role::kAssistant ? 1 : 0;
    const auto& turns = script_.value(key, json::array());
    if (turn >= turns.size()) {
      throw Error("script for " + key + " has no turn " + std::to_string(turn));
    }
    const auto& t = turns[turn];
    std::vector<ToolCallRequest> calls;
    int k = 0;
    for (const auto& c : t.value("tool_calls", json::array())) {
      calls.push_back({"call_" + key + "_" + std::to_string(turn) + "_" + std::to_string(k++),
                       c.at("name").get<std::string>(), c.at("arguments").dump()});
    }
    return ChatMessage::assistant(t.value("content", ""), std::move(calls));
  }

 private:
  json script_;
  std::map<std::string, AgentRole> prompts_;
};

KnowledgeBundle load_bundle(const json& data, const fs::path& base, const fs::path& prompts) {
  KnowledgeBundle bundle;
  const auto path = [&](const char* key) { return base / data.at(key).get<std::string>(); };
  {
    std::ifstream in(path("drugbank"));
    bundle.drugs = load_drugbank(in);
  }
  {
    std::ifstream in(path("hetionet"));
    bundle.graph = load_hetionet(in);
  }
  std::ifstream hist(path("history"));
  const auto history = parse_trial_dataset(hist).records;
  bundle.drug_outcomes = build_outcome_table(history, EntityKind::kDrug);
  bundle.disease_outcomes = build_outcome_table(history, EntityKind::kDisease);
  bundle.enrollment = std::make_shared<ReferenceEnrollmentPredictor>(
      EnrollmentModel::load(path("enrollment_model")));
  bundle.prompts = PromptSet::load(prompts);
  bundle.max_iterations = data.value("max_iterations", kDefaultMaxIterations);
  // Sequential runs keep the recorded entry order stable.
  bundle.concurrent_specialists = false;
  return bundle;
}

TrialRecord find_trial(const json& entry, const json& data, const fs::path& base) {
  if (entry.contains("trial")) return trial_from_json(read_json(base / entry["trial"].get<std::string>()));
  std::ifstream in(base / data.at("trials").get<std::string>());
  for (auto& r : parse_trial_dataset(in).records) {
    if (r.trial_id == entry.at("trial_id").get<std::string>()) return r;
  }
  throw InputError("trial " + entry.at("trial_id").get<std::string>() + " not in dataset");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Regenerate replay cassettes from agent scripts"};
  std::vector<std::string> suites;
  std::string prompts = PromptSet::default_dir().string();
  bool check = false;
  app.add_option("suites", suites, "Suite manifest JSON files")->required();
  app.add_option("--prompts", prompts, "Prompt directory");
  app.add_flag("--check", check, "Compare with cassettes on disk instead of writing");
  CLI11_PARSE(app, argc, argv);

  int stale = 0;
  try {
    for (const auto& suite_path : suites) {
      const fs::path base = fs::path(suite_path).parent_path();
      const auto suite = read_json(suite_path);
      for (const auto& entry : suite.at("cassettes")) {
        json data = suite.at("data");
        if (entry.contains("max_iterations")) data["max_iterations"] = entry["max_iterations"];
        const auto bundle = load_bundle(data, base, prompts);
        const auto record = find_trial(entry, data, base);
        auto scripted = std::make_shared<ScriptedBackend>(
            read_json(base / entry.at("script").get<std::string>()), bundle, record);
        RecordingBackend recorder(scripted);
        const bool expect_error = entry.value("expect", "ok") == "error";
        try {
          predict(record, bundle, recorder);
          if (expect_error) throw Error("expected the pipeline to fail");
        } catch (const PipelineError& e) {
          if (!expect_error) throw;
        }
        const auto out = base / entry.at("out").get<std::string>();
        const auto text = recorder.cassette().to_json().dump(2) + "\n";
        if (check) {
          std::ifstream in(out, std::ios::binary);
          const std::string existing{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
          if (existing != text) {
            std::cerr << "stale cassette: " << out.string() << '\n';
            ++stale;
          }
        } else {
          fs::create_directories(out.parent_path());
          std::ofstream(out, std::ios::binary) << text;
          std::cout << "wrote " << out.string() << " (" << recorder.cassette().entries.size()
                    << " entries)\n";
        }
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return stale == 0 ? 0 : 1;
}
