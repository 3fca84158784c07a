#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "clinagent/cli.hpp"
#include "clinagent/text.hpp"
#include "oracles.hpp"

using namespace clinagent;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> with(std::vector<std::string> head, const std::vector<std::string>& tail) {
  head.insert(head.end(), tail.begin(), tail.end());
  return head;
}

std::string fx(const std::string& rel) { return (oracle::fixtures() / rel).string(); }

std::vector<std::string> predict_case_study() {
  return with({"predict", "--trial", fx("case_study/trial.json"), "--cassette", fx("case_study/cassette.json")},
              oracle::case_study_flags());
}

std::vector<std::string> evaluate_suite(int parallelism) {
  return with({"evaluate", "--trials", fx("eval_suite/trials.csv"), "--cassette", fx("eval_suite/cassettes"),
               "--parallelism", std::to_string(parallelism)},
              oracle::case_study_flags());
}

fs::path temp(const std::string& name) { return fs::temp_directory_path() / ("clinagent_cli_" + name); }

class EnvGuard {
 public:
  EnvGuard(const char* name, const char* value) : name_(name) { ::setenv(name, value, 1); }
  ~EnvGuard() { ::unsetenv(name_); }

 private:
  const char* name_;
};

}  // namespace

TEST(Cli, PredictCaseStudy) {
  const auto r = cli(predict_case_study());
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto j = json::parse(r.out);
  EXPECT_EQ(j["probability"], 0.0);
  EXPECT_EQ(j["decision"], 0);
  EXPECT_EQ(j["trial_id"], "NCT00311402");
}

TEST(Cli, PredictFromFlags) {
  // Ad hoc trials have no cassette, so replay reports a mismatch (exit 1) not a usage error.
  const auto r = cli(with({"predict", "--trial-id", "X1", "--drug", "aspirin", "--disease", "stroke", "--cassette",
                           fx("case_study/cassette.json")},
                          oracle::case_study_flags()));
  EXPECT_EQ(r.code, kExitFailure) << r.err;
  EXPECT_NE(r.err.find("fingerprint mismatch"), std::string::npos) << r.err;
}

TEST(Cli, PredictUsageErrors) {
  EXPECT_EQ(cli({"predict", "--trial", fx("case_study/trial.json")}).code, kExitUsage);  // no cassette
  EXPECT_EQ(cli(with(predict_case_study(), {"--out", "/nonexistent_dir/x.json"})).code, kExitUsage);
  EXPECT_EQ(cli(with(predict_case_study(), {"--backend", "bogus"})).code, kExitUsage);
  EXPECT_EQ(cli({"predict", "--no-such-flag"}).code, kExitUsage);
  EXPECT_EQ(cli({}).code, kExitUsage);
  EXPECT_EQ(cli({"--help"}).code, kExitOk);
}

TEST(Cli, PredictWritesOutFile) {
  const auto path = temp("predict.json");
  const auto r = cli(with(predict_case_study(), {"--out", path.string(), "--pretty"}));
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_TRUE(r.out.empty());
  const auto text = oracle::read_text(path);
  EXPECT_NE(text.find("\n  \"decision\": 0"), std::string::npos);
  fs::remove(path);
}

TEST(Cli, PipelineFailureReportsPartialTranscripts) {
  const auto r = cli(with({"predict", "--trial", fx("case_study/trial.json"), "--cassette",
                           fx("robustness/loop_exhaustion.json"), "--max-iterations", "3"},
                          oracle::case_study_flags()));
  EXPECT_EQ(r.code, kExitFailure);
  EXPECT_NE(r.err.find("max_iterations"), std::string::npos);
  EXPECT_NE(r.err.find("\"enrollment\""), std::string::npos);
}

TEST(Cli, ConfigPrecedence) {
  const auto config = temp("config.json");
  std::ofstream(config) << R"({"model": "other-model"})";
  // Config alone changes the model, so the cassette no longer matches.
  EXPECT_EQ(cli(with(predict_case_study(), {"--config", config.string()})).code, kExitFailure);
  {
    EnvGuard env("CA_MODEL", "gpt-4");  // env beats config
    EXPECT_EQ(cli(with(predict_case_study(), {"--config", config.string()})).code, kExitOk);
  }
  {
    EnvGuard env("CA_MODEL", "other-model");  // flag beats env
    EXPECT_EQ(cli(with(predict_case_study(), {"--model", "gpt-4"})).code, kExitOk);
    EXPECT_EQ(cli(predict_case_study()).code, kExitFailure);
  }
  std::ofstream(config) << "not json";
  EXPECT_EQ(cli(with(predict_case_study(), {"--config", config.string()})).code, kExitUsage);
  fs::remove(config);
}

TEST(Cli, EvaluateIsDeterministicAcrossParallelism) {
  const auto one = cli(evaluate_suite(1));
  const auto four = cli(evaluate_suite(4));
  ASSERT_EQ(one.code, kExitOk) << one.err;
  ASSERT_EQ(four.code, kExitOk) << four.err;
  EXPECT_EQ(one.out, four.out);
  const auto m = json::parse(one.out);
  EXPECT_EQ(m["n"], 4);
  EXPECT_EQ(m["accuracy"], 0.5);
  EXPECT_EQ(m["roc_auc"], 0.75);
}

TEST(Cli, EvaluateWritesResultsAndCountsMissingCassettes) {
  const auto dir = temp("cassettes");
  fs::remove_all(dir);
  fs::create_directories(dir);
  for (const auto& e : fs::directory_iterator(fx("eval_suite/cassettes"))) {
    if (e.path().filename() != "NCT10000002.json") fs::copy_file(e.path(), dir / e.path().filename());
  }
  const auto results = temp("results.jsonl");
  const auto r = cli(with({"evaluate", "--trials", fx("eval_suite/trials.csv"), "--cassette", dir.string(),
                           "--results", results.string()},
                          oracle::case_study_flags()));
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(json::parse(r.out)["failures"], 1);
  std::ifstream in(results);
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) {
    const auto j = json::parse(line);
    if (j["trial_id"] == "NCT10000002") EXPECT_TRUE(j.contains("error"));
    ++lines;
  }
  EXPECT_EQ(lines, 4);
  fs::remove_all(dir);
  fs::remove(results);
}

TEST(Cli, EvaluateRejectsUnlabeledRows) {
  const auto csv = temp("unlabeled.csv");
  std::ofstream(csv) << "trial_id,phase,drugs,diseases,criteria,label\nNCT1,1,aspirin,stroke,,\n";
  const auto r = cli(with({"evaluate", "--trials", csv.string(), "--cassette", fx("eval_suite/cassettes")},
                          oracle::case_study_flags()));
  EXPECT_EQ(r.code, kExitUsage);
  fs::remove(csv);
}

TEST(Cli, ToolRun) {
  auto base = with({"tool", "run", "drug_historical_statistics", "--arg", "drug_name=Aggrenox capsule"},
                   oracle::case_study_flags());
  const auto ok = cli(base);
  ASSERT_EQ(ok.code, kExitOk) << ok.err;
  const auto j = json::parse(ok.out);
  EXPECT_FALSE(j["is_error"].get<bool>());
  EXPECT_NE(j["content"].get<std::string>().find("failure rate 1.0"), std::string::npos);

  const auto pretty = cli(with(base, {"--pretty"}));
  EXPECT_EQ(pretty.out.rfind("Drug 'Aggrenox capsule'", 0), 0u);

  EXPECT_EQ(cli(with({"tool", "run", "frobnicate"}, oracle::case_study_flags())).code, kExitUsage);
  EXPECT_EQ(cli(with({"tool", "run", "retrieval_hetionet", "--arg", "drug_name=x"}, oracle::case_study_flags())).code,
            kExitFailure);
  const auto enroll = cli(with({"tool", "run", "enrollment_prediction_model", "--trial", fx("case_study/trial.json"),
                                "--arg", "trial_id=NCT00311402"},
                               oracle::case_study_flags()));
  ASSERT_EQ(enroll.code, kExitOk) << enroll.err;
  EXPECT_NE(enroll.out.find("0.3597"), std::string::npos);
}

TEST(Cli, IngestWritesManifest) {
  const auto r = cli({"ingest", "--trials", fx("eval_suite/trials.csv"), "--drugbank", fx("case_study/drugbank.tsv"),
                      "--hetionet", fx("case_study/hetionet.tsv")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto m = json::parse(r.out)["files"];
  EXPECT_EQ(m["trials"]["rows"], 4);
  EXPECT_EQ(m["drugbank"]["rows"], 3);
  EXPECT_EQ(m["hetionet"]["rows"], 8);
  EXPECT_EQ(m["trials"]["sha256"], sha256_hex(oracle::read_text(fx("eval_suite/trials.csv"))));
  EXPECT_EQ(cli({"ingest"}).code, kExitUsage);
  EXPECT_EQ(cli({"ingest", "--trials", "/nonexistent.csv"}).code, kExitUsage);
}

TEST(Cli, TrainEnrollment) {
  const auto model = temp("model.json");
  const auto r = cli({"train-enrollment", "--trials", fx("case_study/history.csv"), "--out", model.string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto report = json::parse(r.out);
  EXPECT_EQ(report["label_source"], "trial outcome label (enroll_label missing)");
  EXPECT_LE(report["final_loss"].get<double>(), report["initial_loss"].get<double>());
  EXPECT_TRUE(fs::exists(model));

  const auto single = temp("single.csv");
  std::ofstream(single) << "trial_id,phase,drugs,diseases,criteria,label\nA,1,x,y,,1\nB,1,x,y,,1\n";
  EXPECT_EQ(cli({"train-enrollment", "--trials", single.string(), "--out", model.string()}).code, kExitFailure);
  std::ofstream(single) << "trial_id,phase,drugs,diseases,criteria,label\n";
  EXPECT_EQ(cli({"train-enrollment", "--trials", single.string(), "--out", model.string()}).code, kExitUsage);
  fs::remove(single);
  fs::remove(model);
}
