#include <gtest/gtest.h>

#include "clinagent/tools.hpp"
#include "oracles.hpp"

using namespace clinagent;
using nlohmann::json;

namespace {

json fixture(const std::string& name) {
  return json::parse(oracle::read_text(oracle::fixtures() / "schemas" / name));
}

struct Fixture {
  KnowledgeBundle bundle = oracle::case_study_bundle();
  TrialRecord trial = oracle::case_study_trial();
  ToolRegistry all() const {
    ToolRegistry r;
    r.add(make_retrieval_drugbank(bundle.drugs));
    r.add(make_retrieval_hetionet(bundle.graph, bundle.bounds));
    r.add(make_drug_historical_statistics(bundle.drug_outcomes));
    r.add(make_disease_historical_statistics(bundle.disease_outcomes));
    r.add(make_enrollment_prediction_model(*bundle.enrollment, trial));
    return r;
  }
};

ToolResult call(const ToolRegistry& r, const std::string& name, const json& args) {
  return r.dispatch({"c1", name, args.dump()});
}

}  // namespace

TEST(ToolSchemas, RetrievalToolsMatchTranscribedFixtures) {
  Fixture f;
  EXPECT_EQ(canonical_json(make_retrieval_drugbank(f.bundle.drugs).schema()),
            canonical_json(fixture("retrieval_drugbank.json")));
  EXPECT_EQ(canonical_json(make_retrieval_hetionet(f.bundle.graph).schema()),
            canonical_json(fixture("retrieval_hetionet.json")));
}

TEST(ToolSchemas, AuthoredToolsMatchSnapshot) {
  Fixture f;
  const auto snapshot = fixture("authored_tools.json");
  const auto reg = f.all();
  const auto payload = reg.schema_payload();
  for (const auto& tool : payload) {
    const auto name = tool["function"]["name"].get<std::string>();
    if (name.rfind("retrieval_", 0) == 0) continue;
    ASSERT_TRUE(snapshot["tools"].contains(name)) << name;
    EXPECT_EQ(canonical_json(tool), canonical_json(snapshot["tools"][name]));
  }
}

TEST(ToolRegistry, PayloadKeepsRegistrationOrder) {
  Fixture f;
  const auto payload = f.all().schema_payload();
  ASSERT_EQ(payload.size(), 5u);
  const std::vector<std::string> expected{"retrieval_drugbank", "retrieval_hetionet",
                                          "drug_historical_statistics", "disease_historical_statistics",
                                          "enrollment_prediction_model"};
  for (std::size_t i = 0; i < expected.size(); ++i) EXPECT_EQ(payload[i]["function"]["name"], expected[i]);
}

TEST(ToolRegistry, RejectsDuplicatesAndDanglingRequired) {
  Fixture f;
  ToolRegistry r;
  r.add(make_retrieval_drugbank(f.bundle.drugs));
  EXPECT_THROW(r.add(make_retrieval_drugbank(f.bundle.drugs)), Error);
  ToolDefinition bad{"bad", "d",
                     {{"type", "object"}, {"properties", json::object()}, {"required", json::array({"x"})}},
                     [](const json&) { return std::string(); }};
  EXPECT_THROW(r.add(bad), Error);
}

TEST(Dispatch, ReportsFailuresAsObservations) {
  Fixture f;
  const auto reg = f.all();
  const auto unknown = call(reg, "frobnicate", json::object());
  EXPECT_TRUE(unknown.is_error);
  EXPECT_EQ(unknown.content, "unknown tool frobnicate");
  EXPECT_EQ(unknown.tool_call_id, "c1");

  const auto missing = call(reg, "retrieval_hetionet", {{"drug_name", "Aggrenox capsule"}});
  EXPECT_TRUE(missing.is_error);
  EXPECT_NE(missing.content.find("disease_name"), std::string::npos);

  const auto wrong_type = call(reg, "retrieval_drugbank", {{"drug_name", 3}});
  EXPECT_TRUE(wrong_type.is_error);
  EXPECT_NE(wrong_type.content.find("drug_name"), std::string::npos);

  const auto not_json = reg.dispatch({"c2", "retrieval_drugbank", "{oops"});
  EXPECT_TRUE(not_json.is_error);

  ToolRegistry throwing;
  throwing.add({"boom", "d", {{"type", "object"}, {"properties", json::object()}},
                [](const json&) -> std::string { throw std::runtime_error("kaput"); }});
  const auto thrown = call(throwing, "boom", json::object());
  EXPECT_TRUE(thrown.is_error);
  EXPECT_NE(thrown.content.find("kaput"), std::string::npos);
}

TEST(Dispatch, HetionetListsPaths) {
  Fixture f;
  const auto r = call(f.all(), "retrieval_hetionet",
                      {{"drug_name", "Aggrenox capsule"}, {"disease_name", "cerebrovascular accident"}});
  ASSERT_FALSE(r.is_error) << r.content;
  EXPECT_NE(r.content.find("Aggrenox capsule(Compound) -[CtD>]- cerebrovascular accident(Disease)"),
            std::string::npos)
      << r.content;
  const auto unknown = call(f.all(), "retrieval_hetionet",
                            {{"drug_name", "qqqqqqqq"}, {"disease_name", "cerebrovascular accident"}});
  EXPECT_TRUE(unknown.is_error);
  EXPECT_NE(unknown.content.find("qqqqqqqq"), std::string::npos);
}

TEST(Dispatch, DrugBankFuzzyLookup) {
  Fixture f;
  const auto r = call(f.all(), "retrieval_drugbank", {{"drug_name", "aggrenox capsules"}});
  ASSERT_FALSE(r.is_error) << r.content;
  EXPECT_NE(r.content.find("dipyridamole"), std::string::npos);
  EXPECT_NE(r.content.find("fuzzy"), std::string::npos) << r.content;
}

TEST(Dispatch, HistoricalStatisticsReportFailureRates) {
  Fixture f;
  const auto reg = f.all();
  EXPECT_EQ(call(reg, "drug_historical_statistics", {{"drug_name", "Aggrenox capsule"}}).content,
            "Drug 'Aggrenox capsule': historical failure rate 1.0 (matched 'aggrenox capsule', "
            "similarity 1.0, 2 trials).");
  EXPECT_EQ(call(reg, "drug_historical_statistics", {{"drug_name", "unobtainium"}}).content,
            "Drug 'unobtainium': no historical data.");
  const auto multi = call(reg, "drug_historical_statistics", {{"drug_name", "aspirin; Aggrenox capsule"}});
  EXPECT_NE(multi.content.find("1.0"), std::string::npos) << multi.content;
  EXPECT_EQ(call(reg, "disease_historical_statistics", {{"disease_name", "cerebrovascular accident"}}).content,
            "Disease 'cerebrovascular accident': historical failure rate 0.5 (matched "
            "'cerebrovascular accident', similarity 1.0, 4 trials).");
}

TEST(Dispatch, EnrollmentToolIsBoundToTrial) {
  Fixture f;
  const auto reg = f.all();
  const auto r = call(reg, "enrollment_prediction_model", {{"trial_id", "NCT00311402"}});
  EXPECT_FALSE(r.is_error);
  EXPECT_EQ(r.content,
            "Predicted enrollment failure rate 0.3597 (enrollment success probability 0.6403) for trial "
            "NCT00311402.");
  EXPECT_TRUE(call(reg, "enrollment_prediction_model", {{"trial_id", "NCT0"}}).is_error);
}
