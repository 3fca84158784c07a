#include <gtest/gtest.h>

#include <filesystem>
#include <future>

#include "clinagent/cassette.hpp"
#include "clinagent/chat.hpp"

using namespace clinagent;
using nlohmann::json;

namespace {

CompletionRequest sample_request(const std::string& user = "hello") {
  CompletionRequest req;
  req.model = "gpt-4";
  req.messages = {ChatMessage::system("sys"), ChatMessage::user(user)};
  req.tools = json::array({{{"type", "function"},
                            {"function", {{"name", "t1"}, {"description", "d"}, {"parameters", json::object()}}}}});
  return req;
}

// Answers with a counter so every reply is distinguishable.
class CountingBackend : public LLMBackend {
 public:
  ChatMessage complete(const CompletionRequest& req) override {
    return ChatMessage::assistant("reply " + std::to_string(++n_) + " to " + req.messages.back().content);
  }

 private:
  int n_ = 0;
};

}  // namespace

TEST(Wire, MessagesRoundTrip) {
  const auto call = ChatMessage::assistant("", {{"call_1", "retrieval_drugbank", R"({"drug_name":"x"})"}});
  const auto wire = to_wire(call);
  EXPECT_TRUE(wire["content"].is_null());
  EXPECT_EQ(wire["tool_calls"][0]["type"], "function");
  EXPECT_EQ(wire["tool_calls"][0]["function"]["arguments"], R"({"drug_name":"x"})");
  EXPECT_EQ(message_from_wire(wire), call);

  const auto tool = ChatMessage::tool("call_1", "result");
  EXPECT_EQ(to_wire(tool)["tool_call_id"], "call_1");
  EXPECT_EQ(message_from_wire(to_wire(tool)), tool);

  const auto req = sample_request();
  const auto back = request_from_wire(to_wire(req));
  EXPECT_EQ(back.messages, req.messages);
  EXPECT_EQ(back.tools, req.tools);
  EXPECT_EQ(to_wire(req)["temperature"], 0.0);
}

TEST(Wire, ParsesCompletionResponse) {
  const json body = {{"choices", {{{"message", {{"role", "assistant"}, {"content", "hi"}}}}}}};
  EXPECT_EQ(parse_completion_response(body).content, "hi");
  EXPECT_THROW(parse_completion_response(json{{"choices", json::array()}}), Error);
}

TEST(Fingerprint, DependsOnConversationOnly) {
  const auto a = sample_request();
  EXPECT_EQ(fingerprint(a), fingerprint(sample_request()));
  EXPECT_EQ(fingerprint(a).rfind("sha256:", 0), 0u);
  EXPECT_NE(fingerprint(a), fingerprint(sample_request("hello!")));
  auto b = a;
  b.model = "other";
  EXPECT_NE(fingerprint(a), fingerprint(b));
  auto c = a;
  c.tools = json::array();
  EXPECT_NE(fingerprint(a), fingerprint(c));
  // Tool descriptions are not part of the key, only tool names.
  auto d = a;
  d.tools[0]["function"]["description"] = "changed";
  EXPECT_EQ(fingerprint(a), fingerprint(d));
}

TEST(Cassette, RecordThenReplayReproducesReplies) {
  auto inner = std::make_shared<CountingBackend>();
  RecordingBackend rec(inner);
  const auto r1 = rec.complete(sample_request("a"));
  const auto r2 = rec.complete(sample_request("b"));
  const auto r3 = rec.complete(sample_request("a"));  // same request again

  const auto path = std::filesystem::temp_directory_path() / "clinagent_chat_test_cassette.json";
  rec.save(path);
  ReplayBackend replay(Cassette::load(path));
  EXPECT_EQ(replay.size(), 3u);
  // Replay order of distinct requests does not matter; repeats are served in order.
  EXPECT_EQ(replay.complete(sample_request("b")), r2);
  EXPECT_EQ(replay.complete(sample_request("a")), r1);
  EXPECT_EQ(replay.complete(sample_request("a")), r3);
  EXPECT_EQ(replay.consumed(), 3u);
  std::filesystem::remove(path);
}

TEST(Cassette, MismatchNamesBothFingerprints) {
  auto inner = std::make_shared<CountingBackend>();
  RecordingBackend rec(inner);
  rec.complete(sample_request("a"));
  ReplayBackend replay(rec.cassette());
  try {
    replay.complete(sample_request("zzz"));
    FAIL() << "expected ReplayError";
  } catch (const ReplayError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("fingerprint mismatch"), std::string::npos);
    EXPECT_NE(what.find(fingerprint(sample_request("a"))), std::string::npos);
    EXPECT_NE(what.find(fingerprint(sample_request("zzz"))), std::string::npos);
  }
  replay.complete(sample_request("a"));
  EXPECT_THROW(replay.complete(sample_request("a")), ReplayError);
}

TEST(Cassette, ConcurrentReplayIsDeterministic) {
  auto inner = std::make_shared<CountingBackend>();
  RecordingBackend rec(inner);
  std::vector<ChatMessage> expected;
  for (int i = 0; i < 16; ++i) expected.push_back(rec.complete(sample_request(std::to_string(i))));
  for (int round = 0; round < 20; ++round) {
    ReplayBackend replay(rec.cassette());
    std::vector<std::future<ChatMessage>> futures;
    for (int i = 0; i < 16; ++i) {
      futures.push_back(std::async(std::launch::async, [&replay, i] {
        return replay.complete(sample_request(std::to_string(i)));
      }));
    }
    for (int i = 0; i < 16; ++i) EXPECT_EQ(futures[i].get(), expected[i]);
  }
}

TEST(Cassette, DuplicateFingerprintRejected) {
  auto inner = std::make_shared<CountingBackend>();
  RecordingBackend rec(inner);
  rec.complete(sample_request("a"));
  auto cassette = rec.cassette();
  cassette.entries.push_back(cassette.entries.front());
  EXPECT_THROW(ReplayBackend{cassette}, InputError);
}

TEST(WireLog, RecordsReplayTraffic) {
  auto inner = std::make_shared<CountingBackend>();
  RecordingBackend rec(inner);
  rec.complete(sample_request("a"));
  auto log = std::make_shared<WireLog>();
  ReplayBackend replay(rec.cassette(), log);
  replay.complete(sample_request("a"));
  ASSERT_EQ(log->entries().size(), 1u);
  EXPECT_NE(log->entries()[0].request.find("\"a\""), std::string::npos);
}
