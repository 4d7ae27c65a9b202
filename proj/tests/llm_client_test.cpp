#include "prego/llm_client.hpp"

#include <gtest/gtest.h>

#include <cstdlib>

#include "prego/errors.hpp"
#include "stub_server.hpp"

namespace prego {
namespace {

using prego::testing::StubServer;

SymbolAlphabet numeric_alphabet(std::size_t c) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < c; ++i) names.push_back("a" + std::to_string(i));
  return build_alphabet(build_vocabulary(names), AlphabetMode::numerical);
}

LlmSettings fast_settings(const std::string& url) {
  LlmSettings s = default_settings(LlmFlavor::llama);
  s.url = url;
  s.backoff = std::chrono::milliseconds(1);
  s.timeout = std::chrono::milliseconds(2000);
  return s;
}

TEST(ParseEmissionTest, Examples) {
  auto alphabet = numeric_alphabet(10);
  EXPECT_EQ(parse_emission(" 7 ,", alphabet, 1).predictions, (ActionSequence{7}));
  EXPECT_EQ(parse_emission("3,4,5", alphabet, 2).predictions, (ActionSequence{3, 4}));
  EXPECT_EQ(parse_emission("\n\n2\n9", alphabet, 3).predictions, (ActionSequence{2}));
  EXPECT_EQ(parse_emission("4,4,1", alphabet, 2).predictions, (ActionSequence{4, 1}));
  EXPECT_EQ(parse_emission("x,6", alphabet, 2).predictions, (ActionSequence{6}));
}

TEST(ParseEmissionTest, UnknownSymbol) {
  auto alphabet = numeric_alphabet(10);
  auto r = parse_emission("banana", alphabet, 1);
  EXPECT_TRUE(r.predictions.empty());
  EXPECT_EQ(r.unknown_symbol, "banana");
  EXPECT_EQ(r.raw_emission, "banana");
  EXPECT_TRUE(parse_emission("", alphabet, 1).unknown_symbol.has_value());
  EXPECT_TRUE(parse_emission("42", alphabet, 1).unknown_symbol.has_value());
}

TEST(ParseEmissionTest, RandomSymbols) {
  std::vector<std::string> names = {"a", "b"};
  auto alphabet = build_alphabet(build_vocabulary(names), AlphabetMode::random, 3);
  auto text = " " + alphabet.symbol(1) + "," + alphabet.symbol(0);
  EXPECT_EQ(parse_emission(text, alphabet, 2).predictions, (ActionSequence{1, 0}));
}

TEST(SettingsTest, FlavorDefaults) {
  auto llama = default_settings(LlmFlavor::llama);
  EXPECT_DOUBLE_EQ(llama.temperature, 0.6);
  EXPECT_EQ(llama.max_tokens, 4);
  auto gpt = default_settings(LlmFlavor::gpt);
  EXPECT_DOUBLE_EQ(gpt.temperature, 0.0);
  EXPECT_GT(gpt.max_tokens, 4);
  EXPECT_EQ(estimate_tokens("abcde"), 2);
  EXPECT_EQ(estimate_tokens(""), 0);
}

TEST(LlmClientTest, SendsSamplingParametersAndReadsText) {
  StubServer server([](const nlohmann::json&, httplib::Response& res) {
    StubServer::reply_text(res, " 7 ,");
  });
  LlmClient client(fast_settings(server.url()));
  EXPECT_EQ(client.complete("hello"), " 7 ,");
  auto bodies = server.bodies();
  ASSERT_EQ(bodies.size(), 1u);
  EXPECT_EQ(bodies[0]["prompt"], "hello");
  EXPECT_DOUBLE_EQ(bodies[0]["temperature"].get<double>(), 0.6);
  EXPECT_EQ(bodies[0]["max_tokens"], 4);
  EXPECT_FALSE(bodies[0].contains("model"));
}

TEST(LlmClientTest, OpenAiDialect) {
  StubServer server([](const nlohmann::json&, httplib::Response& res) {
    res.set_content(R"({"choices":[{"text":"3"}]})", "application/json");
  });
  auto settings = fast_settings(server.url());
  settings.dialect = LlmDialect::openai;
  settings.model = "m";
  settings.api_key = "secret";
  LlmClient client(settings);
  EXPECT_EQ(client.complete("p"), "3");
  EXPECT_EQ(server.bodies()[0]["model"], "m");
  EXPECT_EQ(server.auth_headers()[0], "Bearer secret");
}

TEST(LlmClientTest, RetriesServerErrorsThenSucceeds) {
  std::atomic<int> calls{0};
  StubServer server([&](const nlohmann::json&, httplib::Response& res) {
    if (calls.fetch_add(1) < 2) {
      res.status = calls.load() == 1 ? 503 : 429;
      return;
    }
    StubServer::reply_text(res, "1");
  });
  LlmClient client(fast_settings(server.url()));
  EXPECT_EQ(client.complete("p"), "1");
  EXPECT_EQ(client.attempts_made(), 3);
}

TEST(LlmClientTest, GivesUpAfterRetries) {
  StubServer server([](const nlohmann::json&, httplib::Response& res) { res.status = 500; });
  auto settings = fast_settings(server.url());
  settings.max_retries = 2;
  LlmClient client(settings);
  EXPECT_THROW(client.complete("p"), TransportError);
  EXPECT_EQ(server.hits(), 3);
}

TEST(LlmClientTest, ClientErrorsAreNotRetried) {
  StubServer server([](const nlohmann::json&, httplib::Response& res) { res.status = 401; });
  LlmClient client(fast_settings(server.url()));
  EXPECT_THROW(client.complete("p"), TransportError);
  EXPECT_EQ(server.hits(), 1);
}

TEST(LlmClientTest, UnreachableEndpoint) {
  auto settings = fast_settings("http://127.0.0.1:1/complete");
  settings.max_retries = 1;
  LlmClient client(settings);
  EXPECT_THROW(client.complete("p"), TransportError);
  EXPECT_EQ(client.attempts_made(), 2);
}

TEST(LlmClientTest, MalformedResponse) {
  StubServer server([](const nlohmann::json&, httplib::Response& res) {
    res.set_content("not json", "text/plain");
  });
  LlmClient client(fast_settings(server.url()));
  EXPECT_THROW(client.complete("p"), TransportError);
}

TEST(LlmClientTest, BudgetCheckedBeforeSending) {
  StubServer server([](const nlohmann::json&, httplib::Response& res) {
    StubServer::reply_text(res, "0");
  });
  auto settings = fast_settings(server.url());
  // "abcd" costs 1 + 4 output tokens.
  settings.token_budget = 12;
  LlmClient client(settings);
  client.complete("abcd");
  client.complete("abcd");
  EXPECT_EQ(client.tokens_used(), 10);
  EXPECT_THROW(client.complete("abcd"), BudgetExceeded);
  EXPECT_EQ(server.hits(), 2);
}

TEST(LlmClientTest, RejectsBadUrl) {
  EXPECT_THROW(LlmClient(fast_settings("localhost:80")), InputError);
}

TEST(LlmAnticipatorTest, DecodesEmission) {
  StubServer server([](const nlohmann::json& body, httplib::Response& res) {
    // Only the history "0,1" gets a valid answer.
    auto prompt = body["prompt"].get<std::string>();
    StubServer::reply_text(res, prompt.find("0,1,\n") != std::string::npos ? "2" : "banana");
  });
  auto client = std::make_shared<LlmClient>(fast_settings(server.url()));
  LlmAnticipator backend(client, numeric_alphabet(3), PromptStyle::unreferenced_context, 1);
  ContextSet ctx;
  ctx.sequences.push_back({"c", {0, 1, 2}});
  EXPECT_EQ(backend.anticipate(ctx, ActionSequence{0, 1}).predictions, (ActionSequence{2}));
  auto bad = backend.anticipate(ctx, ActionSequence{0});
  EXPECT_EQ(bad.unknown_symbol, "banana");
}

}  // namespace
}  // namespace prego
