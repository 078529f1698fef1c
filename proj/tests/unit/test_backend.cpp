#include <gtest/gtest.h>

#include <atomic>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "scripted.hpp"
#include "socratic/backend.hpp"
#include "socratic/error.hpp"
#include "socratic/http_backend.hpp"
#include "socratic/mock_backend.hpp"

namespace socratic {
namespace {

using testing::ScriptedChat;

std::vector<ChatMessage> ping() { return {user_message("ping")}; }

TEST(ChatComplete, ReturnsScriptedReplyTrimmed) {
  ScriptedChat chat(std::vector<std::string>{"pong", "  pong \n"});
  EXPECT_EQ(chat.chat_complete(ping(), GenerationParams{}), "pong");
  EXPECT_EQ(chat.chat_complete(ping(), GenerationParams{}), "pong");
}

TEST(ChatComplete, EmptyMessageListIsPrecondition) {
  ScriptedChat chat(std::vector<std::string>{"pong"});
  EXPECT_THROW(chat.chat_complete({}, GenerationParams{}), PreconditionError);
  EXPECT_EQ(chat.call_count(), 0);
}

TEST(ChatComplete, EmptyUserContentIsPrecondition) {
  ScriptedChat chat(std::vector<std::string>{"pong"});
  std::vector<ChatMessage> msgs = {user_message("  ")};
  EXPECT_THROW(chat.chat_complete(msgs, GenerationParams{}), PreconditionError);
}

TEST(ChatComplete, EmptyCompletionIsBackendError) {
  ScriptedChat chat(std::vector<std::string>{" \n "});
  try {
    chat.chat_complete(ping(), GenerationParams{});
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_EQ(e.kind(), BackendError::Kind::kEmptyCompletion);
  }
}

TEST(GenerationParams, Validation) {
  GenerationParams p;
  EXPECT_NO_THROW(p.validate());
  p.temperature = 2.0;
  EXPECT_NO_THROW(p.validate());
  p.temperature = 2.01;
  EXPECT_THROW(p.validate(), PreconditionError);
  p = {};
  p.temperature = -0.1;
  EXPECT_THROW(p.validate(), PreconditionError);
  p = {};
  p.top_p = 0.0;
  EXPECT_THROW(p.validate(), PreconditionError);
  p.top_p = 1.0;
  EXPECT_NO_THROW(p.validate());
  p.max_tokens = 0;
  EXPECT_THROW(p.validate(), PreconditionError);
}

TEST(GenerationParams, Defaults) {
  const auto d = GenerationParams::dialogue();
  EXPECT_DOUBLE_EQ(d.temperature, 0.7);
  EXPECT_DOUBLE_EQ(d.top_p, 0.95);
  EXPECT_EQ(d.max_tokens, 256);
  const auto j = GenerationParams::judge();
  EXPECT_DOUBLE_EQ(j.temperature, 0.0);
  EXPECT_EQ(j.max_tokens, 512);
  EXPECT_EQ(params_from_json(to_json(d)), d);
}

TEST(WireFormat, ChatRequestMatchesGolden) {
  GenerationParams p;
  p.model = "llama2-7b-socratic";
  p.seed = 42;
  std::vector<ChatMessage> msgs = {user_message("Help me think about the question: Why?")};
  const std::string golden = testing::read_file(SOCRATIC_TEST_DATA "/golden/chat_request.json");
  EXPECT_EQ(chat_request_body(msgs, p), golden.substr(0, golden.find_last_not_of('\n') + 1));
}

TEST(WireFormat, IdenticalInputsGiveIdenticalBodies) {
  GenerationParams p;
  std::vector<ChatMessage> msgs = {{Role::kSystem, "s"}, user_message("u"), {Role::kAssistant, "a"}};
  EXPECT_EQ(chat_request_body(msgs, p), chat_request_body(msgs, p));
  const auto j = chat_request_json(msgs, p);
  EXPECT_FALSE(j.contains("seed"));
  EXPECT_EQ(j["messages"][0]["role"], "system");
  EXPECT_EQ(j["messages"][2]["role"], "assistant");
}

TEST(WireFormat, ParsesFirstChoice) {
  EXPECT_EQ(parse_chat_response(R"({"choices":[{"message":{"role":"assistant","content":" hi "}},)"
                                R"({"message":{"content":"no"}}]})"),
            "hi");
  // A missing content field reads as an empty completion, which the client retries.
  EXPECT_EQ(parse_chat_response(R"({"choices":[{"message":{}}]})"), "");
  for (const char* bad : {"", "[]", R"({"choices":[]})", R"({"choices":[{"message":{"content":7}}]})", "{"}) {
    try {
      parse_chat_response(bad);
      FAIL() << bad;
    } catch (const BackendError& e) {
      EXPECT_EQ(e.kind(), BackendError::Kind::kBadResponse) << bad;
    }
  }
}

TEST(WireFormat, EmbedResponse) {
  EXPECT_EQ(embed_request_body("knowledge"), R"({"text":"knowledge"})");
  const auto e = parse_embed_response(R"({"tokens":["knowledge"],"vectors":[[1,0]]})");
  EXPECT_EQ(e.tokens, std::vector<std::string>{"knowledge"});
  EXPECT_EQ(e.vectors, (std::vector<std::vector<double>>{{1.0, 0.0}}));
  for (const char* bad : {R"({"tokens":["a","b","c"],"vectors":[[1,0],[0,1]]})",
                          R"({"tokens":["a","b"],"vectors":[[1,0],[0,1,2]]})", R"({"tokens":[],"vectors":[]})",
                          R"({"tokens":["a"],"vectors":[[]]})"}) {
    try {
      parse_embed_response(bad);
      FAIL() << bad;
    } catch (const BackendError& e) {
      EXPECT_EQ(e.kind(), BackendError::Kind::kBadResponse) << bad;
    }
  }
}

TEST(Embedder, EmptyTextIsPrecondition) {
  HashEmbedder h;
  EXPECT_THROW(h.embed_tokens(""), PreconditionError);
  EXPECT_THROW(h.embed_tokens("   "), PreconditionError);
}

TEST(Embedder, ScriptedSingleToken) {
  testing::TableEmbedder e;
  e.set("knowledge", {{"knowledge"}, {{1.0, 0.0}}});
  const auto out = e.embed_tokens("knowledge");
  EXPECT_EQ(out.tokens, std::vector<std::string>{"knowledge"});
  EXPECT_EQ(out.vectors.front(), (std::vector<double>{1.0, 0.0}));
  e.set("bad", {{"a", "b", "c"}, {{1, 0}, {0, 1}}});
  EXPECT_THROW(e.embed_tokens("bad"), BackendError);
}

TEST(Embedder, HashEmbedderIsDeterministic) {
  HashEmbedder a, b;
  const auto x = a.embed_tokens("The same text");
  const auto y = b.embed_tokens("The same text");
  EXPECT_EQ(x.tokens, y.tokens);
  EXPECT_EQ(x.vectors, y.vectors);
  EXPECT_EQ(x.dim(), 32u);
}

TEST(MockChat, RepliesDependOnlyOnPromptAndSeed) {
  MockChatBackend m1, m2;
  GenerationParams p;
  p.seed = 5;
  const std::vector<ChatMessage> msgs = {user_message("ANSWER to the question Why? IN ONE SENTENCE. DO NOT USE COMPLEX WORDS OR IDEAS")};
  EXPECT_EQ(m1.chat_complete(msgs, p), m2.chat_complete(msgs, p));
}

TEST(RetryPolicy, BackoffDoubles) {
  RetryPolicy r;
  EXPECT_EQ(r.max_retries, 3);
  EXPECT_EQ(r.backoff_for(1), std::chrono::milliseconds(1000));
  EXPECT_EQ(r.backoff_for(2), std::chrono::milliseconds(2000));
  EXPECT_EQ(r.backoff_for(3), std::chrono::milliseconds(4000));
}

TEST(ConcurrencyLimiter, CapsCallsInFlight) {
  std::atomic<int> in_flight{0}, peak{0};
  ScriptedChat inner([&](std::span<const ChatMessage>, const GenerationParams&) {
    const int now = ++in_flight;
    int seen = peak.load();
    while (now > seen && !peak.compare_exchange_weak(seen, now)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
    --in_flight;
    return std::string("ok");
  });
  auto limiter = std::make_shared<ConcurrencyLimiter>(2);
  ThrottledChatBackend a(inner, limiter), b(inner, limiter);
  std::vector<std::jthread> threads;
  for (int i = 0; i < 8; ++i) {
    threads.emplace_back([&, i] {
      for (int k = 0; k < 5; ++k) (i % 2 ? a : b).chat_complete(ping(), GenerationParams{});
    });
  }
  threads.clear();
  EXPECT_LE(peak.load(), 2);
  EXPECT_EQ(inner.call_count(), 40);
}

// Local HTTP fixture standing in for a model server.
class FakeServer {
 public:
  FakeServer() {
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeServer() {
    server_.stop();
    thread_.join();
  }
  httplib::Server& server() { return server_; }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
};

EndpointConfig fast(const std::string& url, int retries = 3) {
  EndpointConfig c;
  c.base_url = url;
  c.retry.max_retries = retries;
  c.retry.base_backoff = std::chrono::milliseconds(1);
  c.connect_timeout = std::chrono::seconds(2);
  c.read_timeout = std::chrono::seconds(5);
  return c;
}

TEST(HttpChatClient, PostsOpenAiShapeWithBearer) {
  std::string auth, body, path;

  auto server = std::make_unique<FakeServer>();
  httplib::Server* srv = &server->server();
  srv->Post(R"(/prefix/v1/chat/completions)", [&](const httplib::Request& req, httplib::Response& res) {
    auth = req.get_header_value("Authorization");
    body = req.body;
    path = req.path;
    res.set_content(R"({"choices":[{"message":{"role":"assistant","content":"pong"}}]})", "application/json");
  });
  auto cfg = fast(server->url() + "/prefix/");
  cfg.api_key = "k123";
  HttpChatClient client(cfg);
  GenerationParams p;
  EXPECT_EQ(client.chat_complete(ping(), p), "pong");
  EXPECT_EQ(auth, "Bearer k123");
  EXPECT_EQ(body, chat_request_body(ping(), p));
}

TEST(HttpChatClient, RetriesTransientStatusThenSucceeds) {
  FakeServer server;
  std::atomic<int> hits{0};
  server.server().Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    if (++hits < 3) {
      res.status = 503;
      return;
    }
    res.set_content(R"({"choices":[{"message":{"content":"ok"}}]})", "application/json");
  });
  HttpChatClient client(fast(server.url()));
  EXPECT_EQ(client.chat_complete(ping(), GenerationParams{}), "ok");
  EXPECT_EQ(hits.load(), 3);
}

TEST(HttpChatClient, GivesUpAfterConfiguredRetries) {
  FakeServer server;
  std::atomic<int> hits{0};
  server.server().Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.status = 500;
  });
  HttpChatClient client(fast(server.url(), 2));
  try {
    client.chat_complete(ping(), GenerationParams{});
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_EQ(e.kind(), BackendError::Kind::kHttpStatus);
    EXPECT_EQ(e.status(), 500);
    EXPECT_EQ(e.attempts(), 3);
  }
  EXPECT_EQ(hits.load(), 3);
}

TEST(HttpChatClient, ClientErrorsAreNotRetried) {
  FakeServer server;
  std::atomic<int> hits{0};
  server.server().Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.status = 400;
  });
  HttpChatClient client(fast(server.url()));
  EXPECT_THROW(client.chat_complete(ping(), GenerationParams{}), BackendError);
  EXPECT_EQ(hits.load(), 1);
}

TEST(HttpChatClient, EndpointDownIsNetworkErrorAfterRetries) {
  std::string url;
  {
    FakeServer probe;
    url = probe.url();
  }
  HttpChatClient client(fast(url, 2));
  try {
    client.chat_complete(ping(), GenerationParams{});
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_EQ(e.kind(), BackendError::Kind::kNetwork);
    EXPECT_EQ(e.attempts(), 3);
  }
}

TEST(HttpEmbedClient, PostsTextAndParsesVectors) {
  FakeServer server;
  server.server().Post("/embed", [&](const httplib::Request& req, httplib::Response& res) {
    const auto j = nlohmann::json::parse(req.body);
    EXPECT_EQ(j["text"], "knowledge");
    res.set_content(R"({"tokens":["knowledge"],"vectors":[[1.0,0.0]]})", "application/json");
  });
  HttpEmbedClient client(fast(server.url()));
  const auto e = client.embed_tokens("knowledge");
  EXPECT_EQ(e.tokens.size(), 1u);
  EXPECT_EQ(e.vectors[0][0], 1.0);
}

TEST(EndpointConfig, FromEnv) {
  ::unsetenv("SOCRATIC_TEST_URL");
  EXPECT_THROW(EndpointConfig::from_env("SOCRATIC_TEST_URL"), PreconditionError);
  ::setenv("SOCRATIC_TEST_URL", "http://127.0.0.1:9", 1);
  ::setenv(kApiKeyEnv, "secret", 1);
  const auto c = EndpointConfig::from_env("SOCRATIC_TEST_URL");
  EXPECT_EQ(c.base_url, "http://127.0.0.1:9");
  EXPECT_EQ(c.api_key, "secret");
  ::unsetenv(kApiKeyEnv);
  EXPECT_THROW(HttpChatClient(fast("127.0.0.1:9")), PreconditionError);
}

}  // namespace
}  // namespace socratic
