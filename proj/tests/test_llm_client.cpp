#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <chrono>
#include <filesystem>
#include <thread>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "perfpred/llm_client.hpp"

using namespace perfpred;
using namespace perfpred::llm;

namespace {

namespace fs = std::filesystem;

std::string fresh_cache(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("perfpred_cache_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir.string();
}

GenerationParams params_with(int n = 1) {
  GenerationParams p;
  p.model_id = "test-model";
  p.num_samples = n;
  return p;
}

ClientOptions fast_opts(const std::string& cache = {}) {
  ClientOptions o;
  o.cache_dir = cache;
  o.backoff_base_ms = 0;  // keep the retry tests instant
  return o;
}

}  // namespace

TEST_CASE("mock backend echoes its table") {
  auto backend = std::make_shared<MockBackend>(std::vector<MockRule>{
      {{"p"}, {"ok"}, 0},
  });
  LlmClient client(backend, fast_opts());
  const auto completion = client.generate("p", params_with());
  CHECK(completion.text == "ok");
  CHECK_FALSE(completion.cached);
}

TEST_CASE("per-index mock tables give distinct texts per sample") {
  auto backend = std::make_shared<MockBackend>(std::vector<MockRule>{
      {{"question"}, {"first", "second", "third"}, 0},
  });
  LlmClient client(backend, fast_opts());
  const auto samples = client.generate_samples("the question", params_with(3));
  REQUIRE(samples.size() == 3);
  CHECK(samples[0].text == "first");
  CHECK(samples[1].text == "second");
  CHECK(samples[2].text == "third");
  // n = 1 singleton
  CHECK(client.generate_samples("the question", params_with(1)).size() == 1);
}

TEST_CASE("cache contract: identical requests hit, altered requests miss") {
  auto backend = std::make_shared<MockBackend>(std::vector<MockRule>{{{""}, {"reply"}, 0}});
  LlmClient client(backend, fast_opts(fresh_cache("contract")));
  const auto params = params_with();
  const auto first = client.generate("hello", params);
  CHECK_FALSE(first.cached);
  const auto second = client.generate("hello", params);
  CHECK(second.cached);
  CHECK(second.text == first.text);
  CHECK(second.request_digest == first.request_digest);

  auto other = params;
  other.temperature = 0.7;
  CHECK(client.generate("hello", other).request_digest != first.request_digest);
}

TEST_CASE("digest changes when any request field changes") {
  const Request req{"", "prompt"};
  const auto params = params_with();
  const auto base = LlmClient::request_digest("mock", req, params, 0);

  CHECK(LlmClient::request_digest("other", req, params, 0) != base);
  CHECK(LlmClient::request_digest("mock", {"", "prompt!"}, params, 0) != base);
  CHECK(LlmClient::request_digest("mock", {"sys", "prompt"}, params, 0) != base);
  CHECK(LlmClient::request_digest("mock", req, params, 1) != base);
  for (auto tweak : {&GenerationParams::temperature, &GenerationParams::top_p}) {
    auto p = params;
    p.*tweak += 0.013;
    CHECK(LlmClient::request_digest("mock", req, p, 0) != base);
  }
  auto p = params;
  p.max_tokens += 1;
  CHECK(LlmClient::request_digest("mock", req, p, 0) != base);
  p = params;
  p.model_id = "another";
  CHECK(LlmClient::request_digest("mock", req, p, 0) != base);
  p = params;
  p.num_samples += 1;
  CHECK(LlmClient::request_digest("mock", req, p, 0) != base);

  CHECK(LlmClient::request_digest("mock", req, params, 0) == base);  // stable
}

TEST_CASE("transient failures are retried up to the limit") {
  SUBCASE("recovers within the budget") {
    auto backend = std::make_shared<MockBackend>(std::vector<MockRule>{
        {{"flaky"}, {"recovered"}, 3},
    });
    LlmClient client(backend, fast_opts());
    CHECK(client.generate("flaky", params_with()).text == "recovered");
  }
  SUBCASE("exhausted retries surface a backend error") {
    auto backend = std::make_shared<MockBackend>(std::vector<MockRule>{
        {{"dead"}, {"never"}, 50},
    });
    LlmClient client(backend, fast_opts());
    CHECK_THROWS_AS(client.generate("dead", params_with()), BackendError);
  }
  SUBCASE("non-retryable errors are immediate") {
    auto backend = std::make_shared<MockBackend>(std::vector<MockRule>{});
    LlmClient client(backend, fast_opts());
    CHECK_THROWS_AS(client.generate("anything", params_with()), BackendError);
  }
}

TEST_CASE("partial sample failure lists the succeeded indices") {
  // sample_index 2 never matches a rule with texts for it; instead inject a
  // rule that fails permanently only for one marker
  auto backend = std::make_shared<MockBackend>(std::vector<MockRule>{
      {{"mixed"}, {"a", "b"}, 0},
  });
  // make index-dependent failure: wrap the backend
  struct FlakyIndex final : Backend {
    std::shared_ptr<Backend> inner;
    std::string id() const override { return inner->id(); }
    std::string complete(const Request& req, const GenerationParams& p, int idx) override {
      if (idx == 1) throw BackendError("index 1 down", /*retryable=*/false);
      return inner->complete(req, p, idx);
    }
  };
  auto flaky = std::make_shared<FlakyIndex>();
  flaky->inner = backend;
  LlmClient client(flaky, fast_opts());
  try {
    client.generate_samples("mixed", params_with(3));
    FAIL("expected PartialFailureError");
  } catch (const PartialFailureError& e) {
    CHECK(e.succeeded_indices == std::vector<int>{0, 2});
  }
}

TEST_CASE("in-flight requests stay within the configured bound, order restored") {
  struct CountingBackend final : Backend {
    std::atomic<int> active{0};
    std::atomic<int> peak{0};
    std::string id() const override { return "counting"; }
    std::string complete(const Request&, const GenerationParams&, int idx) override {
      const int now = ++active;
      int prev = peak.load();
      while (now > prev && !peak.compare_exchange_weak(prev, now)) {
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
      --active;
      return "r" + std::to_string(idx);
    }
  };
  auto backend = std::make_shared<CountingBackend>();
  ClientOptions opts;
  opts.max_in_flight = 2;
  LlmClient client(backend, opts);
  const auto samples = client.generate_samples("p", params_with(8));
  REQUIRE(samples.size() == 8);
  for (int i = 0; i < 8; ++i) CHECK(samples[static_cast<size_t>(i)].text == "r" + std::to_string(i));
  CHECK(backend->peak.load() <= 2);
  CHECK(backend->peak.load() >= 1);
}

TEST_CASE("http backend speaks the chat-completions protocol") {
  httplib::Server server;
  std::atomic<int> hits{0};
  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    const int hit = ++hits;
    json body = json::parse(req.body, nullptr, false);
    REQUIRE_FALSE(body.is_discarded());
    CHECK(body.at("model") == "remote-model");
    CHECK(body.at("messages").back().at("role") == "user");
    if (hit == 1) {  // first call fails transiently, the client must retry
      res.status = 503;
      return;
    }
    const json reply{
        {"choices",
         json::array({json{{"message", json{{"role", "assistant"},
                                            {"content", "echo: " +
                                                 body["messages"].back()["content"]
                                                     .get<std::string>()}}}}})}};
    res.set_content(reply.dump(), "application/json");
  });
  server.Post("/v1/broken/chat/completions", [](const httplib::Request&, httplib::Response& res) {
    res.status = 404;
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread server_thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  GenerationParams params;
  params.model_id = "remote-model";

  {
    auto backend = std::make_shared<HttpBackend>(
        "http://127.0.0.1:" + std::to_string(port) + "/v1", "");
    LlmClient client(backend, fast_opts());
    const auto completion = client.generate("hello over http", params);
    CHECK(completion.text == "echo: hello over http");
    CHECK(hits.load() >= 2);  // the 503 was retried
  }
  {
    auto backend = std::make_shared<HttpBackend>(
        "http://127.0.0.1:" + std::to_string(port) + "/v1/broken", "");
    LlmClient client(backend, fast_opts());
    CHECK_THROWS_AS(client.generate("hello", params), BackendError);  // 404: no retry
  }
  {
    auto backend = std::make_shared<HttpBackend>("http://127.0.0.1:1/v1", "");
    LlmClient client(backend, fast_opts());
    CHECK_THROWS_AS(client.generate("unreachable", params), BackendError);
  }

  server.stop();
  server_thread.join();
}

TEST_CASE("cached pipeline is deterministic across clients") {
  const auto cache = fresh_cache("dete");
  auto backend = std::make_shared<MockBackend>(std::vector<MockRule>{
      {{"q"}, {"alpha", "beta", "gamma"}, 0},
  });
  std::vector<std::string> first_run, second_run;
  {
    LlmClient client(backend, fast_opts(cache));
    for (const auto& c : client.generate_samples("q", params_with(3)))
      first_run.push_back(c.text);
  }
  {
    LlmClient client(std::make_shared<MockBackend>(std::vector<MockRule>{}),
                     fast_opts(cache));  // no rules: only the cache can answer
    for (const auto& c : client.generate_samples("q", params_with(3))) {
      second_run.push_back(c.text);
      CHECK(c.cached);
    }
  }
  CHECK(first_run == second_run);
}
