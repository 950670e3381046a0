#pragma once

#include <condition_variable>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "perfpred/error.hpp"
#include "perfpred/jsonl.hpp"

namespace perfpred::llm {

struct GenerationParams {
  int max_tokens = 769;
  double temperature = 1.0;
  double top_p = 0.9;
  std::string model_id;
  int num_samples = 3;  // n
};

struct Completion {
  std::string text;
  std::string request_digest;
  bool cached = false;
};

/// Prompt payload; `system` is empty for plain single-turn requests.
struct Request {
  std::string system;
  std::string user;
};

class BackendError : public Error {
 public:
  BackendError(const std::string& msg, bool retryable, int status = 0)
      : Error(ErrorKind::backend, msg), retryable(retryable), status(status) {}

  bool retryable;
  int status;
};

class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string id() const = 0;
  virtual std::string complete(const Request& req, const GenerationParams& params,
                               int sample_index) = 0;
};

/// Table-driven deterministic backend: rules are scanned in order and the
/// first whose substrings all occur in the user prompt wins. `texts` are
/// selected by sample_index (the last entry repeats). `fail_times` makes the
/// first k matching calls raise retryable errors, for exercising the retry
/// path.
struct MockRule {
  std::vector<std::string> contains;
  std::vector<std::string> texts;
  int fail_times = 0;
};

class MockBackend final : public Backend {
 public:
  explicit MockBackend(std::vector<MockRule> rules) : rules_(std::move(rules)) {}

  static std::shared_ptr<MockBackend> from_json(const json& spec);

  std::string id() const override { return "mock"; }
  std::string complete(const Request& req, const GenerationParams& params,
                       int sample_index) override;

 private:
  std::vector<MockRule> rules_;
  std::map<size_t, int> failures_used_;
  std::mutex mu_;
};

/// OpenAI-compatible chat-completions endpoint. The API key is read from the
/// named environment variable at call time.
class HttpBackend final : public Backend {
 public:
  HttpBackend(std::string base_url, std::string api_key_env,
              int timeout_seconds = 120);

  std::string id() const override { return "http:" + base_url_; }
  std::string complete(const Request& req, const GenerationParams& params,
                       int sample_index) override;

 private:
  std::string base_url_;
  std::string api_key_env_;
  int timeout_seconds_;
};

struct ClientOptions {
  std::string cache_dir;    // empty disables caching
  int max_retries = 5;      // attempts, exponential backoff with full jitter
  int backoff_base_ms = 250;
  int backoff_cap_ms = 8000;
  int max_in_flight = 4;
};

std::string sha256_hex(const std::string& data);

/// Shareable across threads; each call returns a complete Completion or
/// throws. The cache is content-addressed by the SHA-256 of the canonical
/// request serialization and written atomically.
class LlmClient {
 public:
  LlmClient(std::shared_ptr<Backend> backend, ClientOptions opts);

  Completion generate(const std::string& prompt, const GenerationParams& params,
                      int sample_index = 0);
  Completion generate(const Request& req, const GenerationParams& params, int sample_index = 0);

  /// num_samples completions, sample_index 0..n-1, order-restored. Partial
  /// failures raise PartialFailureError naming the indices that succeeded.
  std::vector<Completion> generate_samples(const std::string& prompt,
                                           const GenerationParams& params);
  std::vector<Completion> generate_samples(const Request& req, const GenerationParams& params);

  static std::string request_digest(const std::string& backend_id, const Request& req,
                                    const GenerationParams& params, int sample_index);

  const Backend& backend() const { return *backend_; }

 private:
  Completion generate_once(const Request& req, const GenerationParams& params, int sample_index);

  std::shared_ptr<Backend> backend_;
  ClientOptions opts_;

  // simple counting gate for bounded in-flight requests
  std::mutex gate_mu_;
  std::condition_variable gate_cv_;
  int in_flight_ = 0;
};

}  // namespace perfpred::llm
