#include "perfpred/llm_client.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <random>
#include <thread>

#include <openssl/evp.h>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

namespace perfpred::llm {

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  EVP_DigestUpdate(ctx, data.data(), data.size());
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

std::shared_ptr<MockBackend> MockBackend::from_json(const json& spec) {
  std::vector<MockRule> rules;
  for (const auto& r : spec.at("table")) {
    MockRule rule;
    if (r.contains("contains")) {
      if (r["contains"].is_string())
        rule.contains.push_back(r["contains"].get<std::string>());
      else
        for (const auto& c : r["contains"]) rule.contains.push_back(c.get<std::string>());
    }
    if (r.contains("text")) rule.texts.push_back(r["text"].get<std::string>());
    if (r.contains("texts"))
      for (const auto& t : r["texts"]) rule.texts.push_back(t.get<std::string>());
    rule.fail_times = r.value("fail_times", 0);
    if (rule.texts.empty()) fail(ErrorKind::config, "mock rule without response text");
    rules.push_back(std::move(rule));
  }
  return std::make_shared<MockBackend>(std::move(rules));
}

std::string MockBackend::complete(const Request& req, const GenerationParams&, int sample_index) {
  for (size_t i = 0; i < rules_.size(); ++i) {
    const auto& rule = rules_[i];
    bool match = true;
    for (const auto& needle : rule.contains)
      if (req.user.find(needle) == std::string::npos) {
        match = false;
        break;
      }
    if (!match) continue;
    if (rule.fail_times > 0) {
      std::lock_guard<std::mutex> lock(mu_);
      if (failures_used_[i] < rule.fail_times) {
        ++failures_used_[i];
        throw BackendError("mock transport failure (injected)", /*retryable=*/true);
      }
    }
    const size_t k = std::min(static_cast<size_t>(std::max(sample_index, 0)),
                              rule.texts.size() - 1);
    return rule.texts[k];
  }
  throw BackendError("no mock rule matches prompt", /*retryable=*/false);
}

HttpBackend::HttpBackend(std::string base_url, std::string api_key_env, int timeout_seconds)
    : base_url_(std::move(base_url)), api_key_env_(std::move(api_key_env)),
      timeout_seconds_(timeout_seconds) {}

std::string HttpBackend::complete(const Request& req, const GenerationParams& params,
                                  int sample_index) {
  (void)sample_index;  // distinct samples are independent calls
  // split scheme://host[:port] from an optional path prefix
  std::string origin = base_url_;
  std::string prefix;
  const size_t scheme_end = origin.find("://");
  if (scheme_end != std::string::npos) {
    const size_t path_start = origin.find('/', scheme_end + 3);
    if (path_start != std::string::npos) {
      prefix = origin.substr(path_start);
      origin = origin.substr(0, path_start);
    }
  }
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();

  httplib::Client cli(origin);
  cli.set_connection_timeout(timeout_seconds_, 0);
  cli.set_read_timeout(timeout_seconds_, 0);

  httplib::Headers headers;
  if (!api_key_env_.empty()) {
    const char* key = std::getenv(api_key_env_.c_str());
    if (!key) throw BackendError("API key environment variable " + api_key_env_ + " not set",
                                 /*retryable=*/false);
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }

  json messages = json::array();
  if (!req.system.empty()) messages.push_back({{"role", "system"}, {"content", req.system}});
  messages.push_back({{"role", "user"}, {"content", req.user}});
  const json body{{"model", params.model_id},
                  {"messages", messages},
                  {"max_tokens", params.max_tokens},
                  {"temperature", params.temperature},
                  {"top_p", params.top_p}};

  auto res = cli.Post(prefix + "/chat/completions", headers, body.dump(), "application/json");
  if (!res) throw BackendError("transport failure: " + httplib::to_string(res.error()),
                               /*retryable=*/true);
  if (res->status == 429 || res->status >= 500)
    throw BackendError("endpoint returned status " + std::to_string(res->status),
                       /*retryable=*/true, res->status);
  if (res->status < 200 || res->status >= 300)
    throw BackendError("endpoint returned status " + std::to_string(res->status),
                       /*retryable=*/false, res->status);

  json parsed = json::parse(res->body, nullptr, false);
  if (parsed.is_discarded() || !parsed.contains("choices") || parsed["choices"].empty())
    throw BackendError("malformed completion response", /*retryable=*/false);
  const auto& choice = parsed["choices"][0];
  if (!choice.contains("message") || !choice["message"].contains("content"))
    throw BackendError("completion response missing message content", /*retryable=*/false);
  return choice["message"]["content"].get<std::string>();
}

LlmClient::LlmClient(std::shared_ptr<Backend> backend, ClientOptions opts)
    : backend_(std::move(backend)), opts_(std::move(opts)) {
  if (!backend_) fail(ErrorKind::config, "LlmClient requires a backend");
  if (opts_.max_in_flight < 1) opts_.max_in_flight = 1;
}

std::string LlmClient::request_digest(const std::string& backend_id, const Request& req,
                                      const GenerationParams& params, int sample_index) {
  const json canonical{{"backend", backend_id},
                       {"max_tokens", params.max_tokens},
                       {"model_id", params.model_id},
                       {"num_samples", params.num_samples},
                       {"prompt", req.user},
                       {"sample_index", sample_index},
                       {"system", req.system},
                       {"temperature", params.temperature},
                       {"top_p", params.top_p}};
  return sha256_hex(canonical.dump());
}

Completion LlmClient::generate(const std::string& prompt, const GenerationParams& params,
                               int sample_index) {
  return generate(Request{"", prompt}, params, sample_index);
}

Completion LlmClient::generate(const Request& req, const GenerationParams& params,
                               int sample_index) {
  return generate_once(req, params, sample_index);
}

Completion LlmClient::generate_once(const Request& req, const GenerationParams& params,
                                    int sample_index) {
  const std::string digest = request_digest(backend_->id(), req, params, sample_index);

  std::filesystem::path cache_path;
  if (!opts_.cache_dir.empty()) {
    cache_path = std::filesystem::path(opts_.cache_dir) / (digest + ".json");
    if (std::filesystem::exists(cache_path)) {
      json rec = json::parse(read_text_file(cache_path), nullptr, false);
      if (!rec.is_discarded() && rec.contains("text"))
        return Completion{rec["text"].get<std::string>(), digest, /*cached=*/true};
    }
  }

  // bounded in-flight window around the backend call
  {
    std::unique_lock<std::mutex> lock(gate_mu_);
    gate_cv_.wait(lock, [&] { return in_flight_ < opts_.max_in_flight; });
    ++in_flight_;
  }
  struct GateRelease {
    LlmClient* c;
    ~GateRelease() {
      {
        std::lock_guard<std::mutex> lock(c->gate_mu_);
        --c->in_flight_;
      }
      c->gate_cv_.notify_one();
    }
  } release{this};

  std::string text;
  std::string last_error;
  bool ok = false;
  static thread_local std::mt19937_64 jitter_rng{std::random_device{}()};
  for (int attempt = 0; attempt < std::max(1, opts_.max_retries); ++attempt) {
    if (attempt > 0) {
      // full jitter: uniform over [0, base * 2^(attempt-1)], capped
      const double cap = std::min<double>(opts_.backoff_cap_ms,
                                          opts_.backoff_base_ms * std::pow(2.0, attempt - 1));
      const auto delay = std::uniform_real_distribution<double>(0.0, cap)(jitter_rng);
      std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(delay));
    }
    try {
      text = backend_->complete(req, params, sample_index);
      ok = true;
      break;
    } catch (const BackendError& e) {
      last_error = e.what();
      if (!e.retryable) throw;
    }
  }
  if (!ok)
    throw BackendError("request failed after " + std::to_string(opts_.max_retries) +
                           " attempts: " + last_error,
                       /*retryable=*/false);

  if (!cache_path.empty()) {
    const json rec{{"text", text},
                   {"backend", backend_->id()},
                   {"model_id", params.model_id},
                   {"sample_index", sample_index}};
    write_text_file(cache_path, rec.dump());
  }
  return Completion{std::move(text), digest, /*cached=*/false};
}

std::vector<Completion> LlmClient::generate_samples(const std::string& prompt,
                                                    const GenerationParams& params) {
  return generate_samples(Request{"", prompt}, params);
}

std::vector<Completion> LlmClient::generate_samples(const Request& req,
                                                    const GenerationParams& params) {
  const int n = params.num_samples;
  if (n < 1) fail(ErrorKind::range, "num_samples must be >= 1");
  std::vector<Completion> out(static_cast<size_t>(n));
  std::vector<std::string> errors(static_cast<size_t>(n));
  std::vector<char> failed(static_cast<size_t>(n), 0);

  if (n == 1) {
    out[0] = generate_once(req, params, 0);
    return out;
  }

  std::vector<std::thread> workers;
  workers.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    workers.emplace_back([&, i] {
      try {
        out[static_cast<size_t>(i)] = generate_once(req, params, i);
      } catch (const std::exception& e) {
        failed[static_cast<size_t>(i)] = 1;
        errors[static_cast<size_t>(i)] = e.what();
      }
    });
  }
  for (auto& w : workers) w.join();

  std::vector<int> succeeded;
  std::string first_error;
  for (int i = 0; i < n; ++i) {
    if (failed[static_cast<size_t>(i)]) {
      if (first_error.empty()) first_error = errors[static_cast<size_t>(i)];
    } else {
      succeeded.push_back(i);
    }
  }
  if (static_cast<int>(succeeded.size()) != n) {
    std::string ok_list;
    for (size_t k = 0; k < succeeded.size(); ++k)
      ok_list += (k ? "," : "") + std::to_string(succeeded[k]);
    throw PartialFailureError("some samples failed (" + first_error + "); succeeded indices: [" +
                                  ok_list + "]",
                              succeeded);
  }
  return out;
}

}  // namespace perfpred::llm
