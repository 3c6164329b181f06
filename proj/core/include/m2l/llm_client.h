/**
 * @file llm_client.h
 * @brief Completion backends: OpenAI-compatible HTTP, record/replay fixtures
 *        and scripted programs.
 *
 * Fixture key (version 1): "v1:" followed by the SHA-256 hex digest of
 *
 *     "m2l-fixture/1" NUL model_id NUL temperature NUL system NUL user
 *
 * where temperature is printed with "%.6f". Identical requests share a key.
 * max_tokens is deliberately not part of the key.
 */

#ifndef M2L_LLM_CLIENT_H
#define M2L_LLM_CLIENT_H

#include <chrono>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "m2l/error.h"

namespace m2l {

struct CompletionRequest {
  std::string system;
  std::string user;
  double temperature = 0.7;
  int max_tokens = 512;
  std::string model_id;
};

/// Throws ContractError when user is empty, temperature is negative or
/// max_tokens is not positive.
void validate_request(const CompletionRequest& req);

std::string request_digest(const CompletionRequest& req);

/// Backend failure. Carries the digest of the request that failed.
class LlmError : public Error {
 public:
  LlmError(const std::string& what, std::string digest, bool retriable)
      : Error(what + " [request " + digest + "]"), digest_(std::move(digest)),
        retriable_(retriable) {}
  const std::string& digest() const { return digest_; }
  bool retriable() const { return retriable_; }

 private:
  std::string digest_;
  bool retriable_;
};

class ReplayMissError : public LlmError {
 public:
  explicit ReplayMissError(const std::string& digest)
      : LlmError("no fixture for request", digest, false) {}
};

class HttpStatusError : public LlmError {
 public:
  HttpStatusError(int status, const std::string& body, const std::string& digest)
      : LlmError("HTTP status " + std::to_string(status) + ": " + body.substr(0, 200), digest,
                 status == 408 || status == 429 || status >= 500),
        status_(status) {}
  int status() const { return status_; }

 private:
  int status_;
};

/// Safe to call from several threads at once.
class LlmClient {
 public:
  virtual ~LlmClient() = default;
  virtual std::string complete(const CompletionRequest& req) = 0;
};

struct HttpConfig {
  std::string endpoint;  ///< e.g. https://api.openai.com/v1/chat/completions
  std::string model_id;  ///< used when a request leaves model_id empty
  std::chrono::milliseconds timeout{60000};
  std::string api_key;   ///< taken from M2L_API_KEY by make_client
};

/// One chat-completions POST per call: {"model", "messages": [system, user],
/// "temperature", "max_tokens"}; returns choices[0].message.content.
class HttpClient : public LlmClient {
 public:
  explicit HttpClient(HttpConfig config);
  std::string complete(const CompletionRequest& req) override;

  /// Request body sent for `req` (exposed for wire-format tests).
  nlohmann::json wire_body(const CompletionRequest& req) const;

 private:
  HttpConfig config_;
  std::string origin_;  ///< scheme://host[:port]
  std::string path_;
};

enum class ReplayMode { Strict, Record };

struct FixtureEntry {
  std::string key;
  std::string response;
};

/// Fixture store backed by a JSON-lines file of
/// {"key", "request": {model_id, temperature, system, user}, "response"}.
///
/// Strict mode answers only from the file and never touches `live`.
/// Record mode answers from the file when the key exists, otherwise calls
/// `live` and appends the exchange to the file.
class ReplayClient : public LlmClient {
 public:
  ReplayClient(std::string fixture_path, ReplayMode mode, std::shared_ptr<LlmClient> live = {});
  std::string complete(const CompletionRequest& req) override;

  size_t size() const;

 private:
  std::string path_;
  ReplayMode mode_;
  std::shared_ptr<LlmClient> live_;
  mutable std::mutex mu_;
  std::unordered_map<std::string, std::string> store_;
};

std::vector<FixtureEntry> load_fixtures(const std::string& path);

using ScriptProgram = std::function<std::string(const CompletionRequest&)>;

class ScriptedClient : public LlmClient {
 public:
  explicit ScriptedClient(ScriptProgram program) : program_(std::move(program)) {}
  std::string complete(const CompletionRequest& req) override { return program_(req); }

 private:
  ScriptProgram program_;
};

/// Replies from a fixed list in order; throws once exhausted.
class SequenceClient : public LlmClient {
 public:
  explicit SequenceClient(std::vector<std::string> replies) : replies_(std::move(replies)) {}
  std::string complete(const CompletionRequest& req) override;
  size_t calls() const;

 private:
  mutable std::mutex mu_;
  std::vector<std::string> replies_;
  size_t next_ = 0;
};

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{500};
  double multiplier = 2.0;
  std::chrono::milliseconds max_backoff{8000};
};

/// Sleep durations between attempts; size max_attempts-1, non-decreasing.
std::vector<std::chrono::milliseconds> backoff_schedule(const RetryPolicy& policy);

/// Retries retriable LlmErrors per policy.
class RetryingClient : public LlmClient {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  RetryingClient(std::shared_ptr<LlmClient> inner, RetryPolicy policy, Sleeper sleeper = {});
  std::string complete(const CompletionRequest& req) override;

 private:
  std::shared_ptr<LlmClient> inner_;
  RetryPolicy policy_;
  Sleeper sleeper_;
};

/// Parsed client configuration file.
///
///   {"backend": "http", "endpoint": "...", "model_id": "...",
///    "timeout_ms": 60000, "retry": {"max_attempts": 3, "backoff_ms": 500,
///    "multiplier": 2.0, "max_backoff_ms": 8000}}
///   {"backend": "replay", "fixture": "path", "mode": "strict"|"record",
///    "live": { ...another config... }}     (live only for record mode)
///   {"backend": "scripted", "program": "cooperative", "model_id": "..."}
///
/// Credentials never appear here; the HTTP backend reads M2L_API_KEY.
struct ClientConfig {
  nlohmann::json raw;
  std::string model_id;  ///< label used in reports and requests

  static ClientConfig parse(std::string_view text, const std::string& base_dir = ".");
  static ClientConfig load(const std::string& path);
};

/// Builds the client. `seed` flows into scripted programs.
std::shared_ptr<LlmClient> make_client(const ClientConfig& config, unsigned seed = 0);

}  // namespace m2l

#endif  // M2L_LLM_CLIENT_H
