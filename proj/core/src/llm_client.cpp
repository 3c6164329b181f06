#include "m2l/llm_client.h"

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include "m2l/digest.h"

namespace m2l {

using nlohmann::json;

void validate_request(const CompletionRequest& req) {
  if (req.user.empty()) throw ContractError("completion request has an empty user message");
  if (!(req.temperature >= 0.0)) throw ContractError("completion temperature must be >= 0");
  if (req.max_tokens < 1) throw ContractError("completion max_tokens must be positive");
}

std::string request_digest(const CompletionRequest& req) {
  char temp[64];
  std::snprintf(temp, sizeof temp, "%.6f", req.temperature);
  std::string material = "m2l-fixture/1";
  for (std::string_view part : {std::string_view(req.model_id), std::string_view(temp),
                                std::string_view(req.system), std::string_view(req.user)}) {
    material.push_back('\0');
    material.append(part);
  }
  return "v1:" + sha256_hex(material);
}

// --- HTTP -------------------------------------------------------------------

HttpClient::HttpClient(HttpConfig config) : config_(std::move(config)) {
  auto scheme_end = config_.endpoint.find("://");
  if (scheme_end == std::string::npos) {
    throw ConfigError("http endpoint must include a scheme: " + config_.endpoint);
  }
  auto path_start = config_.endpoint.find('/', scheme_end + 3);
  origin_ = config_.endpoint.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : config_.endpoint.substr(path_start);
}

json HttpClient::wire_body(const CompletionRequest& req) const {
  json messages = json::array();
  if (!req.system.empty()) messages.push_back({{"role", "system"}, {"content", req.system}});
  messages.push_back({{"role", "user"}, {"content", req.user}});
  return json{{"model", req.model_id.empty() ? config_.model_id : req.model_id},
              {"messages", std::move(messages)},
              {"temperature", req.temperature},
              {"max_tokens", req.max_tokens}};
}

std::string HttpClient::complete(const CompletionRequest& req) {
  validate_request(req);
  const std::string digest = request_digest(req);
  httplib::Client cli(origin_);
  auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
  auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
  cli.set_connection_timeout(secs.count(), usecs.count());
  cli.set_read_timeout(secs.count(), usecs.count());
  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

  auto res = cli.Post(path_, headers, wire_body(req).dump(), "application/json");
  if (!res) {
    throw LlmError("network error: " + httplib::to_string(res.error()), digest, true);
  }
  if (res->status != 200) throw HttpStatusError(res->status, res->body, digest);
  try {
    auto body = json::parse(res->body);
    return body.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw LlmError(std::string("malformed completion response: ") + e.what(), digest, false);
  }
}

// --- Replay -----------------------------------------------------------------

std::vector<FixtureEntry> load_fixtures(const std::string& path) {
  std::vector<FixtureEntry> out;
  std::ifstream in(path, std::ios::binary);
  if (!in) return out;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto j = json::parse(line);
      out.push_back({j.at("key").get<std::string>(), j.at("response").get<std::string>()});
    } catch (const json::exception& e) {
      throw ParseError("fixture " + path + " line " + std::to_string(number) + ": " + e.what());
    }
  }
  return out;
}

ReplayClient::ReplayClient(std::string fixture_path, ReplayMode mode,
                           std::shared_ptr<LlmClient> live)
    : path_(std::move(fixture_path)), mode_(mode), live_(std::move(live)) {
  if (mode_ == ReplayMode::Strict) {
    if (!std::ifstream(path_)) throw ConfigError("replay fixture not found: " + path_);
    live_.reset();
  } else if (!live_) {
    throw ConfigError("record mode needs a live backend");
  }
  for (auto& e : load_fixtures(path_)) store_[e.key] = std::move(e.response);
}

size_t ReplayClient::size() const {
  std::lock_guard lock(mu_);
  return store_.size();
}

std::string ReplayClient::complete(const CompletionRequest& req) {
  validate_request(req);
  const std::string key = request_digest(req);
  {
    std::lock_guard lock(mu_);
    if (auto it = store_.find(key); it != store_.end()) return it->second;
  }
  if (mode_ == ReplayMode::Strict) throw ReplayMissError(key);

  std::string response = live_->complete(req);
  json line = {{"key", key},
               {"request",
                {{"model_id", req.model_id},
                 {"temperature", req.temperature},
                 {"system", req.system},
                 {"user", req.user}}},
               {"response", response}};
  std::string text = line.dump() + "\n";
  std::lock_guard lock(mu_);
  if (store_.emplace(key, response).second) {
    std::ofstream out(path_, std::ios::binary | std::ios::app);
    if (!out) throw Error("cannot append to fixture file " + path_);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.flush();
  }
  return response;
}

// --- Sequence / retry -------------------------------------------------------

std::string SequenceClient::complete(const CompletionRequest& req) {
  std::lock_guard lock(mu_);
  if (next_ >= replies_.size()) {
    ++next_;
    throw LlmError("scripted sequence exhausted", request_digest(req), false);
  }
  return replies_[next_++];
}

size_t SequenceClient::calls() const {
  std::lock_guard lock(mu_);
  return next_;
}

std::vector<std::chrono::milliseconds> backoff_schedule(const RetryPolicy& policy) {
  std::vector<std::chrono::milliseconds> out;
  double delay = static_cast<double>(policy.initial_backoff.count());
  for (int i = 1; i < policy.max_attempts; ++i) {
    auto ms = static_cast<long long>(std::min(delay, static_cast<double>(policy.max_backoff.count())));
    if (!out.empty()) ms = std::max<long long>(ms, out.back().count());
    out.emplace_back(ms);
    delay *= std::max(1.0, policy.multiplier);
  }
  return out;
}

RetryingClient::RetryingClient(std::shared_ptr<LlmClient> inner, RetryPolicy policy,
                               Sleeper sleeper)
    : inner_(std::move(inner)), policy_(policy), sleeper_(std::move(sleeper)) {
  if (policy_.max_attempts < 1) throw ConfigError("retry max_attempts must be >= 1");
  if (!sleeper_) sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

std::string RetryingClient::complete(const CompletionRequest& req) {
  auto schedule = backoff_schedule(policy_);
  for (int attempt = 1;; ++attempt) {
    try {
      return inner_->complete(req);
    } catch (const LlmError& e) {
      if (!e.retriable() || attempt >= policy_.max_attempts) throw;
      sleeper_(schedule[attempt - 1]);
    }
  }
}

}  // namespace m2l
