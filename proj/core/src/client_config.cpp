#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "m2l/llm_client.h"
#include "m2l/scripted.h"

namespace m2l {

using nlohmann::json;

namespace {

/// The model id shared by every exchange in a fixture file, or "" when the
/// file is missing, empty or mixes models.
std::string recorded_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::string line, found;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.contains("request")) return "";
    auto id = j["request"].value("model_id", "");
    if (!found.empty() && id != found) return "";
    found = id;
  }
  return found;
}

RetryPolicy retry_from_json(const json& j) {
  RetryPolicy p;
  if (!j.is_object()) return p;
  p.max_attempts = j.value("max_attempts", p.max_attempts);
  p.initial_backoff = std::chrono::milliseconds(j.value("backoff_ms", 500));
  p.multiplier = j.value("multiplier", p.multiplier);
  p.max_backoff = std::chrono::milliseconds(j.value("max_backoff_ms", 8000));
  if (p.max_attempts < 1) throw ConfigError("retry.max_attempts must be >= 1");
  if (p.initial_backoff.count() < 0 || p.multiplier < 1.0) {
    throw ConfigError("retry backoff must be non-negative with multiplier >= 1");
  }
  return p;
}

void check_config(json& j, const std::filesystem::path& base, std::string& model_id) {
  if (!j.is_object()) throw ConfigError("client config must be an object");
  for (const char* secret : {"api_key", "apiKey", "key", "token"}) {
    if (j.contains(secret)) {
      throw ConfigError(std::string("client config must not carry credentials ('") + secret +
                        "'); set M2L_API_KEY instead");
    }
  }
  std::string backend = j.value("backend", "");
  if (backend == "http") {
    if (!j.contains("endpoint") || !j["endpoint"].is_string()) {
      throw ConfigError("http backend needs an 'endpoint'");
    }
    if (!j.contains("model_id") || !j["model_id"].is_string()) {
      throw ConfigError("http backend needs a 'model_id'");
    }
    retry_from_json(j.value("retry", json::object()));
    model_id = j["model_id"].get<std::string>();
  } else if (backend == "replay") {
    if (!j.contains("fixture") || !j["fixture"].is_string()) {
      throw ConfigError("replay backend needs a 'fixture' path");
    }
    std::filesystem::path fixture = j["fixture"].get<std::string>();
    if (fixture.is_relative()) j["fixture"] = (base / fixture).lexically_normal().string();
    std::string mode = j.value("mode", "strict");
    if (mode == "strict") {
      if (j.contains("live")) throw ConfigError("strict replay must not configure a live backend");
    } else if (mode == "record") {
      if (!j.contains("live")) throw ConfigError("record mode needs a 'live' backend");
      std::string live_model;
      check_config(j["live"], base, live_model);
      if (!j.contains("model_id")) model_id = live_model;
    } else {
      throw ConfigError("replay mode must be strict or record");
    }
    if (j.contains("model_id")) model_id = j["model_id"].get<std::string>();
    if (model_id.empty() && mode == "strict") model_id = recorded_model(j["fixture"].get<std::string>());
    if (model_id.empty()) model_id = "replay";
  } else if (backend == "scripted") {
    std::string program = j.value("program", "");
    scripted_program(program);  // validates the name
    model_id = j.value("model_id", "scripted:" + program);
  } else {
    throw ConfigError("client backend must be http, replay or scripted");
  }
}

std::shared_ptr<LlmClient> build(const json& j, unsigned seed) {
  std::string backend = j.at("backend").get<std::string>();
  if (backend == "http") {
    HttpConfig cfg;
    cfg.endpoint = j["endpoint"].get<std::string>();
    cfg.model_id = j["model_id"].get<std::string>();
    cfg.timeout = std::chrono::milliseconds(j.value("timeout_ms", 60000));
    if (const char* key = std::getenv("M2L_API_KEY")) cfg.api_key = key;
    return std::make_shared<RetryingClient>(std::make_shared<HttpClient>(cfg),
                                            retry_from_json(j.value("retry", json::object())));
  }
  if (backend == "replay") {
    auto path = j["fixture"].get<std::string>();
    if (j.value("mode", "strict") == "strict") {
      return std::make_shared<ReplayClient>(path, ReplayMode::Strict);
    }
    return std::make_shared<ReplayClient>(path, ReplayMode::Record, build(j["live"], seed));
  }
  return std::make_shared<ScriptedClient>(scripted_program(j["program"].get<std::string>(), seed));
}

}  // namespace

ClientConfig ClientConfig::parse(std::string_view text, const std::string& base_dir) {
  ClientConfig cfg;
  try {
    cfg.raw = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("client config is not valid JSON: ") + e.what());
  }
  check_config(cfg.raw, base_dir, cfg.model_id);
  return cfg;
}

ClientConfig ClientConfig::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open client config: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), std::filesystem::path(path).parent_path().string());
}

std::shared_ptr<LlmClient> make_client(const ClientConfig& config, unsigned seed) {
  return build(config.raw, seed);
}

}  // namespace m2l
