#include "m2l/scripted.h"

#include <random>
#include <regex>

#include "m2l/agents.h"
#include "m2l/control.h"
#include "m2l/digest.h"
#include "m2l/utf8.h"

namespace m2l {
namespace {

const std::u32string& pool() {
  static const std::u32string chars =
      U"春风明月花开山水天光云雨夜星河海心梦歌声远方晚霞飞鸟长路回望清晨阳秋叶落红尘往事如烟";
  return chars;
}

std::mt19937_64 rng_for(const CompletionRequest& req, unsigned seed) {
  auto hex = sha256_hex(std::to_string(seed) + "\n" + req.system + "\n" + req.user);
  return std::mt19937_64(std::stoull(hex.substr(0, 16), nullptr, 16));
}

std::string random_chars(std::mt19937_64& rng, int n) {
  std::u32string out;
  std::uniform_int_distribution<size_t> pick(0, pool().size() - 1);
  for (int i = 0; i < n; ++i) out.push_back(pool()[pick(rng)]);
  return utf8::encode(out);
}

int grid_slots(std::string_view user) {
  std::string empty_slot = std::string(fill_grid::kOpen) + " " + std::string(fill_grid::kClose);
  int n = 0;
  for (size_t pos = user.find(empty_slot); pos != std::string_view::npos;
       pos = user.find(empty_slot, pos + empty_slot.size())) {
    ++n;
  }
  return n;
}

std::string fill_grid_answer(std::mt19937_64& rng, int slots) {
  std::string out;
  auto chars = utf8::decode(random_chars(rng, slots));
  for (int i = 0; i < slots; ++i) {
    out += std::to_string(i + 1) + ". " + std::string(fill_grid::kOpen) + utf8::encode(chars[i]) +
           std::string(fill_grid::kClose) + "\n";
  }
  return out;
}

std::optional<int> requested_count(const std::string& user) {
  static const std::regex kCount(R"((\d+) Chinese characters)");
  std::smatch m;
  if (std::regex_search(user, m, kCount)) return std::stoi(m[1].str());
  return std::nullopt;
}

std::string best_listed_candidate(const std::string& user) {
  static const std::regex kLine(R"(\[(\d+)\][^\n]*tone mismatches: (\d+))");
  int best = 0;
  int best_mismatch = -1;
  for (auto it = std::sregex_iterator(user.begin(), user.end(), kLine);
       it != std::sregex_iterator(); ++it) {
    int mism = std::stoi((*it)[2].str());
    if (best_mismatch < 0 || mism < best_mismatch) {
      best_mismatch = mism;
      best = std::stoi((*it)[1].str());
    }
  }
  return std::to_string(best);
}

std::string cooperative(const CompletionRequest& req, unsigned seed) {
  auto rng = rng_for(req, seed);
  if (int slots = grid_slots(req.user); slots > 0) return fill_grid_answer(rng, slots);
  if (req.system == persona::kChecker) return "```\n4\n```\nThe line follows on naturally.";
  if (req.system == persona::kJudger) {
    return "```\nSELECT " + best_listed_candidate(req.user) + "\n```\nFewest tone conflicts.";
  }
  if (auto n = requested_count(req.user)) {
    auto line = random_chars(rng, *n);
    return req.user.find("```") != std::string::npos ? "```\n" + line + "\n```" : line;
  }
  return req.user;
}

}  // namespace

ScriptProgram scripted_program(std::string_view name, unsigned seed) {
  if (name == "echo") {
    return [](const CompletionRequest& req) { return req.user; };
  }
  if (name == "cooperative") {
    return [seed](const CompletionRequest& req) { return cooperative(req, seed); };
  }
  if (name.starts_with("fixed:")) {
    std::string text(name.substr(6));
    return [text](const CompletionRequest&) { return text; };
  }
  if (name == "random-length") {
    return [seed](const CompletionRequest& req) {
      auto rng = rng_for(req, seed);
      int n = std::uniform_int_distribution<int>(1, 25)(rng);
      if (grid_slots(req.user) > 0) return fill_grid_answer(rng, n);
      return random_chars(rng, n);
    };
  }
  if (name == "adversarial") {
    return [seed](const CompletionRequest& req) -> std::string {
      auto rng = rng_for(req, seed);
      if (int slots = grid_slots(req.user); slots > 0) return fill_grid_answer(rng, slots + 1);
      if (req.system == persona::kChecker) return "excellent!!";
      if (req.system == persona::kJudger) {
        return rng() % 2 ? "```\nREGENERATE\n```" : "they are all lovely";
      }
      return "\xEF\xBC\x81\xEF\xBC\x81";  // ！！
    };
  }
  if (name == "stubborn-judge" || name == "garbled-judge") {
    bool stubborn = name == "stubborn-judge";
    return [seed, stubborn](const CompletionRequest& req) -> std::string {
      if (req.system == persona::kJudger) {
        return stubborn ? "```\nREGENERATE\n```" : "I cannot decide.";
      }
      return cooperative(req, seed);
    };
  }
  throw ConfigError("unknown scripted program '" + std::string(name) + "'");
}

}  // namespace m2l
