#include "m2l/control.h"

#include <cctype>

#include "m2l/utf8.h"

namespace m2l {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string strip_info_string(std::string_view block) {
  size_t nl = block.find('\n');
  if (nl == std::string_view::npos || nl == 0) return std::string(trim(block));
  auto first = block.substr(0, nl);
  bool tag = true;
  for (char c : first) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_')) tag = false;
  }
  return std::string(trim(tag ? block.substr(nl + 1) : block));
}

}  // namespace

std::string_view method_name(PromptMethod method) {
  switch (method) {
    case PromptMethod::Unrestricted: return "unrestricted";
    case PromptMethod::Prompting: return "prompting";
    case PromptMethod::Formatting: return "formatting";
    case PromptMethod::FormattingAndExample: return "formatting-example";
    case PromptMethod::FillInBlank: return "fill";
  }
  return "?";
}

PromptMethod parse_method(std::string_view name) {
  for (auto m : all_methods()) {
    if (method_name(m) == name) return m;
  }
  throw ConfigError("unknown method '" + std::string(name) +
                    "' (expected unrestricted, prompting, formatting, formatting-example, fill)");
}

const std::vector<PromptMethod>& all_methods() {
  static const std::vector<PromptMethod> methods = {
      PromptMethod::Unrestricted, PromptMethod::Prompting, PromptMethod::Formatting,
      PromptMethod::FormattingAndExample, PromptMethod::FillInBlank};
  return methods;
}

void validate_prompt_spec(const PromptSpec& spec) {
  if (spec.method == PromptMethod::FillInBlank && spec.blank_count < 1) {
    throw ContractError("fill-in-blank prompt needs at least one blank");
  }
  if (spec.method == PromptMethod::FormattingAndExample && spec.examples.empty()) {
    throw ContractError("formatting-and-example prompt needs at least one example");
  }
}

std::string render_blank_grid(int n) {
  std::string out;
  for (int i = 1; i <= n; ++i) {
    out += std::to_string(i) + ". " + std::string(fill_grid::kOpen) + " " +
           std::string(fill_grid::kClose) + "\n";
  }
  return out;
}

std::string render_prompt(const PromptSpec& spec, std::string_view task_payload) {
  validate_prompt_spec(spec);
  std::string out;
  if (!spec.persona.empty()) out += spec.persona + "\n\n";
  if (!spec.objective.empty()) out += spec.objective + "\n\n";
  for (const auto& s : spec.sections) {
    out += std::string(kSectionFence) + " " + s.label + "\n" + s.body + "\n" +
           std::string(kSectionFence) + "\n\n";
  }
  bool with_examples = spec.method == PromptMethod::FormattingAndExample ||
                       spec.method == PromptMethod::FillInBlank;
  if (with_examples && !spec.examples.empty()) {
    out += "Examples:\n";
    for (const auto& e : spec.examples) {
      out += "Input:\n" + e.input + "\nOutput:\n" + e.output + "\n\n";
    }
  }
  out += task_payload;
  if (spec.method == PromptMethod::FillInBlank) {
    out += "\n\n" + std::string(fill_grid::kHeader) + "\n" + render_blank_grid(spec.blank_count);
  }
  return out;
}

ExtractionRule ExtractionRule::fenced(size_t expected) {
  return ExtractionRule{"```", "```", expected, expected};
}

ExtractionRule ExtractionRule::blanks(size_t n) {
  return ExtractionRule{std::string(fill_grid::kOpen), std::string(fill_grid::kClose), n, n};
}

void validate_rule(const ExtractionRule& rule) {
  if (rule.open.empty() || rule.close.empty()) {
    throw ContractError("extraction rule delimiters must be non-empty");
  }
  if (rule.min_blocks > rule.max_blocks) {
    throw ContractError("extraction rule: min_blocks exceeds max_blocks");
  }
}

std::vector<std::string> extract_blocks(std::string_view response, const ExtractionRule& rule) {
  validate_rule(rule);
  const bool fence = rule.open == rule.close;
  std::vector<std::string> blocks;
  size_t pos = 0;
  while (true) {
    size_t open = response.find(rule.open, pos);
    if (!fence) {
      size_t stray = response.find(rule.close, pos);
      if (stray != std::string_view::npos && stray < open) {
        throw ExtractError(ExtractError::Kind::Unbalanced, blocks.size(),
                           "closing delimiter without an opening one at byte " +
                               std::to_string(stray));
      }
    }
    if (open == std::string_view::npos) break;
    size_t body = open + rule.open.size();
    size_t close = response.find(rule.close, body);
    if (close == std::string_view::npos) {
      throw ExtractError(ExtractError::Kind::Unbalanced, blocks.size(),
                         "opening delimiter at byte " + std::to_string(open) + " is never closed");
    }
    if (!fence) {
      size_t nested = response.find(rule.open, body);
      if (nested < close) {
        throw ExtractError(ExtractError::Kind::Unbalanced, blocks.size(),
                           "nested opening delimiter at byte " + std::to_string(nested));
      }
    }
    auto inner = response.substr(body, close - body);
    blocks.push_back(fence && rule.open == "```" ? strip_info_string(inner)
                                                 : std::string(trim(inner)));
    pos = close + rule.close.size();
  }
  if (blocks.empty()) {
    throw ExtractError(ExtractError::Kind::NoBlocks, 0, "no delimited block in response");
  }
  if (blocks.size() < rule.min_blocks || blocks.size() > rule.max_blocks) {
    std::string expected = rule.min_blocks == rule.max_blocks
                               ? std::to_string(rule.min_blocks)
                               : std::to_string(rule.min_blocks) + ".." +
                                     std::to_string(rule.max_blocks);
    throw ExtractError(ExtractError::Kind::CountOutOfRange, blocks.size(),
                       "expected " + expected + " blocks, found " + std::to_string(blocks.size()));
  }
  return blocks;
}

int count_cjk(std::string_view text) {
  int n = 0;
  for (char32_t cp : utf8::decode(text)) n += utf8::is_cjk_ideograph(cp) ? 1 : 0;
  return n;
}

std::string CountViolation::describe() const {
  return "required " + std::to_string(required) + " Chinese characters, got " +
         std::to_string(actual);
}

std::optional<CountViolation> validate_lyric(std::string_view text, int required_count) {
  if (required_count < 1) throw DomainError("validate_lyric: required count must be >= 1");
  int actual = count_cjk(text);
  if (actual == required_count) return std::nullopt;
  return CountViolation{required_count, actual};
}

FillResult fill_blanks(const std::vector<std::string>& blocks, int n) {
  if (n < 1) throw DomainError("fill_blanks: n must be >= 1");
  FillResult out;
  for (const auto& b : blocks) out.lyric += b;
  int actual = count_cjk(out.lyric);
  if (actual != n) out.violation = CountViolation{n, actual};
  return out;
}

std::string corrective_feedback(std::string_view base_user, std::string_view violation) {
  return std::string(base_user) +
         "\n\nYour previous answer was rejected: " + std::string(violation) +
         ". Answer again and follow the required format exactly.";
}

ControlledResult run_with_retries(const std::string& base_user, int max_retries,
                                  const std::function<std::string(const std::string&)>& call,
                                  const std::function<Acceptance(const std::string&)>& accept) {
  ControlledResult result;
  std::string user = base_user;
  for (int attempt = 0; attempt <= std::max(0, max_retries); ++attempt) {
    Attempt a{user, "", std::nullopt};
    try {
      a.response = call(user);
      auto acc = accept(a.response);
      if (acc.value) {
        result.attempts.push_back(std::move(a));
        result.value = std::move(acc.value);
        return result;
      }
      a.violation = acc.violation;
    } catch (const Error& e) {
      a.violation = std::string("backend error: ") + e.what();
    }
    user = corrective_feedback(base_user, *a.violation);
    result.attempts.push_back(std::move(a));
  }
  return result;
}

}  // namespace m2l
