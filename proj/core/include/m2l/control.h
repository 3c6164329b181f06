/**
 * @file control.h
 * @brief Forward control (prompt construction) and backward control
 *        (block extraction, recombination, length validation, retries).
 */

#ifndef M2L_CONTROL_H
#define M2L_CONTROL_H

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "m2l/error.h"

namespace m2l {

enum class PromptMethod { Unrestricted, Prompting, Formatting, FormattingAndExample, FillInBlank };

/// "unrestricted", "prompting", "formatting", "formatting-example", "fill".
std::string_view method_name(PromptMethod method);
PromptMethod parse_method(std::string_view name);
const std::vector<PromptMethod>& all_methods();

struct PromptSection {
  std::string label;
  std::string body;
};

struct PromptExample {
  std::string input;
  std::string output;
};

struct PromptSpec {
  std::string persona;
  std::string objective;
  std::vector<PromptSection> sections;
  std::vector<PromptExample> examples;
  PromptMethod method = PromptMethod::Unrestricted;
  int blank_count = 0;  ///< FillInBlank only
};

/// Fill-in grid wording. Kept together so prompt experiments can vary it.
namespace fill_grid {
inline constexpr std::string_view kOpen = "\xE3\x80\x90";   // 【
inline constexpr std::string_view kClose = "\xE3\x80\x91";  // 】
inline constexpr std::string_view kHeader =
    "Fill every numbered slot below with exactly one Chinese character. "
    "Keep the numbering and the brackets, write nothing else:";
}  // namespace fill_grid

inline constexpr std::string_view kSectionFence = "###";
inline constexpr int kDefaultMaxRetries = 3;

/// Throws ContractError for FillInBlank without blanks or
/// FormattingAndExample without examples.
void validate_prompt_spec(const PromptSpec& spec);

/// Persona, objective, fenced sections, examples (FormattingAndExample and
/// FillInBlank only), the payload and finally, for FillInBlank, a numbered
/// grid of exactly blank_count slots. Pure.
std::string render_prompt(const PromptSpec& spec, std::string_view task_payload);

/// The numbered blank grid alone, e.g. "1. 【 】\n2. 【 】\n".
std::string render_blank_grid(int n);

struct ExtractionRule {
  std::string open = "```";
  std::string close = "```";
  size_t min_blocks = 1;
  size_t max_blocks = 1;

  static ExtractionRule fenced(size_t expected = 1);
  static ExtractionRule blanks(size_t n);
};

/// Delimiters must be non-empty and min <= max. Identical open and close
/// delimiters act as alternating fences.
void validate_rule(const ExtractionRule& rule);

class ExtractError : public Error {
 public:
  enum class Kind { NoBlocks, Unbalanced, CountOutOfRange };

  ExtractError(Kind kind, size_t found, const std::string& what)
      : Error(what), kind_(kind), found_(found) {}
  Kind kind() const { return kind_; }
  size_t found() const { return found_; }

 private:
  Kind kind_;
  size_t found_;
};

/// Every non-overlapping delimited span in order, whitespace-trimmed. With
/// backtick fences an info-string line (```text) is dropped.
std::vector<std::string> extract_blocks(std::string_view response, const ExtractionRule& rule);

/// CJK unified ideographs only; punctuation, spaces, Latin and digits do not count.
int count_cjk(std::string_view text);

struct CountViolation {
  int required = 0;
  int actual = 0;

  std::string describe() const;
  bool operator==(const CountViolation&) const = default;
};

/// nullopt when count_cjk(text) == required_count.
std::optional<CountViolation> validate_lyric(std::string_view text, int required_count);

struct FillResult {
  std::string lyric;  ///< concatenation of the blocks
  std::optional<CountViolation> violation;

  bool ok() const { return !violation.has_value(); }
};

FillResult fill_blanks(const std::vector<std::string>& blocks, int n);

/// Result of checking one model response.
struct Acceptance {
  std::optional<std::string> value;
  std::string violation;  ///< set when value is empty
};

struct Attempt {
  std::string user;      ///< user prompt actually sent
  std::string response;  ///< empty when the backend failed
  std::optional<std::string> violation;
};

struct ControlledResult {
  std::optional<std::string> value;
  std::vector<Attempt> attempts;
};

/// Corrective note appended to the prompt after a rejected attempt.
std::string corrective_feedback(std::string_view base_user, std::string_view violation);

/// Calls `call` with `base_user`, then up to `max_retries` more times with
/// the latest violation appended, until `accept` yields a value. Backend
/// exceptions derived from m2l::Error count as failed attempts.
ControlledResult run_with_retries(const std::string& base_user, int max_retries,
                                  const std::function<std::string(const std::string&)>& call,
                                  const std::function<Acceptance(const std::string&)>& accept);

}  // namespace m2l

#endif  // M2L_CONTROL_H
