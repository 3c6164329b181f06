/**
 * @file agents.h
 * @brief Suggester / Creator / Checker / Judger roles and the
 *        segment-by-segment lyric generator.
 *
 * Each melody phrase is one segment. Segments run strictly in order; the
 * line chosen for segment i is part of the context for segment i+1.
 */

#ifndef M2L_AGENTS_H
#define M2L_AGENTS_H

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "m2l/align.h"
#include "m2l/control.h"
#include "m2l/llm_client.h"
#include "m2l/melody.h"
#include "m2l/phonology.h"

namespace m2l {

enum class AgentRole { Suggester, Creator, Checker, Judger };

std::string_view role_name(AgentRole role);  // "suggester", ...

/// One of the four supported configurations:
///   1: Creator
///   2: Creator + Judger
///   3: Creator + Checker + Judger
///   4: Suggester + Creator + Checker + Judger
class AgentGroup {
 public:
  /// Throws ConfigError for anything outside 1..4.
  static AgentGroup preset(int number);

  int number() const { return number_; }
  bool has(AgentRole role) const { return members_.count(role) != 0; }
  const std::set<AgentRole>& members() const { return members_; }

 private:
  AgentGroup(int number, std::set<AgentRole> members)
      : number_(number), members_(std::move(members)) {}

  int number_;
  std::set<AgentRole> members_;
};

/// Rest slots hold U' '. Sung slots hold one ideograph each.
struct LyricLine {
  std::u32string slots;

  std::string text() const;        ///< UTF-8, rests as spaces
  std::u32string sung() const;     ///< rests removed
  bool operator==(const LyricLine&) const = default;
};

/// Places `sung` characters on the phrase's non-rest notes. Throws
/// ContractError when the count differs from the syllable count.
LyricLine make_line(const Phrase& phrase, std::u32string_view sung);

/// Slot count equals note count, rests align with pitch-0 notes, sung slots
/// are ideographs. Throws ContractError otherwise.
void validate_line(const LyricLine& line, const Phrase& phrase);

struct RhymeMode {
  enum class Kind { Auto, Class, Off };
  Kind kind = Kind::Auto;
  std::string class_name;

  static RhymeMode parse(std::string_view text);  ///< "auto", "off" or a class name
  std::string describe() const;
};

struct GenerationContext {
  const Melody* melody = nullptr;
  size_t segment_index = 0;
  std::vector<LyricLine> lyrics_so_far;
  std::string requirements;
  RhymeMode rhyme_mode;

  const Phrase& phrase() const { return melody->phrases.at(segment_index); }
};

/// Throws ContractError when segment_index or history length is inconsistent.
void validate_context(const GenerationContext& ctx);

struct RhymeSuggestion {
  std::optional<std::string> rhyme_class;  ///< empty: class left open
  std::vector<char32_t> candidates;
};

struct CandidateLyric {
  LyricLine line;
  int creator_round = 1;
};

struct Mismatch {
  size_t index;  ///< sung-character index of the later character
  Direction expected;
  Direction actual;
  bool operator==(const Mismatch&) const = default;
};

inline constexpr int kDefaultConsistencyScore = 3;

struct CheckerFeedback {
  int mismatch_count = 0;
  std::vector<Mismatch> mismatches;
  std::string consistency_note;
  std::optional<int> consistency_score;  ///< empty when the model call failed
};

struct JudgerVerdict {
  enum class Decision { Select, Regenerate };
  Decision decision = Decision::Select;
  size_t index = 0;  ///< 0-based, valid when decision == Select
  std::string rationale;
  bool coerced = false;
};

struct TraceEntry {
  size_t segment = 0;
  int round = 1;
  AgentRole agent = AgentRole::Creator;
  std::optional<size_t> candidate;
  int attempt = 1;
  std::string prompt_digest;    ///< "-" for rule-only invocations
  std::string response_digest;  ///< "-" when no model output exists
  nlohmann::json outcome;
};

/// Append-only log of agent invocations.
class AgentTrace {
 public:
  void append(TraceEntry entry) { entries_.push_back(std::move(entry)); }
  const std::vector<TraceEntry>& entries() const { return entries_; }

  /// One JSON object per line.
  std::string to_jsonl() const;
  std::string digest() const;
  size_t count(AgentRole role) const;
  size_t count(AgentRole role, size_t segment) const;

 private:
  std::vector<TraceEntry> entries_;
};

struct GenerationConfig {
  int k = 3;           ///< candidates per round
  int max_rounds = 2;  ///< Judger rounds per segment
  int max_retries = kDefaultMaxRetries;
  int rhyme_limit = 20;
  double temperature = 0.9;
  int max_tokens = 512;
  std::string model_id;
  std::string requirements;
  RhymeMode rhyme;
};

/// Throws ConfigError for k < 1, max_rounds < 1, max_retries < 0 or rhyme_limit < 1.
void validate_config(const GenerationConfig& config);

/// Shared read-only resources.
struct Phonology {
  const Lexicon& lexicon;
  const RhymeTable& rhymes;
};

/// Role personas. They open the system message of every request.
namespace persona {
inline constexpr std::string_view kCreator =
    "You are a Mandarin lyricist who writes singable lines for a given melody.";
inline constexpr std::string_view kChecker =
    "You are a lyric editor who reviews whether a new line continues the preceding lyrics "
    "coherently.";
inline constexpr std::string_view kJudger =
    "You are the head lyricist who picks the best candidate line for a song.";
}  // namespace persona

/// Thrown when a Creator round ends without a single valid candidate.
class CreationFailure : public Error {
 public:
  using Error::Error;
};

RhymeSuggestion suggest_rhyme(const GenerationContext& ctx, const Phonology& phon, int limit);

/// The Creator request for one candidate (exposed for prompt dumps and tests).
CompletionRequest creator_request(const GenerationContext& ctx, const RhymeSuggestion& suggestion,
                                  const GenerationConfig& config, int round, size_t candidate);

/// k independent requests, each with its own retry budget. Throws
/// CreationFailure when none of them yields a valid line.
std::vector<CandidateLyric> create_candidates(const GenerationContext& ctx,
                                              const RhymeSuggestion& suggestion,
                                              const GenerationConfig& config, int round,
                                              LlmClient& llm, AgentTrace* trace = nullptr);

/// Rule half only: the mismatch fields.
CheckerFeedback rule_check(const Phrase& phrase, const LyricLine& line, const Lexicon& lex);

CheckerFeedback check_candidate(const GenerationContext& ctx, const CandidateLyric& cand,
                                size_t candidate_index, int round, const Phonology& phon,
                                const GenerationConfig& config, LlmClient& llm,
                                AgentTrace* trace = nullptr);

/// Lexicographic minimum of (mismatch_count, -consistency_score, index).
/// A missing score counts as 0; without feedback the first candidate wins.
size_t best_candidate(const std::vector<CheckerFeedback>& feedbacks, size_t candidate_count);

/// Parses "SELECT i" or "REGENERATE" (inside a fence or bare). nullopt when
/// unparseable or i is out of range.
std::optional<JudgerVerdict> parse_verdict(std::string_view response, size_t candidate_count);

/// `feedbacks` is empty when the group has no Checker.
JudgerVerdict judge(const GenerationContext& ctx, const std::vector<CandidateLyric>& candidates,
                    const std::vector<CheckerFeedback>& feedbacks, int round,
                    const GenerationConfig& config, LlmClient& llm,
                    AgentTrace* trace = nullptr);

/// Worst-case model calls for one segment:
///   rounds * (k * (1 + max_retries) + k [Checker] + 2 [Judger])
/// where rounds is max_rounds with a Judger and 1 without.
long long segment_call_budget(const AgentGroup& group, const GenerationConfig& config);

struct GenerationResult {
  std::vector<LyricLine> lines;
  AgentTrace trace;
  bool complete = false;
  std::string error;  ///< set when generation stopped early
};

GenerationResult generate_song(const Melody& melody, const AgentGroup& group,
                               const GenerationConfig& config, LlmClient& llm,
                               const Phonology& phon);

/// Lyrics output document (schema m2l-lyrics/1).
nlohmann::json lyrics_document(const Melody& melody, const AgentGroup& group,
                               const GenerationConfig& config, const GenerationResult& result);

}  // namespace m2l

#endif  // M2L_AGENTS_H
