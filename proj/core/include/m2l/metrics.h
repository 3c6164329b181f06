/**
 * @file metrics.h
 * @brief Corpus match rates (NSMR / SMR), their theoretical minima and the
 *        random-condition expectation.
 *
 * NSM checks every adjacent sung pair inside a phrase; SM segments the lyric
 * into words and checks only pairs inside a word. Phrase-initial (NSM) or
 * word-initial (SM) characters count as forced matches. Skipped pairs (flat
 * melody under the skip policy, or a neutral tone) leave the denominator.
 */

#ifndef M2L_METRICS_H
#define M2L_METRICS_H

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "m2l/align.h"
#include "m2l/melody.h"
#include "m2l/phonology.h"
#include "m2l/segmenter.h"

namespace m2l {

enum class MatchMode { NSM, SM };

std::string_view mode_name(MatchMode mode);  // "nsm" / "sm"

struct CorpusRecord {
  Phrase phrase;
  std::u32string lyric;                    ///< sung characters only
  std::optional<std::vector<Tone>> tones;  ///< derived from the lexicon when absent
  int line = 0;                            ///< 1-based source line, 0 if synthetic
};

/// Throws ContractError unless lyric and tones match the syllable count and
/// the lyric is made of CJK ideographs only.
void validate_record(const CorpusRecord& record);

struct MatchCounts {
  long long total_chars = 0;
  long long forced = 0;
  long long checked = 0;  ///< pairs scored Match or Mismatch
  long long matched = 0;
  long long skipped = 0;

  long long denominator() const { return total_chars - skipped; }
  MatchCounts& operator+=(const MatchCounts& o);
  bool operator==(const MatchCounts&) const = default;
};

struct AnalysisOptions {
  MatchMode mode = MatchMode::NSM;
  FlatPolicy flat_policy = FlatPolicy::Skip;
  const WordSegmenter* segmenter = nullptr;  ///< required for SM
  const Lexicon* lexicon = nullptr;          ///< required for records without tones
  unsigned threads = 1;
};

struct RecordAnalysis {
  std::vector<AlignmentVerdict> verdicts;
  MatchCounts counts;
};

/// Throws ConfigError (SM without segmenter, missing lexicon) or LookupError
/// (a character the lexicon cannot resolve).
RecordAnalysis analyze_record(const CorpusRecord& record, const AnalysisOptions& options);

inline constexpr int kHistogramBins = 20;  ///< width 0.05, last bin closed

struct Diagnostic {
  int line = 0;
  size_t record = 0;  ///< 0-based position in the analyzed list
  std::string message;
};

struct MatchReport {
  MatchMode mode = MatchMode::NSM;
  FlatPolicy flat_policy = FlatPolicy::Skip;
  std::string segmenter;  ///< empty in NSM mode
  size_t records_analyzed = 0;
  size_t records_excluded = 0;
  MatchCounts counts;
  double rate = 0.0;
  double theoretical_min = 0.0;
  double random_expectation = 0.0;
  std::array<long long, kHistogramBins> histogram{};
  std::vector<Diagnostic> diagnostics;
};

/// Histogram bin for a per-record rate num/den, computed exactly.
int histogram_bin(long long numerator, long long denominator);

/// Throws ContractError when no record can be analyzed.
MatchReport analyze_corpus(std::span<const CorpusRecord> records, const AnalysisOptions& options);

struct CorpusParseResult {
  std::vector<CorpusRecord> records;
  std::vector<Diagnostic> errors;  ///< malformed lines
};

/// Line-delimited JSON: {"phrase":{"notes":[...]}, "lyric":"...", "tones":[...]}.
CorpusParseResult parse_corpus(std::string_view text);
CorpusParseResult load_corpus(const std::string& path);

nlohmann::json report_to_json(const MatchReport& report);

}  // namespace m2l

#endif  // M2L_METRICS_H
