#include "m2l/align.h"

#include <array>
#include <string>

#include "m2l/error.h"

namespace m2l {
namespace {

constexpr auto A = Direction::Ascending;
constexpr auto D = Direction::Descending;

// Rows: previous tone T1..T4. Columns: next tone T1..T4.
constexpr std::array<std::array<Direction, 4>, 4> kRuleTable = {{
    {D, D, D, D},
    {A, D, D, A},
    {A, A, D, A},
    {A, D, D, D},
}};

int tone_column(Tone tone, const char* op) {
  if (tone == Tone::Neutral) {
    throw DomainError(std::string(op) + ": neutral tone has no alignment rule");
  }
  return static_cast<int>(tone);
}

}  // namespace

std::string_view direction_name(Direction d) {
  switch (d) {
    case Direction::Ascending: return "asc";
    case Direction::Descending: return "desc";
    case Direction::Flat: return "flat";
  }
  return "?";
}

std::string_view status_name(VerdictStatus s) {
  switch (s) {
    case VerdictStatus::Match: return "match";
    case VerdictStatus::Mismatch: return "mismatch";
    case VerdictStatus::Forced: return "forced";
    case VerdictStatus::Skipped: return "skipped";
  }
  return "?";
}

std::string_view flat_policy_name(FlatPolicy p) {
  switch (p) {
    case FlatPolicy::Skip: return "skip";
    case FlatPolicy::CountAsMatch: return "match";
    case FlatPolicy::CountAsMismatch: return "mismatch";
  }
  return "?";
}

FlatPolicy parse_flat_policy(std::string_view name) {
  if (name == "skip") return FlatPolicy::Skip;
  if (name == "match" || name == "count-as-match") return FlatPolicy::CountAsMatch;
  if (name == "mismatch" || name == "count-as-mismatch") return FlatPolicy::CountAsMismatch;
  throw ConfigError("unknown flat policy '" + std::string(name) +
                    "' (expected skip, match or mismatch)");
}

Direction expected_direction(Tone prev, Tone next) {
  return kRuleTable[tone_column(prev, "expected_direction")]
                   [tone_column(next, "expected_direction")];
}

int tone_rank(Tone tone) {
  switch (tone) {
    case Tone::T1: return 4;
    case Tone::T4: return 3;
    case Tone::T2: return 2;
    case Tone::T3: return 1;
    case Tone::Neutral: break;
  }
  throw DomainError("tone_rank: neutral tone has no rank");
}

Direction expected_direction_by_rank(Tone prev, Tone next) {
  return tone_rank(prev) < tone_rank(next) ? Direction::Ascending : Direction::Descending;
}

Direction melodic_direction(int prev_pitch, int next_pitch) {
  if (prev_pitch == kRestPitch || next_pitch == kRestPitch) {
    throw DomainError("melodic_direction: rests have no pitch");
  }
  if (next_pitch > prev_pitch) return Direction::Ascending;
  if (next_pitch < prev_pitch) return Direction::Descending;
  return Direction::Flat;
}

VerdictStatus check_pair(Tone prev_tone, Tone next_tone, int prev_pitch, int next_pitch,
                         FlatPolicy flat_policy) {
  Direction actual = melodic_direction(prev_pitch, next_pitch);
  if (prev_tone == Tone::Neutral || next_tone == Tone::Neutral) return VerdictStatus::Skipped;
  if (actual == Direction::Flat) {
    switch (flat_policy) {
      case FlatPolicy::Skip: return VerdictStatus::Skipped;
      case FlatPolicy::CountAsMatch: return VerdictStatus::Match;
      case FlatPolicy::CountAsMismatch: return VerdictStatus::Mismatch;
    }
  }
  return expected_direction(prev_tone, next_tone) == actual ? VerdictStatus::Match
                                                            : VerdictStatus::Mismatch;
}

std::vector<AlignmentVerdict> check_phrase(const Phrase& phrase, std::span<const Tone> tones,
                                           std::optional<std::span<const size_t>> word_starts,
                                           FlatPolicy flat_policy) {
  auto pitches = sung_pitches(phrase);
  if (tones.size() != pitches.size()) {
    throw ContractError("check_phrase: phrase has " + std::to_string(pitches.size()) +
                        " sung notes but got " + std::to_string(tones.size()) + " tones");
  }
  std::vector<bool> forced(pitches.size(), false);
  if (!forced.empty()) forced[0] = true;
  if (word_starts) {
    for (size_t start : *word_starts) {
      if (start >= pitches.size()) {
        throw ContractError("check_phrase: word start " + std::to_string(start) +
                            " beyond " + std::to_string(pitches.size()) + " characters");
      }
      forced[start] = true;
    }
  }

  std::vector<AlignmentVerdict> out;
  out.reserve(pitches.size());
  for (size_t i = 0; i < pitches.size(); ++i) {
    AlignmentVerdict v;
    v.index = i;
    if (forced[i]) {
      v.status = VerdictStatus::Forced;
      out.push_back(v);
      continue;
    }
    v.actual = melodic_direction(pitches[i - 1], pitches[i]);
    if (tones[i - 1] != Tone::Neutral && tones[i] != Tone::Neutral) {
      v.expected = expected_direction(tones[i - 1], tones[i]);
    }
    v.status = check_pair(tones[i - 1], tones[i], pitches[i - 1], pitches[i], flat_policy);
    out.push_back(v);
  }
  return out;
}

}  // namespace m2l
