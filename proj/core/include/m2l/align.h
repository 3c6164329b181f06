/**
 * @file align.h
 * @brief Tone-melody alignment rules for Mandarin lyrics.
 *
 * Between two consecutive sung characters the melody should move in the
 * direction implied by their tones. The rule table is stored literally and
 * is equivalent to comparing tone ranks T1 > T4 > T2 > T3: the melody should
 * ascend exactly when the next tone ranks strictly higher, otherwise descend.
 */

#ifndef M2L_ALIGN_H
#define M2L_ALIGN_H

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "m2l/melody.h"
#include "m2l/phonology.h"

namespace m2l {

enum class Direction { Ascending, Descending, Flat };

enum class VerdictStatus { Match, Mismatch, Forced, Skipped };

/// How equal-pitch neighbours are scored. The rule table has no flat cell.
enum class FlatPolicy { Skip, CountAsMatch, CountAsMismatch };

std::string_view direction_name(Direction d);        // "asc", "desc", "flat"
std::string_view status_name(VerdictStatus s);       // "forced", "match", ...
std::string_view flat_policy_name(FlatPolicy p);     // "skip", "match", "mismatch"
FlatPolicy parse_flat_policy(std::string_view name);

struct AlignmentVerdict {
  size_t index = 0;  ///< sung-character index of the later character
  std::optional<Direction> expected;
  std::optional<Direction> actual;
  VerdictStatus status = VerdictStatus::Forced;

  bool operator==(const AlignmentVerdict&) const = default;
};

/// Rule-table lookup, row = previous tone, column = next tone. Never Flat.
/// Throws DomainError for the neutral tone.
Direction expected_direction(Tone prev, Tone next);

/// T1 -> 4, T4 -> 3, T2 -> 2, T3 -> 1. Throws DomainError for neutral.
int tone_rank(Tone tone);

/// Same answer as expected_direction, computed from tone_rank instead of the
/// table.
Direction expected_direction_by_rank(Tone prev, Tone next);

/// Throws DomainError when either pitch is a rest.
Direction melodic_direction(int prev_pitch, int next_pitch);

VerdictStatus check_pair(Tone prev_tone, Tone next_tone, int prev_pitch, int next_pitch,
                         FlatPolicy flat_policy = FlatPolicy::Skip);

/// One verdict per sung character. Character 0 is always Forced. With
/// `word_starts`, every listed index is Forced too and only pairs inside a
/// word are checked. Rests between sung notes are stepped over.
///
/// Throws ContractError when tones.size() differs from the syllable count or
/// a word start is out of range.
std::vector<AlignmentVerdict> check_phrase(const Phrase& phrase, std::span<const Tone> tones,
                                           std::optional<std::span<const size_t>> word_starts = {},
                                           FlatPolicy flat_policy = FlatPolicy::Skip);

}  // namespace m2l

#endif  // M2L_ALIGN_H
