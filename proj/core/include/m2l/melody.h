/**
 * @file melody.h
 * @brief Melody data model: notes grouped into phrases, one sung syllable
 *        per non-rest note.
 */

#ifndef M2L_MELODY_H
#define M2L_MELODY_H

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace m2l {

/// Pitch 0 is a rest. Otherwise a MIDI note number.
inline constexpr int kRestPitch = 0;
inline constexpr int kMaxPitch = 127;

/// Schema tag carried by every melody document.
inline constexpr std::string_view kMelodySchema = "m2l-melody/1";

struct Note {
  int pitch = kRestPitch;
  double duration = 1.0;  ///< beats

  bool is_rest() const { return pitch == kRestPitch; }
  bool operator==(const Note&) const = default;
};

struct Phrase {
  std::vector<Note> notes;

  bool operator==(const Phrase&) const = default;
};

struct Melody {
  std::string title;
  std::optional<double> tempo_bpm;
  std::vector<Phrase> phrases;

  bool operator==(const Melody&) const = default;
};

/// Throws ParseError naming `where` (e.g. "phrases[1]") on any violation.
void validate_note(const Note& note, const std::string& where);
void validate_phrase(const Phrase& phrase, const std::string& where);
void validate_melody(const Melody& melody);

/// Number of sung characters the phrase carries (non-rest notes).
int phrase_syllable_count(const Phrase& phrase);
int phrase_rest_count(const Phrase& phrase);

/// Pitches of the sung notes in order, rests dropped.
std::vector<int> sung_pitches(const Phrase& phrase);

/// Parses a melody document (JSON text, schema m2l-melody/1).
Melody parse_melody(std::string_view document);
Melody load_melody_file(const std::string& path);

/// Inverse of parse_melody.
std::string serialize_melody(const Melody& melody);

}  // namespace m2l

#endif  // M2L_MELODY_H
