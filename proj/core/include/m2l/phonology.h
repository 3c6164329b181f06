/**
 * @file phonology.h
 * @brief Mandarin tones, pinyin finals, the thirteen rhyme classes and a
 *        character/word pronunciation lexicon.
 */

#ifndef M2L_PHONOLOGY_H
#define M2L_PHONOLOGY_H

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace m2l {

enum class Tone { T1, T2, T3, T4, Neutral };

/// "T1".."T4", "N".
std::string_view tone_name(Tone tone);

/// Accepts "T1".."T4", "N", and the aliases "T0"/"T5" for the neutral tone.
Tone parse_tone(std::string_view name);

struct Pronunciation {
  std::string initial;  ///< may be empty
  std::string final;    ///< normalized: ü written as v, iou/uei/uen as iu/ui/un
  Tone tone = Tone::Neutral;

  bool operator==(const Pronunciation&) const = default;
};

/// Parses numbered pinyin such as "guang1", "lv4", "yue4", "le5" or "le".
/// Throws ParseError when the syllable has no final from the inventory.
Pronunciation parse_pinyin(std::string_view syllable);

/// The standard pinyin final inventory after normalization.
const std::set<std::string>& final_inventory();

struct RhymeClass {
  std::string name;
  std::vector<std::string> finals;

  bool operator==(const RhymeClass&) const = default;
};

/// Partition of the final inventory into named rhyme classes.
class RhymeTable {
 public:
  /// Format: `class-name<TAB>final[,final...]` per line. Throws ParseError
  /// unless the classes partition final_inventory() exactly.
  static RhymeTable parse(std::string_view text);
  static RhymeTable load(const std::string& path);

  const std::vector<RhymeClass>& classes() const { return classes_; }
  const RhymeClass& class_of_final(const std::string& final) const;
  /// nullptr when no class carries that name.
  const RhymeClass* find(std::string_view name) const;

 private:
  std::vector<RhymeClass> classes_;
  std::map<std::string, size_t> by_final_;
};

class Lexicon {
 public:
  /// `chars`: `char<TAB>pinyin[,alternate...]`, most common reading first.
  /// `words`: `word<TAB>pinyin pinyin ...` (may be empty).
  static Lexicon parse(std::string_view chars, std::string_view words = {});
  static Lexicon load(const std::string& char_path, const std::string& word_path = "");

  bool contains(char32_t ch) const { return entries_.count(ch) != 0; }
  /// Throws LookupError for unknown characters.
  const std::vector<Pronunciation>& readings(char32_t ch) const;
  const std::vector<Pronunciation>* word_readings(std::u32string_view word) const;

  /// Ordered by codepoint.
  const std::map<char32_t, std::vector<Pronunciation>>& entries() const { return entries_; }
  size_t max_word_length() const { return max_word_length_; }

 private:
  std::map<char32_t, std::vector<Pronunciation>> entries_;
  std::unordered_map<std::u32string, std::vector<Pronunciation>> words_;
  size_t max_word_length_ = 1;
};

/// Word-level reading wins when `context_word` has an entry containing `ch`;
/// otherwise the most common character reading.
Tone tone_of(char32_t ch, std::optional<std::u32string_view> context_word,
             const Lexicon& lex);

const RhymeClass& rhyme_class_of(char32_t ch, const Lexicon& lex, const RhymeTable& table);

/// Up to `limit` characters whose primary reading falls in `cls`, by codepoint.
std::vector<char32_t> rhyming_candidates(const RhymeClass& cls, const Lexicon& lex,
                                         const RhymeTable& table, int limit);

/// Tones for a run of sung characters. Multi-character lexicon words are
/// matched greedily (longest first) so that word readings override character
/// defaults; everything else falls back to tone_of without context.
std::vector<Tone> derive_tones(std::u32string_view text, const Lexicon& lex);

}  // namespace m2l

#endif  // M2L_PHONOLOGY_H
