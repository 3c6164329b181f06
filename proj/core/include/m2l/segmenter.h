/**
 * @file segmenter.h
 * @brief Pluggable Chinese word segmentation.
 */

#ifndef M2L_SEGMENTER_H
#define M2L_SEGMENTER_H

#include <memory>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace m2l {

class WordSegmenter {
 public:
  virtual ~WordSegmenter() = default;

  /// Reported in analyzer output.
  virtual std::string name() const = 0;

  /// Must be lossless: the returned words concatenate to `text`, none empty.
  virtual std::vector<std::u32string> segment(std::u32string_view text) const = 0;
};

/// Forward maximum matching against a word list. Characters not covered by
/// any dictionary word become single-character words.
class LongestMatchSegmenter : public WordSegmenter {
 public:
  explicit LongestMatchSegmenter(const std::vector<std::u32string>& words);

  /// One word per line, UTF-8. Fields after the first (frequency, tag) and
  /// lines starting with # are ignored.
  static LongestMatchSegmenter parse(std::string_view text);
  static LongestMatchSegmenter load(const std::string& path);

  std::string name() const override { return "longest-match"; }
  std::vector<std::u32string> segment(std::u32string_view text) const override;

  size_t size() const { return words_.size(); }

 private:
  std::unordered_set<std::u32string> words_;
  size_t max_len_ = 1;
};

/// Every character is its own word.
class CharacterSegmenter : public WordSegmenter {
 public:
  std::string name() const override { return "character"; }
  std::vector<std::u32string> segment(std::u32string_view text) const override;
};

std::vector<std::u32string> segment_words(std::u32string_view text,
                                          const WordSegmenter& segmenter);

/// Start index of every word, given a segmentation of the same text.
std::vector<size_t> word_starts(const std::vector<std::u32string>& words);

}  // namespace m2l

#endif  // M2L_SEGMENTER_H
