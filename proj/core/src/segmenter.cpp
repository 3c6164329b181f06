#include "m2l/segmenter.h"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "m2l/error.h"
#include "m2l/utf8.h"

namespace m2l {

LongestMatchSegmenter::LongestMatchSegmenter(const std::vector<std::u32string>& words) {
  for (const auto& w : words) {
    if (w.empty()) continue;
    max_len_ = std::max(max_len_, w.size());
    words_.insert(w);
  }
}

LongestMatchSegmenter LongestMatchSegmenter::parse(std::string_view text) {
  std::vector<std::u32string> words;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream fields(line);
    std::string word;
    if (!(fields >> word) || word.front() == '#') continue;
    words.push_back(utf8::decode(word));
  }
  return LongestMatchSegmenter(words);
}

LongestMatchSegmenter LongestMatchSegmenter::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open segmenter dictionary: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

std::vector<std::u32string> LongestMatchSegmenter::segment(std::u32string_view text) const {
  std::vector<std::u32string> out;
  size_t i = 0;
  while (i < text.size()) {
    size_t take = 1;
    for (size_t len = std::min(max_len_, text.size() - i); len >= 2; --len) {
      if (words_.count(std::u32string(text.substr(i, len)))) {
        take = len;
        break;
      }
    }
    out.emplace_back(text.substr(i, take));
    i += take;
  }
  return out;
}

std::vector<std::u32string> CharacterSegmenter::segment(std::u32string_view text) const {
  std::vector<std::u32string> out;
  for (char32_t cp : text) out.emplace_back(1, cp);
  return out;
}

std::vector<std::u32string> segment_words(std::u32string_view text,
                                          const WordSegmenter& segmenter) {
  return segmenter.segment(text);
}

std::vector<size_t> word_starts(const std::vector<std::u32string>& words) {
  std::vector<size_t> starts;
  size_t pos = 0;
  for (const auto& w : words) {
    starts.push_back(pos);
    pos += w.size();
  }
  return starts;
}

}  // namespace m2l
