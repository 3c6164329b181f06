#include "m2l/phonology.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "m2l/error.h"
#include "m2l/utf8.h"

namespace m2l {
namespace {

constexpr std::string_view kInitials[] = {"zh", "ch", "sh", "b", "p", "m", "f",
                                          "d",  "t",  "n",  "l", "g", "k", "h",
                                          "j",  "q",  "x",  "r", "z", "c", "s"};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> out;
  size_t start = 0;
  while (true) {
    size_t end = text.find(sep, start);
    out.push_back(text.substr(start, end == std::string_view::npos ? end : end - start));
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

/// Calls fn(line_number, line) for each non-blank, non-comment line.
template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  int number = 0;
  for (auto line : split(text, '\n')) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (trim(line).empty() || line.front() == '#') continue;
    fn(number, line);
  }
}

}  // namespace

std::string_view tone_name(Tone tone) {
  switch (tone) {
    case Tone::T1: return "T1";
    case Tone::T2: return "T2";
    case Tone::T3: return "T3";
    case Tone::T4: return "T4";
    case Tone::Neutral: return "N";
  }
  return "?";
}

Tone parse_tone(std::string_view name) {
  if (name == "T1") return Tone::T1;
  if (name == "T2") return Tone::T2;
  if (name == "T3") return Tone::T3;
  if (name == "T4") return Tone::T4;
  if (name == "N" || name == "T0" || name == "T5") return Tone::Neutral;
  throw ParseError("unknown tone '" + std::string(name) + "'");
}

const std::set<std::string>& final_inventory() {
  static const std::set<std::string> inventory = {
      "a",  "o",   "e",    "i",  "u",    "v",   "ai",  "ei",   "ao",
      "ou", "an",  "en",   "ang", "eng", "ong", "er",  "ia",   "ie",
      "iao", "iu", "ian",  "in", "iang", "ing", "iong", "ua",  "uo",
      "uai", "ui", "uan",  "un", "uang", "ueng", "ve",  "van", "vn"};
  return inventory;
}

Pronunciation parse_pinyin(std::string_view syllable) {
  std::string s;
  for (char c : syllable) s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  // "ü" in the input is accepted as v
  for (size_t pos; (pos = s.find("\xC3\xBC")) != std::string::npos;) s.replace(pos, 2, "v");

  Pronunciation p;
  p.tone = Tone::Neutral;
  if (!s.empty() && std::isdigit(static_cast<unsigned char>(s.back()))) {
    switch (s.back()) {
      case '1': p.tone = Tone::T1; break;
      case '2': p.tone = Tone::T2; break;
      case '3': p.tone = Tone::T3; break;
      case '4': p.tone = Tone::T4; break;
      case '0':
      case '5': p.tone = Tone::Neutral; break;
      default: throw ParseError("pinyin '" + std::string(syllable) + "': bad tone digit");
    }
    s.pop_back();
  }

  for (auto ini : kInitials) {
    if (s.starts_with(ini)) {
      p.initial = ini;
      break;
    }
  }
  std::string rest = s.substr(p.initial.size());
  if (p.initial.empty() && rest.starts_with('y')) {
    static const std::map<std::string, std::string> y_forms = {
        {"yi", "i"}, {"yin", "in"}, {"ying", "ing"}, {"yu", "v"},
        {"yue", "ve"}, {"yuan", "van"}, {"yun", "vn"}, {"you", "iu"}};
    auto it = y_forms.find(rest);
    rest = it != y_forms.end() ? it->second : "i" + rest.substr(1);
  } else if (p.initial.empty() && rest.starts_with('w')) {
    static const std::map<std::string, std::string> w_forms = {
        {"wu", "u"}, {"wei", "ui"}, {"wen", "un"}, {"weng", "ueng"}};
    auto it = w_forms.find(rest);
    rest = it != w_forms.end() ? it->second : "u" + rest.substr(1);
  } else if ((p.initial == "j" || p.initial == "q" || p.initial == "x") &&
             rest.starts_with('u')) {
    rest = "v" + rest.substr(1);
  }
  if (rest == "iou") rest = "iu";
  if (rest == "uei") rest = "ui";
  if (rest == "uen") rest = "un";

  if (!final_inventory().count(rest)) {
    throw ParseError("pinyin '" + std::string(syllable) + "': no recognizable final");
  }
  p.final = rest;
  return p;
}

RhymeTable RhymeTable::parse(std::string_view text) {
  RhymeTable table;
  for_each_line(text, [&](int number, std::string_view line) {
    auto cols = split(line, '\t');
    if (cols.size() != 2 || trim(cols[0]).empty()) {
      throw ParseError("rhyme table line " + std::to_string(number) +
                       ": expected class<TAB>finals");
    }
    RhymeClass cls{std::string(trim(cols[0])), {}};
    if (table.find(cls.name)) {
      throw ParseError("rhyme table line " + std::to_string(number) + ": duplicate class " + cls.name);
    }
    for (auto f : split(cols[1], ',')) {
      std::string fin(trim(f));
      if (!final_inventory().count(fin)) {
        throw ParseError("rhyme table line " + std::to_string(number) +
                         ": unknown final '" + fin + "'");
      }
      if (table.by_final_.count(fin)) {
        throw ParseError("rhyme table line " + std::to_string(number) + ": final '" + fin +
                         "' already belongs to another class");
      }
      table.by_final_[fin] = table.classes_.size();
      cls.finals.push_back(fin);
    }
    table.classes_.push_back(std::move(cls));
  });
  for (const auto& fin : final_inventory()) {
    if (!table.by_final_.count(fin)) {
      throw ParseError("rhyme table: final '" + fin + "' is not assigned to any class");
    }
  }
  return table;
}

RhymeTable RhymeTable::load(const std::string& path) { return parse(read_file(path)); }

const RhymeClass& RhymeTable::class_of_final(const std::string& final) const {
  auto it = by_final_.find(final);
  if (it == by_final_.end()) throw LookupError("no rhyme class for final '" + final + "'", final);
  return classes_[it->second];
}

const RhymeClass* RhymeTable::find(std::string_view name) const {
  for (const auto& cls : classes_) {
    if (cls.name == name) return &cls;
  }
  return nullptr;
}

Lexicon Lexicon::parse(std::string_view chars, std::string_view words) {
  Lexicon lex;
  for_each_line(chars, [&](int number, std::string_view line) {
    auto where = "lexicon line " + std::to_string(number);
    auto cols = split(line, '\t');
    if (cols.size() != 2) throw ParseError(where + ": expected char<TAB>pinyin");
    auto key = utf8::decode(trim(cols[0]));
    if (key.size() != 1 || !utf8::is_cjk_ideograph(key[0])) {
      throw ParseError(where + ": key must be a single CJK ideograph");
    }
    std::vector<Pronunciation> readings;
    for (auto syl : split(cols[1], ',')) {
      try {
        readings.push_back(parse_pinyin(trim(syl)));
      } catch (const ParseError& e) {
        throw ParseError(where + ": " + e.what());
      }
    }
    lex.entries_[key[0]] = std::move(readings);
  });
  for_each_line(words, [&](int number, std::string_view line) {
    auto where = "word file line " + std::to_string(number);
    auto cols = split(line, '\t');
    if (cols.size() != 2) throw ParseError(where + ": expected word<TAB>pinyin ...");
    auto word = utf8::decode(trim(cols[0]));
    std::vector<Pronunciation> readings;
    for (auto syl : split(trim(cols[1]), ' ')) {
      if (syl.empty()) continue;
      try {
        readings.push_back(parse_pinyin(syl));
      } catch (const ParseError& e) {
        throw ParseError(where + ": " + e.what());
      }
    }
    if (readings.size() != word.size()) {
      throw ParseError(where + ": syllable count does not match word length");
    }
    lex.max_word_length_ = std::max(lex.max_word_length_, word.size());
    lex.words_[std::move(word)] = std::move(readings);
  });
  return lex;
}

Lexicon Lexicon::load(const std::string& char_path, const std::string& word_path) {
  return parse(read_file(char_path), word_path.empty() ? std::string() : read_file(word_path));
}

const std::vector<Pronunciation>& Lexicon::readings(char32_t ch) const {
  auto it = entries_.find(ch);
  if (it == entries_.end()) {
    throw LookupError("character '" + utf8::encode(ch) + "' is not in the lexicon",
                      utf8::encode(ch));
  }
  return it->second;
}

const std::vector<Pronunciation>* Lexicon::word_readings(std::u32string_view word) const {
  auto it = words_.find(std::u32string(word));
  return it == words_.end() ? nullptr : &it->second;
}

Tone tone_of(char32_t ch, std::optional<std::u32string_view> context_word, const Lexicon& lex) {
  const auto& own = lex.readings(ch);
  if (context_word) {
    if (const auto* word = lex.word_readings(*context_word)) {
      auto pos = context_word->find(ch);
      if (pos != std::u32string_view::npos) return (*word)[pos].tone;
    }
  }
  return own.front().tone;
}

const RhymeClass& rhyme_class_of(char32_t ch, const Lexicon& lex, const RhymeTable& table) {
  return table.class_of_final(lex.readings(ch).front().final);
}

std::vector<char32_t> rhyming_candidates(const RhymeClass& cls, const Lexicon& lex,
                                         const RhymeTable& table, int limit) {
  if (limit < 1) throw DomainError("rhyming_candidates: limit must be at least 1");
  std::vector<char32_t> out;
  for (const auto& [ch, readings] : lex.entries()) {
    if (table.class_of_final(readings.front().final).name == cls.name) {
      out.push_back(ch);
      if (static_cast<int>(out.size()) == limit) break;
    }
  }
  return out;
}

std::vector<Tone> derive_tones(std::u32string_view text, const Lexicon& lex) {
  std::vector<Tone> tones;
  tones.reserve(text.size());
  size_t i = 0;
  while (i < text.size()) {
    size_t take = 1;
    const std::vector<Pronunciation>* word = nullptr;
    for (size_t len = std::min(lex.max_word_length(), text.size() - i); len >= 2; --len) {
      if ((word = lex.word_readings(text.substr(i, len)))) {
        take = len;
        break;
      }
    }
    for (size_t k = 0; k < take; ++k) {
      lex.readings(text[i + k]);  // unknown characters still fail
      tones.push_back(word ? (*word)[k].tone : lex.readings(text[i + k]).front().tone);
    }
    i += take;
  }
  return tones;
}

}  // namespace m2l
