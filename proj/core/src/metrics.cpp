#include "m2l/metrics.h"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <thread>

#include "m2l/error.h"
#include "m2l/utf8.h"

namespace m2l {

using nlohmann::json;

std::string_view mode_name(MatchMode mode) { return mode == MatchMode::NSM ? "nsm" : "sm"; }

MatchCounts& MatchCounts::operator+=(const MatchCounts& o) {
  total_chars += o.total_chars;
  forced += o.forced;
  checked += o.checked;
  matched += o.matched;
  skipped += o.skipped;
  return *this;
}

void validate_record(const CorpusRecord& record) {
  auto syllables = static_cast<size_t>(phrase_syllable_count(record.phrase));
  for (char32_t cp : record.lyric) {
    if (!utf8::is_cjk_ideograph(cp)) {
      throw ContractError("lyric contains non-ideograph '" + utf8::encode(cp) + "'");
    }
  }
  if (record.lyric.size() != syllables) {
    throw ContractError("lyric has " + std::to_string(record.lyric.size()) +
                        " characters but the phrase has " + std::to_string(syllables) +
                        " sung notes");
  }
  if (record.tones && record.tones->size() != syllables) {
    throw ContractError("tones has " + std::to_string(record.tones->size()) +
                        " entries but the phrase has " + std::to_string(syllables) +
                        " sung notes");
  }
}

RecordAnalysis analyze_record(const CorpusRecord& record, const AnalysisOptions& options) {
  validate_record(record);
  std::vector<Tone> tones;
  if (record.tones) {
    tones = *record.tones;
  } else {
    if (!options.lexicon) throw ConfigError("record has no tones and no lexicon was supplied");
    tones = derive_tones(record.lyric, *options.lexicon);
  }

  RecordAnalysis out;
  if (options.mode == MatchMode::SM) {
    if (!options.segmenter) throw ConfigError("SM mode requires a word segmenter");
    auto starts = word_starts(segment_words(record.lyric, *options.segmenter));
    out.verdicts = check_phrase(record.phrase, tones, std::span<const size_t>(starts),
                                options.flat_policy);
  } else {
    out.verdicts = check_phrase(record.phrase, tones, std::nullopt, options.flat_policy);
  }
  for (const auto& v : out.verdicts) {
    ++out.counts.total_chars;
    switch (v.status) {
      case VerdictStatus::Forced: ++out.counts.forced; break;
      case VerdictStatus::Match: ++out.counts.checked; ++out.counts.matched; break;
      case VerdictStatus::Mismatch: ++out.counts.checked; break;
      case VerdictStatus::Skipped: ++out.counts.skipped; break;
    }
  }
  return out;
}

int histogram_bin(long long numerator, long long denominator) {
  if (denominator <= 0) return 0;
  long long bin = numerator * kHistogramBins / denominator;
  return static_cast<int>(std::clamp<long long>(bin, 0, kHistogramBins - 1));
}

namespace {

struct Partial {
  MatchCounts counts;
  size_t analyzed = 0;
  std::array<long long, kHistogramBins> histogram{};
  std::vector<Diagnostic> diagnostics;
};

Partial analyze_range(std::span<const CorpusRecord> records, size_t offset,
                      const AnalysisOptions& options) {
  Partial p;
  for (size_t i = 0; i < records.size(); ++i) {
    try {
      auto r = analyze_record(records[i], options);
      p.counts += r.counts;
      ++p.analyzed;
      ++p.histogram[histogram_bin(r.counts.forced + r.counts.matched, r.counts.denominator())];
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      p.diagnostics.push_back({records[i].line, offset + i, e.what()});
    }
  }
  return p;
}

}  // namespace

MatchReport analyze_corpus(std::span<const CorpusRecord> records, const AnalysisOptions& options) {
  if (records.empty()) throw ContractError("analyze_corpus: corpus is empty");
  if (options.mode == MatchMode::SM && !options.segmenter) {
    throw ConfigError("SM mode requires a word segmenter");
  }

  unsigned threads = std::max(1u, std::min<unsigned>(options.threads, records.size()));
  std::vector<Partial> partials(threads);
  size_t chunk = (records.size() + threads - 1) / threads;
  if (threads == 1) {
    partials[0] = analyze_range(records, 0, options);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> failures(threads);
    for (unsigned t = 0; t < threads; ++t) {
      size_t begin = std::min(records.size(), t * chunk);
      size_t end = std::min(records.size(), begin + chunk);
      pool.emplace_back([&, t, begin, end] {
        try {
          partials[t] = analyze_range(records.subspan(begin, end - begin), begin, options);
        } catch (...) {
          failures[t] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& f : failures) {
      if (f) std::rethrow_exception(f);
    }
  }

  MatchReport report;
  report.mode = options.mode;
  report.flat_policy = options.flat_policy;
  if (options.mode == MatchMode::SM) report.segmenter = options.segmenter->name();
  for (auto& p : partials) {
    report.counts += p.counts;
    report.records_analyzed += p.analyzed;
    for (int b = 0; b < kHistogramBins; ++b) report.histogram[b] += p.histogram[b];
    report.diagnostics.insert(report.diagnostics.end(), p.diagnostics.begin(),
                              p.diagnostics.end());
  }
  report.records_excluded = report.diagnostics.size();
  if (report.records_analyzed == 0) {
    throw ContractError("analyze_corpus: no record could be analyzed");
  }
  const auto& c = report.counts;
  double den = static_cast<double>(c.denominator());
  report.rate = den > 0 ? (c.forced + c.matched) / den : 1.0;
  report.theoretical_min = den > 0 ? c.forced / den : 1.0;
  report.random_expectation = (report.theoretical_min + 1.0) / 2.0;
  return report;
}

namespace {

CorpusRecord record_from_json(const json& j) {
  if (!j.is_object()) throw ParseError("record must be an object");
  auto phrase_it = j.find("phrase");
  if (phrase_it == j.end() || !phrase_it->is_object()) throw ParseError("missing object 'phrase'");
  auto notes_it = phrase_it->find("notes");
  if (notes_it == phrase_it->end() || !notes_it->is_array()) {
    throw ParseError("phrase: missing array 'notes'");
  }
  CorpusRecord rec;
  for (size_t k = 0; k < notes_it->size(); ++k) {
    const auto& n = (*notes_it)[k];
    std::string where = "phrase.notes[" + std::to_string(k) + "]";
    if (!n.is_object() || !n.contains("pitch") || !n.contains("duration") ||
        !n["pitch"].is_number_integer() || !n["duration"].is_number()) {
      throw ParseError(where + ": expected {pitch: integer, duration: number}");
    }
    rec.phrase.notes.push_back({n["pitch"].get<int>(), n["duration"].get<double>()});
  }
  validate_phrase(rec.phrase, "phrase");

  auto lyric_it = j.find("lyric");
  if (lyric_it == j.end() || !lyric_it->is_string()) throw ParseError("missing string 'lyric'");
  rec.lyric = utf8::decode(lyric_it->get<std::string>());

  if (auto tones_it = j.find("tones"); tones_it != j.end() && !tones_it->is_null()) {
    if (!tones_it->is_array()) throw ParseError("tones: expected an array");
    std::vector<Tone> tones;
    for (const auto& t : *tones_it) {
      if (!t.is_string()) throw ParseError("tones: expected strings like \"T1\"");
      tones.push_back(parse_tone(t.get<std::string>()));
    }
    rec.tones = std::move(tones);
  }
  try {
    validate_record(rec);
  } catch (const ContractError& e) {
    throw ParseError(e.what());
  }
  return rec;
}

}  // namespace

CorpusParseResult parse_corpus(std::string_view text) {
  CorpusParseResult out;
  std::istringstream in{std::string(text)};
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto rec = record_from_json(json::parse(line));
      rec.line = number;
      out.records.push_back(std::move(rec));
    } catch (const json::exception& e) {
      out.errors.push_back({number, 0, std::string("invalid JSON: ") + e.what()});
    } catch (const Error& e) {
      out.errors.push_back({number, 0, e.what()});
    }
  }
  return out;
}

CorpusParseResult load_corpus(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open corpus: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_corpus(buf.str());
}

json report_to_json(const MatchReport& report) {
  json diag = json::array();
  for (const auto& d : report.diagnostics) {
    diag.push_back({{"line", d.line}, {"record", d.record}, {"message", d.message}});
  }
  json histogram = json::array();
  for (int b = 0; b < kHistogramBins; ++b) {
    histogram.push_back({{"lo", b * 0.05}, {"hi", (b + 1) * 0.05}, {"count", report.histogram[b]}});
  }
  const auto& c = report.counts;
  return json{
      {"mode", mode_name(report.mode)},
      {"flat_policy", flat_policy_name(report.flat_policy)},
      {"neutral_tone", "skip"},
      {"segmenter", report.segmenter.empty() ? json(nullptr) : json(report.segmenter)},
      {"records_analyzed", report.records_analyzed},
      {"records_excluded", report.records_excluded},
      {"total_chars", c.total_chars},
      {"forced_matches", c.forced},
      {"checked_pairs", c.checked},
      {"matched_pairs", c.matched},
      {"skipped_pairs", c.skipped},
      {"rate", report.rate},
      {"theoretical_min", report.theoretical_min},
      {"random_expectation", report.random_expectation},
      {"histogram", std::move(histogram)},
      {"diagnostics", std::move(diag)},
  };
}

}  // namespace m2l
