#include "m2l/metrics.h"

#include <nlohmann/json.hpp>
#include <random>

#include <gtest/gtest.h>

#include "m2l/error.h"
#include "m2l/segmenter.h"
#include "test_support.h"

namespace m2l {
namespace {

using testing::phrase_of;

CorpusRecord record(std::initializer_list<int> pitches, std::u32string lyric,
                    std::vector<Tone> tones) {
  return {phrase_of(pitches), std::move(lyric), std::move(tones), 0};
}

CorpusRecord all_match() { return record({60, 64, 62}, U"你好吗", {Tone::T2, Tone::T1, Tone::T4}); }

TEST(AnalyzeRecord, NsmAllMatch) {
  auto r = analyze_record(all_match(), {});
  EXPECT_EQ(r.counts.total_chars, 3);
  EXPECT_EQ(r.counts.forced, 1);
  EXPECT_EQ(r.counts.matched, 2);
  EXPECT_EQ(r.counts.forced + r.counts.matched, 3);
}

TEST(AnalyzeRecord, SmForcesWordInitials) {
  LongestMatchSegmenter seg({U"你好"});
  AnalysisOptions opt;
  opt.mode = MatchMode::SM;
  opt.segmenter = &seg;
  auto r = analyze_record(all_match(), opt);
  ASSERT_EQ(r.verdicts.size(), 3u);
  EXPECT_EQ(r.verdicts[0].status, VerdictStatus::Forced);
  EXPECT_EQ(r.verdicts[2].status, VerdictStatus::Forced);
  EXPECT_EQ(r.counts.checked, 1);
}

TEST(AnalyzeRecord, SmNeedsSegmenter) {
  AnalysisOptions opt;
  opt.mode = MatchMode::SM;
  EXPECT_THROW(analyze_record(all_match(), opt), ConfigError);
}

TEST(AnalyzeRecord, SingleCharacterRateIsOne) {
  std::vector<CorpusRecord> one = {record({70}, U"天", {Tone::T1})};
  CharacterSegmenter chars;
  for (auto mode : {MatchMode::NSM, MatchMode::SM}) {
    AnalysisOptions opt;
    opt.mode = mode;
    opt.segmenter = &chars;
    auto rep = analyze_corpus(one, opt);
    EXPECT_EQ(rep.counts.forced, 1);
    EXPECT_DOUBLE_EQ(rep.rate, 1.0);
  }
}

TEST(AnalyzeRecord, TonesFromLexicon) {
  CorpusRecord r{phrase_of({60, 64, 62}), U"了解了", std::nullopt, 0};
  AnalysisOptions opt;
  EXPECT_THROW(analyze_record(r, opt), ConfigError);
  opt.lexicon = &testing::bundled_lexicon();
  auto out = analyze_record(r, opt);
  EXPECT_EQ(out.counts.skipped, 1);  // 解 -> 了 (neutral)
}

TEST(AnalyzeCorpus, TwoAllMatchRecords) {
  std::vector<CorpusRecord> corpus = {all_match(), all_match()};
  auto rep = analyze_corpus(corpus, {});
  EXPECT_DOUBLE_EQ(rep.rate, 1.0);
  EXPECT_DOUBLE_EQ(rep.theoretical_min, 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(rep.random_expectation, 2.0 / 3.0);
  EXPECT_EQ(rep.histogram[19], 2);
}

TEST(AnalyzeCorpus, AllMismatchHitsMinimum) {
  // T1 -> T1 wants descending; every step rises.
  std::vector<CorpusRecord> corpus = {
      record({60, 62, 64, 66}, U"天天天天", {Tone::T1, Tone::T1, Tone::T1, Tone::T1}),
      record({70, 65}, U"我我", {Tone::T3, Tone::T2})};
  auto rep = analyze_corpus(corpus, {});
  EXPECT_EQ(rep.counts.matched, 0);
  EXPECT_DOUBLE_EQ(rep.rate, rep.theoretical_min);
}

TEST(AnalyzeCorpus, BadRecordsBecomeDiagnostics) {
  std::vector<CorpusRecord> corpus = {all_match(), record({60, 62}, U"天", {Tone::T1})};
  auto rep = analyze_corpus(corpus, {});
  EXPECT_EQ(rep.records_analyzed, 1u);
  EXPECT_EQ(rep.records_excluded, 1u);
  ASSERT_EQ(rep.diagnostics.size(), 1u);
  EXPECT_EQ(rep.diagnostics[0].record, 1u);
  EXPECT_THROW(analyze_corpus(std::vector<CorpusRecord>{}, {}), ContractError);
}

TEST(HistogramBin, ExactEdges) {
  EXPECT_EQ(histogram_bin(0, 5), 0);
  EXPECT_EQ(histogram_bin(1, 20), 1);
  EXPECT_EQ(histogram_bin(1, 3), 6);
  EXPECT_EQ(histogram_bin(19, 20), 19);
  EXPECT_EQ(histogram_bin(1, 1), 19);
}

TEST(ParseCorpus, MalformedLinesListed) {
  std::string text =
      R"({"phrase": {"notes": [{"pitch": 60, "duration": 1}]}, "lyric": "天", "tones": ["T1"]})"
      "\n{oops\n\n"
      R"({"phrase": {"notes": [{"pitch": 60, "duration": 1}]}, "lyric": "天天"})"
      "\n";
  auto parsed = parse_corpus(text);
  ASSERT_EQ(parsed.records.size(), 1u);
  ASSERT_EQ(parsed.errors.size(), 2u);
  EXPECT_EQ(parsed.errors[0].line, 2);
  EXPECT_EQ(parsed.errors[1].line, 4);
}

std::vector<CorpusRecord> random_corpus(std::mt19937& rng, int n) {
  std::vector<CorpusRecord> out;
  for (int i = 0; i < n; ++i) {
    int len = 1 + static_cast<int>(rng() % 10);
    CorpusRecord r;
    int pitch = 60;
    for (int k = 0; k < len; ++k) {
      r.phrase.notes.push_back({pitch, 1.0});
      int step = 1 + static_cast<int>(rng() % 4);
      pitch += (rng() % 2 ? step : -step);
      pitch = std::clamp(pitch, 30, 100);
      if (pitch == r.phrase.notes.back().pitch) pitch += 1;
      r.lyric.push_back(U'天');
    }
    std::vector<Tone> tones;
    for (int k = 0; k < len; ++k) tones.push_back(static_cast<Tone>(rng() % 4));
    r.tones = tones;
    out.push_back(std::move(r));
  }
  return out;
}

TEST(MetricsProperties, RateBoundsAndFloors) {
  std::mt19937 rng(17);
  CharacterSegmenter chars;
  LongestMatchSegmenter pairs({U"天天"});
  for (int trial = 0; trial < 50; ++trial) {
    auto corpus = random_corpus(rng, 20);
    auto nsm = analyze_corpus(corpus, {});
    EXPECT_GE(nsm.rate, nsm.theoretical_min);
    EXPECT_LE(nsm.rate, 1.0);
    EXPECT_EQ(nsm.counts.forced, static_cast<long long>(corpus.size()));
    AnalysisOptions sm;
    sm.mode = MatchMode::SM;
    sm.segmenter = &pairs;
    auto smr = analyze_corpus(corpus, sm);
    EXPECT_GE(smr.counts.forced, nsm.counts.forced);
    EXPECT_GE(smr.rate, smr.theoretical_min);
    sm.segmenter = &chars;
    EXPECT_DOUBLE_EQ(analyze_corpus(corpus, sm).rate, 1.0);
  }
}

TEST(MetricsProperties, ThreadCountDoesNotChangeResult) {
  std::mt19937 rng(23);
  auto corpus = random_corpus(rng, 500);
  AnalysisOptions one, many;
  many.threads = 4;
  auto a = analyze_corpus(corpus, one);
  auto b = analyze_corpus(corpus, many);
  EXPECT_EQ(a.counts, b.counts);
  EXPECT_EQ(a.histogram, b.histogram);
}

TEST(ReportJson, CarriesSummaryFields) {
  std::vector<CorpusRecord> corpus = {all_match()};
  auto j = report_to_json(analyze_corpus(corpus, {}));
  EXPECT_EQ(j["mode"], "nsm");
  EXPECT_EQ(j["histogram"].size(), 20u);
  EXPECT_DOUBLE_EQ(j["rate"].get<double>(), 1.0);
}

}  // namespace
}  // namespace m2l
