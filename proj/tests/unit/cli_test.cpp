#include "m2l_cli/cli.h"

#include <filesystem>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "m2l_cli/count_bench.h"
#include "m2l/scripted.h"
#include "test_support.h"

namespace m2l::cli {
namespace {

using nlohmann::json;
using m2l::testing::TempDir;
using m2l::testing::read_file;
using m2l::testing::write_file;

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

const std::string kMelody = R"({"schema": "m2l-melody/1", "title": "three", "phrases": [
  {"notes": [{"pitch": 60, "duration": 1}, {"pitch": 64, "duration": 1}, {"pitch": 62, "duration": 1}]},
  {"notes": [{"pitch": 67, "duration": 1}, {"pitch": 0, "duration": 0.5}, {"pitch": 65, "duration": 1}]},
  {"notes": [{"pitch": 60, "duration": 1}, {"pitch": 62, "duration": 1}, {"pitch": 64, "duration": 2}]}]})";

const std::string kCorpusDir = std::string(M2L_TEST_DATA_DIR) + "/corpus";

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    melody = dir.file("melody.json");
    write_file(melody, kMelody);
  }
  TempDir dir;
  std::string melody;
};

TEST_F(CliTest, GenerateWithReplayFixtures) {
  write_file(dir.file("record.json"),
             R"({"backend": "replay", "fixture": "fx.jsonl", "mode": "record",
                 "live": {"backend": "scripted", "program": "cooperative"}})");
  write_file(dir.file("strict.json"), R"({"backend": "replay", "fixture": "fx.jsonl"})");
  auto recorded = run({"generate", melody, "--group", "1", "--llm-config", dir.file("record.json"),
                       "--out", dir.file("rec.json")});
  ASSERT_EQ(recorded.code, kExitOk) << recorded.err;

  auto replayed = run({"generate", melody, "--group", "1", "--llm-config", dir.file("strict.json"),
                       "--out", dir.file("lyrics.json"), "--trace", dir.file("trace.jsonl")});
  ASSERT_EQ(replayed.code, kExitOk) << replayed.err;
  auto doc = json::parse(read_file(dir.file("lyrics.json")));
  EXPECT_EQ(doc["lines"].size(), 3u);
  EXPECT_TRUE(doc["complete"].get<bool>());
  EXPECT_EQ(doc["lines"], json::parse(read_file(dir.file("rec.json")))["lines"]);
  EXPECT_FALSE(read_file(dir.file("trace.jsonl")).empty());
}

TEST_F(CliTest, GenerateUsageErrors) {
  write_file(dir.file("s.json"), R"({"backend": "scripted", "program": "cooperative"})");
  EXPECT_EQ(run({"generate", melody, "--group", "5", "--llm-config", dir.file("s.json")}).code,
            kExitUsage);
  EXPECT_EQ(run({"generate", melody, "--llm-config", dir.file("missing.json")}).code, kExitUsage);
  EXPECT_EQ(run({"generate", melody, "--rhyme", "nowhere", "--llm-config", dir.file("s.json")}).code,
            kExitUsage);
  write_file(dir.file("strict.json"), R"({"backend": "replay", "fixture": "none.jsonl"})");
  EXPECT_EQ(run({"generate", melody, "--llm-config", dir.file("strict.json")}).code, kExitUsage);
  EXPECT_EQ(run({}).code, kExitUsage);
  EXPECT_EQ(run({"--help"}).code, kExitOk);
}

TEST_F(CliTest, GeneratePartialOutputExitsOne) {
  write_file(dir.file("bad.json"), R"({"backend": "scripted", "program": "fixed:no grid here"})");
  auto r = run({"generate", melody, "--llm-config", dir.file("bad.json"), "--out",
                dir.file("lyrics.json"), "--trace", dir.file("trace.jsonl")});
  EXPECT_EQ(r.code, kExitFailure);
  auto doc = json::parse(read_file(dir.file("lyrics.json")));
  EXPECT_FALSE(doc["complete"].get<bool>());
  EXPECT_FALSE(doc["error"].is_null());
  EXPECT_FALSE(read_file(dir.file("trace.jsonl")).empty());
}

TEST_F(CliTest, GenerateDumpsPrompts) {
  write_file(dir.file("s.json"), R"({"backend": "scripted", "program": "cooperative"})");
  auto r = run({"generate", melody, "--group", "1", "--k", "1", "--llm-config", dir.file("s.json"),
                "--out", dir.file("o.json"), "--dump-prompts", dir.file("prompts")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  size_t files = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir.file("prompts"))) {
    ++files;
    EXPECT_NE(read_file(e.path().string()).find("=== user ==="), std::string::npos);
  }
  EXPECT_EQ(files, 3u);
}

TEST(CliAnalyze, SyntheticCorpusMatchesAnswerSheet) {
  TempDir dir;
  auto answers = json::parse(read_file(kCorpusDir + "/answers.json"));
  for (const std::string policy : {"skip", "match", "mismatch"}) {
    auto r = run({"analyze", kCorpusDir + "/synthetic.jsonl", "--mode", "both", "--seg-dict",
                  kCorpusDir + "/segdict.txt", "--flat-policy", policy, "--report",
                  dir.file("r.json")});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    auto report = json::parse(read_file(dir.file("r.json")));
    for (const std::string mode : {"nsm", "sm"}) {
      const auto& want = answers["modes"][mode][policy];
      const auto& got = report[mode];
      EXPECT_EQ(got["total_chars"], want["total"]) << mode << "/" << policy;
      EXPECT_EQ(got["forced_matches"], want["forced"]) << mode << "/" << policy;
      EXPECT_EQ(got["checked_pairs"], want["checked"]) << mode << "/" << policy;
      EXPECT_EQ(got["matched_pairs"], want["matched"]) << mode << "/" << policy;
      EXPECT_EQ(got["skipped_pairs"], want["skipped"]) << mode << "/" << policy;
      double rate = want["rate"][0].get<double>() / want["rate"][1].get<double>();
      EXPECT_EQ(got["rate"].get<double>(), rate) << mode << "/" << policy;
    }
  }
}

TEST(CliAnalyze, SmWithoutDictionaryIsConfigError) {
  auto r = run({"analyze", kCorpusDir + "/synthetic.jsonl", "--mode", "sm", "--seg-dict",
                "/nonexistent/dict.txt"});
  EXPECT_EQ(r.code, kExitUsage);
  r = run({"analyze", kCorpusDir + "/synthetic.jsonl", "--mode", "sm", "--segmenter", "none"});
  EXPECT_EQ(r.code, kExitUsage);
}

TEST(CliAnalyze, SingleCharacterRecordsAndMalformedLines) {
  TempDir dir;
  write_file(dir.file("c.jsonl"),
             R"({"phrase": {"notes": [{"pitch": 60, "duration": 1}]}, "lyric": "天", "tones": ["T1"]})"
             "\n"
             R"({"phrase": {"notes": [{"pitch": 62, "duration": 1}]}, "lyric": "雨"})"
             "\nnot json\n");
  auto r = run({"analyze", dir.file("c.jsonl"), "--segmenter", "character", "--report",
                dir.file("r.json")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.err.find(":3:"), std::string::npos) << r.err;
  auto report = json::parse(read_file(dir.file("r.json")));
  EXPECT_EQ(report["nsm"]["rate"].get<double>(), 1.0);
  EXPECT_EQ(report["sm"]["rate"].get<double>(), 1.0);
  EXPECT_EQ(report["malformed"].size(), 1u);
}

TEST(CliAnalyze, EmptyCorpusFails) {
  TempDir dir;
  write_file(dir.file("c.jsonl"), "\n");
  EXPECT_EQ(run({"analyze", dir.file("c.jsonl"), "--mode", "nsm"}).code, kExitFailure);
}

TEST_F(CliTest, CheckTable) {
  write_file(melody, R"({"schema": "m2l-melody/1", "title": "t", "phrases": [{"notes": [
    {"pitch": 60, "duration": 1}, {"pitch": 64, "duration": 1}, {"pitch": 62, "duration": 1}]}]})");
  auto r = run({"check", melody, "--lyrics", "国天爱", "--format", "structured"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  auto doc = json::parse(r.out);
  const auto& v = doc["phrases"][0]["verdicts"];
  ASSERT_EQ(v.size(), 3u);
  EXPECT_EQ(v[0]["status"], "forced");
  EXPECT_EQ(v[1]["status"], "match");
  EXPECT_EQ(v[2]["status"], "match");
  EXPECT_EQ(v[1]["pitches"], "60->64");

  auto table = run({"check", melody, "--lyrics", "国天爱"});
  EXPECT_NE(table.out.find("forced 1  match 2  mismatch 0  skipped 0"), std::string::npos)
      << table.out;

  auto neutral = run({"check", melody, "--lyrics", "国的爱", "--format", "structured"});
  ASSERT_EQ(neutral.code, kExitOk);
  EXPECT_EQ(json::parse(neutral.out)["phrases"][0]["verdicts"][1]["status"], "skipped");
}

TEST_F(CliTest, CheckLengthMismatchNamesPhrase) {
  auto r = run({"check", melody, "--lyrics", "国天/春风/明月光"});
  EXPECT_EQ(r.code, kExitFailure);
  EXPECT_NE(r.err.find("phrase 1"), std::string::npos) << r.err;
  auto file = dir.file("lyrics.txt");
  write_file(file, "国天爱\n春风\n明月光\n");
  EXPECT_EQ(run({"check", melody, "--lyrics", file}).code, kExitOk);
}

int brute_force_count(const std::string& s) {
  int n = 0;
  for (size_t i = 0; i < s.size();) {
    unsigned char b = s[i];
    int len = b < 0x80 ? 1 : b < 0xE0 ? 2 : b < 0xF0 ? 3 : 4;
    char32_t cp = len == 1 ? b : b & (0xFF >> (len + 1));
    for (int k = 1; k < len; ++k) cp = (cp << 6) | (s[i + k] & 0x3F);
    i += len;
    n += (cp >= 0x4E00 && cp <= 0x9FFF) || (cp >= 0x3400 && cp <= 0x4DBF) ||
         (cp >= 0x20000 && cp <= 0x2A6DF) || (cp >= 0x2A700 && cp <= 0x2EE5F) ||
         (cp >= 0x30000 && cp <= 0x323AF);
  }
  return n;
}

double recount(const CountBenchReport& report, PromptMethod method, const std::string& model) {
  int hits = 0, total = 0;
  for (const auto& rec : report.records) {
    if (rec.method != method || rec.model != model) continue;
    ++total;
    hits += rec.error.empty() && brute_force_count(rec.outcome.text) == rec.count;
  }
  return total ? static_cast<double>(hits) / total : 0.0;
}

TEST(CountBench, GridHonoringAndCountIgnoringClients) {
  std::vector<BenchModel> models = {
      {"coop", std::make_shared<ScriptedClient>(scripted_program("cooperative", 1))},
      {"seven", std::make_shared<ScriptedClient>(scripted_program("fixed:七个字的回答啊"))},
      {"noisy", std::make_shared<ScriptedClient>(scripted_program("random-length", 2))},
      {"down", std::make_shared<SequenceClient>(std::vector<std::string>{})}};
  CountBenchOptions opt;
  opt.trials = 4;
  opt.parallel = 3;
  auto report = run_count_bench(models, opt);
  EXPECT_EQ(report.records.size(), all_methods().size() * 4 * 3 * 4);
  EXPECT_DOUBLE_EQ(report.accuracy(PromptMethod::FillInBlank, "coop"), 1.0);
  for (auto m : all_methods()) {
    EXPECT_DOUBLE_EQ(report.accuracy(m, "seven", 5), 0.0);
    EXPECT_DOUBLE_EQ(report.accuracy(m, "down"), 0.0);
    for (const auto& model : report.models) {
      EXPECT_DOUBLE_EQ(report.accuracy(m, model), recount(report, m, model)) << model;
    }
  }
  auto j = report.to_json();
  EXPECT_EQ(j["trial_log"].size(), report.records.size());
}

TEST(CountBench, DefaultsAndCli) {
  CountBenchOptions opt;
  EXPECT_EQ(opt.counts, (std::vector<int>{5, 10, 20}));
  EXPECT_EQ(opt.trials, 10);
  EXPECT_EQ(opt.methods.size(), 5u);
  TempDir dir;
  write_file(dir.file("a.json"), R"({"backend": "scripted", "program": "cooperative", "model_id": "a"})");
  write_file(dir.file("b.json"), R"({"backend": "scripted", "program": "fixed:七个字的回答啊", "model_id": "b"})");
  auto r = run({"count-bench", "--llm-config", dir.file("a.json"), "--llm-config", dir.file("b.json"),
                "--methods", "fill,prompting", "--counts", "5", "--trials", "2", "--report",
                dir.file("r.json")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("fill"), std::string::npos);
  auto j = json::parse(read_file(dir.file("r.json")));
  EXPECT_EQ(j["trial_log"].size(), 8u);
  EXPECT_EQ(run({"count-bench", "--llm-config", dir.file("a.json"), "--methods", "telepathy"}).code,
            kExitUsage);
  EXPECT_EQ(run({"count-bench", "--llm-config", dir.file("a.json"), "--counts", "0"}).code,
            kExitUsage);
}

}  // namespace
}  // namespace m2l::cli
