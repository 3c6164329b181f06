/**
 * @file cli.cpp
 * @brief Subcommand wiring. Flags are validated before any work starts.
 */

#include "m2l_cli/cli.h"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <mutex>
#include <sstream>

#include "m2l/agents.h"
#include "m2l/align.h"
#include "m2l/assets.h"
#include "m2l/digest.h"
#include "m2l/metrics.h"
#include "m2l/midi.h"
#include "m2l/segmenter.h"
#include "m2l/utf8.h"
#include "m2l_cli/count_bench.h"

namespace m2l::cli {

using nlohmann::json;

namespace {

struct GlobalFlags {
  std::string data_dir;
  unsigned seed = 0;
};

struct GenerateFlags {
  std::string melody;
  int group = 4;
  std::string theme;
  std::string rhyme = "auto";
  int k = 3;
  int max_rounds = 2;
  int max_retries = kDefaultMaxRetries;
  std::string llm_config;
  std::string out;
  std::string trace;
  std::string dump_prompts;
  double gap = kDefaultGapThreshold;
};

struct AnalyzeFlags {
  std::string corpus;
  std::string mode = "both";
  std::string flat_policy = "skip";
  std::string segmenter = "longest-match";
  std::string seg_dict;
  std::string report;
  unsigned threads = 1;
};

struct CheckFlags {
  std::string melody;
  std::string lyrics;
  std::string format = "table";
  std::string mode = "nsm";
  std::string flat_policy = "skip";
  std::string seg_dict;
  double gap = kDefaultGapThreshold;
};

struct BenchFlags {
  std::vector<std::string> methods;
  std::vector<int> counts = {5, 10, 20};
  int trials = 10;
  std::vector<std::string> llm_configs;
  std::string report;
  unsigned parallel = 1;
  double temperature = 0.7;
  std::string dump_prompts;
};

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path);
  out << text;
}

Melody load_any_melody(const std::string& path, double gap) {
  auto ext = std::filesystem::path(path).extension().string();
  if (ext == ".mid" || ext == ".midi") return import_midi_file(path, gap);
  return load_melody_file(path);
}

std::string data_dir(const GlobalFlags& g) {
  return g.data_dir.empty() ? default_data_dir() : g.data_dir;
}

struct LoadedPhonology {
  Lexicon lexicon;
  RhymeTable rhymes;
};

LoadedPhonology load_phonology(const GlobalFlags& g) {
  auto paths = AssetPaths::in(data_dir(g));
  try {
    return {Lexicon::load(paths.lexicon, paths.words), RhymeTable::load(paths.rhymes)};
  } catch (const ParseError& e) {
    throw ConfigError(std::string("cannot load bundled phonology data: ") + e.what());
  }
}

/// Writes every distinct prompt it forwards to `<dir>/<digest>.txt`.
class PromptDumpClient : public LlmClient {
 public:
  PromptDumpClient(std::shared_ptr<LlmClient> inner, std::string dir)
      : inner_(std::move(inner)), dir_(std::move(dir)) {}

  std::string complete(const CompletionRequest& req) override {
    {
      std::lock_guard lock(mu_);
      auto name = request_digest(req).substr(3, 16) + ".txt";
      write_text((std::filesystem::path(dir_) / name).string(),
                 "=== system ===\n" + req.system + "\n=== user ===\n" + req.user + "\n");
    }
    return inner_->complete(req);
  }

 private:
  std::shared_ptr<LlmClient> inner_;
  std::string dir_;
  std::mutex mu_;
};

std::shared_ptr<LlmClient> maybe_dump(std::shared_ptr<LlmClient> client, const std::string& dir) {
  if (dir.empty()) return client;
  std::filesystem::create_directories(dir);
  return std::make_shared<PromptDumpClient>(std::move(client), dir);
}

// --- generate ---------------------------------------------------------------

int cmd_generate(const GlobalFlags& g, const GenerateFlags& f, std::ostream& out,
                 std::ostream& err) {
  if (f.llm_config.empty()) throw ConfigError("generate needs --llm-config");
  auto group = AgentGroup::preset(f.group);
  auto client_cfg = ClientConfig::load(f.llm_config);
  GenerationConfig cfg;
  cfg.k = f.k;
  cfg.max_rounds = f.max_rounds;
  cfg.max_retries = f.max_retries;
  cfg.requirements = f.theme.empty() ? "" : "Theme: " + f.theme;
  cfg.rhyme = RhymeMode::parse(f.rhyme);
  cfg.model_id = client_cfg.model_id;
  validate_config(cfg);
  auto phon = load_phonology(g);
  if (cfg.rhyme.kind == RhymeMode::Kind::Class && !phon.rhymes.find(cfg.rhyme.class_name)) {
    throw ConfigError("unknown rhyme class '" + cfg.rhyme.class_name + "'");
  }
  auto melody = load_any_melody(f.melody, f.gap);
  auto client = maybe_dump(make_client(client_cfg, g.seed), f.dump_prompts);

  auto result = generate_song(melody, group, cfg, *client, {phon.lexicon, phon.rhymes});
  auto doc = lyrics_document(melody, group, cfg, result);
  if (!f.out.empty()) {
    write_text(f.out, doc.dump(2) + "\n");
  } else {
    out << doc.dump(2) << "\n";
  }
  if (!f.trace.empty()) write_text(f.trace, result.trace.to_jsonl());

  for (size_t i = 0; i < result.lines.size(); ++i) {
    err << "phrase " << i + 1 << ": " << result.lines[i].text() << "\n";
  }
  if (!result.complete) {
    err << "generation stopped after " << result.lines.size() << " of "
        << melody.phrases.size() << " phrases: " << result.error << "\n";
    return kExitFailure;
  }
  return kExitOk;
}

// --- analyze ----------------------------------------------------------------

std::unique_ptr<WordSegmenter> make_segmenter(const GlobalFlags& g, const std::string& kind,
                                              const std::string& dict) {
  if (kind == "none") return nullptr;
  if (kind == "character") return std::make_unique<CharacterSegmenter>();
  if (kind != "longest-match") {
    throw ConfigError("unknown segmenter '" + kind + "' (longest-match, character, none)");
  }
  std::string path = dict.empty() ? AssetPaths::in(data_dir(g)).segdict : dict;
  if (!std::filesystem::exists(path)) throw ConfigError("segmenter dictionary not found: " + path);
  return std::make_unique<LongestMatchSegmenter>(LongestMatchSegmenter::load(path));
}

void print_summary(std::ostream& out, const MatchReport& r) {
  out << std::fixed << std::setprecision(4) << (r.mode == MatchMode::NSM ? "NSMR" : "SMR ")
      << "  rate " << r.rate << "  min " << r.theoretical_min << "  random "
      << r.random_expectation << "  (" << r.counts.total_chars << " chars, "
      << r.records_analyzed << " records, " << r.records_excluded << " excluded)\n";
  out.unsetf(std::ios::floatfield);
}

int cmd_analyze(const GlobalFlags& g, const AnalyzeFlags& f, std::ostream& out,
                std::ostream& err) {
  std::vector<MatchMode> modes;
  if (f.mode == "nsm" || f.mode == "both") modes.push_back(MatchMode::NSM);
  if (f.mode == "sm" || f.mode == "both") modes.push_back(MatchMode::SM);
  if (modes.empty()) throw ConfigError("--mode must be nsm, sm or both");
  auto policy = parse_flat_policy(f.flat_policy);

  std::unique_ptr<WordSegmenter> segmenter;
  if (f.mode != "nsm") {
    segmenter = make_segmenter(g, f.segmenter, f.seg_dict);
    if (!segmenter) throw ConfigError("SM mode requires a segmenter");
  }

  auto corpus = load_corpus(f.corpus);
  for (const auto& e : corpus.errors) err << f.corpus << ":" << e.line << ": " << e.message << "\n";
  if (corpus.records.empty()) {
    err << "corpus has no valid records\n";
    return kExitFailure;
  }

  std::optional<Lexicon> lexicon;
  bool need_lexicon = std::any_of(corpus.records.begin(), corpus.records.end(),
                                  [](const CorpusRecord& r) { return !r.tones; });
  if (need_lexicon) {
    auto paths = AssetPaths::in(data_dir(g));
    lexicon = Lexicon::load(paths.lexicon, paths.words);
  }

  json doc = json::object();
  json malformed = json::array();
  for (const auto& e : corpus.errors) malformed.push_back({{"line", e.line}, {"message", e.message}});
  doc["malformed"] = std::move(malformed);
  doc["corpus"] = f.corpus;
  for (auto mode : modes) {
    AnalysisOptions opt;
    opt.mode = mode;
    opt.flat_policy = policy;
    opt.segmenter = mode == MatchMode::SM ? segmenter.get() : nullptr;
    opt.lexicon = lexicon ? &*lexicon : nullptr;
    opt.threads = f.threads;
    auto report = analyze_corpus(corpus.records, opt);
    print_summary(out, report);
    doc[std::string(mode_name(mode))] = report_to_json(report);
  }
  if (!f.report.empty()) write_text(f.report, doc.dump(2) + "\n");
  return kExitOk;
}

// --- check ------------------------------------------------------------------

std::vector<std::u32string> split_lyric_lines(const std::string& text) {
  std::vector<std::u32string> lines;
  std::u32string current;
  bool any = false;
  for (char32_t c : utf8::decode(text)) {
    if (c == U'\n' || c == U'/' || c == U'|') {
      if (any) lines.push_back(current);
      current.clear();
      any = false;
      continue;
    }
    if (utf8::is_cjk_ideograph(c)) current.push_back(c);
    if (c != U' ' && c != U'\r' && c != U'\t') any = true;
  }
  if (any) lines.push_back(current);
  return lines;
}

int cmd_check(const GlobalFlags& g, const CheckFlags& f, std::ostream& out, std::ostream& err) {
  auto policy = parse_flat_policy(f.flat_policy);
  if (f.format != "table" && f.format != "structured" && f.format != "json") {
    throw ConfigError("--format must be table or structured");
  }
  if (f.mode != "nsm" && f.mode != "sm") throw ConfigError("--mode must be nsm or sm");
  std::unique_ptr<WordSegmenter> segmenter;
  if (f.mode == "sm") segmenter = make_segmenter(g, "longest-match", f.seg_dict);

  auto melody = load_any_melody(f.melody, f.gap);
  std::string text = std::filesystem::is_regular_file(f.lyrics) ? read_text(f.lyrics) : f.lyrics;
  auto lines = split_lyric_lines(text);
  if (lines.size() != melody.phrases.size()) {
    err << "lyrics have " << lines.size() << " lines but the melody has "
        << melody.phrases.size() << " phrases\n";
    return kExitFailure;
  }
  for (size_t i = 0; i < lines.size(); ++i) {
    auto need = static_cast<size_t>(phrase_syllable_count(melody.phrases[i]));
    if (lines[i].size() != need) {
      err << "phrase " << i + 1 << ": expected " << need << " characters, got "
          << lines[i].size() << "\n";
      return kExitFailure;
    }
  }

  auto paths = AssetPaths::in(data_dir(g));
  auto lexicon = Lexicon::load(paths.lexicon, paths.words);

  json doc = {{"phrases", json::array()}};
  std::map<std::string, long long> totals;
  std::ostringstream table;
  table << "phrase  idx  char  tone  pitches   expected  actual  status\n";
  for (size_t p = 0; p < lines.size(); ++p) {
    const auto& phrase = melody.phrases[p];
    auto tones = derive_tones(lines[p], lexicon);
    std::vector<size_t> starts;
    if (segmenter) starts = word_starts(segment_words(lines[p], *segmenter));
    auto verdicts = segmenter ? check_phrase(phrase, tones, std::span<const size_t>(starts), policy)
                              : check_phrase(phrase, tones, std::nullopt, policy);
    auto pitches = sung_pitches(phrase);
    json rows = json::array();
    for (const auto& v : verdicts) {
      std::string ch = utf8::encode(lines[p][v.index]);
      std::string pair = v.index == 0 ? std::to_string(pitches[0])
                                      : std::to_string(pitches[v.index - 1]) + "->" +
                                            std::to_string(pitches[v.index]);
      std::string expected = v.expected ? std::string(direction_name(*v.expected)) : "-";
      std::string actual = v.actual ? std::string(direction_name(*v.actual)) : "-";
      std::string status(status_name(v.status));
      ++totals[status];
      rows.push_back({{"index", v.index},
                      {"char", ch},
                      {"tone", tone_name(tones[v.index])},
                      {"pitches", pair},
                      {"expected", expected},
                      {"actual", actual},
                      {"status", status}});
      table << std::left << std::setw(8) << p + 1 << std::setw(5) << v.index << ch << "    "
            << std::setw(6) << tone_name(tones[v.index]) << std::setw(10) << pair
            << std::setw(10) << expected << std::setw(8) << actual << status << "\n";
    }
    doc["phrases"].push_back({{"phrase", p + 1}, {"lyric", utf8::encode(lines[p])}, {"verdicts", rows}});
  }
  json summary = json::object();
  for (const char* s : {"forced", "match", "mismatch", "skipped"}) summary[s] = totals[s];
  doc["summary"] = summary;
  doc["mode"] = f.mode;
  doc["flat_policy"] = flat_policy_name(policy);

  if (f.format == "table") {
    out << table.str();
    out << "forced " << totals["forced"] << "  match " << totals["match"] << "  mismatch "
        << totals["mismatch"] << "  skipped " << totals["skipped"] << "\n";
  } else {
    out << doc.dump(2) << "\n";
  }
  return kExitOk;
}

// --- count-bench ------------------------------------------------------------

int cmd_count_bench(const GlobalFlags& g, const BenchFlags& f, std::ostream& out,
                    std::ostream&) {
  CountBenchOptions opt;
  if (!f.methods.empty()) {
    opt.methods.clear();
    for (const auto& m : f.methods) opt.methods.push_back(parse_method(m));
  }
  opt.counts = f.counts;
  opt.trials = f.trials;
  opt.parallel = f.parallel;
  opt.temperature = f.temperature;
  validate_options(opt);
  if (f.llm_configs.empty()) throw ConfigError("count-bench needs at least one --llm-config");

  std::vector<BenchModel> models;
  for (const auto& path : f.llm_configs) {
    auto cfg = ClientConfig::load(path);
    for (const auto& m : models) {
      if (m.label == cfg.model_id) throw ConfigError("duplicate model id '" + cfg.model_id + "'");
    }
    models.push_back({cfg.model_id, maybe_dump(make_client(cfg, g.seed), f.dump_prompts)});
  }
  auto report = run_count_bench(models, opt);
  out << report.table();
  if (!f.report.empty()) write_text(f.report, report.to_json().dump(2) + "\n");
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Mandarin melody-to-lyric toolkit", "m2l"};
  app.require_subcommand(1);
  GlobalFlags g;
  app.add_option("--data-dir", g.data_dir, "Directory with lexicon.tsv, words.tsv, rhymes.tsv, segdict.txt");
  app.add_option("--seed", g.seed, "Seed for scripted backends");

  GenerateFlags gen;
  auto* generate = app.add_subcommand("generate", "Generate lyrics for a melody");
  generate->add_option("melody", gen.melody, "Melody file (.json or .mid)")->required()->check(CLI::ExistingFile);
  generate->add_option("--group", gen.group, "Agent group 1-4")->check(CLI::Range(1, 4));
  generate->add_option("--theme", gen.theme, "Theme or other requirements");
  generate->add_option("--rhyme", gen.rhyme, "auto, off or a rhyme class name");
  generate->add_option("--k", gen.k, "Candidates per round")->check(CLI::PositiveNumber);
  generate->add_option("--max-rounds", gen.max_rounds, "Judger rounds per phrase")->check(CLI::PositiveNumber);
  generate->add_option("--max-retries", gen.max_retries, "Retries per Creator request")->check(CLI::NonNegativeNumber);
  generate->add_option("--llm-config", gen.llm_config, "Client config JSON")->required()->check(CLI::ExistingFile);
  generate->add_option("--out", gen.out, "Lyrics output file (default stdout)");
  generate->add_option("--trace", gen.trace, "Trace output file (JSON lines)");
  generate->add_option("--dump-prompts", gen.dump_prompts, "Directory for every prompt sent");
  generate->add_option("--gap", gen.gap, "MIDI phrase gap threshold in beats")->check(CLI::PositiveNumber);

  AnalyzeFlags ana;
  auto* analyze = app.add_subcommand("analyze", "NSMR/SMR statistics for an aligned corpus");
  analyze->add_option("corpus", ana.corpus, "Corpus file (JSON lines)")->required()->check(CLI::ExistingFile);
  analyze->add_option("--mode", ana.mode, "nsm, sm or both")->check(CLI::IsMember({"nsm", "sm", "both"}));
  analyze->add_option("--flat-policy", ana.flat_policy, "skip, match or mismatch")
      ->check(CLI::IsMember({"skip", "match", "mismatch"}));
  analyze->add_option("--segmenter", ana.segmenter, "longest-match, character or none");
  analyze->add_option("--seg-dict", ana.seg_dict, "Segmenter dictionary (one word per line)");
  analyze->add_option("--report", ana.report, "Report output file (JSON)");
  analyze->add_option("--threads", ana.threads, "Worker threads")->check(CLI::PositiveNumber);

  CheckFlags chk;
  auto* check = app.add_subcommand("check", "Tone-melody verdicts for given lyrics");
  check->add_option("melody", chk.melody, "Melody file (.json or .mid)")->required()->check(CLI::ExistingFile);
  check->add_option("--lyrics", chk.lyrics, "Lyric text or a file; one line per phrase")->required();
  check->add_option("--format", chk.format, "table or structured");
  check->add_option("--mode", chk.mode, "nsm or sm");
  check->add_option("--flat-policy", chk.flat_policy, "skip, match or mismatch");
  check->add_option("--seg-dict", chk.seg_dict, "Segmenter dictionary for --mode sm");
  check->add_option("--gap", chk.gap, "MIDI phrase gap threshold in beats")->check(CLI::PositiveNumber);

  BenchFlags bench;
  auto* count_bench = app.add_subcommand("count-bench", "Exact character count accuracy per method and model");
  count_bench->add_option("--methods", bench.methods, "unrestricted prompting formatting formatting-example fill")
      ->delimiter(',');
  count_bench->add_option("--counts", bench.counts, "Requested character counts")->delimiter(',');
  count_bench->add_option("--trials", bench.trials, "Trials per method and count")->check(CLI::PositiveNumber);
  count_bench->add_option("--llm-config", bench.llm_configs, "Client config JSON, once per model")
      ->required()->check(CLI::ExistingFile);
  count_bench->add_option("--report", bench.report, "Report output file (JSON)");
  count_bench->add_option("--parallel", bench.parallel, "Concurrent trials")->check(CLI::PositiveNumber);
  count_bench->add_option("--temperature", bench.temperature, "Sampling temperature")->check(CLI::NonNegativeNumber);
  count_bench->add_option("--dump-prompts", bench.dump_prompts, "Directory for every prompt sent");

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  try {
    app.parse(argv_rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (*generate) return cmd_generate(g, gen, out, err);
    if (*analyze) return cmd_analyze(g, ana, out, err);
    if (*check) return cmd_check(g, chk, out, err);
    if (*count_bench) return cmd_count_bench(g, bench, out, err);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace m2l::cli
