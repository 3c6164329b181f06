/**
 * @file agents.cpp
 * @brief Agent roles and the segment-by-segment generation loop.
 */

#include "m2l/agents.h"

#include <algorithm>
#include <cctype>
#include <regex>
#include <tuple>

#include "m2l/digest.h"
#include "m2l/utf8.h"

namespace m2l {

using nlohmann::json;

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string note_name(int pitch) {
  static constexpr const char* kNames[] = {"C", "C#", "D", "D#", "E", "F",
                                           "F#", "G", "G#", "A", "A#", "B"};
  return std::string(kNames[pitch % 12]) + std::to_string(pitch / 12 - 1);
}

std::string format_beats(double beats) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", beats);
  return std::string(buf) + (beats == 1.0 ? " beat" : " beats");
}

std::string history_text(const std::vector<LyricLine>& lines) {
  if (lines.empty()) return "(none, this is the first line)";
  std::string out;
  for (size_t i = 0; i < lines.size(); ++i) {
    out += std::to_string(i + 1) + ". " + utf8::encode(lines[i].sung()) + "\n";
  }
  out.pop_back();
  return out;
}

std::string prompt_digest(const CompletionRequest& req) {
  return short_digest(req.system + "\n" + req.user);
}

CompletionRequest make_request(const PromptSpec& spec, std::string_view payload,
                               const GenerationConfig& config, double temperature) {
  PromptSpec body = spec;
  body.persona.clear();
  CompletionRequest req;
  req.system = spec.persona;
  req.user = render_prompt(body, payload);
  req.temperature = temperature;
  req.max_tokens = config.max_tokens;
  req.model_id = config.model_id;
  return req;
}

/// Tones for a sung line; characters missing from the lexicon are neutral,
/// which makes their pairs skipped.
std::vector<Tone> lenient_tones(std::u32string_view sung, const Lexicon& lex) {
  std::vector<Tone> tones;
  size_t i = 0;
  while (i < sung.size()) {
    if (!lex.contains(sung[i])) {
      tones.push_back(Tone::Neutral);
      ++i;
      continue;
    }
    size_t j = i;
    while (j < sung.size() && lex.contains(sung[j])) ++j;
    auto run = derive_tones(sung.substr(i, j - i), lex);
    tones.insert(tones.end(), run.begin(), run.end());
    i = j;
  }
  return tones;
}

std::string direction_word(Direction d) {
  switch (d) {
    case Direction::Ascending: return "up";
    case Direction::Descending: return "down";
    case Direction::Flat: return "level";
  }
  return "?";
}

}  // namespace

std::string_view role_name(AgentRole role) {
  switch (role) {
    case AgentRole::Suggester: return "suggester";
    case AgentRole::Creator: return "creator";
    case AgentRole::Checker: return "checker";
    case AgentRole::Judger: return "judger";
  }
  return "?";
}

AgentGroup AgentGroup::preset(int number) {
  using R = AgentRole;
  switch (number) {
    case 1: return AgentGroup(1, {R::Creator});
    case 2: return AgentGroup(2, {R::Creator, R::Judger});
    case 3: return AgentGroup(3, {R::Creator, R::Checker, R::Judger});
    case 4: return AgentGroup(4, {R::Suggester, R::Creator, R::Checker, R::Judger});
    default: break;
  }
  throw ConfigError("agent group must be 1, 2, 3 or 4 (got " + std::to_string(number) + ")");
}

std::string LyricLine::text() const { return utf8::encode(slots); }

std::u32string LyricLine::sung() const {
  std::u32string out;
  for (char32_t c : slots) {
    if (c != U' ') out.push_back(c);
  }
  return out;
}

LyricLine make_line(const Phrase& phrase, std::u32string_view sung) {
  auto expected = static_cast<size_t>(phrase_syllable_count(phrase));
  if (sung.size() != expected) {
    throw ContractError("line has " + std::to_string(sung.size()) +
                        " characters, phrase needs " + std::to_string(expected));
  }
  LyricLine line;
  size_t next = 0;
  for (const auto& note : phrase.notes) line.slots.push_back(note.is_rest() ? U' ' : sung[next++]);
  validate_line(line, phrase);
  return line;
}

void validate_line(const LyricLine& line, const Phrase& phrase) {
  if (line.slots.size() != phrase.notes.size()) {
    throw ContractError("line has " + std::to_string(line.slots.size()) + " slots for " +
                        std::to_string(phrase.notes.size()) + " notes");
  }
  for (size_t i = 0; i < line.slots.size(); ++i) {
    bool rest = phrase.notes[i].is_rest();
    if (rest && line.slots[i] != U' ') {
      throw ContractError("slot " + std::to_string(i) + " sits on a rest but holds a character");
    }
    if (!rest && !utf8::is_cjk_ideograph(line.slots[i])) {
      throw ContractError("slot " + std::to_string(i) + " is sung but holds no ideograph");
    }
  }
}

RhymeMode RhymeMode::parse(std::string_view text) {
  if (text == "auto") return {Kind::Auto, ""};
  if (text == "off") return {Kind::Off, ""};
  if (text.empty()) throw ConfigError("rhyme mode must be auto, off or a class name");
  return {Kind::Class, std::string(text)};
}

std::string RhymeMode::describe() const {
  switch (kind) {
    case Kind::Auto: return "auto";
    case Kind::Off: return "off";
    case Kind::Class: return class_name;
  }
  return "?";
}

void validate_context(const GenerationContext& ctx) {
  if (!ctx.melody) throw ContractError("generation context has no melody");
  if (ctx.segment_index >= ctx.melody->phrases.size()) {
    throw ContractError("segment index beyond the phrase count");
  }
  if (ctx.lyrics_so_far.size() != ctx.segment_index) {
    throw ContractError("lyrics_so_far must hold exactly segment_index lines");
  }
}

void validate_config(const GenerationConfig& config) {
  if (config.k < 1) throw ConfigError("k must be >= 1");
  if (config.max_rounds < 1) throw ConfigError("max_rounds must be >= 1");
  if (config.max_retries < 0) throw ConfigError("max_retries must be >= 0");
  if (config.rhyme_limit < 1) throw ConfigError("rhyme limit must be >= 1");
  if (!(config.temperature >= 0.0)) throw ConfigError("temperature must be >= 0");
}

// --- Trace ------------------------------------------------------------------

std::string AgentTrace::to_jsonl() const {
  std::string out;
  for (const auto& e : entries_) {
    json j = {{"segment", e.segment},
              {"round", e.round},
              {"agent", role_name(e.agent)},
              {"candidate", e.candidate ? json(*e.candidate) : json(nullptr)},
              {"attempt", e.attempt},
              {"prompt", e.prompt_digest},
              {"response", e.response_digest},
              {"outcome", e.outcome}};
    out += j.dump() + "\n";
  }
  return out;
}

std::string AgentTrace::digest() const { return sha256_hex(to_jsonl()); }

size_t AgentTrace::count(AgentRole role) const {
  return std::count_if(entries_.begin(), entries_.end(),
                       [&](const TraceEntry& e) { return e.agent == role; });
}

size_t AgentTrace::count(AgentRole role, size_t segment) const {
  return std::count_if(entries_.begin(), entries_.end(), [&](const TraceEntry& e) {
    return e.agent == role && e.segment == segment;
  });
}

// --- Suggester --------------------------------------------------------------

RhymeSuggestion suggest_rhyme(const GenerationContext& ctx, const Phonology& phon, int limit) {
  validate_context(ctx);
  RhymeSuggestion out;
  const RhymeClass* cls = nullptr;
  switch (ctx.rhyme_mode.kind) {
    case RhymeMode::Kind::Off:
      throw ContractError("suggest_rhyme called with rhyme mode off");
    case RhymeMode::Kind::Class:
      cls = phon.rhymes.find(ctx.rhyme_mode.class_name);
      if (!cls) {
        throw LookupError("unknown rhyme class '" + ctx.rhyme_mode.class_name + "'",
                          ctx.rhyme_mode.class_name);
      }
      break;
    case RhymeMode::Kind::Auto: {
      if (ctx.lyrics_so_far.empty()) return out;
      auto sung = ctx.lyrics_so_far.back().sung();
      if (sung.empty() || !phon.lexicon.contains(sung.back())) return out;
      cls = &rhyme_class_of(sung.back(), phon.lexicon, phon.rhymes);
      break;
    }
  }
  out.rhyme_class = cls->name;
  out.candidates = rhyming_candidates(*cls, phon.lexicon, phon.rhymes, limit);
  return out;
}

// --- Creator ----------------------------------------------------------------

CompletionRequest creator_request(const GenerationContext& ctx, const RhymeSuggestion& suggestion,
                                  const GenerationConfig& config, int round, size_t candidate) {
  validate_context(ctx);
  const Phrase& phrase = ctx.phrase();
  const int n = phrase_syllable_count(phrase);

  std::string melody;
  std::vector<int> pitches;
  std::vector<size_t> rests_after;  // rest follows this many sung characters
  for (size_t i = 0; i < phrase.notes.size(); ++i) {
    const auto& note = phrase.notes[i];
    melody += std::to_string(i + 1) + ". ";
    if (note.is_rest()) {
      melody += "rest, " + format_beats(note.duration) + "\n";
      rests_after.push_back(pitches.size());
    } else {
      melody += note_name(note.pitch) + " (" + std::to_string(note.pitch) + "), " +
                format_beats(note.duration) + "\n";
      pitches.push_back(note.pitch);
    }
  }
  melody += "Contour between sung notes:";
  if (pitches.size() < 2) melody += " (single note)";
  for (size_t i = 1; i < pitches.size(); ++i) {
    melody += " " + direction_word(melodic_direction(pitches[i - 1], pitches[i]));
  }
  melody += "\nSung characters: " + std::to_string(n);
  if (!rests_after.empty()) {
    melody += "\nRests after character:";
    for (size_t r : rests_after) melody += " " + std::to_string(r);
  }

  PromptSpec spec;
  spec.persona = std::string(persona::kCreator);
  spec.objective =
      "Write line " + std::to_string(ctx.segment_index + 1) + " of " +
      std::to_string(ctx.melody->phrases.size()) +
      " of a Mandarin song. It must have exactly " + std::to_string(n) +
      " Chinese characters, one per sung note. Where the melody goes up, prefer a next "
      "character whose tone sits higher; where it goes down, one whose tone sits lower.";
  spec.sections.push_back({"Melody", melody});
  spec.sections.push_back({"Preceding lyrics", history_text(ctx.lyrics_so_far)});
  if (!ctx.requirements.empty()) spec.sections.push_back({"Requirements", ctx.requirements});
  if (suggestion.rhyme_class) {
    std::string body = "End the line with a character from rhyme class " +
                       *suggestion.rhyme_class + ".";
    if (!suggestion.candidates.empty()) {
      body += " Suggested characters: ";
      for (char32_t c : suggestion.candidates) body += utf8::encode(c);
    }
    spec.sections.push_back({"Rhyme", body});
  }
  spec.examples.push_back({"3 slots, theme: spring",
                           "1. \xE3\x80\x90\xE6\x98\xA5\xE3\x80\x91\n"  // 1. 【春】
                           "2. \xE3\x80\x90\xE9\xA3\x8E\xE3\x80\x91\n"  // 2. 【风】
                           "3. \xE3\x80\x90\xE6\x9D\xA5\xE3\x80\x91"});  // 3. 【来】
  spec.method = PromptMethod::FillInBlank;
  spec.blank_count = n;

  std::string payload = "Write option " + std::to_string(candidate + 1) + " of " +
                        std::to_string(config.k) + " (round " + std::to_string(round) + ").";
  return make_request(spec, payload, config, config.temperature);
}

std::vector<CandidateLyric> create_candidates(const GenerationContext& ctx,
                                              const RhymeSuggestion& suggestion,
                                              const GenerationConfig& config, int round,
                                              LlmClient& llm, AgentTrace* trace) {
  if (config.k < 1) throw ContractError("create_candidates: k must be >= 1");
  const Phrase& phrase = ctx.phrase();
  const int n = phrase_syllable_count(phrase);
  std::vector<CandidateLyric> out;

  for (size_t c = 0; c < static_cast<size_t>(config.k); ++c) {
    CompletionRequest base = creator_request(ctx, suggestion, config, round, c);
    auto call = [&](const std::string& user) {
      CompletionRequest req = base;
      req.user = user;
      return llm.complete(req);
    };
    auto accept = [&](const std::string& response) -> Acceptance {
      try {
        auto blocks = extract_blocks(response, ExtractionRule::blanks(n));
        auto filled = fill_blanks(blocks, n);
        if (!filled.ok()) return {std::nullopt, filled.violation->describe()};
        return {utf8::encode(utf8::cjk_only(utf8::decode(filled.lyric))), ""};
      } catch (const ExtractError& e) {
        return {std::nullopt, e.what()};
      }
    };
    auto result = run_with_retries(base.user, config.max_retries, call, accept);

    for (size_t a = 0; a < result.attempts.size(); ++a) {
      const auto& att = result.attempts[a];
      if (!trace) break;
      CompletionRequest sent = base;
      sent.user = att.user;
      bool last_ok = result.value && a + 1 == result.attempts.size();
      json outcome = {{"valid", last_ok}};
      if (att.violation) outcome["violation"] = *att.violation;
      if (last_ok) outcome["lyric"] = *result.value;
      trace->append({ctx.segment_index, round, AgentRole::Creator, c, static_cast<int>(a + 1),
                     prompt_digest(sent),
                     att.response.empty() ? "-" : short_digest(att.response), outcome});
    }
    if (result.value) {
      out.push_back({make_line(phrase, utf8::decode(*result.value)), round});
    }
  }
  if (out.empty()) {
    throw CreationFailure("segment " + std::to_string(ctx.segment_index + 1) +
                          ": no valid candidate after " +
                          std::to_string(config.k * (config.max_retries + 1)) + " attempts");
  }
  return out;
}

// --- Checker ----------------------------------------------------------------

CheckerFeedback rule_check(const Phrase& phrase, const LyricLine& line, const Lexicon& lex) {
  validate_line(line, phrase);
  auto tones = lenient_tones(line.sung(), lex);
  CheckerFeedback fb;
  for (const auto& v : check_phrase(phrase, tones)) {
    if (v.status == VerdictStatus::Mismatch) fb.mismatches.push_back({v.index, *v.expected, *v.actual});
  }
  fb.mismatch_count = static_cast<int>(fb.mismatches.size());
  return fb;
}

CheckerFeedback check_candidate(const GenerationContext& ctx, const CandidateLyric& cand,
                                size_t candidate_index, int round, const Phonology& phon,
                                const GenerationConfig& config, LlmClient& llm,
                                AgentTrace* trace) {
  validate_context(ctx);
  CheckerFeedback fb = rule_check(ctx.phrase(), cand.line, phon.lexicon);
  json mismatches = json::array();
  for (const auto& m : fb.mismatches) {
    mismatches.push_back({{"index", m.index},
                          {"expected", direction_name(m.expected)},
                          {"actual", direction_name(m.actual)}});
  }

  std::string prompt = "-";
  std::string response_digest = "-";
  if (ctx.lyrics_so_far.empty()) {
    fb.consistency_score = kDefaultConsistencyScore;
    fb.consistency_note = "no context";
  } else {
    PromptSpec spec;
    spec.persona = std::string(persona::kChecker);
    spec.objective =
        "Rate from 1 (unrelated) to 5 (seamless) how well the candidate line continues the "
        "preceding lyrics. Put the score alone inside a ``` block, then give one short "
        "sentence of feedback.";
    spec.sections.push_back({"Preceding lyrics", history_text(ctx.lyrics_so_far)});
    spec.sections.push_back({"Candidate line", utf8::encode(cand.line.sung())});
    if (!ctx.requirements.empty()) spec.sections.push_back({"Requirements", ctx.requirements});
    spec.method = PromptMethod::Formatting;
    auto req = make_request(spec,
                            "Review candidate " + std::to_string(candidate_index + 1) +
                                " (round " + std::to_string(round) + ").",
                            config, 0.0);
    prompt = prompt_digest(req);
    try {
      std::string response = llm.complete(req);
      response_digest = short_digest(response);
      auto blocks = extract_blocks(response, ExtractionRule::fenced(1));
      auto score = trim(blocks[0]);
      if (score.size() != 1 || score[0] < '1' || score[0] > '5') {
        throw ExtractError(ExtractError::Kind::NoBlocks, 1, "score block is not a digit 1-5");
      }
      fb.consistency_score = score[0] - '0';
      std::string note = response;
      auto open = note.find("```");
      auto close = note.find("```", open + 3);
      note.erase(open, close + 3 - open);
      fb.consistency_note = std::string(trim(note));
      if (fb.consistency_note.empty()) fb.consistency_note = "(no comment)";
    } catch (const Error& e) {
      fb.consistency_score.reset();
      fb.consistency_note = std::string("consistency unavailable: ") + e.what();
    }
  }

  if (trace) {
    json outcome = {{"mismatch_count", fb.mismatch_count},
                    {"mismatches", std::move(mismatches)},
                    {"consistency_score",
                     fb.consistency_score ? json(*fb.consistency_score) : json(nullptr)},
                    {"consistency_note", fb.consistency_note}};
    trace->append({ctx.segment_index, round, AgentRole::Checker, candidate_index, 1, prompt,
                   response_digest, std::move(outcome)});
  }
  return fb;
}

// --- Judger -----------------------------------------------------------------

size_t best_candidate(const std::vector<CheckerFeedback>& feedbacks, size_t candidate_count) {
  if (candidate_count == 0) throw ContractError("best_candidate: no candidates");
  if (feedbacks.empty()) return 0;
  if (feedbacks.size() != candidate_count) {
    throw ContractError("best_candidate: feedback count differs from candidate count");
  }
  auto key = [&](size_t i) {
    return std::tuple(feedbacks[i].mismatch_count, -feedbacks[i].consistency_score.value_or(0), i);
  };
  size_t best = 0;
  for (size_t i = 1; i < candidate_count; ++i) {
    if (key(i) < key(best)) best = i;
  }
  return best;
}

std::optional<JudgerVerdict> parse_verdict(std::string_view response, size_t candidate_count) {
  std::string body;
  std::string rationale;
  try {
    body = extract_blocks(response, ExtractionRule::fenced(1)).front();
    std::string rest(response);
    auto open = rest.find("```");
    auto close = rest.find("```", open + 3);
    rest.erase(open, close + 3 - open);
    rationale = std::string(trim(rest));
  } catch (const ExtractError&) {
    body = std::string(trim(response));
  }
  std::string upper;
  for (char c : body) upper.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));

  static const std::regex kSelect(R"(^\s*SELECT\s+(\d{1,6})\s*$)");
  static const std::regex kRegenerate(R"(^\s*REGENERATE\s*$)");
  std::smatch m;
  if (std::regex_match(upper, m, kSelect)) {
    size_t index = std::stoul(m[1].str());
    if (index >= candidate_count) return std::nullopt;
    return JudgerVerdict{JudgerVerdict::Decision::Select, index, rationale, false};
  }
  if (std::regex_match(upper, kRegenerate)) {
    return JudgerVerdict{JudgerVerdict::Decision::Regenerate, 0, rationale, false};
  }
  return std::nullopt;
}

JudgerVerdict judge(const GenerationContext& ctx, const std::vector<CandidateLyric>& candidates,
                    const std::vector<CheckerFeedback>& feedbacks, int round,
                    const GenerationConfig& config, LlmClient& llm, AgentTrace* trace) {
  validate_context(ctx);
  if (candidates.empty()) throw ContractError("judge: no candidates");
  if (!feedbacks.empty() && feedbacks.size() != candidates.size()) {
    throw ContractError("judge: candidate and feedback counts differ");
  }

  std::string listing;
  for (size_t i = 0; i < candidates.size(); ++i) {
    listing += "[" + std::to_string(i) + "] " + utf8::encode(candidates[i].line.sung());
    if (!feedbacks.empty()) {
      const auto& fb = feedbacks[i];
      listing += " | tone mismatches: " + std::to_string(fb.mismatch_count);
      if (!fb.mismatches.empty()) {
        listing += " at";
        for (const auto& m : fb.mismatches) listing += " " + std::to_string(m.index + 1);
      }
      listing += " | consistency: " +
                 (fb.consistency_score ? std::to_string(*fb.consistency_score) + "/5" : "n/a") +
                 " (" + fb.consistency_note + ")";
    }
    listing += "\n";
  }
  listing.pop_back();

  PromptSpec spec;
  spec.persona = std::string(persona::kJudger);
  spec.objective =
      "Pick the candidate that best fits the melody and continues the song. Reply with "
      "SELECT followed by the candidate number inside a ``` block, or REGENERATE inside a "
      "``` block if none is acceptable. You may add one sentence of rationale after the block.";
  spec.sections.push_back({"Candidates", listing});
  spec.sections.push_back({"Preceding lyrics", history_text(ctx.lyrics_so_far)});
  if (!ctx.requirements.empty()) spec.sections.push_back({"Requirements", ctx.requirements});
  spec.method = PromptMethod::Formatting;
  auto base = make_request(spec,
                           "Round " + std::to_string(round) + " of " +
                               std::to_string(config.max_rounds) + ".",
                           config, 0.0);

  std::optional<JudgerVerdict> verdict;
  auto call = [&](const std::string& user) {
    CompletionRequest req = base;
    req.user = user;
    return llm.complete(req);
  };
  auto accept = [&](const std::string& response) -> Acceptance {
    verdict = parse_verdict(response, candidates.size());
    if (verdict) return {response, ""};
    return {std::nullopt, "expected SELECT <0-" + std::to_string(candidates.size() - 1) +
                              "> or REGENERATE"};
  };
  auto result = run_with_retries(base.user, 1, call, accept);

  JudgerVerdict out;
  std::string flag;
  if (!result.value) {
    out = {JudgerVerdict::Decision::Select, best_candidate(feedbacks, candidates.size()),
           "unparseable verdict", true};
    flag = "unparseable";
  } else {
    out = *verdict;
    if (out.decision == JudgerVerdict::Decision::Regenerate && round >= config.max_rounds) {
      out = {JudgerVerdict::Decision::Select, best_candidate(feedbacks, candidates.size()),
             "regeneration budget exhausted", true};
      flag = "rounds-exhausted";
    }
  }

  if (trace) {
    for (size_t a = 0; a < result.attempts.size(); ++a) {
      const auto& att = result.attempts[a];
      CompletionRequest sent = base;
      sent.user = att.user;
      bool last = a + 1 == result.attempts.size();
      json outcome = {{"parsed", !att.violation.has_value()}};
      if (att.violation) outcome["violation"] = *att.violation;
      if (last) {
        outcome["decision"] =
            out.decision == JudgerVerdict::Decision::Select ? "select" : "regenerate";
        if (out.decision == JudgerVerdict::Decision::Select) outcome["index"] = out.index;
        outcome["coerced"] = out.coerced;
        if (!flag.empty()) outcome["flag"] = flag;
      }
      trace->append({ctx.segment_index, round, AgentRole::Judger, std::nullopt,
                     static_cast<int>(a + 1), prompt_digest(sent),
                     att.response.empty() ? "-" : short_digest(att.response), outcome});
    }
  }
  return out;
}

// --- Orchestration ----------------------------------------------------------

long long segment_call_budget(const AgentGroup& group, const GenerationConfig& config) {
  long long per_round = static_cast<long long>(config.k) * (1 + config.max_retries);
  if (group.has(AgentRole::Checker)) per_round += config.k;
  if (group.has(AgentRole::Judger)) per_round += 2;
  long long rounds = group.has(AgentRole::Judger) ? config.max_rounds : 1;
  return rounds * per_round;
}

GenerationResult generate_song(const Melody& melody, const AgentGroup& group,
                               const GenerationConfig& config, LlmClient& llm,
                               const Phonology& phon) {
  validate_melody(melody);
  validate_config(config);
  if (config.rhyme.kind == RhymeMode::Kind::Class && !phon.rhymes.find(config.rhyme.class_name)) {
    throw ConfigError("unknown rhyme class '" + config.rhyme.class_name + "'");
  }

  GenerationResult result;
  const int rounds = group.has(AgentRole::Judger) ? config.max_rounds : 1;

  for (size_t seg = 0; seg < melody.phrases.size(); ++seg) {
    GenerationContext ctx{&melody, seg, result.lines, config.requirements, config.rhyme};

    RhymeSuggestion suggestion;
    if (group.has(AgentRole::Suggester) && config.rhyme.kind != RhymeMode::Kind::Off) {
      suggestion = suggest_rhyme(ctx, phon, config.rhyme_limit);
      std::string cands;
      for (char32_t c : suggestion.candidates) cands += utf8::encode(c);
      result.trace.append({seg, 1, AgentRole::Suggester, std::nullopt, 1, "-", "-",
                           json{{"class", suggestion.rhyme_class ? json(*suggestion.rhyme_class)
                                                                 : json(nullptr)},
                                {"candidates", cands}}});
    }

    std::optional<LyricLine> chosen;
    for (int round = 1; round <= rounds && !chosen; ++round) {
      std::vector<CandidateLyric> candidates;
      try {
        candidates = create_candidates(ctx, suggestion, config, round, llm, &result.trace);
      } catch (const CreationFailure& e) {
        result.error = e.what();
        return result;
      }

      std::vector<CheckerFeedback> feedbacks;
      if (group.has(AgentRole::Checker)) {
        for (size_t i = 0; i < candidates.size(); ++i) {
          feedbacks.push_back(
              check_candidate(ctx, candidates[i], i, round, phon, config, llm, &result.trace));
        }
      }

      if (group.has(AgentRole::Judger)) {
        auto verdict = judge(ctx, candidates, feedbacks, round, config, llm, &result.trace);
        if (verdict.decision == JudgerVerdict::Decision::Select) {
          chosen = candidates[verdict.index].line;
        }
      } else {
        chosen = candidates.front().line;
      }
    }
    validate_line(*chosen, melody.phrases[seg]);
    result.lines.push_back(*chosen);
  }
  result.complete = true;
  return result;
}

json lyrics_document(const Melody& melody, const AgentGroup& group,
                     const GenerationConfig& config, const GenerationResult& result) {
  json lines = json::array();
  for (size_t i = 0; i < result.lines.size(); ++i) {
    lines.push_back({{"phrase", i},
                     {"text", result.lines[i].text()},
                     {"sung", utf8::encode(result.lines[i].sung())}});
  }
  return json{{"schema", "m2l-lyrics/1"},
              {"melody", {{"title", melody.title}, {"digest", sha256_hex(serialize_melody(melody))}}},
              {"group", group.number()},
              {"config",
               {{"k", config.k},
                {"max_rounds", config.max_rounds},
                {"max_retries", config.max_retries},
                {"temperature", config.temperature},
                {"model_id", config.model_id},
                {"rhyme", config.rhyme.describe()},
                {"requirements", config.requirements}}},
              {"lines", std::move(lines)},
              {"complete", result.complete},
              {"error", result.error.empty() ? json(nullptr) : json(result.error)},
              {"trace_digest", result.trace.digest()}};
}

}  // namespace m2l
