/**
 * @file melody.cpp
 * @brief Melody validation and JSON (de)serialization.
 */

#include "m2l/melody.h"

#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "m2l/error.h"

namespace m2l {

using nlohmann::json;

void validate_note(const Note& note, const std::string& where) {
  if (note.pitch < 0 || note.pitch > kMaxPitch) {
    throw ParseError(where + ".pitch: " + std::to_string(note.pitch) +
                     " out of range [0, 127]");
  }
  if (!(note.duration > 0.0) || !std::isfinite(note.duration)) {
    throw ParseError(where + ".duration: must be a positive number of beats");
  }
}

void validate_phrase(const Phrase& phrase, const std::string& where) {
  if (phrase.notes.empty()) throw ParseError(where + ": phrase has no notes");
  for (size_t i = 0; i < phrase.notes.size(); ++i) {
    validate_note(phrase.notes[i], where + ".notes[" + std::to_string(i) + "]");
  }
  if (phrase_syllable_count(phrase) == 0) {
    throw ParseError(where + ": phrase contains only rests");
  }
}

void validate_melody(const Melody& melody) {
  if (melody.phrases.empty()) throw ParseError("phrases: melody has no phrases");
  if (melody.tempo_bpm && !(*melody.tempo_bpm > 0.0)) {
    throw ParseError("tempo_bpm: must be positive");
  }
  for (size_t i = 0; i < melody.phrases.size(); ++i) {
    validate_phrase(melody.phrases[i], "phrases[" + std::to_string(i) + "]");
  }
}

int phrase_syllable_count(const Phrase& phrase) {
  int count = 0;
  for (const auto& n : phrase.notes) count += n.is_rest() ? 0 : 1;
  return count;
}

int phrase_rest_count(const Phrase& phrase) {
  return static_cast<int>(phrase.notes.size()) - phrase_syllable_count(phrase);
}

std::vector<int> sung_pitches(const Phrase& phrase) {
  std::vector<int> out;
  for (const auto& n : phrase.notes) {
    if (!n.is_rest()) out.push_back(n.pitch);
  }
  return out;
}

namespace {

const json& require(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(where + ": missing field '" + key + "'");
  return *it;
}

Note note_from_json(const json& j, const std::string& where) {
  if (!j.is_object()) throw ParseError(where + ": expected an object");
  const auto& p = require(j, "pitch", where);
  if (!p.is_number_integer()) throw ParseError(where + ".pitch: expected an integer");
  const auto& d = require(j, "duration", where);
  if (!d.is_number()) throw ParseError(where + ".duration: expected a number");
  Note note{p.get<int>(), d.get<double>()};
  validate_note(note, where);
  return note;
}

}  // namespace

Melody parse_melody(std::string_view document) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("melody document is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("melody document must be an object");
  const auto& schema = require(doc, "schema", "$");
  if (!schema.is_string() || schema.get<std::string>() != kMelodySchema) {
    throw ParseError("schema: expected \"" + std::string(kMelodySchema) + "\"");
  }

  Melody melody;
  const auto& title = require(doc, "title", "$");
  if (!title.is_string()) throw ParseError("title: expected a string");
  melody.title = title.get<std::string>();
  if (auto it = doc.find("tempo_bpm"); it != doc.end() && !it->is_null()) {
    if (!it->is_number()) throw ParseError("tempo_bpm: expected a number");
    melody.tempo_bpm = it->get<double>();
  }

  const auto& phrases = require(doc, "phrases", "$");
  if (!phrases.is_array()) throw ParseError("phrases: expected an array");
  for (size_t i = 0; i < phrases.size(); ++i) {
    std::string where = "phrases[" + std::to_string(i) + "]";
    if (!phrases[i].is_object()) throw ParseError(where + ": expected an object");
    const auto& notes = require(phrases[i], "notes", where);
    if (!notes.is_array()) throw ParseError(where + ".notes: expected an array");
    Phrase phrase;
    for (size_t k = 0; k < notes.size(); ++k) {
      phrase.notes.push_back(
          note_from_json(notes[k], where + ".notes[" + std::to_string(k) + "]"));
    }
    validate_phrase(phrase, where);
    melody.phrases.push_back(std::move(phrase));
  }
  validate_melody(melody);
  return melody;
}

Melody load_melody_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open melody file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_melody(buf.str());
}

std::string serialize_melody(const Melody& melody) {
  json doc;
  doc["schema"] = kMelodySchema;
  doc["title"] = melody.title;
  if (melody.tempo_bpm) doc["tempo_bpm"] = *melody.tempo_bpm;
  json phrases = json::array();
  for (const auto& phrase : melody.phrases) {
    json notes = json::array();
    for (const auto& n : phrase.notes) {
      notes.push_back({{"pitch", n.pitch}, {"duration", n.duration}});
    }
    phrases.push_back({{"notes", std::move(notes)}});
  }
  doc["phrases"] = std::move(phrases);
  return doc.dump(2) + "\n";
}

}  // namespace m2l
