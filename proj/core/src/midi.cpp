/**
 * @file midi.cpp
 * @brief Minimal SMF reader: enough to pull a monophonic vocal line.
 */

#include "m2l/midi.h"

#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <optional>
#include <vector>

#include "m2l/error.h"

namespace m2l {
namespace {

struct TimedNote {
  std::uint32_t on_tick;
  std::uint32_t off_tick;
  int key;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

  bool done() const { return pos_ >= data_.size(); }
  size_t pos() const { return pos_; }

  std::uint8_t u8() {
    need(1);
    return data_[pos_++];
  }
  std::uint8_t peek() {
    need(1);
    return data_[pos_];
  }
  std::uint16_t u16() {
    std::uint16_t hi = u8();
    return static_cast<std::uint16_t>((hi << 8) | u8());
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = (v << 8) | u8();
    return v;
  }
  std::uint32_t vlq() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      std::uint8_t b = u8();
      v = (v << 7) | (b & 0x7F);
      if (!(b & 0x80)) return v;
    }
    throw ParseError("midi: variable-length quantity longer than 4 bytes");
  }
  std::span<const std::uint8_t> take(size_t n) {
    need(n);
    auto out = data_.subspan(pos_, n);
    pos_ += n;
    return out;
  }
  void skip(size_t n) { take(n); }

 private:
  void need(size_t n) const {
    if (pos_ + n > data_.size()) throw ParseError("midi: unexpected end of data");
  }

  std::span<const std::uint8_t> data_;
  size_t pos_ = 0;
};

std::vector<TimedNote> read_track_notes(std::span<const std::uint8_t> track) {
  ByteReader r(track);
  std::vector<TimedNote> notes;
  // (channel, key) -> onset tick
  std::map<std::pair<int, int>, std::uint32_t> sounding;
  std::uint32_t tick = 0;
  std::uint8_t running = 0;

  auto close = [&](int channel, int key) {
    auto it = sounding.find({channel, key});
    if (it == sounding.end()) return;
    notes.push_back({it->second, tick, key});
    sounding.erase(it);
  };

  while (!r.done()) {
    tick += r.vlq();
    std::uint8_t status = r.peek();
    if (status & 0x80) {
      r.u8();
    } else {
      if (!running) throw ParseError("midi: running status without a prior status byte");
      status = running;
    }

    if (status == 0xFF) {
      std::uint8_t type = r.u8();
      std::uint32_t len = r.vlq();
      r.skip(len);
      if (type == 0x2F) break;
      continue;
    }
    if (status == 0xF0 || status == 0xF7) {
      r.skip(r.vlq());
      continue;
    }
    if (status < 0x80 || status >= 0xF0) {
      throw ParseError("midi: unsupported status byte");
    }
    running = status;
    int kind = status & 0xF0;
    int channel = status & 0x0F;
    if (kind == 0xC0 || kind == 0xD0) {
      r.u8();
      continue;
    }
    int key = r.u8();
    int velocity = r.u8();
    if (kind == 0x90 && velocity > 0) {
      close(channel, key);  // retrigger without note-off
      sounding[{channel, key}] = tick;
    } else if (kind == 0x80 || kind == 0x90) {
      close(channel, key);
    }
  }
  for (const auto& [ck, on] : sounding) notes.push_back({on, tick, ck.second});

  std::sort(notes.begin(), notes.end(), [](const TimedNote& a, const TimedNote& b) {
    return a.on_tick != b.on_tick ? a.on_tick < b.on_tick : a.key < b.key;
  });
  notes.erase(std::remove_if(notes.begin(), notes.end(),
                             [](const TimedNote& n) { return n.off_tick <= n.on_tick; }),
              notes.end());
  return notes;
}

/// Ticks of the first overlapping pair, if any.
std::optional<std::pair<std::uint32_t, std::uint32_t>> first_overlap(
    const std::vector<TimedNote>& notes) {
  for (size_t i = 1; i < notes.size(); ++i) {
    if (notes[i].on_tick < notes[i - 1].off_tick) {
      return std::pair{notes[i - 1].on_tick, notes[i].on_tick};
    }
  }
  return std::nullopt;
}

}  // namespace

Melody import_midi(std::span<const std::uint8_t> bytes, double gap_threshold,
                   const std::string& title) {
  if (!(gap_threshold > 0.0)) throw DomainError("gap_threshold must be positive");

  ByteReader r(bytes);
  if (bytes.size() < 14) throw ParseError("midi: file too short for an MThd header");
  auto magic = r.take(4);
  if (!std::equal(magic.begin(), magic.end(), "MThd")) throw ParseError("midi: missing MThd header");
  std::uint32_t header_len = r.u32();
  if (header_len < 6) throw ParseError("midi: header chunk too short");
  std::uint16_t format = r.u16();
  std::uint16_t track_count = r.u16();
  std::uint16_t division = r.u16();
  r.skip(header_len - 6);
  if (format > 1) throw ParseError("midi: only format 0 and 1 are supported");
  if (division & 0x8000) throw ParseError("midi: SMPTE time division is not supported");
  if (division == 0) throw ParseError("midi: zero ticks per quarter note");

  std::vector<std::vector<TimedNote>> tracks;
  for (std::uint16_t t = 0; t < track_count && !r.done(); ++t) {
    auto id = r.take(4);
    std::uint32_t len = r.u32();
    auto body = r.take(len);
    if (!std::equal(id.begin(), id.end(), "MTrk")) {
      --t;  // unknown chunk, not a track
      continue;
    }
    tracks.push_back(read_track_notes(body));
  }

  const std::vector<TimedNote>* chosen = nullptr;
  std::optional<std::pair<std::uint32_t, std::uint32_t>> overlap;
  for (const auto& notes : tracks) {
    if (notes.empty()) continue;
    auto o = first_overlap(notes);
    if (!o) {
      chosen = &notes;
      break;
    }
    if (!overlap) overlap = o;
  }
  if (!chosen) {
    if (overlap) {
      throw ParseError("midi: polyphony detected, overlapping notes at ticks " +
                       std::to_string(overlap->first) + " and " +
                       std::to_string(overlap->second));
    }
    throw ParseError("midi: no note events found");
  }

  const double tpq = division;
  Melody melody;
  melody.title = title;
  Phrase current;
  for (size_t i = 0; i < chosen->size(); ++i) {
    const auto& n = (*chosen)[i];
    if (i > 0) {
      const auto& prev = (*chosen)[i - 1];
      double gap = (static_cast<double>(n.on_tick) - prev.off_tick) / tpq;
      if (gap > gap_threshold) {
        melody.phrases.push_back(std::move(current));
        current = Phrase{};
      } else if (gap > kMinRestBeats) {
        current.notes.push_back({kRestPitch, gap});
      } else if (gap > 0.0) {
        current.notes.back().duration += gap;
      }
    }
    int pitch = std::clamp(n.key, 1, kMaxPitch);  // key 0 would read as a rest
    current.notes.push_back({pitch, (n.off_tick - n.on_tick) / tpq});
  }
  melody.phrases.push_back(std::move(current));
  validate_melody(melody);
  return melody;
}

Melody import_midi_file(const std::string& path, double gap_threshold) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open midi file: " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return import_midi(bytes, gap_threshold,
                     std::filesystem::path(path).stem().string());
}

}  // namespace m2l
