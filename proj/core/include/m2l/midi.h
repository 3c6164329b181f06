/**
 * @file midi.h
 * @brief Standard MIDI File import into the melody model.
 */

#ifndef M2L_MIDI_H
#define M2L_MIDI_H

#include <cstdint>
#include <span>
#include <string>

#include "m2l/melody.h"

namespace m2l {

inline constexpr double kDefaultGapThreshold = 2.0;  ///< beats

/// Silences at or below this length are absorbed into the preceding note.
inline constexpr double kMinRestBeats = 1.0 / 16.0;

/// Imports the first monophonic note track of a format 0 or 1 SMF.
///
/// A new phrase starts whenever the silence between the end of one note and
/// the onset of the next exceeds `gap_threshold` beats. Shorter silences
/// longer than 1/16 beat become rest notes. Throws ParseError when no note
/// events exist, when every note track overlaps (the message carries the
/// tick positions), or on malformed bytes.
Melody import_midi(std::span<const std::uint8_t> bytes,
                   double gap_threshold = kDefaultGapThreshold,
                   const std::string& title = "");

Melody import_midi_file(const std::string& path,
                        double gap_threshold = kDefaultGapThreshold);

}  // namespace m2l

#endif  // M2L_MIDI_H
