#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace duet::midi {

struct MidiError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Note {
    int pitch = 0;        // MIDI note number, 0..127
    double onset = 0.0;   // seconds
    double offset = 0.0;  // seconds, > onset
    int velocity = 0;     // 1..127

    friend bool operator==(const Note&, const Note&) = default;
};

struct PedalEvent {
    double time = 0.0;
    int value = 0;  // controller 64 value, 0..127

    friend bool operator==(const PedalEvent&, const PedalEvent&) = default;
};

/// Timed note events for one performance, notes sorted by (onset, pitch, offset).
struct NoteSequence {
    std::vector<Note> notes;
    std::vector<PedalEvent> pedal_events;
    double total_time = 0.0;

    bool empty() const { return notes.empty(); }
    void sort_notes();
    /// Re-establishes sort order and total_time >= max offset.
    void normalize();
};

struct Silence {
    double start = 0.0;
    double end = 0.0;
    double duration() const { return end - start; }
};

/// Parses a Standard MIDI File (format 0 or 1). Note-on with velocity 0 is
/// treated as note-off; the tempo map is applied so all times are seconds;
/// controller-64 events are kept in pedal_events. Unmatched note-ons are
/// closed at end of track with a warning instead of failing: competition
/// captures are long and occasionally sloppy.
NoteSequence parse_smf(std::span<const uint8_t> data,
                       std::vector<std::string>* warnings = nullptr);

/// Serializes at a fixed 120 BPM, 480 ticks per quarter (format 0, one track).
/// parse_smf(write_smf(ns)) == ns up to 1-tick time quantization.
std::vector<uint8_t> write_smf(const NoteSequence& ns);

/// Extends each note's offset while the pedal is held (CC64 >= threshold),
/// up to the earlier of the pedal release and the next same-pitch strike.
/// Idempotent.
NoteSequence apply_sustain(const NoteSequence& ns, int threshold = 64);

/// Maximal gaps of at least min_duration during which no note sounds
/// (pedal-realized), between the first onset and the last offset.
/// Sorted by descending duration, ties by earlier start.
std::vector<Silence> find_silences(const NoteSequence& ns, double min_duration);

NoteSequence read_smf_file(const std::string& path,
                           std::vector<std::string>* warnings = nullptr);
void write_smf_file(const NoteSequence& ns, const std::string& path);

}  // namespace duet::midi
