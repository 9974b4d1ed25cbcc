#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "duet/midi.hpp"

namespace duet::data {

enum class Split { train, validation, test, unassigned };

std::string to_string(Split s);
Split split_from_string(const std::string& s);

struct ManifestRecord {
    std::string performance_id;  // midi filename when ingested from CSV
    std::string composer;
    std::string title;
    int year = 0;
    Split split = Split::unassigned;
    double duration = 0.0;  // seconds
    std::string midi_path;
    std::string audio_path;
};

/// Normalized composer+title key: case-folded, punctuation stripped,
/// whitespace collapsed. Performances of one composition share a key even
/// when the metadata formats opus numbers differently.
std::string composition_key(const std::string& composer, const std::string& title);

struct SplitTargets {
    double train = 0.8;
    double validation = 0.1;
    double test = 0.1;
};

struct SplitConfig {
    SplitTargets targets;
    int popularity_threshold = 5;    // performances; at or above forces train
    int composer_min_compositions = 3;
    double proportion_tolerance = 0.03;
};

struct SplitAssignment {
    std::unordered_map<std::string, Split> by_performance;
    std::vector<std::string> warnings;

    Split of(const std::string& performance_id) const {
        auto it = by_performance.find(performance_id);
        return it == by_performance.end() ? Split::unassigned : it->second;
    }
};

/// Composition-disjoint split assignment. Compositions with many performances
/// are forced into train; the rest are placed largest-total-duration-first
/// into the most underfilled split, judged globally and within the composer
/// when the composer has enough compositions. Deterministic for a given seed.
SplitAssignment make_split(const std::vector<ManifestRecord>& records,
                           const SplitConfig& cfg = {}, uint64_t seed = 0);

struct SplitReport {
    std::vector<std::string> hard_violations;  // composition spans several splits
    std::vector<std::string> soft_violations;  // proportions out of tolerance
    double fraction_train = 0.0;
    double fraction_validation = 0.0;
    double fraction_test = 0.0;

    bool ok() const { return hard_violations.empty(); }
};

SplitReport verify_split(const SplitAssignment& assignment,
                         const std::vector<ManifestRecord>& records,
                         const SplitConfig& cfg = {});

struct SplitStats {
    std::string split;
    int performances = 0;
    int compositions = 0;  // distinct composition keys
    double duration_hours = 0.0;
    double notes_millions = 0.0;
};

/// Per-split rows plus a "total" row. Note counts come from the optional
/// performance_id -> note count map (0 when absent).
std::vector<SplitStats> compute_stats(
    const std::vector<ManifestRecord>& records,
    const std::unordered_map<std::string, size_t>* note_counts = nullptr);

/// Velocity roll over the 88 piano keys; key 0 is MIDI pitch 21.
struct Roll {
    std::vector<float> data;  // key-major: data[key * frames + frame]
    int keys = 88;
    size_t frames = 0;
    double frame_rate = 250.0;

    float& at(int key, size_t frame) { return data[size_t(key) * frames + frame]; }
    float at(int key, size_t frame) const { return data[size_t(key) * frames + frame]; }
};

/// Strike roll: frame floor(onset * rate) of key (pitch - 21) holds
/// velocity/127; same-cell collisions keep the maximum. Frame count is
/// ceil(rate * total_time).
Roll onset_roll(const midi::NoteSequence& ns, double frame_rate = 250.0);

/// Frames during which a note sounds (interval overlap with the frame).
Roll frame_roll(const midi::NoteSequence& ns, double frame_rate = 250.0);

struct LabelRolls {
    Roll onset;   // binarized strikes
    Roll frame;   // sounding frames
    Roll offset;  // the window after each note ends
};

LabelRolls training_labels(const midi::NoteSequence& ns, double frame_rate = 250.0,
                           double offset_window_seconds = 0.032);

struct AugmentationSpec {
    double pitch_shift = 0.0;  // semitones, [-0.1, 0.1]
    double contrast = 0.0;     // [0, 100]
    double eq1_freq = 32.0;    // Hz, log-uniform in [32, 4096]
    double eq2_freq = 32.0;
    double reverb = 0.0;       // reverberance, log-uniform in [0.01, 70]
    double pinknoise = 0.0;    // volume, [0, 0.04]
    uint64_t seed = 0;
};

/// Draws one spec; linear fields uniform, eq/reverb log-uniform.
/// Byte-identical for repeated seeds.
AugmentationSpec sample_augmentation(uint64_t seed);

/// Ordered effect-chain arguments (pitch, contrast, two equalizer bands,
/// reverb, pink-noise mix) for external application. parse_effect_chain
/// recovers every field except the seed.
std::vector<std::string> emit_effect_chain(const AugmentationSpec& spec);
AugmentationSpec parse_effect_chain(const std::vector<std::string>& args);

/// Manifest CSV with the released metadata layout:
/// canonical_composer,canonical_title,split,year,midi_filename,audio_filename,duration
std::vector<ManifestRecord> read_manifest_csv(const std::string& path);
std::vector<ManifestRecord> parse_manifest_csv(const std::string& text);
std::string format_manifest_csv(const std::vector<ManifestRecord>& records);
void write_manifest_csv(const std::vector<ManifestRecord>& records, const std::string& path);

/// Compact binary roll container ("DUETROLL", little-endian header, f32 data).
void write_roll_file(const Roll& roll, const std::string& path);
Roll read_roll_file(const std::string& path);

}  // namespace duet::data
