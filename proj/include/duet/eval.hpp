#pragma once

#include <span>
#include <utility>
#include <vector>

#include "duet/dataset.hpp"
#include "duet/midi.hpp"

namespace duet::eval {

struct Prf {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

Prf prf_from_counts(size_t true_positive, size_t est_count, size_t ref_count);

struct EvalScores {
    Prf frame;
    Prf note;
    Prf note_with_offset;
    Prf note_with_offset_velocity;
};

struct MatchConfig {
    double onset_tolerance = 0.05;       // seconds
    double offset_ratio = 0.2;           // fraction of reference duration
    double offset_min_tolerance = 0.05;  // seconds
    double velocity_tolerance = 0.1;     // after rescaling, velocities in [0,1]
    double frame_size = 0.032;           // seconds per frame for frame scores
};

enum class NoteFamily { note, note_with_offset, note_with_offset_velocity };

/// Cell-wise precision/recall over the two rolls; the shorter roll is padded
/// with empty frames.
Prf frame_scores(const data::Roll& ref, const data::Roll& est);

/// Maximum-cardinality matching between ref and est notes under the family's
/// tolerances, deterministic: among maximum matchings, earlier-onset ref
/// notes are matched first and each takes its earliest admissible est note.
/// Pairs are (ref index, est index). The velocity family matches with the
/// offset criteria; the velocity filter is applied by note_scores.
std::vector<std::pair<int, int>> match_notes(const midi::NoteSequence& ref,
                                             const midi::NoteSequence& est,
                                             const MatchConfig& cfg, NoteFamily family);

Prf note_scores(const midi::NoteSequence& ref, const midi::NoteSequence& est,
                const MatchConfig& cfg, NoteFamily family);

/// All four families for one piece. Frame scores use rolls sampled at
/// 1/frame_size.
EvalScores score_pair(const midi::NoteSequence& ref, const midi::NoteSequence& est,
                      const MatchConfig& cfg = {});

/// Field-wise arithmetic mean across pieces (the per-piece convention, not
/// pooled counts).
EvalScores aggregate(std::span<const EvalScores> per_piece);

}  // namespace duet::eval
