#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "duet/midi.hpp"

namespace duet::seg {

struct NoSegmentationFound : std::runtime_error {
    NoSegmentationFound() : std::runtime_error("no segmentation satisfies the duration constraints") {}
};

struct Interval {
    double start = 0.0;
    double end = 0.0;
    double length() const { return end - start; }
};

/// Result of the duration-constrained search: disjoint ordered intervals and
/// the expected piece durations assigned to each. A successful plan holds
/// exactly one duration per interval, within tolerance of its length.
struct SegmentPlan {
    std::vector<Interval> intervals;
    std::vector<std::vector<double>> assignment;
    double tolerance = 0.0;
};

struct Segment {
    double start = 0.0;
    double end = 0.0;
    int piece_index = 0;
};

/// Cuts at the midpoints of the n_pieces-1 longest silences. When fewer
/// silences exist, returns the best achievable segmentation with a warning.
std::vector<Segment> greedy_segment(const midi::NoteSequence& ns, int n_pieces,
                                    std::vector<std::string>* warnings = nullptr);

/// Density imbalance of a candidate split; splits are explored in ascending
/// score order.
double evenness_score(double interval_len_a, double interval_len_b, double sum_a, double sum_b);

/// Depth-first search over silences in descending duration order. Splitting
/// an interval at a silence midpoint partitions its duration list into a
/// prefix/suffix matching the two sides within tolerance. A silence with no
/// valid split is skipped when shorter than skip_silence_below, otherwise the
/// branch backtracks. Succeeds when every interval holds exactly one
/// duration; throws NoSegmentationFound otherwise.
SegmentPlan backtracking_segment(const midi::NoteSequence& ns, const std::vector<double>& durations,
                                 double tolerance = 0.15, double min_silence = 3.0,
                                 double skip_silence_below = 10.0);

/// Drops leading/trailing clusters of at most edge_cluster_max_notes notes
/// that sit a silence of at least edge_silence away from the segment body,
/// then pads both ends, clamped to [0, total_time] and to neighbors (colliding
/// boundaries meet at the midpoint of the shared gap).
std::vector<Segment> finalize_segments(const midi::NoteSequence& ns,
                                       const std::vector<Segment>& segments, double padding = 1.0,
                                       int edge_cluster_max_notes = 5, double edge_silence = 3.0);

/// Notes and pedal events within [start, end), rebased so the segment starts
/// at zero. Notes overlapping an edge are clipped.
midi::NoteSequence slice_sequence(const midi::NoteSequence& ns, double start, double end);

}  // namespace duet::seg
