#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "duet/audio.hpp"
#include "duet/cqt.hpp"
#include "duet/midi.hpp"

namespace duet::dtw {

using dsp::AudioBuffer;

struct DtwError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DtwConfig {
    int hop = 64;                  // ~2.9 ms at 22,050 Hz
    int sample_rate = 22050;
    double band_radius = 2.5;      // Sakoe-Chiba radius, seconds
    int penalty_samples = 100000;  // random pairs for the penalty estimate
    uint64_t rng_seed = 0;
};

/// Monotone warp path between two frame sequences. Each successive pair
/// advances i, j, or both by exactly one.
struct WarpPath {
    std::vector<std::pair<int32_t, int32_t>> pairs;
    double total_cost = 0.0;
};

/// Allocation accounting for the banded DP, so tests can pin the memory
/// ceiling at N x (2*band + 1) cells.
struct DtwStats {
    size_t band_cells = 0;       // in-band cells visited (= step entries)
    size_t cost_buffer_cells = 0; // rolling cost rows
};

/// Zero-pads the shorter buffer at the end so both have equal length.
std::pair<AudioBuffer, AudioBuffer> pad_to_equal(const AudioBuffer& a, const AudioBuffer& b);

/// Cosine distance between two equal-length vectors; 1 when either is zero.
double cosine_distance(const double* u, const double* v, int n);

/// Mean cosine distance over n uniformly sampled column pairs. Deterministic
/// for a given seed.
double estimate_penalty(const dsp::Cqt& x, const dsp::Cqt& y, int n, uint64_t seed);

/// DTW restricted to a Sakoe-Chiba band of the given frame radius around the
/// rescaled diagonal i*M/N. Steps: (1,1) costs d(i,j); (1,0) and (0,1) cost
/// d(i,j) + penalty. Ties prefer diagonal, then (1,0). Memory is proportional
/// to N x band width.
WarpPath dtw_banded(const dsp::Cqt& x, const dsp::Cqt& y, int band_frames, double penalty,
                    DtwStats* stats = nullptr);

int band_frames_for(const dsp::Cqt& c, double band_radius);

/// Monotone piecewise-linear map from MIDI time to audio time.
class TimeMap {
public:
    TimeMap() = default;
    TimeMap(std::vector<double> midi_times, std::vector<double> audio_times);

    double operator()(double midi_time) const;
    const std::vector<double>& midi_knots() const { return xs_; }
    const std::vector<double>& audio_knots() const { return ys_; }

private:
    std::vector<double> xs_, ys_;
};

/// Collapses the path to one knot per MIDI frame (median audio frame among
/// pairs sharing that j), interpolated linearly and clamped outside the ends.
TimeMap warp_map(const WarpPath& path, double hop_seconds);

/// Applies the map to all note and pedal times. Offsets are forced at least
/// 1 ms after onsets, then ordering invariants are re-established.
midi::NoteSequence apply_warp(const midi::NoteSequence& ns, const TimeMap& map);

struct FineAlignResult {
    WarpPath path;
    TimeMap map;
    midi::NoteSequence warped;
    double penalty = 0.0;
    DtwStats stats;
};

/// Whole fine-alignment pass: resample audio to the DTW rate, synthesize the
/// MIDI at the same rate, pad to equal length, extract dB CQTs at the fine
/// hop, estimate the penalty from random pairs, run banded DTW, and warp the
/// MIDI onto the audio timeline.
FineAlignResult fine_align(const AudioBuffer& audio, const midi::NoteSequence& ns,
                           const DtwConfig& cfg = {});

}  // namespace duet::dtw
