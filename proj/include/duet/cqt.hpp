#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "duet/audio.hpp"

namespace duet::dsp {

/// Constant-Q magnitudes over 48 semitone bins (MIDI C2..B5 by default),
/// stored frame-major: data[frame * n_bins + bin].
struct Cqt {
    enum class Scale { linear, db_normalized };

    std::vector<double> data;
    int n_bins = 48;
    size_t n_frames = 0;
    double hop_seconds = 0.0;
    int fmin_pitch = 36;  // bin k is MIDI pitch fmin_pitch + k
    Scale scale = Scale::linear;

    double& at(int bin, size_t frame) { return data[frame * n_bins + bin]; }
    double at(int bin, size_t frame) const { return data[frame * n_bins + bin]; }
    const double* frame(size_t f) const { return data.data() + f * n_bins; }
    int bin_midi_pitch(int bin) const { return fmin_pitch + bin; }
};

struct CqtConfig {
    int hop = 4096;
    int fmin_pitch = 36;
    int n_bins = 48;
    int bins_per_octave = 12;
};

/// Direct per-bin kernel correlation (Hann-windowed complex exponentials,
/// window length Q*sr/f, Q = 1/(2^(1/12)-1)). Frame t is centered at sample
/// t*hop; frame count is ceil(len/hop); out-of-range samples read as zero.
Cqt cqt(const AudioBuffer& audio, const CqtConfig& cfg = {},
        std::vector<std::string>* warnings = nullptr);

/// Amplitude to dB re max, floored at -80 dB and shifted up by 80 so all
/// values are non-negative. Used on its own by the fine-alignment feature
/// path, and as the first half of normalize_cqt.
Cqt cqt_to_db(const Cqt& c);

/// Full normalization for coarse alignment: dB conversion as in cqt_to_db,
/// then each column divided by the mean of column minima over a centered
/// 5-column window (truncated at the edges) to cancel decay-rate differences.
Cqt normalize_cqt(const Cqt& c);

}  // namespace duet::dsp
