#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "duet/midi.hpp"

namespace duet::dsp {

struct WavError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// PCM audio, samples in [-1, 1], interleaved when stereo.
struct AudioBuffer {
    std::vector<float> samples;
    int sample_rate = 44100;
    int channels = 1;

    size_t frame_count() const { return channels ? samples.size() / channels : 0; }
    double duration() const { return double(frame_count()) / sample_rate; }
};

/// 16-bit PCM RIFF/WAVE decode; samples scaled by 1/32768.
AudioBuffer read_wav(std::span<const uint8_t> data);
/// 16-bit PCM encode; read_wav(write_wav(a)) is bit-exact for 16-bit material.
std::vector<uint8_t> write_wav(const AudioBuffer& a);

AudioBuffer read_wav_file(const std::string& path);
void write_wav_file(const AudioBuffer& a, const std::string& path);

/// Channel-averaged mono conversion plus band-limited resampling
/// (windowed sinc, 64 taps, Kaiser beta 8).
AudioBuffer resample_mono(const AudioBuffer& a, int target_rate);

struct SynthParams {
    int harmonics = 6;         // relative amplitudes 1/k
    double decay_seconds = 0.6;
    double release_seconds = 0.05;
    double peak = 0.9;
};

/// Additive harmonic rendering of a note sequence. Each note is a stack of
/// harmonics 1..6 at amplitudes 1/k, scaled by velocity/127, with exponential
/// decay from the onset and a linear release after the offset. The result is
/// peak-normalized.
AudioBuffer synthesize(const midi::NoteSequence& ns, int sample_rate,
                       const SynthParams& params = {});

}  // namespace duet::dsp
