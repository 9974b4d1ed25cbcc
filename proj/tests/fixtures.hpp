#pragma once

// Shared synthetic fixtures for the test suites.

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "duet/audio.hpp"
#include "duet/midi.hpp"

namespace fixtures {

inline double u01(std::mt19937_64& rng) { return double(rng() >> 11) * 0x1.0p-53; }

inline int uniform_int(std::mt19937_64& rng, int lo, int hi) {
    return lo + int(rng() % uint64_t(hi - lo + 1));
}

inline duet::midi::Note note(int pitch, double onset, double offset, int velocity = 80) {
    return {pitch, onset, offset, velocity};
}

/// Random piano-range notes, onset-sorted and same-pitch-disjoint (the form
/// the parser guarantees), no particular musical structure.
inline duet::midi::NoteSequence random_sequence(std::mt19937_64& rng, int count,
                                                double duration, int pitch_lo = 36,
                                                int pitch_hi = 83) {
    duet::midi::NoteSequence ns;
    for (int i = 0; i < count; ++i) {
        double onset = u01(rng) * duration;
        double len = 0.05 + u01(rng) * 1.5;
        int pitch = uniform_int(rng, pitch_lo, pitch_hi);
        int vel = uniform_int(rng, 20, 120);
        ns.notes.push_back({pitch, onset, onset + len, vel});
    }
    ns.total_time = duration + 2.0;
    ns.normalize();
    // truncate same-pitch overlaps at the re-strike, drop slivers
    std::vector<duet::midi::Note> kept;
    for (size_t i = 0; i < ns.notes.size(); ++i) {
        duet::midi::Note n = ns.notes[i];
        for (size_t j = i + 1; j < ns.notes.size(); ++j) {
            if (ns.notes[j].onset >= n.offset) break;
            if (ns.notes[j].pitch == n.pitch) {
                n.offset = ns.notes[j].onset;
                break;
            }
        }
        if (n.offset - n.onset > 0.01) kept.push_back(n);
    }
    ns.notes = std::move(kept);
    ns.normalize();
    return ns;
}

/// Melodic material with chords, covering a time span: what the alignment and
/// segmentation fixtures use as "music".
inline void add_music(duet::midi::NoteSequence& ns, std::mt19937_64& rng, double start,
                      double end, double density = 2.5) {
    static const int kScale[] = {0, 2, 4, 5, 7, 9, 11};
    double t = start;
    while (t < end) {
        int degree = uniform_int(rng, 0, 20);
        int pitch = 48 + 12 * (degree / 7) + kScale[degree % 7];
        double len = 0.2 + u01(rng) * 0.8;
        double off = std::min(end, t + len);
        if (off > t + 0.03)
            ns.notes.push_back({pitch, t, off, uniform_int(rng, 40, 110)});
        if (u01(rng) < 0.3) {  // occasional third above
            int p2 = pitch + 4;
            if (p2 <= 83 && off > t + 0.03)
                ns.notes.push_back({p2, t, off, uniform_int(rng, 40, 100)});
        }
        t += (0.2 + u01(rng) * 1.2) / density;
    }
}

inline duet::midi::NoteSequence music_sequence(std::mt19937_64& rng, double duration,
                                               double density = 2.5) {
    duet::midi::NoteSequence ns;
    add_music(ns, rng, 0.0, duration, density);
    ns.total_time = duration;
    ns.normalize();
    return ns;
}

/// Pieces of the given durations separated by the given silences.
inline duet::midi::NoteSequence pieces_sequence(std::mt19937_64& rng,
                                                const std::vector<double>& durations,
                                                const std::vector<double>& gaps,
                                                double density = 2.5) {
    duet::midi::NoteSequence ns;
    double t = 0.0;
    for (size_t i = 0; i < durations.size(); ++i) {
        double piece_end = t + durations[i];
        add_music(ns, rng, t, piece_end, density);
        // pin the piece edges so spans have the exact expected length
        ns.notes.push_back({60, t, t + 0.2, 80});
        ns.notes.push_back({64, piece_end - 0.2, piece_end, 80});
        t = piece_end;
        if (i < gaps.size()) t += gaps[i];
    }
    ns.total_time = t + 1.0;
    ns.normalize();
    return ns;
}

inline duet::dsp::AudioBuffer sine(double freq, double duration, int sample_rate,
                                   double amplitude = 0.5) {
    duet::dsp::AudioBuffer a;
    a.sample_rate = sample_rate;
    a.channels = 1;
    size_t n = size_t(duration * sample_rate);
    a.samples.resize(n);
    for (size_t i = 0; i < n; ++i)
        a.samples[i] = float(amplitude * std::sin(2.0 * std::numbers::pi * freq * i / sample_rate));
    return a;
}

inline duet::dsp::AudioBuffer white_noise(std::mt19937_64& rng, double duration, int sample_rate,
                                          double amplitude = 0.3) {
    duet::dsp::AudioBuffer a;
    a.sample_rate = sample_rate;
    a.channels = 1;
    a.samples.resize(size_t(duration * sample_rate));
    for (auto& s : a.samples) s = float(amplitude * (2.0 * u01(rng) - 1.0));
    return a;
}

/// Spectral magnitude at one frequency (Goertzel-style direct sum).
inline double tone_energy(const duet::dsp::AudioBuffer& a, double freq) {
    double re = 0.0, im = 0.0;
    for (size_t i = 0; i < a.samples.size(); ++i) {
        double ph = 2.0 * std::numbers::pi * freq * double(i) / a.sample_rate;
        re += a.samples[i] * std::cos(ph);
        im += a.samples[i] * std::sin(ph);
    }
    return std::sqrt(re * re + im * im) / double(a.samples.size());
}

/// Smooth time jitter: a sum of slow sines with amplitude <= amp, tapered to
/// zero near both ends of [0, duration].
struct SmoothJitter {
    double a1, a2, p1, p2, f1, f2, duration, taper;

    SmoothJitter(std::mt19937_64& rng, double amp, double dur, double taper_s = 2.0)
        : duration(dur), taper(taper_s) {
        a1 = amp * (0.5 + 0.5 * u01(rng));
        a2 = amp - a1;
        f1 = 1.0 / (20.0 + 10.0 * u01(rng));
        f2 = 1.0 / (33.0 + 15.0 * u01(rng));
        p1 = 2.0 * std::numbers::pi * u01(rng);
        p2 = 2.0 * std::numbers::pi * u01(rng);
    }

    double operator()(double t) const {
        double j = a1 * std::sin(2.0 * std::numbers::pi * f1 * t + p1) +
                   a2 * std::sin(2.0 * std::numbers::pi * f2 * t + p2);
        double edge = std::min(t, duration - t);
        if (edge < 0.0) return 0.0;
        if (edge < taper) j *= edge / taper;
        return j;
    }
};

inline duet::midi::NoteSequence jitter_sequence(const duet::midi::NoteSequence& ns,
                                                const SmoothJitter& jitter) {
    duet::midi::NoteSequence out = ns;
    for (auto& n : out.notes) {
        n.onset += jitter(n.onset);
        n.offset += jitter(n.offset);
        if (n.offset <= n.onset) n.offset = n.onset + 0.01;
    }
    for (auto& p : out.pedal_events) p.time += jitter(p.time);
    out.normalize();
    return out;
}

}  // namespace fixtures
