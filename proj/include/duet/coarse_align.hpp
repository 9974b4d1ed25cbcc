#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "duet/audio.hpp"
#include "duet/cqt.hpp"
#include "duet/midi.hpp"

namespace duet::align {

using dsp::AudioBuffer;

/// Best alignment exceeded the acceptance threshold; the pair needs review.
struct NoAcceptableAlignment : std::runtime_error {
    double best_mse;
    explicit NoAcceptableAlignment(double mse)
        : std::runtime_error("no acceptable alignment (best MSE " + std::to_string(mse) + ")"),
          best_mse(mse) {}
};

/// The remaining MIDI timeline is shorter than the audio being aligned.
struct AudioExhaustsMidi : std::runtime_error {
    AudioExhaustsMidi() : std::runtime_error("audio exhausts remaining MIDI timeline") {}
};

struct AlignmentConfig {
    int hop = 4096;                     // CQT hop, ~93 ms at 44.1 kHz
    double anchor_tolerance = 720.0;    // +-12 minutes around each anchor
    double retry_silence = 30.0;        // retry anchors after silences this long
    double mse_accept_threshold = 0.08; // matched pairs sit near 0.03-0.04 on the
                                        // normalized scale, noise/mismatches above 0.11
    int sample_rate = 44100;
    double trim_rms_db = -50.0;
    double trim_window = 0.05;
    double tail_pad = 30.0;  // silence appended to the MIDI timeline so audio
                             // that runs past the last note can still align
};

struct CoarseAlignment {
    std::string audio_id;
    double shift = 0.0;       // audio file start within the MIDI timeline
    double mse = 0.0;
    double midi_start = 0.0;  // MIDI region covered by the (trimmed) audio
    double midi_end = 0.0;
};

struct FileAlignment {
    std::string audio_id;
    bool ok = false;
    CoarseAlignment alignment;  // valid when ok
    std::string error;          // set when !ok
};

/// Drops leading windows whose RMS is below the threshold. Second element is
/// the trimmed duration; entirely silent audio yields an empty buffer.
std::pair<AudioBuffer, double> trim_leading_silence(const AudioBuffer& a,
                                                    double rms_threshold_db = -50.0,
                                                    double window = 0.05);

/// Mean squared difference between the audio CQT and the equally sized MIDI
/// CQT window starting at shift_frames. Both inputs must be db_normalized.
double mse_at_shift(const dsp::Cqt& audio_cqt, const dsp::Cqt& midi_cqt, size_t shift_frames);

/// Synthesizes and normalizes the MIDI CQT once so a whole session of audio
/// files can be slid against it.
class SessionAligner {
public:
    SessionAligner(const midi::NoteSequence& midi, const AlignmentConfig& cfg);

    /// Aligns one audio file against the MIDI timeline at/after midi_cursor.
    /// Candidate shifts live within +-anchor_tolerance of each anchor: the
    /// first note-on at or after the cursor, then note-ons following each
    /// silence of at least retry_silence. The first anchor whose window
    /// contains a shift at or below the threshold wins; otherwise
    /// NoAcceptableAlignment carries the best MSE seen.
    CoarseAlignment align(const AudioBuffer& audio, const std::string& audio_id,
                          double midi_cursor, double threshold) const;

    const dsp::Cqt& midi_cqt() const { return midi_cqt_; }
    double hop_seconds() const { return midi_cqt_.hop_seconds; }

private:
    AlignmentConfig cfg_;
    dsp::Cqt midi_cqt_;
    std::vector<double> anchors_;  // ascending anchor times
};

CoarseAlignment align_file(const AudioBuffer& audio, const midi::NoteSequence& midi,
                           double midi_cursor, const AlignmentConfig& cfg);

struct SessionAudio {
    std::string id;
    AudioBuffer audio;
};

/// Aligns an ordered sequence of audio files against one MIDI timeline.
/// Each success advances the cursor to its midi_end, so accepted ranges are
/// disjoint and ordered. Failures are recorded and skipped, never fatal.
/// Acceptance tightens to 2x the running median of accepted MSEs once any
/// file has been accepted.
std::vector<FileAlignment> align_session(const std::vector<SessionAudio>& audios,
                                         const midi::NoteSequence& midi,
                                         const AlignmentConfig& cfg);

}  // namespace duet::align
