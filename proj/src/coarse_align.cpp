#include "duet/coarse_align.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace duet::align {

std::pair<AudioBuffer, double> trim_leading_silence(const AudioBuffer& a, double rms_threshold_db,
                                                    double window) {
    if (a.channels != 1) throw std::invalid_argument("trim_leading_silence expects mono audio");
    size_t win = std::max<size_t>(1, size_t(std::llround(window * a.sample_rate)));
    size_t pos = 0;
    while (pos < a.samples.size()) {
        size_t n = std::min(win, a.samples.size() - pos);
        double acc = 0.0;
        for (size_t i = pos; i < pos + n; ++i) acc += double(a.samples[i]) * a.samples[i];
        double rms_db = 10.0 * std::log10(acc / double(n) + 1e-20);
        if (rms_db >= rms_threshold_db) break;
        pos += n;
    }
    AudioBuffer out;
    out.sample_rate = a.sample_rate;
    out.channels = 1;
    out.samples.assign(a.samples.begin() + long(pos), a.samples.end());
    return {std::move(out), double(pos) / a.sample_rate};
}

double mse_at_shift(const dsp::Cqt& audio_cqt, const dsp::Cqt& midi_cqt, size_t shift_frames) {
    if (audio_cqt.scale != dsp::Cqt::Scale::db_normalized ||
        midi_cqt.scale != dsp::Cqt::Scale::db_normalized)
        throw std::invalid_argument("mse_at_shift expects db_normalized CQTs");
    if (audio_cqt.n_bins != midi_cqt.n_bins)
        throw std::invalid_argument("bin count mismatch");
    if (shift_frames + audio_cqt.n_frames > midi_cqt.n_frames)
        throw AudioExhaustsMidi();

    const size_t cells = audio_cqt.n_frames * size_t(audio_cqt.n_bins);
    const double* a = audio_cqt.data.data();
    const double* m = midi_cqt.data.data() + shift_frames * size_t(midi_cqt.n_bins);
    double acc = 0.0;
    for (size_t i = 0; i < cells; ++i) {
        double d = a[i] - m[i];
        acc += d * d;
    }
    return acc / double(cells);
}

SessionAligner::SessionAligner(const midi::NoteSequence& midi, const AlignmentConfig& cfg)
    : cfg_(cfg) {
    AudioBuffer synth = dsp::synthesize(midi, cfg.sample_rate);
    synth.samples.resize(synth.samples.size() + size_t(cfg.tail_pad * cfg.sample_rate), 0.0f);
    dsp::CqtConfig cqt_cfg;
    cqt_cfg.hop = cfg.hop;
    midi_cqt_ = dsp::normalize_cqt(dsp::cqt(synth, cqt_cfg));

    // Anchor times: the first onset, plus the first onset after every long
    // silence. align() filters by cursor.
    if (!midi.notes.empty()) {
        anchors_.push_back(midi.notes.front().onset);
        for (const auto& s : midi::find_silences(midi, cfg.retry_silence)) {
            auto it = std::lower_bound(midi.notes.begin(), midi.notes.end(), s.end,
                                       [](const midi::Note& n, double t) { return n.onset < t; });
            if (it != midi.notes.end()) anchors_.push_back(it->onset);
        }
        std::sort(anchors_.begin(), anchors_.end());
        anchors_.erase(std::unique(anchors_.begin(), anchors_.end()), anchors_.end());
    }
}

CoarseAlignment SessionAligner::align(const AudioBuffer& audio, const std::string& audio_id,
                                      double midi_cursor, double threshold) const {
    AudioBuffer mono = dsp::resample_mono(audio, cfg_.sample_rate);
    auto [trimmed_audio, trimmed] = trim_leading_silence(mono, cfg_.trim_rms_db, cfg_.trim_window);
    if (trimmed_audio.samples.empty())
        throw NoAcceptableAlignment(std::numeric_limits<double>::infinity());

    dsp::CqtConfig cqt_cfg;
    cqt_cfg.hop = cfg_.hop;
    dsp::Cqt audio_cqt = dsp::normalize_cqt(dsp::cqt(trimmed_audio, cqt_cfg));

    const double hop_sec = midi_cqt_.hop_seconds;
    if (audio_cqt.n_frames > midi_cqt_.n_frames) throw AudioExhaustsMidi();
    const long max_shift = long(midi_cqt_.n_frames - audio_cqt.n_frames);
    const long cursor_frame = long(std::ceil(midi_cursor / hop_sec - 1e-9));
    if (cursor_frame > max_shift) throw AudioExhaustsMidi();
    const long tol_frames = long(std::ceil(cfg_.anchor_tolerance / hop_sec));

    std::vector<uint8_t> evaluated(size_t(max_shift) + 1, 0);
    double best_mse = std::numeric_limits<double>::infinity();
    long best_shift = -1;
    bool any = false;

    for (double anchor : anchors_) {
        long center = std::lround(anchor / hop_sec);
        long lo = std::max(cursor_frame, center - tol_frames);
        long hi = std::min(max_shift, center + tol_frames);
        for (long s = lo; s <= hi; ++s) {
            if (evaluated[size_t(s)]) continue;
            evaluated[size_t(s)] = 1;
            any = true;
            double m = mse_at_shift(audio_cqt, midi_cqt_, size_t(s));
            if (m < best_mse) {
                best_mse = m;
                best_shift = s;
            }
        }
        if (best_shift >= 0 && best_mse <= threshold) break;  // this anchor suffices
    }
    if (!any || best_mse > threshold) throw NoAcceptableAlignment(best_mse);

    double midi_start = double(best_shift) * hop_sec;
    CoarseAlignment out;
    out.audio_id = audio_id;
    out.shift = midi_start - trimmed;
    out.mse = best_mse;
    out.midi_start = midi_start;
    out.midi_end = midi_start + trimmed_audio.duration();
    return out;
}

CoarseAlignment align_file(const AudioBuffer& audio, const midi::NoteSequence& midi,
                           double midi_cursor, const AlignmentConfig& cfg) {
    SessionAligner aligner(midi, cfg);
    return aligner.align(audio, "audio", midi_cursor, cfg.mse_accept_threshold);
}

std::vector<FileAlignment> align_session(const std::vector<SessionAudio>& audios,
                                         const midi::NoteSequence& midi,
                                         const AlignmentConfig& cfg) {
    std::vector<FileAlignment> out;
    if (audios.empty()) return out;
    SessionAligner aligner(midi, cfg);

    double cursor = 0.0;
    std::vector<double> accepted;
    for (const auto& sa : audios) {
        double threshold = cfg.mse_accept_threshold;
        if (!accepted.empty()) {
            std::vector<double> sorted = accepted;
            std::sort(sorted.begin(), sorted.end());
            double median = sorted.size() % 2 ? sorted[sorted.size() / 2]
                                              : 0.5 * (sorted[sorted.size() / 2 - 1] +
                                                       sorted[sorted.size() / 2]);
            // 2x the running median, with the configured absolute as a floor
            threshold = std::max(threshold, 2.0 * median);
        }
        FileAlignment fa;
        fa.audio_id = sa.id;
        try {
            fa.alignment = aligner.align(sa.audio, sa.id, cursor, threshold);
            fa.ok = true;
            cursor = fa.alignment.midi_end;
            accepted.push_back(fa.alignment.mse);
        } catch (const std::exception& e) {
            fa.ok = false;
            fa.error = e.what();
        }
        out.push_back(std::move(fa));
    }
    return out;
}

}  // namespace duet::align
