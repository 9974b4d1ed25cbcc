#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "duet/coarse_align.hpp"
#include "fixtures.hpp"

using namespace duet;
using namespace duet::align;

namespace {

// Small session setup shared by the alignment tests: a few minutes of music
// at a cheap sample rate so the whole suite stays fast.
constexpr int kRate = 22050;

AlignmentConfig test_config() {
    AlignmentConfig cfg;
    cfg.sample_rate = kRate;
    cfg.hop = 2048;
    cfg.anchor_tolerance = 240.0;
    return cfg;
}

dsp::AudioBuffer extract(const dsp::AudioBuffer& a, double start, double dur) {
    dsp::AudioBuffer out;
    out.sample_rate = a.sample_rate;
    out.channels = 1;
    size_t lo = size_t(start * a.sample_rate);
    size_t hi = std::min(a.samples.size(), lo + size_t(dur * a.sample_rate));
    out.samples.assign(a.samples.begin() + long(lo), a.samples.begin() + long(hi));
    return out;
}

dsp::Cqt random_db_cqt(std::mt19937_64& rng, size_t frames) {
    dsp::Cqt c;
    c.n_bins = 48;
    c.n_frames = frames;
    c.hop_seconds = 0.09;
    c.scale = dsp::Cqt::Scale::db_normalized;
    c.data.resize(frames * 48);
    for (auto& v : c.data) v = fixtures::u01(rng) * 4.0;
    return c;
}

}  // namespace

TEST_CASE("trim: leading silence removed") {
    auto tone = fixtures::sine(440.0, 1.0, kRate);
    dsp::AudioBuffer a;
    a.sample_rate = kRate;
    a.channels = 1;
    a.samples.assign(size_t(2.0 * kRate), 0.0f);
    a.samples.insert(a.samples.end(), tone.samples.begin(), tone.samples.end());
    auto [trimmed, dur] = trim_leading_silence(a);
    CHECK(dur == doctest::Approx(2.0).epsilon(0.03));
    CHECK(trimmed.samples.size() == doctest::Approx(double(tone.samples.size())).epsilon(0.05));
}

TEST_CASE("trim: no leading silence") {
    auto a = fixtures::sine(440.0, 0.5, kRate);
    auto [trimmed, dur] = trim_leading_silence(a);
    CHECK(dur == 0.0);
    CHECK(trimmed.samples.size() == a.samples.size());
}

TEST_CASE("trim: entirely silent audio comes back empty") {
    dsp::AudioBuffer a;
    a.sample_rate = kRate;
    a.channels = 1;
    a.samples.assign(kRate, 0.0f);
    auto [trimmed, dur] = trim_leading_silence(a);
    CHECK(trimmed.samples.empty());
    CHECK(dur == doctest::Approx(1.0));
}

TEST_CASE("mse: identical matrices at shift zero") {
    std::mt19937_64 rng(3);
    auto c = random_db_cqt(rng, 40);
    CHECK(mse_at_shift(c, c, 0) == 0.0);
}

TEST_CASE("mse: symmetric in its arguments at fixed shift") {
    std::mt19937_64 rng(5);
    auto a = random_db_cqt(rng, 30);
    auto b = random_db_cqt(rng, 30);
    CHECK(mse_at_shift(a, b, 0) == doctest::Approx(mse_at_shift(b, a, 0)));
}

TEST_CASE("mse: exact sub-window is the unique minimum") {
    std::mt19937_64 rng(7);
    auto midi_cqt = random_db_cqt(rng, 60);
    dsp::Cqt audio_cqt = midi_cqt;
    const size_t k = 17, frames = 20;
    audio_cqt.n_frames = frames;
    audio_cqt.data.assign(midi_cqt.data.begin() + long(k * 48),
                          midi_cqt.data.begin() + long((k + frames) * 48));
    CHECK(mse_at_shift(audio_cqt, midi_cqt, k) == 0.0);
    for (size_t s = 0; s + frames <= 60; ++s) {
        if (s == k) continue;
        CHECK(mse_at_shift(audio_cqt, midi_cqt, s) > 0.0);
    }
}

TEST_CASE("mse: audio longer than the MIDI remainder is an error") {
    std::mt19937_64 rng(9);
    auto midi_cqt = random_db_cqt(rng, 30);
    auto audio_cqt = random_db_cqt(rng, 20);
    CHECK_THROWS_AS(mse_at_shift(audio_cqt, midi_cqt, 15), AudioExhaustsMidi);
}

TEST_CASE("mse: linear-scale inputs rejected") {
    std::mt19937_64 rng(11);
    auto a = random_db_cqt(rng, 10);
    auto b = random_db_cqt(rng, 10);
    b.scale = dsp::Cqt::Scale::linear;
    CHECK_THROWS_AS(mse_at_shift(a, b, 0), std::invalid_argument);
}

TEST_CASE("mse separation: unrelated music over matched pair is at least 2x") {
    std::mt19937_64 rng(13);
    auto ns = fixtures::music_sequence(rng, 60.0);
    auto other = fixtures::music_sequence(rng, 20.0);

    auto cfg = test_config();
    SessionAligner aligner(ns, cfg);
    auto synth = dsp::synthesize(ns, kRate);

    dsp::CqtConfig cq{.hop = cfg.hop};
    auto matched = dsp::normalize_cqt(dsp::cqt(extract(synth, 20.0, 20.0), cq));
    auto unrelated = dsp::normalize_cqt(dsp::cqt(dsp::synthesize(other, kRate), cq));

    size_t shift = size_t(std::lround(20.0 / matched.hop_seconds));
    double matched_mse = mse_at_shift(matched, aligner.midi_cqt(), shift);
    size_t frames = std::min(unrelated.n_frames, matched.n_frames);
    unrelated.data.resize(frames * 48);
    unrelated.n_frames = frames;
    double unrelated_mse = mse_at_shift(unrelated, aligner.midi_cqt(), shift);
    CHECK(unrelated_mse >= 2.0 * matched_mse);
}

TEST_CASE("align_file: recovers an extraction offset within one hop") {
    std::mt19937_64 rng(17);
    auto ns = fixtures::music_sequence(rng, 150.0);
    auto synth = dsp::synthesize(ns, kRate);
    auto cfg = test_config();
    const double true_shift = 97.3;

    auto audio = extract(synth, true_shift, 30.0);
    auto result = align_file(audio, ns, 0.0, cfg);
    double hop_sec = double(cfg.hop) / kRate;
    CHECK(std::abs(result.shift - true_shift) <= hop_sec);
    CHECK(result.midi_end - result.midi_start ==
          doctest::Approx(audio.duration()).epsilon(1e-6));
}

TEST_CASE("align_file: self-alignment lands at zero") {
    std::mt19937_64 rng(19);
    auto ns = fixtures::music_sequence(rng, 60.0);
    auto synth = dsp::synthesize(ns, kRate);
    auto cfg = test_config();
    auto result = align_file(synth, ns, 0.0, cfg);
    CHECK(std::abs(result.shift) <= double(cfg.hop) / kRate + 1e-9);
    // edge columns see the silent tail pad in their normalization windows,
    // so the MSE is tiny rather than exactly zero
    CHECK(result.mse <= 1e-3);
}

TEST_CASE("align_file: pure noise is rejected") {
    std::mt19937_64 rng(23);
    auto ns = fixtures::music_sequence(rng, 90.0);
    auto cfg = test_config();
    auto noise = fixtures::white_noise(rng, 20.0, kRate);
    CHECK_THROWS_AS(align_file(noise, ns, 0.0, cfg), NoAcceptableAlignment);
}

TEST_CASE("align_session: ordered slices recover increasing shifts") {
    std::mt19937_64 rng(29);
    auto ns = fixtures::music_sequence(rng, 180.0);
    auto synth = dsp::synthesize(ns, kRate);
    auto cfg = test_config();

    std::vector<SessionAudio> audios;
    const double starts[3] = {10.0, 80.0, 130.0};
    for (int i = 0; i < 3; ++i)
        audios.push_back({"slice" + std::to_string(i), extract(synth, starts[i], 30.0)});

    auto results = align_session(audios, ns, cfg);
    REQUIRE(results.size() == 3);
    double hop_sec = double(cfg.hop) / kRate;
    double prev_end = 0.0;
    for (int i = 0; i < 3; ++i) {
        REQUIRE(results[size_t(i)].ok);
        const auto& al = results[size_t(i)].alignment;
        CHECK(std::abs(al.shift - starts[i]) <= hop_sec);
        CHECK(al.midi_start >= prev_end - 1e-9);  // disjoint, ordered
        prev_end = al.midi_end;
    }
}

TEST_CASE("align_session: a noise slice is reported failed, neighbors align") {
    std::mt19937_64 rng(31);
    auto ns = fixtures::music_sequence(rng, 180.0);
    auto synth = dsp::synthesize(ns, kRate);
    auto cfg = test_config();

    std::vector<SessionAudio> audios;
    audios.push_back({"a", extract(synth, 5.0, 30.0)});
    audios.push_back({"noise", fixtures::white_noise(rng, 15.0, kRate)});
    audios.push_back({"b", extract(synth, 120.0, 30.0)});

    auto results = align_session(audios, ns, cfg);
    REQUIRE(results.size() == 3);
    CHECK(results[0].ok);
    CHECK(!results[1].ok);
    CHECK(!results[1].error.empty());
    CHECK(results[2].ok);
    double hop_sec = double(cfg.hop) / kRate;
    CHECK(std::abs(results[2].alignment.shift - 120.0) <= hop_sec);
}

TEST_CASE("align_session: empty input, empty output") {
    std::mt19937_64 rng(37);
    auto ns = fixtures::music_sequence(rng, 30.0);
    CHECK(align_session({}, ns, test_config()).empty());
}
