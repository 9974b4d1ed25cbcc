#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "duet/audio.hpp"
#include "fixtures.hpp"

using namespace duet::dsp;

TEST_CASE("wav: one second of silence") {
    AudioBuffer a;
    a.sample_rate = 44100;
    a.channels = 1;
    a.samples.assign(44100, 0.0f);
    auto back = read_wav(write_wav(a));
    CHECK(back.samples.size() == 44100);
    CHECK(back.sample_rate == 44100);
    for (float s : back.samples) CHECK(s == 0.0f);
}

TEST_CASE("wav: full-scale square wave hits +-32767/32768") {
    AudioBuffer a;
    a.sample_rate = 8000;
    a.channels = 1;
    for (int i = 0; i < 100; ++i) a.samples.push_back(i % 2 ? 1.0f : -1.0f);
    auto back = read_wav(write_wav(a));
    for (size_t i = 0; i < back.samples.size(); ++i) {
        float expect = i % 2 ? 32767.0f / 32768.0f : -1.0f;
        CHECK(back.samples[i] == expect);
    }
}

TEST_CASE("wav: stereo preserved") {
    AudioBuffer a;
    a.sample_rate = 22050;
    a.channels = 2;
    a.samples = {0.5f, -0.5f, 0.25f, -0.25f};
    auto back = read_wav(write_wav(a));
    CHECK(back.channels == 2);
    REQUIRE(back.samples.size() == 4);
    CHECK(back.samples[0] == doctest::Approx(0.5));
    CHECK(back.samples[1] == doctest::Approx(-0.5));
}

TEST_CASE("wav: write/read round-trip is bit-exact for 16-bit content") {
    std::mt19937_64 rng(5);
    AudioBuffer a;
    a.sample_rate = 44100;
    a.channels = 2;
    for (int i = 0; i < 5000; ++i)
        a.samples.push_back(float(int16_t(rng() & 0xffff)) / 32768.0f);
    auto bytes = write_wav(a);
    auto back = read_wav(bytes);
    REQUIRE(back.samples.size() == a.samples.size());
    for (size_t i = 0; i < a.samples.size(); ++i) CHECK(back.samples[i] == a.samples[i]);
    CHECK(write_wav(back) == bytes);
}

TEST_CASE("wav: rejects what it cannot represent") {
    std::vector<uint8_t> junk(64, 0);
    CHECK_THROWS_AS(read_wav(junk), WavError);

    AudioBuffer a;
    a.sample_rate = 8000;
    a.channels = 1;
    a.samples.assign(16, 0.1f);
    auto bytes = write_wav(a);
    bytes[20] = 3;  // float format tag
    CHECK_THROWS_AS(read_wav(bytes), WavError);
}

TEST_CASE("resample: 2:1 halves the sample count") {
    std::mt19937_64 rng(9);
    auto a = fixtures::white_noise(rng, 1.0, 44100, 0.2);
    auto out = resample_mono(a, 22050);
    CHECK(out.sample_rate == 22050);
    CHECK(std::abs(long(out.samples.size()) - 22050L) <= 1);
}

TEST_CASE("resample: 440 Hz tone survives 48k -> 22.05k within 1 Hz") {
    auto a = fixtures::sine(440.0, 2.0, 48000);
    auto out = resample_mono(a, 22050);

    // coarse sweep for the global peak, then refine
    double best_f = 0.0, best_e = -1.0;
    for (double f = 20.0; f < 11000.0; f += 5.0) {
        double e = fixtures::tone_energy(out, f);
        if (e > best_e) {
            best_e = e;
            best_f = f;
        }
    }
    for (double f = best_f - 5.0; f <= best_f + 5.0; f += 0.1) {
        double e = fixtures::tone_energy(out, f);
        if (e > best_e) {
            best_e = e;
            best_f = f;
        }
    }
    CHECK(std::abs(best_f - 440.0) <= 1.0);
}

TEST_CASE("resample: mono at target rate is the identity") {
    auto a = fixtures::sine(440.0, 0.5, 22050);
    auto out = resample_mono(a, 22050);
    CHECK(out.samples == a.samples);
}

TEST_CASE("resample: stereo downmix averages channels") {
    AudioBuffer a;
    a.sample_rate = 22050;
    a.channels = 2;
    a.samples = {1.0f, 0.0f, 0.0f, 1.0f, 0.5f, 0.5f};
    auto out = resample_mono(a, 22050);
    REQUIRE(out.samples.size() == 3);
    CHECK(out.samples[0] == doctest::Approx(0.5));
    CHECK(out.samples[1] == doctest::Approx(0.5));
    CHECK(out.samples[2] == doctest::Approx(0.5));
}

TEST_CASE("synthesize: empty sequence renders silence of total_time") {
    duet::midi::NoteSequence ns;
    ns.total_time = 1.0;
    auto a = synthesize(ns, 44100);
    CHECK(a.samples.size() == 44100);
    for (float s : a.samples) CHECK(s == 0.0f);
}

TEST_CASE("synthesize: A4 note peaks at 440 Hz") {
    duet::midi::NoteSequence ns;
    ns.notes.push_back({69, 0.0, 1.0, 100});
    ns.normalize();
    auto a = synthesize(ns, 22050);
    double e440 = fixtures::tone_energy(a, 440.0);
    CHECK(e440 > fixtures::tone_energy(a, 415.3));
    CHECK(e440 > fixtures::tone_energy(a, 466.16));
    CHECK(e440 > fixtures::tone_energy(a, 880.0));  // fundamental above harmonic 2
}

TEST_CASE("synthesize: simultaneous C4+E4 shows both fundamentals") {
    duet::midi::NoteSequence ns;
    ns.notes.push_back({60, 0.0, 1.0, 100});
    ns.notes.push_back({64, 0.0, 1.0, 100});
    ns.normalize();
    auto a = synthesize(ns, 22050);
    double c4 = fixtures::tone_energy(a, 261.6256);
    double e4 = fixtures::tone_energy(a, 329.6276);
    double gap = fixtures::tone_energy(a, 293.66);  // D4, not played
    CHECK(c4 > 5.0 * gap);
    CHECK(e4 > 5.0 * gap);
}

TEST_CASE("synthesize: velocity doubling is removed by peak normalization") {
    std::mt19937_64 rng(17);
    auto ns = fixtures::random_sequence(rng, 20, 5.0);
    for (auto& n : ns.notes) n.velocity = std::min(60, n.velocity);
    auto doubled = ns;
    for (auto& n : doubled.notes) n.velocity *= 2;
    auto a = synthesize(ns, 22050);
    auto b = synthesize(doubled, 22050);
    REQUIRE(a.samples.size() == b.samples.size());
    for (size_t i = 0; i < a.samples.size(); ++i)
        CHECK(a.samples[i] == doctest::Approx(b.samples[i]).epsilon(1e-6));
}

TEST_CASE("synthesize: peak normalized to 0.9") {
    duet::midi::NoteSequence ns;
    ns.notes.push_back({60, 0.0, 0.5, 90});
    ns.normalize();
    auto a = synthesize(ns, 22050);
    float peak = 0.0f;
    for (float s : a.samples) peak = std::max(peak, std::abs(s));
    CHECK(peak == doctest::Approx(0.9).epsilon(1e-5));
}
