#include "duet/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

namespace duet::dsp {

namespace {

uint32_t rd_u32le(const uint8_t* p) {
    return uint32_t(p[0]) | uint32_t(p[1]) << 8 | uint32_t(p[2]) << 16 | uint32_t(p[3]) << 24;
}
uint16_t rd_u16le(const uint8_t* p) { return uint16_t(p[0] | p[1] << 8); }

double bessel_i0(double x) {
    // Series expansion, converges quickly for the beta values used here.
    double sum = 1.0, term = 1.0;
    double half_sq = x * x / 4.0;
    for (int k = 1; k < 64; ++k) {
        term *= half_sq / (double(k) * k);
        sum += term;
        if (term < 1e-16 * sum) break;
    }
    return sum;
}

double sinc(double x) {
    if (std::abs(x) < 1e-12) return 1.0;
    double px = std::numbers::pi * x;
    return std::sin(px) / px;
}

}  // namespace

AudioBuffer read_wav(std::span<const uint8_t> data) {
    if (data.size() < 12 || std::memcmp(data.data(), "RIFF", 4) != 0 ||
        std::memcmp(data.data() + 8, "WAVE", 4) != 0)
        throw WavError("not a RIFF/WAVE file");

    size_t pos = 12;
    bool have_fmt = false;
    int channels = 0, sample_rate = 0, bits = 0, format = 0;
    const uint8_t* pcm = nullptr;
    size_t pcm_len = 0;

    while (pos + 8 <= data.size()) {
        const uint8_t* hdr = data.data() + pos;
        uint32_t chunk_len = rd_u32le(hdr + 4);
        pos += 8;
        if (pos + chunk_len > data.size()) throw WavError("truncated chunk");
        if (std::memcmp(hdr, "fmt ", 4) == 0) {
            if (chunk_len < 16) throw WavError("malformed fmt chunk");
            format = rd_u16le(data.data() + pos);
            channels = rd_u16le(data.data() + pos + 2);
            sample_rate = int(rd_u32le(data.data() + pos + 4));
            bits = rd_u16le(data.data() + pos + 14);
            have_fmt = true;
        } else if (std::memcmp(hdr, "data", 4) == 0) {
            pcm = data.data() + pos;
            pcm_len = chunk_len;
        }
        pos += chunk_len + (chunk_len & 1);  // chunks are word-aligned
    }
    if (!have_fmt || !pcm) throw WavError("missing fmt or data chunk");
    if (format != 1) throw WavError("only PCM wav supported, got format " + std::to_string(format));
    if (bits != 16) throw WavError("only 16-bit PCM supported, got " + std::to_string(bits));
    if (channels < 1 || channels > 2) throw WavError("only 1 or 2 channels supported");
    if (sample_rate <= 0) throw WavError("bad sample rate");

    AudioBuffer a;
    a.sample_rate = sample_rate;
    a.channels = channels;
    size_t n = pcm_len / 2;
    a.samples.resize(n);
    for (size_t i = 0; i < n; ++i) {
        int16_t v = int16_t(uint16_t(pcm[2 * i] | pcm[2 * i + 1] << 8));
        a.samples[i] = float(v) / 32768.0f;
    }
    return a;
}

std::vector<uint8_t> write_wav(const AudioBuffer& a) {
    uint32_t data_len = uint32_t(a.samples.size() * 2);
    std::vector<uint8_t> out;
    out.reserve(44 + data_len);
    auto u32 = [&](uint32_t v) {
        out.push_back(v & 0xff);
        out.push_back(v >> 8 & 0xff);
        out.push_back(v >> 16 & 0xff);
        out.push_back(v >> 24 & 0xff);
    };
    auto u16 = [&](uint16_t v) {
        out.push_back(v & 0xff);
        out.push_back(v >> 8 & 0xff);
    };
    out.insert(out.end(), {'R', 'I', 'F', 'F'});
    u32(36 + data_len);
    out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
    u32(16);
    u16(1);  // PCM
    u16(uint16_t(a.channels));
    u32(uint32_t(a.sample_rate));
    u32(uint32_t(a.sample_rate * a.channels * 2));  // byte rate
    u16(uint16_t(a.channels * 2));                  // block align
    u16(16);
    out.insert(out.end(), {'d', 'a', 't', 'a'});
    u32(data_len);
    for (float s : a.samples) {
        long v = std::lround(double(s) * 32768.0);
        v = std::clamp(v, -32768L, 32767L);
        out.push_back(uint8_t(v & 0xff));
        out.push_back(uint8_t((v >> 8) & 0xff));
    }
    return out;
}

AudioBuffer read_wav_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw WavError("cannot open wav file: " + path);
    std::vector<uint8_t> data((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return read_wav(data);
}

void write_wav_file(const AudioBuffer& a, const std::string& path) {
    auto bytes = write_wav(a);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw WavError("cannot open for writing: " + path);
    f.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
}

AudioBuffer resample_mono(const AudioBuffer& a, int target_rate) {
    if (target_rate <= 0) throw std::invalid_argument("target_rate must be positive");

    std::vector<float> mono;
    if (a.channels == 1) {
        mono = a.samples;
    } else {
        mono.resize(a.frame_count());
        for (size_t i = 0; i < mono.size(); ++i)
            mono[i] = 0.5f * (a.samples[2 * i] + a.samples[2 * i + 1]);
    }
    if (a.sample_rate == target_rate)
        return {std::move(mono), target_rate, 1};

    constexpr int kHalfTaps = 32;  // 64-tap kernel
    constexpr double kBeta = 8.0;
    constexpr int kTableSize = 8192;
    const double ratio = double(target_rate) / a.sample_rate;
    const double cutoff = std::min(1.0, ratio);
    const size_t in_len = mono.size();
    const size_t out_len = size_t(std::llround(double(in_len) * ratio));

    // The whole windowed-sinc kernel sampled once onto a dense grid;
    // evaluating sin() and the Bessel series per tap would dominate the
    // entire resample.
    std::vector<double> kernel_table(kTableSize + 2);
    {
        const double i0_beta = bessel_i0(kBeta);
        for (int i = 0; i <= kTableSize; ++i) {
            double u = double(i) / kTableSize * kHalfTaps;
            double frac = u / kHalfTaps;
            double win = bessel_i0(kBeta * std::sqrt(std::max(0.0, 1.0 - frac * frac))) / i0_beta;
            kernel_table[size_t(i)] = cutoff * sinc(cutoff * u) * win;
        }
        kernel_table[kTableSize + 1] = 0.0;
    }
    const double to_table = double(kTableSize) / kHalfTaps;
    auto kernel = [&](double u) {
        double x = std::abs(u) * to_table;
        int i = int(x);
        if (i >= kTableSize) return 0.0;
        double f = x - i;
        return kernel_table[size_t(i)] + f * (kernel_table[size_t(i) + 1] - kernel_table[size_t(i)]);
    };

    AudioBuffer out;
    out.sample_rate = target_rate;
    out.channels = 1;
    out.samples.resize(out_len);
    for (size_t n = 0; n < out_len; ++n) {
        double t = double(n) / ratio;  // position in source samples
        long base = std::lround(std::floor(t));
        long lo = std::max(0L, base - kHalfTaps + 1);
        long hi = std::min(long(in_len) - 1, base + kHalfTaps);
        double acc = 0.0;
        for (long m = lo; m <= hi; ++m) acc += double(mono[size_t(m)]) * kernel(double(m) - t);
        out.samples[n] = float(std::clamp(acc, -1.0, 1.0));
    }
    return out;
}

AudioBuffer synthesize(const midi::NoteSequence& ns, int sample_rate, const SynthParams& params) {
    double max_off = 0.0;
    for (const auto& n : ns.notes) max_off = std::max(max_off, n.offset);
    double duration = std::max(ns.total_time, max_off + (ns.notes.empty() ? 0.0 : params.release_seconds));
    size_t len = size_t(std::ceil(duration * sample_rate));

    std::vector<double> mix(len, 0.0);
    const double dt = 1.0 / sample_rate;
    const double decay_k = std::exp(-dt / params.decay_seconds);

    for (const auto& note : ns.notes) {
        double f0 = 440.0 * std::exp2((note.pitch - 69) / 12.0);
        double amp = double(note.velocity) / 127.0;
        size_t start = size_t(std::llround(note.onset * sample_rate));
        size_t end = std::min(len, size_t(std::llround((note.offset + params.release_seconds) * sample_rate)));
        if (start >= end) continue;
        double release_start = note.offset;

        for (int h = 1; h <= params.harmonics; ++h) {
            double f = f0 * h;
            if (f >= sample_rate / 2.0) break;  // keep aliases out
            double w = 2.0 * std::numbers::pi * f * dt;
            // Rotating phasor instead of per-sample sin(); cheap and stable
            // over note-length spans.
            double rot_re = std::cos(w), rot_im = std::sin(w);
            double ph_re = 1.0, ph_im = 0.0;
            double env = amp / h;
            for (size_t i = start; i < end; ++i) {
                double t = double(i) * dt;
                double gain = env;
                if (t > release_start)
                    gain *= std::max(0.0, 1.0 - (t - release_start) / params.release_seconds);
                mix[i] += gain * ph_im;
                double re = ph_re * rot_re - ph_im * rot_im;
                ph_im = ph_re * rot_im + ph_im * rot_re;
                ph_re = re;
                env *= decay_k;
            }
        }
    }

    double peak = 0.0;
    for (double v : mix) peak = std::max(peak, std::abs(v));
    double scale = peak > 0.0 ? params.peak / peak : 0.0;

    AudioBuffer out;
    out.sample_rate = sample_rate;
    out.channels = 1;
    out.samples.resize(len);
    for (size_t i = 0; i < len; ++i) out.samples[i] = float(mix[i] * scale);
    return out;
}

}  // namespace duet::dsp
