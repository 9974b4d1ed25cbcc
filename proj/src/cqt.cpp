#include "duet/cqt.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace duet::dsp {

namespace {

constexpr double kDbFloor = -80.0;
constexpr double kSilentRef = 1e-10;
constexpr double kDivGuard = 1e-6;

struct BinKernel {
    std::vector<float> cos_w;  // window * cos
    std::vector<float> sin_w;  // window * sin
    double window_sum = 0.0;
};

BinKernel make_kernel(double freq, int sample_rate, double q) {
    size_t n = size_t(std::ceil(q * sample_rate / freq));
    BinKernel k;
    k.cos_w.resize(n);
    k.sin_w.resize(n);
    for (size_t i = 0; i < n; ++i) {
        double hann = n > 1 ? 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * double(i) / double(n - 1)))
                            : 1.0;
        double phase = 2.0 * std::numbers::pi * freq * double(i) / sample_rate;
        k.cos_w[i] = float(hann * std::cos(phase));
        k.sin_w[i] = float(hann * std::sin(phase));
        k.window_sum += hann;
    }
    return k;
}

}  // namespace

Cqt cqt(const AudioBuffer& audio, const CqtConfig& cfg, std::vector<std::string>* warnings) {
    if (audio.channels != 1) throw std::invalid_argument("cqt expects mono audio");
    if (cfg.hop <= 0) throw std::invalid_argument("hop must be positive");

    const double q = 1.0 / (std::exp2(1.0 / cfg.bins_per_octave) - 1.0);
    std::vector<BinKernel> kernels;
    kernels.reserve(cfg.n_bins);
    size_t longest = 0;
    for (int k = 0; k < cfg.n_bins; ++k) {
        double freq = 440.0 * std::exp2((cfg.fmin_pitch + k - 69) / 12.0);
        kernels.push_back(make_kernel(freq, audio.sample_rate, q));
        longest = std::max(longest, kernels.back().cos_w.size());
    }
    if (audio.samples.size() < longest && warnings)
        warnings->push_back("audio shorter than the longest analysis window; zero-padded");

    Cqt out;
    out.n_bins = cfg.n_bins;
    out.fmin_pitch = cfg.fmin_pitch;
    out.hop_seconds = double(cfg.hop) / audio.sample_rate;
    out.n_frames = size_t((audio.samples.size() + cfg.hop - 1) / cfg.hop);
    out.data.assign(out.n_frames * cfg.n_bins, 0.0);

    const float* x = audio.samples.data();
    const long len = long(audio.samples.size());
    // bin-major so each kernel stays cache-resident across frames
    for (int k = 0; k < cfg.n_bins; ++k) {
        const BinKernel& ker = kernels[k];
        const long n = long(ker.cos_w.size());
        for (size_t t = 0; t < out.n_frames; ++t) {
            long center = long(t) * cfg.hop;
            long start = center - n / 2;
            long lo = std::max(0L, -start);          // first kernel index in range
            long hi = std::min(n, len - start);       // one past last kernel index
            const float* xs = x + start;
            const float* kc = ker.cos_w.data();
            const float* ks = ker.sin_w.data();
            // four fixed-order accumulator lanes; the serial two-chain form
            // leaves most of the FMA throughput idle
            double re0 = 0.0, re1 = 0.0, re2 = 0.0, re3 = 0.0;
            double im0 = 0.0, im1 = 0.0, im2 = 0.0, im3 = 0.0;
            long i = lo;
            for (; i + 4 <= hi; i += 4) {
                re0 += double(xs[i]) * kc[i];
                im0 += double(xs[i]) * ks[i];
                re1 += double(xs[i + 1]) * kc[i + 1];
                im1 += double(xs[i + 1]) * ks[i + 1];
                re2 += double(xs[i + 2]) * kc[i + 2];
                im2 += double(xs[i + 2]) * ks[i + 2];
                re3 += double(xs[i + 3]) * kc[i + 3];
                im3 += double(xs[i + 3]) * ks[i + 3];
            }
            for (; i < hi; ++i) {
                re0 += double(xs[i]) * kc[i];
                im0 += double(xs[i]) * ks[i];
            }
            double re = (re0 + re1) + (re2 + re3);
            double im = (im0 + im1) + (im2 + im3);
            out.at(k, t) = std::sqrt(re * re + im * im) / ker.window_sum;
        }
    }
    return out;
}

namespace {

// Max-referenced dB with the -80 dB floor, values in [-80, 0].
Cqt to_db_floor(const Cqt& c) {
    if (c.scale != Cqt::Scale::linear) throw std::invalid_argument("expected linear-scale CQT");
    Cqt out = c;
    double max_all = 0.0;
    for (double v : c.data) max_all = std::max(max_all, v);
    if (max_all <= 0.0) max_all = kSilentRef;
    for (double& v : out.data)
        v = v > 0.0 ? std::max(20.0 * std::log10(v / max_all), kDbFloor) : kDbFloor;
    out.scale = Cqt::Scale::db_normalized;
    return out;
}

}  // namespace

Cqt cqt_to_db(const Cqt& c) {
    Cqt out = to_db_floor(c);
    for (double& v : out.data) v -= kDbFloor;  // shift into [0, 80]
    return out;
}

Cqt normalize_cqt(const Cqt& c) {
    // Column-by-column division happens in the dB domain, where the minima
    // sit near the -80 floor and the quotient stays bounded; dividing the
    // floor-shifted positives instead blows up whenever a column touches the
    // floor (its minimum is ~0).
    Cqt out = to_db_floor(c);
    size_t f_count = out.n_frames;
    if (f_count == 0) return out;

    std::vector<double> col_min(f_count);
    for (size_t f = 0; f < f_count; ++f) {
        double m = out.at(0, f);
        for (int k = 1; k < out.n_bins; ++k) m = std::min(m, out.at(k, f));
        col_min[f] = m;
    }
    for (size_t f = 0; f < f_count; ++f) {
        size_t lo = f >= 2 ? f - 2 : 0;
        size_t hi = std::min(f_count - 1, f + 2);
        double mean = 0.0;
        for (size_t j = lo; j <= hi; ++j) mean += col_min[j];
        mean /= double(hi - lo + 1);
        double div = std::min(mean, -kDivGuard);  // minima are <= 0
        for (int k = 0; k < out.n_bins; ++k) out.at(k, f) /= div;
    }
    return out;
}

}  // namespace duet::dsp
