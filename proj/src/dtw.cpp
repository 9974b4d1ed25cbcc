#include "duet/dtw.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace duet::dtw {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Squared norms accumulated in the same order cosine_distance uses, so the
// banded distance below is bit-identical to calling cosine_distance per cell.
std::vector<double> column_norms_squared(const dsp::Cqt& c) {
    std::vector<double> norms(c.n_frames);
    for (size_t f = 0; f < c.n_frames; ++f) {
        const double* col = c.frame(f);
        double acc = 0.0;
        for (int k = 0; k < c.n_bins; ++k) acc += col[k] * col[k];
        norms[f] = acc;
    }
    return norms;
}

// Step codes packed 2 bits per cell.
enum : uint8_t { kNone = 0, kDiag = 1, kVert = 2, kHorz = 3 };

class StepMatrix {
public:
    void init(const std::vector<size_t>& row_offset) {
        row_offset_ = &row_offset;
        data_.assign((row_offset.back() + 3) / 4, 0);
    }
    void set(size_t row_base, size_t idx, uint8_t v) {
        size_t cell = row_base + idx;
        size_t byte = cell >> 2;
        int shift = int(cell & 3) * 2;
        data_[byte] = uint8_t((data_[byte] & ~(3 << shift)) | (v << shift));
    }
    uint8_t get(size_t row_base, size_t idx) const {
        size_t cell = row_base + idx;
        return (data_[cell >> 2] >> ((cell & 3) * 2)) & 3;
    }

private:
    const std::vector<size_t>* row_offset_ = nullptr;
    std::vector<uint8_t> data_;
};

}  // namespace

std::pair<AudioBuffer, AudioBuffer> pad_to_equal(const AudioBuffer& a, const AudioBuffer& b) {
    if (a.sample_rate != b.sample_rate)
        throw std::invalid_argument("pad_to_equal expects matching sample rates");
    if (a.channels != 1 || b.channels != 1)
        throw std::invalid_argument("pad_to_equal expects mono audio");
    AudioBuffer pa = a, pb = b;
    size_t len = std::max(pa.samples.size(), pb.samples.size());
    pa.samples.resize(len, 0.0f);
    pb.samples.resize(len, 0.0f);
    return {std::move(pa), std::move(pb)};
}

double cosine_distance(const double* u, const double* v, int n) {
    double dot = 0.0, nu = 0.0, nv = 0.0;
    for (int k = 0; k < n; ++k) {
        dot += u[k] * v[k];
        nu += u[k] * u[k];
        nv += v[k] * v[k];
    }
    if (nu <= 0.0 || nv <= 0.0) return 1.0;
    if (dot == nu && dot == nv) return 0.0;  // identical columns, exactly
    return std::max(0.0, 1.0 - dot / (std::sqrt(nu) * std::sqrt(nv)));
}

double estimate_penalty(const dsp::Cqt& x, const dsp::Cqt& y, int n, uint64_t seed) {
    if (n < 1) throw std::invalid_argument("need at least one sample");
    if (x.n_frames == 0 || y.n_frames == 0) throw std::invalid_argument("empty CQT");
    std::mt19937_64 rng(seed);
    double acc = 0.0;
    for (int s = 0; s < n; ++s) {
        size_t i = size_t(rng() % x.n_frames);
        size_t j = size_t(rng() % y.n_frames);
        acc += cosine_distance(x.frame(i), y.frame(j), x.n_bins);
    }
    return acc / double(n);
}

int band_frames_for(const dsp::Cqt& c, double band_radius) {
    return int(std::lround(band_radius / c.hop_seconds));
}

WarpPath dtw_banded(const dsp::Cqt& x, const dsp::Cqt& y, int band_frames, double penalty,
                    DtwStats* stats) {
    if (x.n_frames == 0 || y.n_frames == 0) throw DtwError("empty input");
    if (x.n_bins != y.n_bins) throw DtwError("bin count mismatch");
    if (band_frames < 1) throw DtwError("band narrower than one frame");

    const long n = long(x.n_frames), m = long(y.n_frames);
    const double slope = double(m) / double(n);
    const long b = band_frames;

    std::vector<long> jlo(n), jhi(n);
    std::vector<size_t> row_offset(n + 1, 0);
    for (long i = 0; i < n; ++i) {
        double center = double(i) * slope;
        jlo[i] = std::max(0L, long(std::ceil(center - b)));
        jhi[i] = std::min(m - 1, long(std::floor(center + b)));
        if (jlo[i] > jhi[i]) throw DtwError("band excludes entire row");
        row_offset[i + 1] = row_offset[i] + size_t(jhi[i] - jlo[i] + 1);
    }
    if (jlo[0] > 0 || jhi[n - 1] < m - 1)
        throw DtwError("band excludes path endpoints");

    const std::vector<double> xsq = column_norms_squared(x);
    const std::vector<double> ysq = column_norms_squared(y);
    std::vector<double> xnorm(xsq.size()), ynorm(ysq.size());
    for (size_t i = 0; i < xsq.size(); ++i) xnorm[i] = std::sqrt(xsq[i]);
    for (size_t j = 0; j < ysq.size(); ++j) ynorm[j] = std::sqrt(ysq[j]);
    const int bins = x.n_bins;
    auto dist = [&](long i, long j) {
        double nu = xsq[size_t(i)], nv = ysq[size_t(j)];
        if (nu <= 0.0 || nv <= 0.0) return 1.0;
        const double* u = x.frame(size_t(i));
        const double* v = y.frame(size_t(j));
        double dot = 0.0;
        for (int k = 0; k < bins; ++k) dot += u[k] * v[k];
        if (dot == nu && dot == nv) return 0.0;
        return std::max(0.0, 1.0 - dot / (xnorm[size_t(i)] * ynorm[size_t(j)]));
    };

    StepMatrix steps;
    steps.init(row_offset);
    if (stats) {
        stats->band_cells = row_offset[n];
        stats->cost_buffer_cells = 2 * size_t(m);
    }

    std::vector<double> prev(size_t(m), kInf), cur(size_t(m), kInf);
    for (long i = 0; i < n; ++i) {
        std::fill(cur.begin() + jlo[i], cur.begin() + jhi[i] + 1, kInf);
        for (long j = jlo[i]; j <= jhi[i]; ++j) {
            double d = dist(i, j);
            double best;
            uint8_t step;
            if (i == 0 && j == 0) {
                best = d;
                step = kNone;
            } else {
                double diag = (i > 0 && j > 0 && j - 1 >= jlo[i - 1] && j - 1 <= jhi[i - 1])
                                  ? prev[size_t(j - 1)]
                                  : kInf;
                double vert = (i > 0 && j >= jlo[i - 1] && j <= jhi[i - 1]) ? prev[size_t(j)] : kInf;
                double horz = (j > jlo[i]) ? cur[size_t(j - 1)] : kInf;
                best = diag + d;
                step = kDiag;
                if (vert + d + penalty < best) {
                    best = vert + d + penalty;
                    step = kVert;
                }
                if (horz + d + penalty < best) {
                    best = horz + d + penalty;
                    step = kHorz;
                }
                if (!std::isfinite(best)) step = kNone;
            }
            cur[size_t(j)] = best;
            steps.set(row_offset[i], size_t(j - jlo[i]), step);
        }
        std::swap(prev, cur);
    }

    double total = prev[size_t(m - 1)];
    if (!std::isfinite(total)) throw DtwError("no feasible path within band");

    WarpPath path;
    path.total_cost = total;
    long i = n - 1, j = m - 1;
    while (true) {
        path.pairs.emplace_back(int32_t(i), int32_t(j));
        if (i == 0 && j == 0) break;
        uint8_t s = steps.get(row_offset[i], size_t(j - jlo[i]));
        switch (s) {
            case kDiag: --i; --j; break;
            case kVert: --i; break;
            case kHorz: --j; break;
            default: throw DtwError("corrupt backtrace");
        }
    }
    std::reverse(path.pairs.begin(), path.pairs.end());
    return path;
}

TimeMap::TimeMap(std::vector<double> midi_times, std::vector<double> audio_times)
    : xs_(std::move(midi_times)), ys_(std::move(audio_times)) {
    if (xs_.size() != ys_.size() || xs_.empty())
        throw std::invalid_argument("TimeMap needs equal, non-empty knot lists");
}

double TimeMap::operator()(double t) const {
    if (t <= xs_.front()) return ys_.front();
    if (t >= xs_.back()) return ys_.back();
    auto it = std::upper_bound(xs_.begin(), xs_.end(), t);
    size_t hi = size_t(it - xs_.begin());
    size_t lo = hi - 1;
    double span = xs_[hi] - xs_[lo];
    if (span <= 0.0) return ys_[lo];
    double f = (t - xs_[lo]) / span;
    return ys_[lo] + f * (ys_[hi] - ys_[lo]);
}

TimeMap warp_map(const WarpPath& path, double hop_seconds) {
    if (path.pairs.empty()) throw std::invalid_argument("empty path");
    std::vector<double> xs, ys;
    xs.reserve(path.pairs.size());
    ys.reserve(path.pairs.size());
    size_t idx = 0;
    while (idx < path.pairs.size()) {
        int32_t j = path.pairs[idx].second;
        size_t end = idx;
        while (end < path.pairs.size() && path.pairs[end].second == j) ++end;
        size_t count = end - idx;
        double median_i;
        if (count % 2) {
            median_i = path.pairs[idx + count / 2].first;
        } else {
            median_i = 0.5 * (path.pairs[idx + count / 2 - 1].first +
                              path.pairs[idx + count / 2].first);
        }
        xs.push_back(double(j) * hop_seconds);
        ys.push_back(median_i * hop_seconds);
        idx = end;
    }
    return TimeMap(std::move(xs), std::move(ys));
}

midi::NoteSequence apply_warp(const midi::NoteSequence& ns, const TimeMap& map) {
    midi::NoteSequence out;
    out.notes.reserve(ns.notes.size());
    for (const auto& n : ns.notes) {
        midi::Note w = n;
        w.onset = map(n.onset);
        w.offset = std::max(map(n.offset), w.onset + 1e-3);
        out.notes.push_back(w);
    }
    out.pedal_events.reserve(ns.pedal_events.size());
    for (const auto& p : ns.pedal_events) out.pedal_events.push_back({map(p.time), p.value});
    out.total_time = map(ns.total_time);
    out.normalize();
    return out;
}

FineAlignResult fine_align(const AudioBuffer& audio, const midi::NoteSequence& ns,
                           const DtwConfig& cfg) {
    AudioBuffer a = resample_mono(audio, cfg.sample_rate);
    AudioBuffer s = dsp::synthesize(ns, cfg.sample_rate);
    auto [pa, ps] = pad_to_equal(a, s);

    dsp::CqtConfig cqt_cfg;
    cqt_cfg.hop = cfg.hop;
    dsp::Cqt ca = dsp::cqt_to_db(dsp::cqt(pa, cqt_cfg));
    dsp::Cqt cs = dsp::cqt_to_db(dsp::cqt(ps, cqt_cfg));

    FineAlignResult res;
    res.penalty = estimate_penalty(ca, cs, cfg.penalty_samples, cfg.rng_seed);
    res.path = dtw_banded(ca, cs, band_frames_for(ca, cfg.band_radius), res.penalty, &res.stats);
    res.map = warp_map(res.path, ca.hop_seconds);
    res.warped = apply_warp(ns, res.map);
    return res;
}

}  // namespace duet::dtw
