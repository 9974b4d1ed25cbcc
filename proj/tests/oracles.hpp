#pragma once

// Independent reference implementations used by the unit and acceptance
// suites. These deliberately recompute everything from scratch rather than
// sharing code with the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include "duet/dtw.hpp"
#include "duet/eval.hpp"
#include "duet/midi.hpp"
#include "duet/segment.hpp"

namespace oracles {

// ---------------------------------------------------------------------------
// Full-matrix DTW with the same step rule and tie-break as the banded
// implementation.

inline duet::dtw::WarpPath full_dtw(const duet::dsp::Cqt& x, const duet::dsp::Cqt& y,
                                    double penalty) {
    const size_t n = x.n_frames, m = y.n_frames;
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> cost(n * m, inf);
    std::vector<uint8_t> step(n * m, 0);
    auto idx = [m](size_t i, size_t j) { return i * m + j; };
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = 0; j < m; ++j) {
            double d = duet::dtw::cosine_distance(x.frame(i), y.frame(j), x.n_bins);
            if (i == 0 && j == 0) {
                cost[idx(i, j)] = d;
                continue;
            }
            double diag = (i > 0 && j > 0) ? cost[idx(i - 1, j - 1)] : inf;
            double vert = i > 0 ? cost[idx(i - 1, j)] : inf;
            double horz = j > 0 ? cost[idx(i, j - 1)] : inf;
            double best = diag + d;
            uint8_t s = 1;
            if (vert + d + penalty < best) {
                best = vert + d + penalty;
                s = 2;
            }
            if (horz + d + penalty < best) {
                best = horz + d + penalty;
                s = 3;
            }
            cost[idx(i, j)] = best;
            step[idx(i, j)] = s;
        }
    }
    duet::dtw::WarpPath path;
    path.total_cost = cost[idx(n - 1, m - 1)];
    size_t i = n - 1, j = m - 1;
    while (true) {
        path.pairs.emplace_back(int32_t(i), int32_t(j));
        if (i == 0 && j == 0) break;
        switch (step[idx(i, j)]) {
            case 1: --i; --j; break;
            case 2: --i; break;
            default: --j; break;
        }
    }
    std::reverse(path.pairs.begin(), path.pairs.end());
    return path;
}

// ---------------------------------------------------------------------------
// Exhaustive reference for the duration-constrained segmentation search:
// enumerate every subset of candidate silences as a cut set, keep the ones
// the documented processing order can reach, and rank reachable cut sets by
// their decision sequences.

struct SegOraclePlan {
    bool found = false;
    std::vector<double> cuts;  // ascending
};

struct SegOracleInput {
    double span_start, span_end;
    std::vector<duet::midi::Silence> silences;  // descending duration
    std::vector<double> durations;
    double tolerance;
    double skip_below;
};

namespace detail {

inline bool seg_tol(double sum, double len, double tol) {
    return std::abs(sum - len) <= tol * len;
}

struct SegDecision {
    int rank;  // candidate-split rank, or -1 for a forced skip
};

inline std::optional<std::vector<SegDecision>> seg_simulate(const SegOracleInput& in,
                                                            const std::vector<bool>& chosen) {
    struct Node {
        double start, end;
        std::vector<double> durs;
    };
    std::vector<Node> state{{in.span_start, in.span_end, in.durations}};
    std::vector<SegDecision> decisions;

    auto solved = [&] {
        for (const auto& n : state)
            if (n.durs.size() != 1) return false;
        return true;
    };

    for (size_t s = 0; s < in.silences.size(); ++s) {
        if (solved()) {
            for (size_t r = s; r < in.silences.size(); ++r)
                if (chosen[r]) return std::nullopt;
            break;
        }
        double cut = 0.5 * (in.silences[s].start + in.silences[s].end);
        size_t idx = state.size();
        for (size_t k = 0; k < state.size(); ++k)
            if (state[k].start < cut && cut < state[k].end) idx = k;
        if (idx == state.size()) return std::nullopt;

        Node& node = state[idx];
        double len_l = cut - node.start, len_r = node.end - cut;
        struct Cand {
            double score;
            size_t prefix;
        };
        std::vector<Cand> cands;
        double total = std::accumulate(node.durs.begin(), node.durs.end(), 0.0);
        double pre = 0.0;
        for (size_t p = 1; p < node.durs.size(); ++p) {
            pre += node.durs[p - 1];
            if (seg_tol(pre, len_l, in.tolerance) && seg_tol(total - pre, len_r, in.tolerance))
                cands.push_back({duet::seg::evenness_score(len_l, len_r, pre, total - pre), p});
        }
        std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
            if (a.score != b.score) return a.score < b.score;
            return a.prefix < b.prefix;
        });

        if (chosen[s]) {
            if (cands.empty()) return std::nullopt;
            // splits preserve duration order, so the prefix size equals one
            // plus the chosen cuts remaining inside this node left of `cut`
            size_t cuts_left = 0;
            for (size_t r = 0; r < in.silences.size(); ++r) {
                if (!chosen[r]) continue;
                double c2 = 0.5 * (in.silences[r].start + in.silences[r].end);
                if (c2 > node.start && c2 < cut) ++cuts_left;
            }
            size_t want_prefix = cuts_left + 1;
            int rank = -1;
            for (size_t c = 0; c < cands.size(); ++c)
                if (cands[c].prefix == want_prefix) rank = int(c);
            if (rank < 0) return std::nullopt;
            decisions.push_back({rank});
            Node left{node.start, cut, {node.durs.begin(), node.durs.begin() + long(want_prefix)}};
            Node right{cut, node.end, {node.durs.begin() + long(want_prefix), node.durs.end()}};
            state[idx] = left;
            state.insert(state.begin() + long(idx) + 1, right);
        } else {
            if (!cands.empty()) return std::nullopt;             // skip must be forced
            if (in.silences[s].duration() >= in.skip_below) return std::nullopt;
            decisions.push_back({-1});
        }
    }
    if (!solved()) return std::nullopt;
    return decisions;
}

}  // namespace detail

inline SegOraclePlan seg_oracle_best(const SegOracleInput& in) {
    size_t k = in.silences.size();
    SegOraclePlan best;
    std::vector<detail::SegDecision> best_decisions;
    for (uint64_t mask = 0; mask < (uint64_t(1) << k); ++mask) {
        std::vector<bool> chosen(k);
        size_t cut_count = 0;
        for (size_t i = 0; i < k; ++i) {
            chosen[i] = (mask >> i) & 1;
            cut_count += chosen[i];
        }
        if (cut_count + 1 != in.durations.size()) continue;
        auto sim = detail::seg_simulate(in, chosen);
        if (!sim) continue;
        bool better = false;
        if (!best.found) {
            better = true;
        } else {
            const auto& a = *sim;
            for (size_t i = 0; i < std::min(a.size(), best_decisions.size()); ++i) {
                int ra = a[i].rank < 0 ? 1 << 20 : a[i].rank;
                int rb = best_decisions[i].rank < 0 ? 1 << 20 : best_decisions[i].rank;
                if (ra != rb) {
                    better = ra < rb;
                    break;
                }
            }
        }
        if (better) {
            best.found = true;
            best_decisions = *sim;
            best.cuts.clear();
            for (size_t i = 0; i < k; ++i)
                if (chosen[i])
                    best.cuts.push_back(0.5 * (in.silences[i].start + in.silences[i].end));
            std::sort(best.cuts.begin(), best.cuts.end());
        }
    }
    return best;
}

// ---------------------------------------------------------------------------
// Exhaustive note matcher: maximum cardinality, then lexicographically
// smallest assignment in (ref order, est index).

struct BruteForceMatcher {
    std::vector<std::vector<int>> cand;
    size_t n_est = 0;
    std::vector<int> best;
    std::vector<int> current;
    int best_size = -1;

    void recurse(size_t r, std::vector<char>& used, int size) {
        if (r == cand.size()) {
            bool better = size > best_size;
            if (size == best_size) {
                for (size_t i = 0; i < cand.size(); ++i) {
                    int a = current[i] < 0 ? 1 << 20 : current[i];
                    int b = best[i] < 0 ? 1 << 20 : best[i];
                    if (a != b) {
                        better = a < b;
                        break;
                    }
                }
            }
            if (better) {
                best = current;
                best_size = size;
            }
            return;
        }
        for (int e : cand[r]) {
            if (used[size_t(e)]) continue;
            used[size_t(e)] = 1;
            current[r] = e;
            recurse(r + 1, used, size + 1);
            used[size_t(e)] = 0;
        }
        current[r] = -1;
        recurse(r + 1, used, size);
    }

    std::vector<std::pair<int, int>> run(const duet::midi::NoteSequence& ref,
                                         const duet::midi::NoteSequence& est,
                                         const duet::eval::MatchConfig& cfg,
                                         duet::eval::NoteFamily family) {
        cand.assign(ref.notes.size(), {});
        n_est = est.notes.size();
        for (size_t r = 0; r < ref.notes.size(); ++r) {
            for (size_t e = 0; e < est.notes.size(); ++e) {
                const auto& rn = ref.notes[r];
                const auto& en = est.notes[e];
                if (rn.pitch != en.pitch) continue;
                if (std::abs(rn.onset - en.onset) > cfg.onset_tolerance) continue;
                if (family != duet::eval::NoteFamily::note) {
                    double tol = std::max(cfg.offset_min_tolerance,
                                          cfg.offset_ratio * (rn.offset - rn.onset));
                    if (std::abs(rn.offset - en.offset) > tol) continue;
                }
                cand[r].push_back(int(e));
            }
        }
        best.assign(cand.size(), -1);
        current.assign(cand.size(), -1);
        best_size = -1;
        std::vector<char> used(n_est, 0);
        recurse(0, used, 0);
        std::vector<std::pair<int, int>> pairs;
        for (size_t r = 0; r < best.size(); ++r)
            if (best[r] >= 0) pairs.emplace_back(int(r), best[r]);
        return pairs;
    }
};

}  // namespace oracles
