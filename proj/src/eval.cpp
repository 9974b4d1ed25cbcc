#include "duet/eval.hpp"

#include <algorithm>
#include <cmath>

namespace duet::eval {

namespace {

// Kuhn's augmenting-path matching over explicit candidate lists.
struct Matcher {
    const std::vector<std::vector<int>>& cand;  // per ref, admissible est indices
    std::vector<int> est_to_ref;
    std::vector<char> visited;

    explicit Matcher(const std::vector<std::vector<int>>& c, size_t n_est)
        : cand(c), est_to_ref(n_est, -1) {}

    bool augment(int r, const std::vector<char>& ref_banned, const std::vector<char>& est_banned) {
        for (int e : cand[size_t(r)]) {
            if (est_banned[size_t(e)] || visited[size_t(e)]) continue;
            visited[size_t(e)] = 1;
            int holder = est_to_ref[size_t(e)];
            if (holder < 0 ||
                (!ref_banned[size_t(holder)] && augment(holder, ref_banned, est_banned))) {
                est_to_ref[size_t(e)] = r;
                return true;
            }
        }
        return false;
    }

    // Maximum matching size over refs in `use` with banned columns excluded.
    int run(const std::vector<int>& use, const std::vector<char>& ref_banned,
            const std::vector<char>& est_banned) {
        std::fill(est_to_ref.begin(), est_to_ref.end(), -1);
        int size = 0;
        for (int r : use) {
            if (ref_banned[size_t(r)]) continue;
            visited.assign(est_to_ref.size(), 0);
            if (augment(r, ref_banned, est_banned)) ++size;
        }
        return size;
    }
};

}  // namespace

Prf prf_from_counts(size_t tp, size_t est_count, size_t ref_count) {
    Prf out;
    out.precision = est_count ? double(tp) / double(est_count) : 0.0;
    out.recall = ref_count ? double(tp) / double(ref_count) : 0.0;
    double pr = out.precision + out.recall;
    out.f1 = pr > 0.0 ? 2.0 * out.precision * out.recall / pr : 0.0;
    return out;
}

Prf frame_scores(const data::Roll& ref, const data::Roll& est) {
    if (ref.keys != est.keys) throw std::invalid_argument("key count mismatch");
    size_t frames = std::max(ref.frames, est.frames);
    size_t tp = 0, fp = 0, fn = 0;
    for (int k = 0; k < ref.keys; ++k) {
        for (size_t f = 0; f < frames; ++f) {
            bool r = f < ref.frames && ref.at(k, f) > 0.0f;
            bool e = f < est.frames && est.at(k, f) > 0.0f;
            if (r && e) ++tp;
            else if (e) ++fp;
            else if (r) ++fn;
        }
    }
    return prf_from_counts(tp, tp + fp, tp + fn);
}

std::vector<std::pair<int, int>> match_notes(const midi::NoteSequence& ref,
                                             const midi::NoteSequence& est,
                                             const MatchConfig& cfg, NoteFamily family) {
    const auto& rn = ref.notes;
    const auto& en = est.notes;
    const bool with_offset = family != NoteFamily::note;

    std::vector<std::vector<int>> cand(rn.size());
    for (size_t r = 0; r < rn.size(); ++r) {
        for (size_t e = 0; e < en.size(); ++e) {
            if (rn[r].pitch != en[e].pitch) continue;
            if (std::abs(rn[r].onset - en[e].onset) > cfg.onset_tolerance) continue;
            if (with_offset) {
                double tol = std::max(cfg.offset_min_tolerance,
                                      cfg.offset_ratio * (rn[r].offset - rn[r].onset));
                if (std::abs(rn[r].offset - en[e].offset) > tol) continue;
            }
            cand[r].push_back(int(e));
        }
        // est candidates in onset order (notes are already onset-sorted, so
        // index order is onset order)
    }

    std::vector<int> all_refs(rn.size());
    for (size_t r = 0; r < rn.size(); ++r) all_refs[r] = int(r);
    std::vector<char> no_ref(rn.size(), 0), no_est(en.size(), 0);
    Matcher matcher(cand, en.size());
    const int full = matcher.run(all_refs, no_ref, no_est);

    // Deterministic refinement: take refs in onset order, each pinned to its
    // earliest est candidate that still allows a maximum matching.
    std::vector<std::pair<int, int>> pairs;
    std::vector<char> ref_used(rn.size(), 0), est_used(en.size(), 0);
    int remaining = full;
    for (size_t r = 0; r < rn.size() && remaining > 0; ++r) {
        for (int e : cand[r]) {
            if (est_used[size_t(e)]) continue;
            ref_used[r] = 1;
            est_used[size_t(e)] = 1;
            std::vector<int> rest;
            for (size_t q = r + 1; q < rn.size(); ++q) rest.push_back(int(q));
            int sub = matcher.run(rest, ref_used, est_used);
            if (sub + int(pairs.size()) + 1 == full) {
                pairs.emplace_back(int(r), e);
                --remaining;
                break;
            }
            ref_used[r] = 0;
            est_used[size_t(e)] = 0;
        }
    }
    return pairs;
}

Prf note_scores(const midi::NoteSequence& ref, const midi::NoteSequence& est,
                const MatchConfig& cfg, NoteFamily family) {
    auto pairs = match_notes(ref, est, cfg, family);
    size_t tp = pairs.size();
    if (family == NoteFamily::note_with_offset_velocity && !pairs.empty()) {
        // Least-squares scale of matched est velocities onto ref, then drop
        // pairs outside the tolerance. Velocities normalized to [0,1].
        double num = 0.0, den = 0.0;
        for (auto [r, e] : pairs) {
            double rv = ref.notes[size_t(r)].velocity / 127.0;
            double ev = est.notes[size_t(e)].velocity / 127.0;
            num += rv * ev;
            den += ev * ev;
        }
        double scale = den > 0.0 ? num / den : 1.0;
        tp = 0;
        for (auto [r, e] : pairs) {
            double rv = ref.notes[size_t(r)].velocity / 127.0;
            double ev = est.notes[size_t(e)].velocity / 127.0;
            if (std::abs(scale * ev - rv) <= cfg.velocity_tolerance) ++tp;
        }
    }
    return prf_from_counts(tp, est.notes.size(), ref.notes.size());
}

EvalScores score_pair(const midi::NoteSequence& ref, const midi::NoteSequence& est,
                      const MatchConfig& cfg) {
    EvalScores s;
    double rate = 1.0 / cfg.frame_size;
    s.frame = frame_scores(data::frame_roll(ref, rate), data::frame_roll(est, rate));
    s.note = note_scores(ref, est, cfg, NoteFamily::note);
    s.note_with_offset = note_scores(ref, est, cfg, NoteFamily::note_with_offset);
    s.note_with_offset_velocity =
        note_scores(ref, est, cfg, NoteFamily::note_with_offset_velocity);
    return s;
}

EvalScores aggregate(std::span<const EvalScores> per_piece) {
    EvalScores out;
    if (per_piece.empty()) return out;
    auto add = [](Prf& acc, const Prf& x) {
        acc.precision += x.precision;
        acc.recall += x.recall;
        acc.f1 += x.f1;
    };
    for (const auto& s : per_piece) {
        add(out.frame, s.frame);
        add(out.note, s.note);
        add(out.note_with_offset, s.note_with_offset);
        add(out.note_with_offset_velocity, s.note_with_offset_velocity);
    }
    auto div = [n = double(per_piece.size())](Prf& p) {
        p.precision /= n;
        p.recall /= n;
        p.f1 /= n;
    };
    div(out.frame);
    div(out.note);
    div(out.note_with_offset);
    div(out.note_with_offset_velocity);
    return out;
}

}  // namespace duet::eval
