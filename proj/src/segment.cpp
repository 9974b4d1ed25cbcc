#include "duet/segment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace duet::seg {

namespace {

struct Span {
    double start, end;
};

Span noted_span(const midi::NoteSequence& ns) {
    double start = ns.notes.front().onset;
    double end = 0.0;
    for (const auto& n : ns.notes) end = std::max(end, n.offset);
    return {start, end};
}

// One search node: an interval plus the durations it must eventually hold.
struct Node {
    Interval iv;
    std::vector<double> durs;
};

bool within_tolerance(double sum, double len, double tolerance) {
    return std::abs(sum - len) <= tolerance * len;
}

struct Searcher {
    const std::vector<midi::Silence>& silences;  // descending duration
    double tolerance;
    double skip_silence_below;

    bool solved(const std::vector<Node>& state) const {
        return std::all_of(state.begin(), state.end(),
                           [](const Node& n) { return n.durs.size() == 1; });
    }

    bool dfs(std::vector<Node>& state, size_t sidx, SegmentPlan& out) {
        if (solved(state)) {
            out.intervals.clear();
            out.assignment.clear();
            for (const auto& n : state) {
                out.intervals.push_back(n.iv);
                out.assignment.push_back(n.durs);
            }
            return true;
        }
        if (sidx >= silences.size()) return false;  // only short silences remain

        const midi::Silence& s = silences[sidx];
        double cut = 0.5 * (s.start + s.end);
        size_t node_idx = state.size();
        for (size_t k = 0; k < state.size(); ++k) {
            if (state[k].iv.start < cut && cut < state[k].iv.end) {
                node_idx = k;
                break;
            }
        }
        if (node_idx == state.size()) {
            // Midpoint landed on/behind an existing boundary; treat as unusable.
            return s.duration() < skip_silence_below ? dfs(state, sidx + 1, out) : false;
        }

        const Node node = state[size_t(node_idx)];
        double len_l = cut - node.iv.start;
        double len_r = node.iv.end - cut;

        struct Candidate {
            double score;
            size_t split;  // prefix length
        };
        std::vector<Candidate> cands;
        double prefix = 0.0;
        double total = std::accumulate(node.durs.begin(), node.durs.end(), 0.0);
        for (size_t p = 1; p < node.durs.size(); ++p) {
            prefix += node.durs[p - 1];
            double suffix = total - prefix;
            if (within_tolerance(prefix, len_l, tolerance) &&
                within_tolerance(suffix, len_r, tolerance))
                cands.push_back({evenness_score(len_l, len_r, prefix, suffix), p});
        }
        std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
            if (a.score != b.score) return a.score < b.score;
            return a.split < b.split;
        });

        if (cands.empty())
            return s.duration() < skip_silence_below ? dfs(state, sidx + 1, out) : false;

        for (const auto& c : cands) {
            std::vector<Node> next(state.begin(), state.begin() + long(node_idx));
            next.push_back({{node.iv.start, cut},
                            {node.durs.begin(), node.durs.begin() + long(c.split)}});
            next.push_back({{cut, node.iv.end},
                            {node.durs.begin() + long(c.split), node.durs.end()}});
            next.insert(next.end(), state.begin() + long(node_idx) + 1, state.end());
            if (dfs(next, sidx + 1, out)) return true;
        }
        return false;
    }
};

}  // namespace

std::vector<Segment> greedy_segment(const midi::NoteSequence& ns, int n_pieces,
                                    std::vector<std::string>* warnings) {
    if (n_pieces < 1) throw std::invalid_argument("n_pieces must be at least 1");
    if (ns.notes.empty()) throw std::invalid_argument("empty note sequence");

    Span span = noted_span(ns);
    auto silences = midi::find_silences(ns, 1e-9);
    size_t cuts_wanted = size_t(n_pieces - 1);
    if (silences.size() < cuts_wanted) {
        if (warnings)
            warnings->push_back("wanted " + std::to_string(n_pieces) + " pieces but only " +
                                std::to_string(silences.size() + 1) + " are separable");
        cuts_wanted = silences.size();
    }
    std::vector<double> cuts;
    for (size_t i = 0; i < cuts_wanted; ++i)
        cuts.push_back(0.5 * (silences[i].start + silences[i].end));
    std::sort(cuts.begin(), cuts.end());

    std::vector<Segment> out;
    double prev = span.start;
    for (size_t i = 0; i < cuts.size(); ++i) {
        out.push_back({prev, cuts[i], int(i)});
        prev = cuts[i];
    }
    out.push_back({prev, span.end, int(cuts.size())});
    return out;
}

double evenness_score(double interval_len_a, double interval_len_b, double sum_a, double sum_b) {
    if (interval_len_a <= 0 || interval_len_b <= 0 || sum_a <= 0 || sum_b <= 0)
        throw std::invalid_argument("evenness_score expects positive lengths");
    return std::abs(sum_a / interval_len_a - sum_b / interval_len_b);
}

SegmentPlan backtracking_segment(const midi::NoteSequence& ns, const std::vector<double>& durations,
                                 double tolerance, double min_silence,
                                 double skip_silence_below) {
    if (durations.empty()) throw std::invalid_argument("durations must be non-empty");
    if (ns.notes.empty()) throw std::invalid_argument("empty note sequence");
    Span span = noted_span(ns);
    double total = std::accumulate(durations.begin(), durations.end(), 0.0);
    if (total > (span.end - span.start) * (1.0 + tolerance))
        throw std::invalid_argument("expected durations exceed the noted span");

    auto silences = midi::find_silences(ns, min_silence);
    Searcher searcher{silences, tolerance, skip_silence_below};
    std::vector<Node> state{{{span.start, span.end}, durations}};
    SegmentPlan plan;
    plan.tolerance = tolerance;
    if (!searcher.dfs(state, 0, plan)) throw NoSegmentationFound();
    return plan;
}

std::vector<Segment> finalize_segments(const midi::NoteSequence& ns,
                                       const std::vector<Segment>& segments, double padding,
                                       int edge_cluster_max_notes, double edge_silence) {
    std::vector<Segment> sorted = segments;
    std::sort(sorted.begin(), sorted.end(),
              [](const Segment& a, const Segment& b) { return a.start < b.start; });

    struct Bound {
        double start, end;
        int piece_index;
    };
    std::vector<Bound> bounds;
    for (const auto& seg : sorted) {
        std::vector<const midi::Note*> in;
        for (const auto& n : ns.notes)
            if (n.onset >= seg.start && n.onset < seg.end) in.push_back(&n);

        double start = seg.start, end = seg.end;
        if (!in.empty()) {
            size_t lo = 0, hi = in.size();  // body is [lo, hi)
            bool trimmed_front = false, trimmed_back = false;
            // Leading clusters: a small group a long silence before the rest.
            bool again = true;
            while (again) {
                again = false;
                double cover = in[lo]->offset;
                for (size_t k = lo; k + 1 < hi && k - lo < size_t(edge_cluster_max_notes); ++k) {
                    cover = std::max(cover, in[k]->offset);
                    if (in[k + 1]->onset - cover >= edge_silence) {
                        lo = k + 1;
                        trimmed_front = again = true;
                        break;
                    }
                }
            }
            // pmax[q]: latest offset among in[lo..q]
            std::vector<double> pmax(hi);
            double cover = 0.0;
            for (size_t q = lo; q < hi; ++q) {
                cover = std::max(cover, in[q]->offset);
                pmax[q] = cover;
            }
            again = true;
            while (again) {
                again = false;
                for (size_t k = hi - 1; k > lo && hi - k <= size_t(edge_cluster_max_notes); --k) {
                    if (in[k]->onset - pmax[k - 1] >= edge_silence) {
                        hi = k;
                        trimmed_back = again = true;
                        break;
                    }
                }
            }
            if (trimmed_front) start = in[lo]->onset;
            if (trimmed_back) end = pmax[hi - 1];
        }
        bounds.push_back({start, end, seg.piece_index});
    }

    std::vector<Segment> out;
    for (size_t i = 0; i < bounds.size(); ++i) {
        double start = bounds[i].start - padding;
        double end = bounds[i].end + padding;
        if (i > 0) {
            double mid = 0.5 * (bounds[i - 1].end + bounds[i].start);
            start = std::max(start, mid);
        }
        if (i + 1 < bounds.size()) {
            double mid = 0.5 * (bounds[i].end + bounds[i + 1].start);
            end = std::min(end, mid);
        }
        start = std::clamp(start, 0.0, ns.total_time);
        end = std::clamp(end, 0.0, ns.total_time);
        out.push_back({start, end, bounds[i].piece_index});
    }
    return out;
}

midi::NoteSequence slice_sequence(const midi::NoteSequence& ns, double start, double end) {
    midi::NoteSequence out;
    for (const auto& n : ns.notes) {
        if (n.offset <= start || n.onset >= end) continue;
        midi::Note c = n;
        c.onset = std::max(n.onset, start) - start;
        c.offset = std::min(n.offset, end) - start;
        if (c.offset > c.onset) out.notes.push_back(c);
    }
    // carry the pedal value in effect at the cut so sustain realization of
    // the slice matches the original
    int carried = 0;
    for (const auto& p : ns.pedal_events) {
        if (p.time < start) carried = p.value;
        else if (p.time < end) out.pedal_events.push_back({p.time - start, p.value});
    }
    if (carried > 0) out.pedal_events.insert(out.pedal_events.begin(), {0.0, carried});
    out.total_time = end - start;
    out.normalize();
    return out;
}

}  // namespace duet::seg
