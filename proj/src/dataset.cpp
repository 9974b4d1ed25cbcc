#include "duet/dataset.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

namespace duet::data {

namespace {

constexpr std::array<const char*, 3> kSplitNames = {"train", "validation", "test"};

double u01(std::mt19937_64& rng) {
    return double(rng() >> 11) * 0x1.0p-53;
}

uint64_t hash_str(uint64_t seed, const std::string& s) {
    uint64_t h = seed ^ 0x9e3779b97f4a7c15ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    h ^= h >> 33;
    h *= 0xff51afd7ed558ccdULL;
    h ^= h >> 33;
    return h;
}

std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
    try {
        return std::stod(s);
    } catch (const std::exception&) {
        throw std::invalid_argument("bad numeric field: " + s);
    }
}

}  // namespace

std::string to_string(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::validation: return "validation";
        case Split::test: return "test";
        default: return "";
    }
}

Split split_from_string(const std::string& s) {
    if (s == "train") return Split::train;
    if (s == "validation") return Split::validation;
    if (s == "test") return Split::test;
    if (s.empty() || s == "unassigned") return Split::unassigned;
    throw std::invalid_argument("unknown split name: " + s);
}

std::string composition_key(const std::string& composer, const std::string& title) {
    auto fold = [](const std::string& in) {
        std::string out;
        out.reserve(in.size());
        bool pending_space = false;
        for (unsigned char c : in) {
            if (std::isalnum(c)) {
                if (pending_space && !out.empty()) out.push_back(' ');
                pending_space = false;
                out.push_back(char(std::tolower(c)));
            } else if (c >= 0x80) {
                // keep non-ASCII bytes as-is (composer names)
                if (pending_space && !out.empty()) out.push_back(' ');
                pending_space = false;
                out.push_back(char(c));
            } else {
                pending_space = true;  // punctuation and spaces collapse
            }
        }
        return out;
    };
    return fold(composer) + "|" + fold(title);
}

SplitAssignment make_split(const std::vector<ManifestRecord>& records, const SplitConfig& cfg,
                           uint64_t seed) {
    SplitAssignment out;
    if (records.empty()) return out;

    struct Comp {
        std::string key;
        std::string composer_key;
        std::vector<const ManifestRecord*> performances;
        double duration = 0.0;
    };
    std::map<std::string, Comp> comps;
    double total = 0.0;
    for (const auto& r : records) {
        std::string key = composition_key(r.composer, r.title);
        Comp& c = comps[key];
        c.key = key;
        c.composer_key = composition_key(r.composer, "");
        c.performances.push_back(&r);
        c.duration += r.duration;
        total += r.duration;
    }

    std::unordered_map<std::string, int> composer_comp_count;
    for (const auto& [key, c] : comps) composer_comp_count[c.composer_key]++;

    std::array<double, 3> targets = {cfg.targets.train, cfg.targets.validation, cfg.targets.test};
    std::array<double, 3> filled = {0.0, 0.0, 0.0};
    struct ComposerFill {
        double total = 0.0;
        std::array<double, 3> filled = {0.0, 0.0, 0.0};
    };
    std::unordered_map<std::string, ComposerFill> per_composer;
    for (const auto& [key, c] : comps) per_composer[c.composer_key].total += c.duration;

    auto assign = [&](const Comp& c, int split_idx) {
        for (const auto* r : c.performances)
            out.by_performance[r->performance_id] = Split(split_idx);
        filled[size_t(split_idx)] += c.duration;
        per_composer[c.composer_key].filled[size_t(split_idx)] += c.duration;
    };

    // Popular compositions go straight to train.
    std::vector<const Comp*> rest;
    for (const auto& [key, c] : comps) {
        if (int(c.performances.size()) >= cfg.popularity_threshold)
            assign(c, 0);
        else
            rest.push_back(&c);
    }

    // Largest first; equal durations ordered by a seeded hash so different
    // seeds explore different arrangements.
    std::sort(rest.begin(), rest.end(), [&](const Comp* a, const Comp* b) {
        if (a->duration != b->duration) return a->duration > b->duration;
        return hash_str(seed, a->key) < hash_str(seed, b->key);
    });

    for (const Comp* c : rest) {
        const ComposerFill& cf = per_composer[c->composer_key];
        bool use_composer = composer_comp_count[c->composer_key] >= cfg.composer_min_compositions;
        int best = 0;
        double best_score = -1e300;
        for (int s = 0; s < 3; ++s) {
            double score = targets[size_t(s)] - filled[size_t(s)] / total;
            if (use_composer && cf.total > 0)
                score += targets[size_t(s)] - cf.filled[size_t(s)] / cf.total;
            if (score > best_score + 1e-12) {
                best_score = score;
                best = s;
            }
        }
        assign(*c, best);
    }

    // Repair pass: the composer-aware greedy can leave the global proportions
    // a few points off; move whole compositions (never popularity-forced
    // ones) from the most overfull split to the most underfull one while it
    // strictly helps.
    std::unordered_map<std::string, int> placed;
    for (const Comp* c : rest) placed[c->key] = int(out.by_performance[c->performances[0]->performance_id]);
    auto max_dev = [&] {
        double d = 0.0;
        for (int s = 0; s < 3; ++s)
            d = std::max(d, std::abs(filled[size_t(s)] / total - targets[size_t(s)]));
        return d;
    };
    for (int iter = 0; iter < int(rest.size()); ++iter) {
        double current = max_dev();
        if (current <= cfg.proportion_tolerance * 0.5) break;
        const Comp* best_comp = nullptr;
        int best_to = 0;
        double best_after = current;
        for (const Comp* c : rest) {
            int from = placed[c->key];
            for (int to = 0; to < 3; ++to) {
                if (to == from) continue;
                std::array<double, 3> f = filled;
                f[size_t(from)] -= c->duration;
                f[size_t(to)] += c->duration;
                double after = 0.0;
                for (int s = 0; s < 3; ++s)
                    after = std::max(after, std::abs(f[size_t(s)] / total - targets[size_t(s)]));
                if (after < best_after - 1e-12) {
                    best_after = after;
                    best_comp = c;
                    best_to = to;
                }
            }
        }
        if (!best_comp) break;
        int from = placed[best_comp->key];
        filled[size_t(from)] -= best_comp->duration;
        filled[size_t(best_to)] += best_comp->duration;
        per_composer[best_comp->composer_key].filled[size_t(from)] -= best_comp->duration;
        per_composer[best_comp->composer_key].filled[size_t(best_to)] += best_comp->duration;
        placed[best_comp->key] = best_to;
        for (const auto* r : best_comp->performances)
            out.by_performance[r->performance_id] = Split(best_to);
    }

    if (comps.size() == 1)
        out.warnings.push_back("single composition: validation and test are empty");
    return out;
}

SplitReport verify_split(const SplitAssignment& assignment,
                         const std::vector<ManifestRecord>& records, const SplitConfig& cfg) {
    SplitReport rep;

    std::map<std::string, std::array<int, 4>> comp_splits;
    std::array<double, 3> time = {0.0, 0.0, 0.0};
    double total = 0.0;
    for (const auto& r : records) {
        Split s = assignment.of(r.performance_id);
        comp_splits[composition_key(r.composer, r.title)][size_t(s)]++;
        if (s != Split::unassigned) {
            time[size_t(s)] += r.duration;
            total += r.duration;
        } else {
            rep.hard_violations.push_back("unassigned performance: " + r.performance_id);
        }
    }
    for (const auto& [key, counts] : comp_splits) {
        int splits_used = 0;
        for (int s = 0; s < 3; ++s)
            if (counts[size_t(s)] > 0) splits_used++;
        if (splits_used > 1)
            rep.hard_violations.push_back("composition in multiple splits: " + key);
    }

    if (total > 0) {
        rep.fraction_train = time[0] / total;
        rep.fraction_validation = time[1] / total;
        rep.fraction_test = time[2] / total;
        std::array<double, 3> fracs = {rep.fraction_train, rep.fraction_validation,
                                       rep.fraction_test};
        std::array<double, 3> targets = {cfg.targets.train, cfg.targets.validation,
                                         cfg.targets.test};
        for (int s = 0; s < 3; ++s) {
            if (std::abs(fracs[size_t(s)] - targets[size_t(s)]) > cfg.proportion_tolerance)
                rep.soft_violations.push_back(std::string("global ") + kSplitNames[size_t(s)] +
                                              " fraction " + format_double(fracs[size_t(s)]) +
                                              " off target " + format_double(targets[size_t(s)]));
        }
    }
    return rep;
}

std::vector<SplitStats> compute_stats(const std::vector<ManifestRecord>& records,
                                      const std::unordered_map<std::string, size_t>* note_counts) {
    if (records.empty()) return {};
    std::array<SplitStats, 4> acc;
    std::array<std::map<std::string, int>, 4> comp_keys;
    for (int s = 0; s < 4; ++s)
        acc[size_t(s)].split = s < 3 ? kSplitNames[size_t(s)] : "total";

    for (const auto& r : records) {
        Split s = r.split;
        std::string key = composition_key(r.composer, r.title);
        size_t notes = 0;
        if (note_counts) {
            auto it = note_counts->find(r.performance_id);
            if (it != note_counts->end()) notes = it->second;
        }
        auto add = [&](size_t idx) {
            acc[idx].performances++;
            acc[idx].duration_hours += r.duration / 3600.0;
            acc[idx].notes_millions += double(notes) / 1e6;
            comp_keys[idx][key]++;
        };
        if (s != Split::unassigned) add(size_t(s));
        add(3);
    }
    std::vector<SplitStats> out;
    for (int s = 0; s < 4; ++s) {
        acc[size_t(s)].compositions = int(comp_keys[size_t(s)].size());
        if (s == 3 || acc[size_t(s)].performances > 0) out.push_back(acc[size_t(s)]);
    }
    return out;
}

namespace {

size_t roll_frames(const midi::NoteSequence& ns, double frame_rate) {
    return size_t(std::ceil(frame_rate * ns.total_time));
}

void check_pitch(const midi::Note& n) {
    if (n.pitch < 21 || n.pitch > 108)
        throw std::out_of_range("note outside piano range: pitch " + std::to_string(n.pitch) +
                                " at " + std::to_string(n.onset) + " s");
}

Roll empty_roll(size_t frames, double frame_rate) {
    Roll r;
    r.frames = frames;
    r.frame_rate = frame_rate;
    r.data.assign(size_t(r.keys) * frames, 0.0f);
    return r;
}

}  // namespace

Roll onset_roll(const midi::NoteSequence& ns, double frame_rate) {
    Roll r = empty_roll(roll_frames(ns, frame_rate), frame_rate);
    for (const auto& n : ns.notes) {
        check_pitch(n);
        size_t f = size_t(std::floor(n.onset * frame_rate));
        if (f >= r.frames) continue;  // onset exactly at total_time
        float v = float(n.velocity) / 127.0f;
        float& cell = r.at(n.pitch - 21, f);
        cell = std::max(cell, v);
    }
    return r;
}

Roll frame_roll(const midi::NoteSequence& ns, double frame_rate) {
    Roll r = empty_roll(roll_frames(ns, frame_rate), frame_rate);
    for (const auto& n : ns.notes) {
        check_pitch(n);
        // frame f covers [f/rate, (f+1)/rate); mark overlapping frames
        size_t f0 = size_t(std::floor(n.onset * frame_rate));
        for (size_t f = f0; f < r.frames && double(f) < n.offset * frame_rate; ++f)
            r.at(n.pitch - 21, f) = 1.0f;
    }
    return r;
}

LabelRolls training_labels(const midi::NoteSequence& ns, double frame_rate,
                           double offset_window_seconds) {
    LabelRolls out;
    out.onset = onset_roll(ns, frame_rate);
    for (float& v : out.onset.data) v = v > 0.0f ? 1.0f : 0.0f;
    out.frame = frame_roll(ns, frame_rate);
    out.offset = empty_roll(out.frame.frames, frame_rate);
    const size_t window = size_t(std::max(1L, std::lround(offset_window_seconds * frame_rate)));
    for (const auto& n : ns.notes) {
        size_t f0 = size_t(std::floor(n.offset * frame_rate));
        for (size_t f = f0; f < std::min(f0 + window, out.offset.frames); ++f)
            out.offset.at(n.pitch - 21, f) = 1.0f;
    }
    return out;
}

AugmentationSpec sample_augmentation(uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * u01(rng); };
    auto log_uniform = [&](double lo, double hi) {
        return std::exp(uniform(std::log(lo), std::log(hi)));
    };
    AugmentationSpec s;
    s.seed = seed;
    s.pitch_shift = uniform(-0.1, 0.1);
    s.contrast = uniform(0.0, 100.0);
    s.eq1_freq = log_uniform(32.0, 4096.0);
    s.eq2_freq = log_uniform(32.0, 4096.0);
    s.reverb = log_uniform(0.01, 70.0);
    s.pinknoise = uniform(0.0, 0.04);
    return s;
}

std::vector<std::string> emit_effect_chain(const AugmentationSpec& spec) {
    return {
        "pitch",     format_double(spec.pitch_shift),
        "contrast",  format_double(spec.contrast),
        "equalizer", format_double(spec.eq1_freq), "1.0q", "2.0",
        "equalizer", format_double(spec.eq2_freq), "1.0q", "-2.0",
        "reverb",    format_double(spec.reverb),
        "synth",     "pinknoise", "mix", format_double(spec.pinknoise),
    };
}

AugmentationSpec parse_effect_chain(const std::vector<std::string>& args) {
    auto expect = [&](size_t i, const char* tok) {
        if (i >= args.size() || args[i] != tok)
            throw std::invalid_argument("malformed effect chain near position " +
                                        std::to_string(i));
    };
    if (args.size() != 18) throw std::invalid_argument("malformed effect chain length");
    AugmentationSpec s;
    expect(0, "pitch");
    s.pitch_shift = parse_double(args[1]);
    expect(2, "contrast");
    s.contrast = parse_double(args[3]);
    expect(4, "equalizer");
    s.eq1_freq = parse_double(args[5]);
    expect(8, "equalizer");
    s.eq2_freq = parse_double(args[9]);
    expect(12, "reverb");
    s.reverb = parse_double(args[13]);
    expect(14, "synth");
    expect(15, "pinknoise");
    expect(16, "mix");
    s.pinknoise = parse_double(args[17]);
    return s;
}

namespace {

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false;
    size_t i = 0;
    auto end_field = [&]() {
        row.push_back(std::move(field));
        field.clear();
    };
    auto end_row = [&]() {
        end_field();
        if (row.size() > 1 || !row[0].empty()) rows.push_back(std::move(row));
        row.clear();
    };
    while (i < text.size()) {
        char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            end_field();
        } else if (c == '\n') {
            end_row();
        } else if (c != '\r') {
            field.push_back(c);
        }
        ++i;
    }
    if (!field.empty() || !row.empty()) end_row();
    return rows;
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out += "\"";
    return out;
}

constexpr const char* kManifestHeader =
    "canonical_composer,canonical_title,split,year,midi_filename,audio_filename,duration";

}  // namespace

std::vector<ManifestRecord> parse_manifest_csv(const std::string& text) {
    auto rows = parse_csv(text);
    if (rows.empty()) throw std::invalid_argument("empty manifest");
    const std::vector<std::string> expected = {"canonical_composer", "canonical_title", "split",
                                               "year",               "midi_filename",   "audio_filename",
                                               "duration"};
    std::vector<int> idx(expected.size(), -1);
    for (size_t e = 0; e < expected.size(); ++e)
        for (size_t c = 0; c < rows[0].size(); ++c)
            if (rows[0][c] == expected[e]) idx[e] = int(c);
    for (size_t e = 0; e < expected.size(); ++e)
        if (idx[e] < 0)
            throw std::invalid_argument("manifest missing column: " + expected[e]);

    std::vector<ManifestRecord> out;
    for (size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        auto get = [&](size_t e) -> std::string {
            return size_t(idx[e]) < row.size() ? row[size_t(idx[e])] : "";
        };
        ManifestRecord rec;
        rec.composer = get(0);
        rec.title = get(1);
        rec.split = split_from_string(get(2));
        rec.year = get(3).empty() ? 0 : int(std::stol(get(3)));
        rec.midi_path = get(4);
        rec.audio_path = get(5);
        rec.duration = get(6).empty() ? 0.0 : parse_double(get(6));
        rec.performance_id = rec.midi_path;
        out.push_back(std::move(rec));
    }
    return out;
}

std::string format_manifest_csv(const std::vector<ManifestRecord>& records) {
    std::string out = kManifestHeader;
    out += "\n";
    for (const auto& r : records) {
        out += csv_escape(r.composer) + "," + csv_escape(r.title) + "," + to_string(r.split) +
               "," + std::to_string(r.year) + "," + csv_escape(r.midi_path) + "," +
               csv_escape(r.audio_path) + "," + format_double(r.duration) + "\n";
    }
    return out;
}

std::vector<ManifestRecord> read_manifest_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::invalid_argument("cannot open manifest: " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_manifest_csv(ss.str());
}

void write_manifest_csv(const std::vector<ManifestRecord>& records, const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::invalid_argument("cannot open for writing: " + path);
    f << format_manifest_csv(records);
}

void write_roll_file(const Roll& roll, const std::string& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::invalid_argument("cannot open for writing: " + path);
    f.write("DUETROLL", 8);
    uint32_t keys = uint32_t(roll.keys);
    uint64_t frames = roll.frames;
    double rate = roll.frame_rate;
    f.write(reinterpret_cast<const char*>(&keys), 4);
    f.write(reinterpret_cast<const char*>(&frames), 8);
    f.write(reinterpret_cast<const char*>(&rate), 8);
    f.write(reinterpret_cast<const char*>(roll.data.data()),
            std::streamsize(roll.data.size() * sizeof(float)));
}

Roll read_roll_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::invalid_argument("cannot open roll file: " + path);
    char magic[8];
    f.read(magic, 8);
    if (!f || std::memcmp(magic, "DUETROLL", 8) != 0)
        throw std::invalid_argument("not a roll file: " + path);
    uint32_t keys = 0;
    uint64_t frames = 0;
    double rate = 0.0;
    f.read(reinterpret_cast<char*>(&keys), 4);
    f.read(reinterpret_cast<char*>(&frames), 8);
    f.read(reinterpret_cast<char*>(&rate), 8);
    Roll roll;
    roll.keys = int(keys);
    roll.frames = frames;
    roll.frame_rate = rate;
    roll.data.resize(size_t(keys) * frames);
    f.read(reinterpret_cast<char*>(roll.data.data()),
           std::streamsize(roll.data.size() * sizeof(float)));
    if (!f) throw std::invalid_argument("truncated roll file: " + path);
    return roll;
}

}  // namespace duet::data
