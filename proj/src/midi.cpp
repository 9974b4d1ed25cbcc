#include "duet/midi.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>

namespace duet::midi {

namespace {

constexpr double kMinNoteLength = 1e-9;

struct Reader {
    std::span<const uint8_t> data;
    size_t pos = 0;

    size_t remaining() const { return data.size() - pos; }

    uint8_t u8() {
        if (pos >= data.size()) throw MidiError("truncated track data");
        return data[pos++];
    }
    uint16_t u16() { return uint16_t(u8()) << 8 | u8(); }
    uint32_t u32() {
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v = v << 8 | u8();
        return v;
    }
    // Variable-length quantity, at most 4 bytes.
    uint32_t vlq() {
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            uint8_t b = u8();
            v = v << 7 | (b & 0x7f);
            if (!(b & 0x80)) return v;
        }
        throw MidiError("variable-length quantity longer than 4 bytes");
    }
    void skip(size_t n) {
        if (remaining() < n) throw MidiError("truncated track data");
        pos += n;
    }
};

// Raw timed event collected from all tracks before tick->seconds conversion.
struct TickEvent {
    uint64_t tick;
    uint8_t kind;  // 0 = note-off, 1 = note-on, 2 = cc64
    uint8_t pitch;
    uint8_t value;  // velocity or controller value
    uint32_t order; // stable merge order within a tick
};

struct TempoChange {
    uint64_t tick;
    uint32_t us_per_qn;
};

// Piecewise-linear tick to seconds conversion under a sorted tempo map.
class TickClock {
public:
    TickClock(std::vector<TempoChange> changes, int ticks_per_qn)
        : ticks_per_qn_(ticks_per_qn) {
        std::stable_sort(changes.begin(), changes.end(),
                         [](const TempoChange& a, const TempoChange& b) { return a.tick < b.tick; });
        uint64_t prev_tick = 0;
        double prev_sec = 0.0;
        uint32_t tempo = 500000;  // MIDI default, 120 BPM
        for (const auto& c : changes) {
            prev_sec += double(c.tick - prev_tick) * tempo * 1e-6 / ticks_per_qn_;
            prev_tick = c.tick;
            tempo = c.us_per_qn;
            knots_.push_back({prev_tick, prev_sec, tempo});
        }
        if (knots_.empty() || knots_.front().tick != 0)
            knots_.insert(knots_.begin(), {0, 0.0, 500000});
    }

    double seconds(uint64_t tick) const {
        // knots_ sorted by tick; find last knot at or before tick
        size_t lo = 0, hi = knots_.size();
        while (hi - lo > 1) {
            size_t mid = (lo + hi) / 2;
            if (knots_[mid].tick <= tick) lo = mid; else hi = mid;
        }
        const Knot& k = knots_[lo];
        return k.sec + double(tick - k.tick) * k.us_per_qn * 1e-6 / ticks_per_qn_;
    }

private:
    struct Knot {
        uint64_t tick;
        double sec;
        uint32_t us_per_qn;
    };
    std::vector<Knot> knots_;
    int ticks_per_qn_;
};

void warn(std::vector<std::string>* warnings, std::string msg) {
    if (warnings) warnings->push_back(std::move(msg));
}

}  // namespace

void NoteSequence::sort_notes() {
    std::stable_sort(notes.begin(), notes.end(), [](const Note& a, const Note& b) {
        if (a.onset != b.onset) return a.onset < b.onset;
        if (a.pitch != b.pitch) return a.pitch < b.pitch;
        return a.offset < b.offset;
    });
}

void NoteSequence::normalize() {
    sort_notes();
    double max_off = 0.0;
    for (const auto& n : notes) max_off = std::max(max_off, n.offset);
    total_time = std::max(total_time, max_off);
}

NoteSequence parse_smf(std::span<const uint8_t> data, std::vector<std::string>* warnings) {
    Reader r{data};
    if (r.remaining() < 14) throw MidiError("malformed header chunk: file too short");
    if (std::memcmp(data.data(), "MThd", 4) != 0) throw MidiError("malformed header chunk: bad magic");
    r.pos = 4;
    uint32_t header_len = r.u32();
    if (header_len < 6) throw MidiError("malformed header chunk: bad length");
    uint16_t format = r.u16();
    uint16_t ntrks = r.u16();
    uint16_t division = r.u16();
    r.skip(header_len - 6);
    if (format > 1) throw MidiError("unsupported SMF format " + std::to_string(format));
    if (division & 0x8000) throw MidiError("SMPTE time division not supported");
    if (division == 0) throw MidiError("malformed header chunk: zero division");

    std::vector<TickEvent> events;
    std::vector<TempoChange> tempos;
    uint32_t order = 0;

    for (uint16_t t = 0; t < ntrks; ++t) {
        if (r.remaining() < 8) throw MidiError("truncated track chunk header");
        if (std::memcmp(data.data() + r.pos, "MTrk", 4) != 0) {
            // Unknown chunk types are skipped per the SMF spec.
            r.pos += 4;
            uint32_t len = r.u32();
            r.skip(len);
            --t;
            continue;
        }
        r.pos += 4;
        uint32_t len = r.u32();
        if (r.remaining() < len) throw MidiError("truncated track");
        size_t track_end = r.pos + len;

        uint64_t tick = 0;
        uint8_t running = 0;
        bool ended = false;
        while (r.pos < track_end && !ended) {
            tick += r.vlq();
            uint8_t status = r.u8();
            if (status < 0x80) {
                if (running < 0x80) throw MidiError("data byte without running status");
                --r.pos;
                status = running;
            }
            switch (status & 0xF0) {
                case 0x80: {  // note-off
                    uint8_t pitch = r.u8();
                    r.u8();  // release velocity, unused
                    events.push_back({tick, 0, pitch, 0, order++});
                    running = status;
                    break;
                }
                case 0x90: {  // note-on (velocity 0 == note-off)
                    uint8_t pitch = r.u8();
                    uint8_t vel = r.u8();
                    events.push_back({tick, uint8_t(vel > 0 ? 1 : 0), pitch, vel, order++});
                    running = status;
                    break;
                }
                case 0xA0:  // poly aftertouch
                case 0xB0:  // control change
                case 0xE0: {  // pitch bend
                    uint8_t d1 = r.u8();
                    uint8_t d2 = r.u8();
                    if ((status & 0xF0) == 0xB0 && d1 == 64)
                        events.push_back({tick, 2, 0, d2, order++});
                    running = status;
                    break;
                }
                case 0xC0:  // program change
                case 0xD0:  // channel aftertouch
                    r.u8();
                    running = status;
                    break;
                case 0xF0:
                    if (status == 0xFF) {
                        uint8_t type = r.u8();
                        uint32_t mlen = r.vlq();
                        if (type == 0x51) {
                            if (mlen != 3) throw MidiError("malformed tempo meta event");
                            uint32_t us = uint32_t(r.u8()) << 16 | uint32_t(r.u8()) << 8 | r.u8();
                            tempos.push_back({tick, us});
                        } else if (type == 0x2F) {
                            r.skip(mlen);
                            ended = true;
                        } else {
                            r.skip(mlen);
                        }
                    } else if (status == 0xF0 || status == 0xF7) {
                        uint32_t slen = r.vlq();
                        r.skip(slen);
                    } else {
                        throw MidiError("unexpected system realtime byte in file");
                    }
                    running = 0;
                    break;
                default:
                    throw MidiError("invalid status byte");
            }
        }
        if (!ended) warn(warnings, "track " + std::to_string(t) + " missing end-of-track meta");
        r.pos = track_end;
    }

    // Merge all tracks into one timeline, then match note pairs.
    std::stable_sort(events.begin(), events.end(), [](const TickEvent& a, const TickEvent& b) {
        if (a.tick != b.tick) return a.tick < b.tick;
        if (a.kind != b.kind) return a.kind < b.kind;  // offs before ons at a tick
        return a.order < b.order;
    });

    TickClock clock(std::move(tempos), division);
    NoteSequence ns;
    struct Open {
        double onset;
        int velocity;
    };
    std::map<int, Open> open;  // at most one open note per pitch
    uint64_t last_tick = 0;

    auto close = [&](int pitch, const Open& o, double off_time) {
        if (off_time - o.onset > kMinNoteLength)
            ns.notes.push_back({pitch, o.onset, off_time, o.velocity});
    };

    for (const auto& e : events) {
        last_tick = std::max(last_tick, e.tick);
        double time = clock.seconds(e.tick);
        if (e.kind == 2) {
            ns.pedal_events.push_back({time, e.value});
        } else if (e.kind == 1) {
            auto it = open.find(e.pitch);
            if (it != open.end()) {
                // Same-pitch overlap: the earlier note is truncated at the re-strike.
                close(e.pitch, it->second, time);
                open.erase(it);
            }
            open.emplace(e.pitch, Open{time, e.value});
        } else {
            auto it = open.find(e.pitch);
            if (it == open.end()) continue;  // stray note-off
            close(e.pitch, it->second, time);
            open.erase(it);
        }
    }
    if (!open.empty()) {
        double end_time = clock.seconds(last_tick);
        for (const auto& [pitch, o] : open) {
            warn(warnings, "unmatched note-on for pitch " + std::to_string(pitch) +
                               ", closed at end of track");
            close(pitch, o, std::max(end_time, o.onset + 1e-3));
        }
    }
    ns.normalize();
    return ns;
}

std::vector<uint8_t> write_smf(const NoteSequence& ns) {
    constexpr int kTicksPerQn = 480;
    constexpr uint32_t kUsPerQn = 500000;  // 120 BPM
    constexpr double kTicksPerSecond = kTicksPerQn * 1e6 / kUsPerQn;

    auto to_tick = [&](double sec) -> uint64_t {
        return uint64_t(std::llround(std::max(0.0, sec) * kTicksPerSecond));
    };

    struct Event {
        uint64_t tick;
        uint8_t kind;  // 0 = off, 1 = on, 2 = cc64
        uint8_t pitch;
        uint8_t value;
    };
    std::vector<Event> events;
    events.reserve(ns.notes.size() * 2 + ns.pedal_events.size());
    for (const auto& n : ns.notes) {
        uint64_t on = to_tick(n.onset);
        uint64_t off = std::max(to_tick(n.offset), on + 1);
        events.push_back({on, 1, uint8_t(n.pitch), uint8_t(n.velocity)});
        events.push_back({off, 0, uint8_t(n.pitch), 0});
    }
    for (const auto& p : ns.pedal_events)
        events.push_back({to_tick(p.time), 2, 0, uint8_t(p.value)});

    std::stable_sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
        if (a.tick != b.tick) return a.tick < b.tick;
        return a.kind < b.kind;
    });

    std::vector<uint8_t> track;
    auto put_vlq = [&](uint64_t v) {
        uint8_t buf[5];
        int n = 0;
        do {
            buf[n++] = v & 0x7f;
            v >>= 7;
        } while (v);
        for (int i = n - 1; i >= 0; --i) track.push_back(uint8_t(buf[i] | (i ? 0x80 : 0)));
    };

    // Tempo meta first so the whole file is at the fixed tempo.
    put_vlq(0);
    track.insert(track.end(), {0xFF, 0x51, 0x03, uint8_t(kUsPerQn >> 16), uint8_t(kUsPerQn >> 8),
                               uint8_t(kUsPerQn)});
    uint64_t prev = 0;
    for (const auto& e : events) {
        put_vlq(e.tick - prev);
        prev = e.tick;
        if (e.kind == 2) {
            track.push_back(0xB0);
            track.push_back(64);
            track.push_back(e.value);
        } else if (e.kind == 1) {
            track.push_back(0x90);
            track.push_back(e.pitch);
            track.push_back(e.value);
        } else {
            track.push_back(0x80);
            track.push_back(e.pitch);
            track.push_back(0x40);
        }
    }
    put_vlq(0);
    track.insert(track.end(), {0xFF, 0x2F, 0x00});

    std::vector<uint8_t> out;
    auto put_u32 = [&](uint32_t v) {
        out.push_back(v >> 24);
        out.push_back(v >> 16 & 0xff);
        out.push_back(v >> 8 & 0xff);
        out.push_back(v & 0xff);
    };
    out.insert(out.end(), {'M', 'T', 'h', 'd'});
    put_u32(6);
    out.insert(out.end(), {0, 0, 0, 1});  // format 0, one track
    out.push_back(kTicksPerQn >> 8);
    out.push_back(kTicksPerQn & 0xff);
    out.insert(out.end(), {'M', 'T', 'r', 'k'});
    put_u32(uint32_t(track.size()));
    out.insert(out.end(), track.begin(), track.end());
    return out;
}

NoteSequence apply_sustain(const NoteSequence& ns, int threshold) {
    if (ns.pedal_events.empty()) return ns;

    // Merge pedal events into half-open held intervals [down, release).
    struct Held {
        double start;
        double end;
    };
    std::vector<PedalEvent> pedals = ns.pedal_events;
    std::stable_sort(pedals.begin(), pedals.end(),
                     [](const PedalEvent& a, const PedalEvent& b) { return a.time < b.time; });
    std::vector<Held> held;
    auto push_held = [&](double start, double end) {
        if (end <= start) return;
        // coalesce instant release+press into one hold
        if (!held.empty() && start <= held.back().end)
            held.back().end = std::max(held.back().end, end);
        else
            held.push_back({start, end});
    };
    bool down = false;
    double down_at = 0.0;
    for (const auto& p : pedals) {
        bool d = p.value >= threshold;
        if (d && !down) {
            down = true;
            down_at = p.time;
        } else if (!d && down) {
            down = false;
            push_held(down_at, p.time);
        }
    }
    double horizon = std::max(ns.total_time, pedals.back().time);
    if (down) push_held(down_at, horizon);
    if (held.empty()) return ns;

    NoteSequence out = ns;
    out.sort_notes();
    for (size_t i = 0; i < out.notes.size(); ++i) {
        Note& n = out.notes[i];
        auto it = std::upper_bound(held.begin(), held.end(), n.offset,
                                   [](double t, const Held& h) { return t < h.end; });
        if (it == held.end() || n.offset < it->start) continue;  // offset not inside a held span
        double extended = it->end;
        // Truncate at the next strike of the same pitch.
        for (size_t j = i + 1; j < out.notes.size(); ++j) {
            if (out.notes[j].onset >= extended) break;
            if (out.notes[j].pitch == n.pitch && out.notes[j].onset > n.onset) {
                extended = std::max(n.offset, out.notes[j].onset);
                break;
            }
        }
        n.offset = std::max(n.offset, extended);
    }
    out.normalize();
    return out;
}

std::vector<Silence> find_silences(const NoteSequence& ns, double min_duration) {
    if (min_duration <= 0) throw std::invalid_argument("min_duration must be positive");
    NoteSequence realized = apply_sustain(ns);
    if (realized.notes.size() < 2) return {};

    // Scan sounding intervals; notes are sorted by onset.
    std::vector<Silence> gaps;
    double covered_until = realized.notes.front().offset;
    for (const auto& n : realized.notes) {
        if (n.onset > covered_until) {
            double len = n.onset - covered_until;
            if (len >= min_duration) gaps.push_back({covered_until, n.onset});
        }
        covered_until = std::max(covered_until, n.offset);
    }
    std::stable_sort(gaps.begin(), gaps.end(), [](const Silence& a, const Silence& b) {
        if (a.duration() != b.duration()) return a.duration() > b.duration();
        return a.start < b.start;
    });
    return gaps;
}

NoteSequence read_smf_file(const std::string& path, std::vector<std::string>* warnings) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw MidiError("cannot open MIDI file: " + path);
    std::vector<uint8_t> data((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return parse_smf(data, warnings);
}

void write_smf_file(const NoteSequence& ns, const std::string& path) {
    auto bytes = write_smf(ns);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw MidiError("cannot open for writing: " + path);
    f.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
}

}  // namespace duet::midi
