// duet: curation pipeline for paired piano audio/MIDI recordings.
// Subcommands: align, segment, finewarp, split, stats, roll, eval, augment-spec.

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "duet/coarse_align.hpp"
#include "duet/dataset.hpp"
#include "duet/dtw.hpp"
#include "duet/eval.hpp"
#include "duet/midi.hpp"
#include "duet/segment.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct SegmentOptions {
    double tolerance = 0.15;
    double min_silence = 3.0;
    double skip_silence_below = 10.0;
    double padding = 1.0;
    int edge_cluster_max_notes = 5;
    double edge_silence = 3.0;
};

struct RollOptions {
    double frame_rate = 250.0;
    double offset_label_seconds = 0.032;
    bool sustain = true;
};

struct PipelineConfig {
    duet::align::AlignmentConfig align;
    duet::dtw::DtwConfig finewarp;
    SegmentOptions segment;
    duet::data::SplitConfig split;
    RollOptions roll;
    duet::eval::MatchConfig eval;
    uint64_t seed = 0;
    int workers = 1;
};

json default_config_json() {
    PipelineConfig d;
    return json{
        {"cqt",
         {{"n_bins", 48},          // C2..B5, fixed by the feature definition
          {"fmin_pitch", 36},
          {"db_floor", -80.0}}},
        {"align",
         {{"hop", d.align.hop},
          {"anchor_tolerance", d.align.anchor_tolerance},
          {"retry_silence", d.align.retry_silence},
          {"mse_accept_threshold", d.align.mse_accept_threshold},
          {"sample_rate", d.align.sample_rate},
          {"trim_rms_db", d.align.trim_rms_db},
          {"trim_window", d.align.trim_window},
          {"tail_pad", d.align.tail_pad}}},
        {"finewarp",
         {{"hop", d.finewarp.hop},
          {"sample_rate", d.finewarp.sample_rate},
          {"band_radius", d.finewarp.band_radius},
          {"penalty_samples", d.finewarp.penalty_samples}}},
        {"segment",
         {{"tolerance", d.segment.tolerance},
          {"min_silence", d.segment.min_silence},
          {"skip_silence_below", d.segment.skip_silence_below},
          {"padding", d.segment.padding},
          {"edge_cluster_max_notes", d.segment.edge_cluster_max_notes},
          {"edge_silence", d.segment.edge_silence}}},
        {"split",
         {{"train", d.split.targets.train},
          {"validation", d.split.targets.validation},
          {"test", d.split.targets.test},
          {"popularity_threshold", d.split.popularity_threshold},
          {"composer_min_compositions", d.split.composer_min_compositions},
          {"proportion_tolerance", d.split.proportion_tolerance}}},
        {"roll",
         {{"frame_rate", d.roll.frame_rate},
          {"offset_label_seconds", d.roll.offset_label_seconds},
          {"sustain", d.roll.sustain}}},
        {"eval",
         {{"onset_tolerance", d.eval.onset_tolerance},
          {"offset_ratio", d.eval.offset_ratio},
          {"offset_min_tolerance", d.eval.offset_min_tolerance},
          {"velocity_tolerance", d.eval.velocity_tolerance},
          {"frame_size", d.eval.frame_size}}},
        {"seed", d.seed},
        {"workers", d.workers},
    };
}

template <typename T>
void maybe(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

PipelineConfig load_config(const std::string& path) {
    PipelineConfig cfg;
    if (path.empty()) return cfg;
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open config: " + path);
    json j = json::parse(f);
    if (j.contains("cqt")) {
        const json& a = j["cqt"];
        int n_bins = 48, fmin = 36;
        double floor_db = -80.0;
        maybe(a, "n_bins", n_bins);
        maybe(a, "fmin_pitch", fmin);
        maybe(a, "db_floor", floor_db);
        if (n_bins != 48 || fmin != 36 || floor_db != -80.0)
            throw std::runtime_error(
                "cqt.n_bins/fmin_pitch/db_floor are fixed by the 48-bin C2..B5 feature space");
    }
    if (j.contains("align")) {
        const json& a = j["align"];
        maybe(a, "hop", cfg.align.hop);
        maybe(a, "anchor_tolerance", cfg.align.anchor_tolerance);
        maybe(a, "retry_silence", cfg.align.retry_silence);
        maybe(a, "mse_accept_threshold", cfg.align.mse_accept_threshold);
        maybe(a, "sample_rate", cfg.align.sample_rate);
        maybe(a, "trim_rms_db", cfg.align.trim_rms_db);
        maybe(a, "trim_window", cfg.align.trim_window);
        maybe(a, "tail_pad", cfg.align.tail_pad);
    }
    if (j.contains("finewarp")) {
        const json& a = j["finewarp"];
        maybe(a, "hop", cfg.finewarp.hop);
        maybe(a, "sample_rate", cfg.finewarp.sample_rate);
        maybe(a, "band_radius", cfg.finewarp.band_radius);
        maybe(a, "penalty_samples", cfg.finewarp.penalty_samples);
    }
    if (j.contains("segment")) {
        const json& a = j["segment"];
        maybe(a, "tolerance", cfg.segment.tolerance);
        maybe(a, "min_silence", cfg.segment.min_silence);
        maybe(a, "skip_silence_below", cfg.segment.skip_silence_below);
        maybe(a, "padding", cfg.segment.padding);
        maybe(a, "edge_cluster_max_notes", cfg.segment.edge_cluster_max_notes);
        maybe(a, "edge_silence", cfg.segment.edge_silence);
    }
    if (j.contains("split")) {
        const json& a = j["split"];
        maybe(a, "train", cfg.split.targets.train);
        maybe(a, "validation", cfg.split.targets.validation);
        maybe(a, "test", cfg.split.targets.test);
        maybe(a, "popularity_threshold", cfg.split.popularity_threshold);
        maybe(a, "composer_min_compositions", cfg.split.composer_min_compositions);
        maybe(a, "proportion_tolerance", cfg.split.proportion_tolerance);
    }
    if (j.contains("roll")) {
        const json& a = j["roll"];
        maybe(a, "frame_rate", cfg.roll.frame_rate);
        maybe(a, "offset_label_seconds", cfg.roll.offset_label_seconds);
        maybe(a, "sustain", cfg.roll.sustain);
    }
    if (j.contains("eval")) {
        const json& a = j["eval"];
        maybe(a, "onset_tolerance", cfg.eval.onset_tolerance);
        maybe(a, "offset_ratio", cfg.eval.offset_ratio);
        maybe(a, "offset_min_tolerance", cfg.eval.offset_min_tolerance);
        maybe(a, "velocity_tolerance", cfg.eval.velocity_tolerance);
        maybe(a, "frame_size", cfg.eval.frame_size);
    }
    maybe(j, "seed", cfg.seed);
    maybe(j, "workers", cfg.workers);
    return cfg;
}

// Runs jobs over a worker pool; results land in caller arrays by index so
// output order never depends on scheduling.
void parallel_for(size_t n, int workers, const std::function<void(size_t)>& fn) {
    workers = std::max(1, workers);
    if (workers == 1 || n <= 1) {
        for (size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < std::min<size_t>(size_t(workers), n); ++w) {
        pool.emplace_back([&] {
            while (true) {
                size_t i = next.fetch_add(1);
                if (i >= n) return;
                fn(i);
            }
        });
    }
    for (auto& t : pool) t.join();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << text;
}

std::string stem_of(const std::string& path) { return fs::path(path).stem().string(); }

int cmd_align(const PipelineConfig& cfg, const std::string& midi_path,
              const std::vector<std::string>& audio_paths, const std::string& report_path,
              const std::string& out_dir) {
    duet::midi::NoteSequence ns = duet::midi::read_smf_file(midi_path);
    std::vector<duet::align::SessionAudio> audios;
    for (const auto& p : audio_paths) audios.push_back({p, duet::dsp::read_wav_file(p)});

    auto results = duet::align::align_session(audios, ns, cfg.align);

    std::string report;
    int failures = 0;
    for (const auto& r : results) {
        json line;
        line["audio_id"] = r.audio_id;
        if (r.ok) {
            line["status"] = "aligned";
            line["shift"] = r.alignment.shift;
            line["mse"] = r.alignment.mse;
            line["midi_range"] = {r.alignment.midi_start, r.alignment.midi_end};
        } else {
            line["status"] = "failed";
            line["error"] = r.error;
            ++failures;
        }
        report += line.dump() + "\n";
        if (r.ok && !out_dir.empty()) {
            auto slice =
                duet::seg::slice_sequence(ns, r.alignment.midi_start, r.alignment.midi_end);
            duet::midi::write_smf_file(slice,
                                       (fs::path(out_dir) / (stem_of(r.audio_id) + ".aligned.mid"))
                                           .string());
        }
    }
    if (report_path.empty())
        std::cout << report;
    else
        write_text(report_path, report);
    return failures == 0 ? 0 : 1;
}

int cmd_segment(const PipelineConfig& cfg, const std::string& midi_path,
                const std::string& audio_path, const std::string& out_dir,
                const std::vector<double>& durations, int pieces) {
    duet::midi::NoteSequence ns = duet::midi::read_smf_file(midi_path);
    duet::dsp::AudioBuffer audio;
    if (!audio_path.empty()) audio = duet::dsp::read_wav_file(audio_path);

    std::vector<duet::seg::Segment> segments;
    std::vector<std::string> warnings;
    if (!durations.empty()) {
        auto plan = duet::seg::backtracking_segment(ns, durations, cfg.segment.tolerance,
                                                    cfg.segment.min_silence,
                                                    cfg.segment.skip_silence_below);
        for (size_t i = 0; i < plan.intervals.size(); ++i)
            segments.push_back({plan.intervals[i].start, plan.intervals[i].end, int(i)});
    } else {
        segments = duet::seg::greedy_segment(ns, pieces, &warnings);
    }
    segments = duet::seg::finalize_segments(ns, segments, cfg.segment.padding,
                                            cfg.segment.edge_cluster_max_notes,
                                            cfg.segment.edge_silence);

    fs::create_directories(out_dir);
    std::string base = stem_of(midi_path);
    json rep;
    rep["warnings"] = warnings;
    rep["segments"] = json::array();
    for (const auto& s : segments) {
        std::string piece = base + ".piece" + std::to_string(s.piece_index);
        std::string midi_out = (fs::path(out_dir) / (piece + ".mid")).string();
        duet::midi::write_smf_file(duet::seg::slice_sequence(ns, s.start, s.end), midi_out);
        json js{{"start", s.start}, {"end", s.end}, {"piece_index", s.piece_index},
                {"midi", midi_out}};
        if (!audio_path.empty()) {
            std::string wav_out = (fs::path(out_dir) / (piece + ".wav")).string();
            duet::dsp::AudioBuffer sliced;
            sliced.sample_rate = audio.sample_rate;
            sliced.channels = audio.channels;
            size_t lo = size_t(std::llround(std::max(0.0, s.start) * audio.sample_rate)) *
                        size_t(audio.channels);
            lo = std::min(lo, audio.samples.size());
            size_t hi = size_t(std::llround(std::max(0.0, s.end) * audio.sample_rate)) *
                        size_t(audio.channels);
            hi = std::min(std::max(hi, lo), audio.samples.size());
            sliced.samples.assign(audio.samples.begin() + long(lo), audio.samples.begin() + long(hi));
            duet::dsp::write_wav_file(sliced, wav_out);
            js["audio"] = wav_out;
        }
        rep["segments"].push_back(js);
    }
    write_text((fs::path(out_dir) / (base + ".segments.json")).string(), rep.dump(2) + "\n");
    return 0;
}

struct WarpJob {
    std::string midi, audio, out_stem;
};

int cmd_finewarp(const PipelineConfig& cfg, const std::vector<WarpJob>& jobs,
                 const std::string& out_dir, const std::string& report_path) {
    fs::create_directories(out_dir);
    std::vector<json> lines(jobs.size());
    std::atomic<int> failures{0};

    parallel_for(jobs.size(), cfg.workers, [&](size_t i) {
        const WarpJob& job = jobs[i];
        json line{{"midi", job.midi}, {"audio", job.audio}};
        try {
            auto ns = duet::midi::read_smf_file(job.midi);
            auto audio = duet::dsp::read_wav_file(job.audio);
            auto res = duet::dtw::fine_align(audio, ns, cfg.finewarp);

            std::string warped_path = (fs::path(out_dir) / (job.out_stem + ".warped.mid")).string();
            duet::midi::write_smf_file(res.warped, warped_path);

            std::ostringstream map_text;
            map_text.precision(9);
            const auto& xs = res.map.midi_knots();
            const auto& ys = res.map.audio_knots();
            for (size_t k = 0; k < xs.size(); ++k) map_text << xs[k] << " " << ys[k] << "\n";
            std::string map_path = (fs::path(out_dir) / (job.out_stem + ".warpmap.txt")).string();
            write_text(map_path, map_text.str());

            line["status"] = "warped";
            line["penalty"] = res.penalty;
            line["total_cost"] = res.path.total_cost;
            line["warped_midi"] = warped_path;
            line["warp_map"] = map_path;
        } catch (const std::exception& e) {
            line["status"] = "failed";
            line["error"] = e.what();
            failures.fetch_add(1);
        }
        lines[i] = std::move(line);
    });

    std::string report;
    for (const auto& l : lines) report += l.dump() + "\n";
    if (report_path.empty())
        std::cout << report;
    else
        write_text(report_path, report);
    return failures.load() == 0 ? 0 : 1;
}

int cmd_split(const PipelineConfig& cfg, uint64_t seed, const std::string& manifest_path,
              const std::string& out_path, const std::string& report_path) {
    auto records = duet::data::read_manifest_csv(manifest_path);
    auto assignment = duet::data::make_split(records, cfg.split, seed);
    for (auto& r : records) r.split = assignment.of(r.performance_id);
    auto report = duet::data::verify_split(assignment, records, cfg.split);

    if (!out_path.empty()) duet::data::write_manifest_csv(records, out_path);
    json rep{{"hard_violations", report.hard_violations},
             {"soft_violations", report.soft_violations},
             {"fraction_train", report.fraction_train},
             {"fraction_validation", report.fraction_validation},
             {"fraction_test", report.fraction_test},
             {"warnings", assignment.warnings}};
    if (report_path.empty())
        std::cout << rep.dump(2) << "\n";
    else
        write_text(report_path, rep.dump(2) + "\n");
    return report.ok() ? 0 : 1;
}

int cmd_stats(const PipelineConfig& cfg, const std::string& manifest_path,
              const std::string& midi_root, const std::string& out_path) {
    auto records = duet::data::read_manifest_csv(manifest_path);
    std::unordered_map<std::string, size_t> note_counts;
    if (!midi_root.empty()) {
        std::vector<size_t> counts(records.size());
        parallel_for(records.size(), cfg.workers, [&](size_t i) {
            auto ns = duet::midi::read_smf_file(
                (fs::path(midi_root) / records[i].midi_path).string());
            counts[i] = ns.notes.size();
        });
        for (size_t i = 0; i < records.size(); ++i)
            note_counts[records[i].performance_id] = counts[i];
    }
    auto stats = duet::data::compute_stats(records, midi_root.empty() ? nullptr : &note_counts);

    std::ostringstream table;
    table << "split,performances,compositions,duration_hours,notes_millions\n";
    table.precision(6);
    table << std::fixed;
    for (const auto& s : stats)
        table << s.split << "," << s.performances << "," << s.compositions << ","
              << s.duration_hours << "," << s.notes_millions << "\n";
    if (out_path.empty())
        std::cout << table.str();
    else
        write_text(out_path, table.str());
    return 0;
}

struct RollJob {
    std::string midi, out_stem;
};

int cmd_roll(const PipelineConfig& cfg, const std::vector<RollJob>& jobs,
             const std::string& out_dir, bool labels, const std::string& report_path) {
    fs::create_directories(out_dir);
    std::vector<json> lines(jobs.size());
    std::atomic<int> failures{0};
    parallel_for(jobs.size(), cfg.workers, [&](size_t i) {
        json line{{"midi", jobs[i].midi}};
        try {
            auto ns = duet::midi::read_smf_file(jobs[i].midi);
            if (cfg.roll.sustain) ns = duet::midi::apply_sustain(ns);
            fs::path base = fs::path(out_dir) / jobs[i].out_stem;
            duet::data::write_roll_file(duet::data::onset_roll(ns, cfg.roll.frame_rate),
                                        base.string() + ".onsets.roll");
            json outputs = json::array({base.string() + ".onsets.roll"});
            if (labels) {
                auto lab = duet::data::training_labels(ns, cfg.roll.frame_rate,
                                                       cfg.roll.offset_label_seconds);
                duet::data::write_roll_file(lab.onset, base.string() + ".label_onsets.roll");
                duet::data::write_roll_file(lab.frame, base.string() + ".label_frames.roll");
                duet::data::write_roll_file(lab.offset, base.string() + ".label_offsets.roll");
                for (const char* suffix : {".label_onsets.roll", ".label_frames.roll",
                                           ".label_offsets.roll"})
                    outputs.push_back(base.string() + suffix);
            }
            line["status"] = "written";
            line["outputs"] = outputs;
        } catch (const std::exception& e) {
            line["status"] = "failed";
            line["error"] = e.what();
            failures.fetch_add(1);
        }
        lines[i] = std::move(line);
    });
    std::string report;
    for (const auto& l : lines) report += l.dump() + "\n";
    if (report_path.empty())
        std::cout << report;
    else
        write_text(report_path, report);
    return failures.load() == 0 ? 0 : 1;
}

std::string scores_csv(const duet::eval::EvalScores& s) {
    std::ostringstream out;
    out.precision(6);
    out << std::fixed;
    out << "family,precision,recall,f1\n";
    auto row = [&](const char* name, const duet::eval::Prf& p) {
        out << name << "," << p.precision << "," << p.recall << "," << p.f1 << "\n";
    };
    row("frame", s.frame);
    row("note", s.note);
    row("note_with_offset", s.note_with_offset);
    row("note_with_offset_velocity", s.note_with_offset_velocity);
    return out.str();
}

int cmd_eval(const PipelineConfig& cfg, const std::vector<std::pair<std::string, std::string>>& pairs,
             const std::string& out_path, bool sustain) {
    std::vector<duet::eval::EvalScores> scores(pairs.size());
    parallel_for(pairs.size(), cfg.workers, [&](size_t i) {
        auto ref = duet::midi::read_smf_file(pairs[i].first);
        auto est = duet::midi::read_smf_file(pairs[i].second);
        if (sustain) {
            ref = duet::midi::apply_sustain(ref);
            est = duet::midi::apply_sustain(est);
        }
        scores[i] = duet::eval::score_pair(ref, est, cfg.eval);
    });
    auto mean = duet::eval::aggregate(scores);
    std::string table = scores_csv(mean);
    if (out_path.empty())
        std::cout << table;
    else
        write_text(out_path, table);
    return 0;
}

int cmd_augment_spec(uint64_t seed, int count, const std::string& out_path) {
    std::string out;
    for (int i = 0; i < count; ++i) {
        auto spec = duet::data::sample_augmentation(seed + uint64_t(i));
        json line{{"seed", spec.seed},
                  {"pitch_shift", spec.pitch_shift},
                  {"contrast", spec.contrast},
                  {"eq1_freq", spec.eq1_freq},
                  {"eq2_freq", spec.eq2_freq},
                  {"reverb", spec.reverb},
                  {"pinknoise", spec.pinknoise},
                  {"chain", duet::data::emit_effect_chain(spec)}};
        out += line.dump() + "\n";
    }
    if (out_path.empty())
        std::cout << out;
    else
        write_text(out_path, out);
    return 0;
}

std::vector<double> parse_durations(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (!tok.empty()) out.push_back(std::stod(tok));
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"curation pipeline for paired piano audio/MIDI recordings"};
    app.require_subcommand(0, 1);
    app.fallthrough();  // global flags may follow the subcommand

    std::string config_path;
    std::optional<uint64_t> seed_flag;
    std::optional<int> workers_flag;
    bool dump_config = false;
    app.add_option("--config", config_path, "pipeline config (JSON)");
    app.add_option("--seed", seed_flag, "global RNG seed");
    app.add_option("--workers", workers_flag, "worker threads for batch stages");
    app.add_flag("--dump-config", dump_config, "print the default config and exit");

    // align
    auto* align = app.add_subcommand("align", "slide audio files against one MIDI timeline");
    std::string al_midi, al_report, al_out_dir;
    std::vector<std::string> al_audio;
    align->add_option("--midi", al_midi, "session MIDI file")->required();
    align->add_option("--audio", al_audio, "audio files in recording order")->required();
    align->add_option("--report", al_report, "JSONL report path (default stdout)");
    align->add_option("--out-dir", al_out_dir, "write per-file aligned MIDI slices here");

    // segment
    auto* segment = app.add_subcommand("segment", "slice an aligned pair into pieces");
    std::string sg_midi, sg_audio, sg_out_dir, sg_durations;
    int sg_pieces = 1;
    segment->add_option("--midi", sg_midi)->required();
    segment->add_option("--audio", sg_audio, "aligned audio (optional)");
    segment->add_option("--out-dir", sg_out_dir)->required();
    segment->add_option("--durations", sg_durations, "expected piece durations, comma-separated seconds");
    segment->add_option("--pieces", sg_pieces, "expected piece count for greedy slicing");

    // finewarp
    auto* finewarp = app.add_subcommand("finewarp", "DTW-warp MIDI onto its audio");
    std::string fw_midi, fw_audio, fw_out_dir, fw_report, fw_batch;
    finewarp->add_option("--midi", fw_midi);
    finewarp->add_option("--audio", fw_audio);
    finewarp->add_option("--batch", fw_batch, "JSON array of {midi, audio, out} jobs");
    finewarp->add_option("--out-dir", fw_out_dir)->required();
    finewarp->add_option("--report", fw_report, "JSONL report path (default stdout)");

    // split
    auto* split = app.add_subcommand("split", "assign composition-disjoint dataset splits");
    std::string sp_manifest, sp_out, sp_report;
    split->add_option("--manifest", sp_manifest)->required();
    split->add_option("--out", sp_out, "manifest CSV with splits filled");
    split->add_option("--report", sp_report, "verification report path (default stdout)");

    // stats
    auto* stats = app.add_subcommand("stats", "dataset statistics table");
    std::string st_manifest, st_midi_root, st_out;
    stats->add_option("--manifest", st_manifest)->required();
    stats->add_option("--midi-root", st_midi_root, "parse MIDI files under this root for note counts");
    stats->add_option("--out", st_out, "CSV output path (default stdout)");

    // roll
    auto* roll = app.add_subcommand("roll", "extract onset/label rolls from MIDI");
    std::string rl_midi, rl_out_dir, rl_batch, rl_report;
    bool rl_labels = false, rl_no_sustain = false;
    roll->add_option("--midi", rl_midi);
    roll->add_option("--batch", rl_batch, "JSON array of {midi, out} jobs");
    roll->add_option("--out-dir", rl_out_dir)->required();
    roll->add_option("--report", rl_report, "JSONL report path (default stdout)");
    roll->add_flag("--labels", rl_labels, "also write onset/frame/offset label rolls");
    roll->add_flag("--no-sustain", rl_no_sustain, "skip sustain-pedal realization");

    // eval
    auto* eval = app.add_subcommand("eval", "transcription scores, per-piece means");
    std::string ev_ref, ev_est, ev_out, ev_batch;
    bool ev_no_sustain = false;
    eval->add_option("--ref", ev_ref);
    eval->add_option("--est", ev_est);
    eval->add_option("--batch", ev_batch, "JSON array of {ref, est} pairs");
    eval->add_option("--out", ev_out, "CSV output path (default stdout)");
    eval->add_flag("--no-sustain", ev_no_sustain);

    // augment-spec
    auto* augment = app.add_subcommand("augment-spec", "sample audio augmentation parameters");
    int ag_count = 1;
    std::string ag_out;
    augment->add_option("--count", ag_count, "number of specs");
    augment->add_option("--out", ag_out, "JSONL output path (default stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (dump_config) {
            std::cout << default_config_json().dump(2) << "\n";
            return 0;
        }
        PipelineConfig cfg = load_config(config_path);
        if (seed_flag) cfg.seed = *seed_flag;
        if (workers_flag) cfg.workers = *workers_flag;
        cfg.finewarp.rng_seed = cfg.seed;

        if (align->parsed()) return cmd_align(cfg, al_midi, al_audio, al_report, al_out_dir);
        if (segment->parsed())
            return cmd_segment(cfg, sg_midi, sg_audio, sg_out_dir, parse_durations(sg_durations),
                               sg_pieces);
        if (finewarp->parsed()) {
            std::vector<WarpJob> jobs;
            if (!fw_batch.empty()) {
                std::ifstream f(fw_batch);
                if (!f) throw std::runtime_error("cannot open batch: " + fw_batch);
                for (const auto& j : json::parse(f))
                    jobs.push_back({j.at("midi"), j.at("audio"),
                                    j.contains("out") ? j.at("out").get<std::string>()
                                                      : stem_of(j.at("midi"))});
            } else if (!fw_midi.empty() && !fw_audio.empty()) {
                jobs.push_back({fw_midi, fw_audio, stem_of(fw_midi)});
            } else {
                throw std::runtime_error("finewarp needs --midi/--audio or --batch");
            }
            return cmd_finewarp(cfg, jobs, fw_out_dir, fw_report);
        }
        if (split->parsed()) return cmd_split(cfg, cfg.seed, sp_manifest, sp_out, sp_report);
        if (stats->parsed()) return cmd_stats(cfg, st_manifest, st_midi_root, st_out);
        if (roll->parsed()) {
            PipelineConfig rc = cfg;
            if (rl_no_sustain) rc.roll.sustain = false;
            std::vector<RollJob> jobs;
            if (!rl_batch.empty()) {
                std::ifstream f(rl_batch);
                if (!f) throw std::runtime_error("cannot open batch: " + rl_batch);
                for (const auto& j : json::parse(f))
                    jobs.push_back({j.at("midi"), j.contains("out") ? j.at("out").get<std::string>()
                                                                    : stem_of(j.at("midi"))});
            } else if (!rl_midi.empty()) {
                jobs.push_back({rl_midi, stem_of(rl_midi)});
            } else {
                throw std::runtime_error("roll needs --midi or --batch");
            }
            return cmd_roll(rc, jobs, rl_out_dir, rl_labels, rl_report);
        }
        if (eval->parsed()) {
            std::vector<std::pair<std::string, std::string>> pairs;
            if (!ev_batch.empty()) {
                std::ifstream f(ev_batch);
                if (!f) throw std::runtime_error("cannot open batch: " + ev_batch);
                for (const auto& j : json::parse(f)) pairs.emplace_back(j.at("ref"), j.at("est"));
            } else if (!ev_ref.empty() && !ev_est.empty()) {
                pairs.emplace_back(ev_ref, ev_est);
            } else {
                throw std::runtime_error("eval needs --ref/--est or --batch");
            }
            return cmd_eval(cfg, pairs, ev_out, !ev_no_sustain);
        }
        if (augment->parsed()) return cmd_augment_spec(cfg.seed, ag_count, ag_out);

        std::cout << app.help();
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
