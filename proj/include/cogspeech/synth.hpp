#pragma once

#include <array>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "cogspeech/common.hpp"
#include "cogspeech/corpus.hpp"
#include "cogspeech/features.hpp"
#include "cogspeech/pause.hpp"
#include "cogspeech/rng.hpp"
#include "cogspeech/silence.hpp"
#include "cogspeech/transcript.hpp"

namespace cogspeech::synth {

// Per-class generation parameters. Every rate is a baseline; a per-subject
// severity factor derived from the latent MMSE modulates pause behavior,
// so pause statistics correlate with the regression target within classes
// as well as across them.
struct ClassProfile {
    double pause_rate = 0.3;     // chance of a pause after a word
    double pause_mean = 0.5;     // median pause length, seconds
    double filler_prob = 0.08;   // chance a slot becomes a filler word
    double repeat_prob = 0.04;   // chance a slot repeats the previous word
    double vocab_fraction = 1.0; // fraction of the task word pool in active use
    int words_min = 40;
    int words_max = 65;
    double mmse_mean = 27.0;
    double mmse_sd = 2.0;
};

struct EmbeddingSpec {
    std::size_t dim = 16;
    double noise_sd = 1.0;
};

struct SynthConfig {
    int n_subjects = 150;
    std::array<double, 3> proportions{5.0, 4.0, 1.0};  // HC : MCI : Dementia
    std::array<ClassProfile, 3> profiles{
        ClassProfile{0.25, 0.30, 0.05, 0.02, 1.00, 42, 68, 28.2, 1.4},  // HC
        ClassProfile{0.45, 0.75, 0.13, 0.07, 0.60, 32, 54, 25.0, 2.2},  // MCI
        ClassProfile{0.68, 1.60, 0.24, 0.16, 0.35, 20, 40, 20.0, 2.8},  // Dementia
    };
    double mmse_fraction = 1.0;     // fraction of subjects whose score is recorded
    double asr_error_rate = 0.25;   // per-word edit probability in hypothesis transcripts
    double annotation_rate = 0.10;  // per-slot chance of an inserted [TAG]
    double word_dur_min = 0.15;
    double word_dur_max = 0.55;
    double vad_merge_gap = 0.25;    // word gaps below this stay inside one speech segment
    // externally-computed embedding stand-ins; "silence" is computed, not synthesized
    std::map<std::string, EmbeddingSpec> embedding_sets{
        {"w2v", {16, 1.0}},
        {"egemaps", {8, 2.0}},
        {"compare", {24, 3.5}},
        {"roberta", {16, 1.3}},
    };
};

// largest-remainder apportionment of n into parts proportional to weights
inline std::vector<int> apportion(int n, std::span<const double> weights) {
    double total = 0.0;
    for (const double w : weights) {
        if (w < 0.0) throw ConfigError("apportion: negative weight");
        total += w;
    }
    if (!(total > 0.0)) throw ConfigError("apportion: weights sum to zero");
    std::vector<int> counts(weights.size());
    std::vector<std::pair<double, std::size_t>> remainders;
    int assigned = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const double exact = static_cast<double>(n) * weights[i] / total;
        counts[i] = static_cast<int>(std::floor(exact));
        assigned += counts[i];
        remainders.emplace_back(-(exact - std::floor(exact)), i);  // sort descending by remainder
    }
    std::sort(remainders.begin(), remainders.end());
    for (int k = 0; k < n - assigned; ++k) ++counts[remainders[static_cast<std::size_t>(k)].second];
    return counts;
}

namespace detail {

inline const std::vector<std::string>& task_pool(ElicitationTask task) {
    static const std::vector<std::string> ctd = {
        "the",     "boy",      "girl",    "mother",  "cookie",  "jar",     "stool",   "sink",
        "water",   "plate",    "dishes",  "kitchen", "window",  "curtain", "garden",  "reaching",
        "taking",  "falling",  "standing","washing", "drying",  "cup",     "counter", "cabinet",
        "floor",   "outside",  "child",   "brother", "sister",  "hand",    "tipping", "over",
        "she",     "he",       "is",      "and",     "on",      "in",      "climbs",  "up",
        "spilling","overflow", "ladder",  "shelf",   "grabs",   "cookies", "wobbles", "looking",
        "asks",    "wants",    "gives",   "little",  "young",   "woman",   "lady",    "apron",
        "faucet",  "towel",    "summer",  "yard",
    };
    static const std::vector<std::string> pft = {
        "pan",    "pot",    "paper",  "pencil", "park",    "party",  "plate",  "plant",
        "piano",  "purple", "pocket", "pillow", "pepper",  "peach",  "pear",   "plum",
        "potato", "pumpkin","puzzle", "pin",    "pipe",    "pond",   "path",   "palace",
        "pearl",  "pebble", "pen",    "penny",  "person",  "photo",  "picture","pie",
        "pilot",  "pink",   "pizza",  "planet", "plastic", "play",   "poem",   "point",
        "pole",   "pony",   "pool",   "porch",  "pocketbook","pail", "paint",  "pattern",
        "peanut", "pickle", "pigeon", "pillowcase","pine",  "pitcher","pledge", "postcard",
    };
    static const std::vector<std::string> sft = {
        "cat",      "dog",     "horse",   "cow",     "sheep",   "goat",    "pig",      "chicken",
        "duck",     "rabbit",  "lion",    "tiger",   "bear",    "elephant","giraffe",  "zebra",
        "monkey",   "mouse",   "deer",    "fox",     "wolf",    "squirrel","eagle",    "hawk",
        "owl",      "snake",   "lizard",  "frog",    "turtle",  "shark",   "whale",    "dolphin",
        "seal",     "penguin", "camel",   "donkey",  "llama",   "kangaroo","koala",    "panda",
        "otter",    "beaver",  "bat",     "moose",   "bison",   "crab",    "lobster",  "hamster",
        "hedgehog", "raccoon", "badger",  "ferret",  "weasel",  "antelope","buffalo",  "swan",
    };
    switch (task) {
        case ElicitationTask::CTD: return ctd;
        case ElicitationTask::PFT: return pft;
        case ElicitationTask::SFT: return sft;
    }
    return ctd;
}

inline const std::vector<std::string>& fillers() {
    static const std::vector<std::string> f = {"uh", "um", "erm", "eh"};
    return f;
}

inline const std::vector<std::string>& annotation_tags() {
    static const std::vector<std::string> t = {"[INV]", "[NOISE]", "[COUGH]", "[LAUGH]"};
    return t;
}

struct SubjectTimeline {
    std::vector<std::string> words;           // spoken words in order
    std::vector<AlignedToken> alignment;      // words + SIL rows
    VadTrack vad;
    std::string raw_transcript;               // annotated text that cleans back to `words`
    std::vector<std::string> asr_words;       // corrupted hypothesis
};

// Samples one task recording. severity in [0,1] scales pause behavior.
inline SubjectTimeline make_timeline(Rng& rng, ElicitationTask task, const ClassProfile& profile,
                                     const SynthConfig& cfg, double severity) {
    SubjectTimeline out;
    const auto& pool = task_pool(task);
    const auto active = std::max<std::size_t>(
        5, static_cast<std::size_t>(std::round(profile.vocab_fraction * static_cast<double>(pool.size()))));

    const int n_slots = static_cast<int>(rng.uniform_int(profile.words_min, profile.words_max));
    std::vector<double> weights(active);
    for (std::size_t i = 0; i < active; ++i) weights[i] = 1.0 / static_cast<double>(i + 3);

    for (int slot = 0; slot < n_slots; ++slot) {
        if (!out.words.empty() && rng.bernoulli(profile.repeat_prob)) {
            out.words.push_back(out.words.back());
        } else if (rng.bernoulli(profile.filler_prob)) {
            out.words.push_back(fillers()[static_cast<std::size_t>(
                rng.uniform_int(0, static_cast<std::int64_t>(fillers().size()) - 1))]);
        } else {
            out.words.push_back(pool[rng.weighted_index(weights)]);
        }
    }

    // timeline with class- and severity-dependent pauses
    const double pause_rate = std::min(0.95, profile.pause_rate * (0.7 + 0.9 * severity));
    const double pause_median = profile.pause_mean * (0.6 + 1.1 * severity);

    double t = 0.0;
    if (rng.bernoulli(0.8)) {  // leading silence, usually marked
        const double lead = rng.uniform(0.2, 1.4);
        if (rng.bernoulli(0.7)) out.alignment.push_back({"SIL", 0.0, lead});
        t = lead;
    }
    std::vector<std::pair<double, double>> word_spans;
    std::vector<bool> long_pause_after(out.words.size(), false);
    for (std::size_t w = 0; w < out.words.size(); ++w) {
        const double dur = rng.uniform(cfg.word_dur_min, cfg.word_dur_max);
        out.alignment.push_back({out.words[w], t, t + dur});
        word_spans.emplace_back(t, t + dur);
        t += dur;
        if (w + 1 < out.words.size()) {
            if (rng.bernoulli(pause_rate)) {
                double gap = std::exp(rng.normal(std::log(pause_median), 0.6));
                gap = std::clamp(gap, 0.06, 8.0);
                if (gap > kLongMinSeconds) long_pause_after[w] = true;
                if (rng.bernoulli(0.8)) out.alignment.push_back({"SIL", t, t + gap});
                t += gap;
            } else {
                t += rng.uniform(0.0, 0.04);  // sub-threshold jitter
            }
        }
    }
    if (rng.bernoulli(0.8)) {  // trailing silence
        const double tail = rng.uniform(0.2, 2.2);
        if (rng.bernoulli(0.7)) out.alignment.push_back({"SIL", t, t + tail});
        t += tail;
    }

    // VAD speech segments: word spans merged across small gaps
    for (const auto& [ws, we] : word_spans) {
        if (!out.vad.segments.empty() && ws - out.vad.segments.back().end < cfg.vad_merge_gap)
            out.vad.segments.back().end = we;
        else
            out.vad.segments.push_back({ws, we});
    }
    out.vad.total_duration = t;

    // annotated raw transcript that cleans back to exactly `words`
    std::string raw;
    for (std::size_t w = 0; w < out.words.size(); ++w) {
        if (rng.bernoulli(cfg.annotation_rate)) {
            raw += annotation_tags()[static_cast<std::size_t>(
                rng.uniform_int(0, static_cast<std::int64_t>(annotation_tags().size()) - 1))];
            raw += ' ';
        }
        raw += out.words[w];
        if (long_pause_after[w]) {
            raw += " (" + fmt_fixed(rng.uniform(2.0, 4.0), 1) + ")";
        } else if (rng.bernoulli(0.08)) {
            raw += rng.bernoulli(0.5) ? "," : ".";
        }
        raw += ' ';
    }
    out.raw_transcript = raw;

    // ASR hypothesis with planted edits
    for (const auto& word : out.words) {
        const bool corrupt = rng.bernoulli(cfg.asr_error_rate);
        if (!corrupt) {
            out.asr_words.push_back(word);
            continue;
        }
        const double kind = rng.next_double();
        if (kind < 0.60) {  // substitution
            out.asr_words.push_back(pool[static_cast<std::size_t>(
                rng.uniform_int(0, static_cast<std::int64_t>(pool.size()) - 1))]);
        } else if (kind < 0.85) {
            // deletion: emit nothing
        } else {  // insertion
            out.asr_words.push_back(word);
            out.asr_words.push_back(pool[static_cast<std::size_t>(
                rng.uniform_int(0, static_cast<std::int64_t>(pool.size()) - 1))]);
        }
    }
    if (out.asr_words.empty()) out.asr_words.push_back(out.words.front());
    return out;
}

}  // namespace detail

// Generates a full on-disk cohort under out_dir: manifest, per-task raw
// transcripts, alignments, VAD tracks, ASR hypothesis transcripts, and
// one vector file per configured embedding set. Byte-identical for a
// fixed (config, seed).
inline Cohort synth_cohort(const SynthConfig& cfg, std::uint64_t seed, const fs::path& out_dir) {
    if (cfg.n_subjects <= 0) throw ConfigError("synth_cohort: n_subjects must be positive");
    const std::vector<int> counts = apportion(cfg.n_subjects, cfg.proportions);

    std::vector<Diagnosis> roster;
    for (std::size_t c = 0; c < 3; ++c)
        roster.insert(roster.end(), static_cast<std::size_t>(counts[c]), static_cast<Diagnosis>(c));

    Cohort cohort;
    cohort.provenance = "synth(seed=" + std::to_string(seed) + ")";
    cohort.base_dir = out_dir;

    std::map<std::string, FeatureSet> embeddings;
    // fixed per-set projection geometry, independent of the cohort seed
    struct SetGeometry {
        std::vector<double> direction;
        std::array<std::vector<double>, 3> class_offset;
    };
    std::map<std::string, SetGeometry> geometry;
    for (const auto& [name, spec] : cfg.embedding_sets) {
        FeatureSet set;
        set.name = name;
        set.dim = spec.dim;
        embeddings.emplace(name, std::move(set));
        SetGeometry geo;
        Rng geo_rng(fnv1a64(name.data(), name.size()));
        geo.direction.resize(spec.dim);
        for (auto& v : geo.direction) v = geo_rng.normal(0.0, 1.0);
        for (auto& offset : geo.class_offset) {
            offset.resize(spec.dim);
            for (auto& v : offset) v = geo_rng.normal(0.0, 0.8);
        }
        geometry.emplace(name, std::move(geo));
    }

    for (std::size_t i = 0; i < roster.size(); ++i) {
        const Diagnosis diagnosis = roster[i];
        const ClassProfile& profile = cfg.profiles[static_cast<std::size_t>(diagnosis)];
        Rng rng(mix_seed(seed, 0x5AB7ull, i));

        Subject subject;
        subject.id = "syn" + std::to_string(i);
        subject.diagnosis = diagnosis;

        const double mmse_latent = std::clamp(rng.normal(profile.mmse_mean, profile.mmse_sd), 0.0, 30.0);
        const double severity = (30.0 - mmse_latent) / 30.0;
        if (rng.bernoulli(cfg.mmse_fraction))
            subject.mmse = static_cast<int>(std::lround(mmse_latent));

        for (const auto task : kAllTasks) {
            const auto timeline = detail::make_timeline(rng, task, profile, cfg, severity);
            const std::string stem = subject.id + "_" + std::string(to_string(task));

            TaskArtifacts& art = subject.task(task);
            art.transcript = "transcripts/" + stem + ".txt";
            art.alignment = "alignments/" + stem + ".csv";
            art.vad = "vad/" + stem + ".csv";

            write_text_file(out_dir / art.transcript, timeline.raw_transcript + "\n");
            save_alignment(timeline.alignment, out_dir / art.alignment);
            save_vad(timeline.vad, out_dir / art.vad);
            write_text_file(out_dir / ("asr/" + stem + ".txt"), join_tokens(timeline.asr_words) + "\n");

            // embedding stand-ins: class offset + mmse direction + noise
            const double m_norm = (mmse_latent - 15.0) / 15.0;
            for (auto& [name, set] : embeddings) {
                const auto& spec = cfg.embedding_sets.at(name);
                const auto& geo = geometry.at(name);
                std::vector<double> v(spec.dim);
                for (std::size_t j = 0; j < spec.dim; ++j)
                    v[j] = geo.class_offset[static_cast<std::size_t>(diagnosis)][j] +
                           geo.direction[j] * m_norm * 3.0 + rng.normal(0.0, spec.noise_sd);
                set.insert({subject.id, task}, std::move(v));
            }
        }
        cohort.subjects.push_back(std::move(subject));
    }

    for (const auto& [name, set] : embeddings) save_feature_set(set, out_dir / ("vectors/" + name + ".csv"));
    save_manifest(cohort, out_dir / "manifest.csv");
    return cohort;
}

}  // namespace cogspeech::synth
