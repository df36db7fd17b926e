#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cogspeech/common.hpp"
#include "cogspeech/io.hpp"
#include "cogspeech/rng.hpp"

namespace cogspeech {

// NonHC is produced only by relabel_nonhc (the coarse HC / not-HC view);
// manifests never contain it. Enum order doubles as the severity order
// used by vote tie-breaking: HC < MCI < Dementia < NonHC.
enum class Diagnosis : std::uint8_t { HC = 0, MCI = 1, Dementia = 2, NonHC = 3 };

constexpr std::array<Diagnosis, 3> kThreeClasses{Diagnosis::HC, Diagnosis::MCI, Diagnosis::Dementia};

inline std::string_view to_string(Diagnosis d) {
    switch (d) {
        case Diagnosis::HC: return "HC";
        case Diagnosis::MCI: return "MCI";
        case Diagnosis::Dementia: return "Dementia";
        case Diagnosis::NonHC: return "NonHC";
    }
    return "?";
}

inline Diagnosis parse_diagnosis(std::string_view s, const std::string& where) {
    if (s == "HC") return Diagnosis::HC;
    if (s == "MCI") return Diagnosis::MCI;
    if (s == "Dementia") return Diagnosis::Dementia;
    throw ParseError(where + ": unknown diagnosis token '" + std::string(s) + "'");
}

// HC stays HC, anything else coarsens to NonHC
inline Diagnosis coarse_label(Diagnosis d) {
    return d == Diagnosis::HC ? Diagnosis::HC : Diagnosis::NonHC;
}

inline int severity(Diagnosis d) { return static_cast<int>(d); }

enum class ElicitationTask : std::uint8_t { CTD = 0, PFT = 1, SFT = 2 };

constexpr std::array<ElicitationTask, 3> kAllTasks{ElicitationTask::CTD, ElicitationTask::PFT,
                                                   ElicitationTask::SFT};

inline std::string_view to_string(ElicitationTask t) {
    switch (t) {
        case ElicitationTask::CTD: return "CTD";
        case ElicitationTask::PFT: return "PFT";
        case ElicitationTask::SFT: return "SFT";
    }
    return "?";
}

inline ElicitationTask parse_task(std::string_view s, const std::string& where) {
    if (s == "CTD") return ElicitationTask::CTD;
    if (s == "PFT") return ElicitationTask::PFT;
    if (s == "SFT") return ElicitationTask::SFT;
    throw ParseError(where + ": unknown task token '" + std::string(s) + "'");
}

constexpr int kMmseMin = 0;
constexpr int kMmseMax = 30;

// Per-task file references, relative to the cohort base directory.
// Empty string = artifact absent (reported by missing_artifacts, never
// silently skipped).
struct TaskArtifacts {
    std::string transcript;
    std::string alignment;
    std::string vad;

    bool operator==(const TaskArtifacts&) const = default;
};

struct Subject {
    std::string id;
    Diagnosis diagnosis = Diagnosis::HC;
    std::optional<int> mmse;
    std::array<TaskArtifacts, 3> artifacts{};  // indexed by ElicitationTask

    const TaskArtifacts& task(ElicitationTask t) const { return artifacts[static_cast<std::size_t>(t)]; }
    TaskArtifacts& task(ElicitationTask t) { return artifacts[static_cast<std::size_t>(t)]; }

    bool operator==(const Subject&) const = default;
};

struct Cohort {
    std::vector<Subject> subjects;
    std::string provenance;  // manifest path or "synth(seed=...)"
    fs::path base_dir;       // artifact paths resolve against this

    std::size_t size() const { return subjects.size(); }

    fs::path resolve(const std::string& rel) const { return base_dir / rel; }

    const Subject* find(std::string_view id) const {
        for (const auto& s : subjects)
            if (s.id == id) return &s;
        return nullptr;
    }

    std::map<Diagnosis, std::size_t> label_counts() const {
        std::map<Diagnosis, std::size_t> counts;
        for (const auto& s : subjects) ++counts[s.diagnosis];
        return counts;
    }
};

// ---------------------------------------------------------------------------
// Manifest I/O
//
// CSV, header required:
//   id,diagnosis,mmse,ctd_transcript,ctd_alignment,ctd_vad,
//   pft_transcript,pft_alignment,pft_vad,sft_transcript,sft_alignment,sft_vad
// mmse may be empty. Paths are relative to the manifest's directory.
// ---------------------------------------------------------------------------

inline const char* manifest_header() {
    return "id,diagnosis,mmse,ctd_transcript,ctd_alignment,ctd_vad,"
           "pft_transcript,pft_alignment,pft_vad,sft_transcript,sft_alignment,sft_vad";
}

inline Cohort load_manifest(const fs::path& path) {
    const DelimitedFile file = read_delimited(path);
    if (file.rows.empty()) throw ParseError(path.string() + ": missing header row");

    const auto& [header_line, header] = file.rows.front();
    if (split_fields(manifest_header()) != header)
        throw ParseError(row_context(path, header_line) + ": bad manifest header");

    Cohort cohort;
    cohort.provenance = path.string();
    cohort.base_dir = path.has_parent_path() ? path.parent_path() : fs::path(".");

    std::set<std::string> seen_ids;
    for (std::size_t r = 1; r < file.rows.size(); ++r) {
        const auto& [line_no, fields] = file.rows[r];
        const std::string where = row_context(path, line_no);
        if (fields.size() != 12)
            throw ParseError(where + ": expected 12 fields, got " + std::to_string(fields.size()));

        Subject s;
        s.id = std::string(trim(fields[0]));
        if (s.id.empty()) throw ParseError(where + ": empty subject id");
        if (!seen_ids.insert(s.id).second) throw ParseError(where + ": duplicate id '" + s.id + "'");
        s.diagnosis = parse_diagnosis(trim(fields[1]), where);
        if (!trim(fields[2]).empty()) {
            const long v = parse_int_strict(fields[2], where);
            if (v < kMmseMin || v > kMmseMax)
                throw ParseError(where + ": mmse " + std::to_string(v) + " out of [0,30]");
            s.mmse = static_cast<int>(v);
        }
        for (std::size_t t = 0; t < 3; ++t) {
            s.artifacts[t].transcript = std::string(trim(fields[3 + 3 * t]));
            s.artifacts[t].alignment = std::string(trim(fields[4 + 3 * t]));
            s.artifacts[t].vad = std::string(trim(fields[5 + 3 * t]));
        }
        cohort.subjects.push_back(std::move(s));
    }
    if (cohort.subjects.empty()) log_warn(path.string() + ": manifest has no subject rows");
    return cohort;
}

inline void save_manifest(const Cohort& cohort, const fs::path& path) {
    std::string out = manifest_header();
    out += '\n';
    for (const auto& s : cohort.subjects) {
        if (s.diagnosis == Diagnosis::NonHC)
            throw DataError("cannot write relabeled (NonHC) cohort as a manifest");
        out += s.id;
        out += ',';
        out += to_string(s.diagnosis);
        out += ',';
        if (s.mmse) out += std::to_string(*s.mmse);
        for (const auto& a : s.artifacts) {
            out += ',';
            out += a.transcript;
            out += ',';
            out += a.alignment;
            out += ',';
            out += a.vad;
        }
        out += '\n';
    }
    write_text_file(path, out);
}

// (subject id, task, artifact kind) triples where the manifest names no file
inline std::vector<std::string> missing_artifacts(const Cohort& cohort) {
    std::vector<std::string> out;
    for (const auto& s : cohort.subjects)
        for (const auto t : kAllTasks) {
            const auto& a = s.task(t);
            const std::string prefix = s.id + "/" + std::string(to_string(t)) + "/";
            if (a.transcript.empty()) out.push_back(prefix + "transcript");
            if (a.alignment.empty()) out.push_back(prefix + "alignment");
            if (a.vad.empty()) out.push_back(prefix + "vad");
        }
    return out;
}

// ---------------------------------------------------------------------------
// Relabeling and subsetting
// ---------------------------------------------------------------------------

inline Cohort relabel_nonhc(const Cohort& cohort) {
    if (cohort.subjects.empty()) throw DataError("relabel_nonhc: empty cohort");
    Cohort out = cohort;
    for (auto& s : out.subjects) s.diagnosis = coarse_label(s.diagnosis);
    return out;
}

// Subjects that carry an MMSE score; the excluded count is logged.
inline Cohort with_mmse(const Cohort& cohort) {
    Cohort out;
    out.provenance = cohort.provenance + " (mmse subset)";
    out.base_dir = cohort.base_dir;
    std::size_t dropped = 0;
    for (const auto& s : cohort.subjects) {
        if (s.mmse)
            out.subjects.push_back(s);
        else
            ++dropped;
    }
    if (dropped > 0)
        log_info("regression cohort: excluded " + std::to_string(dropped) + " subjects without MMSE (" +
                 std::to_string(out.subjects.size()) + " kept)");
    return out;
}

// ---------------------------------------------------------------------------
// Stratified splitting
// ---------------------------------------------------------------------------

enum class StratKey : std::uint8_t { Diagnosis = 0, MmseBin = 1 };

inline std::string_view to_string(StratKey k) {
    return k == StratKey::Diagnosis ? "diagnosis" : "mmse-bin";
}

constexpr int kMmseBinWidth = 3;

inline int mmse_bin(int mmse) { return mmse / kMmseBinWidth; }

struct SplitSpec {
    std::vector<std::string> train_ids;
    std::vector<std::string> validation_ids;
    double train_fraction = 0.75;
    std::uint64_t seed = 0;
    StratKey key = StratKey::Diagnosis;
};

inline long round_half_up(double v) { return static_cast<long>(std::floor(v + 0.5)); }

// Deterministic per (cohort order, seed). Per-stratum train count is
// round-half-up of fraction*n; a stratum with fewer than 2 members goes
// whole to train with a warning.
inline SplitSpec stratified_split(const Cohort& cohort, double train_fraction, std::uint64_t seed,
                                  StratKey key = StratKey::Diagnosis) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw ConfigError("train fraction must lie in (0,1), got " + fmt_full(train_fraction));
    if (cohort.subjects.empty()) throw DataError("stratified_split: empty cohort");

    std::map<int, std::vector<std::size_t>> strata;
    for (std::size_t i = 0; i < cohort.subjects.size(); ++i) {
        const Subject& s = cohort.subjects[i];
        int k;
        if (key == StratKey::Diagnosis) {
            k = static_cast<int>(s.diagnosis);
        } else {
            if (!s.mmse)
                throw DataError("stratified_split: subject '" + s.id + "' has no MMSE under mmse-bin key");
            k = mmse_bin(*s.mmse);
        }
        strata[k].push_back(i);
    }

    std::vector<std::size_t> train_idx, val_idx;
    for (const auto& [k, members] : strata) {
        std::vector<std::size_t> order = members;
        Rng rng(mix_seed(seed, 0x5712A7ull, static_cast<std::uint64_t>(k)));
        rng.shuffle(order);
        std::size_t n_train;
        if (order.size() < 2) {
            log_warn("split: stratum " + std::to_string(k) + " has " + std::to_string(order.size()) +
                     " member(s); placing all in train");
            n_train = order.size();
        } else {
            n_train = static_cast<std::size_t>(round_half_up(train_fraction * static_cast<double>(order.size())));
        }
        for (std::size_t i = 0; i < order.size(); ++i)
            (i < n_train ? train_idx : val_idx).push_back(order[i]);
    }

    std::sort(train_idx.begin(), train_idx.end());
    std::sort(val_idx.begin(), val_idx.end());

    SplitSpec spec;
    spec.train_fraction = train_fraction;
    spec.seed = seed;
    spec.key = key;
    for (const auto i : train_idx) spec.train_ids.push_back(cohort.subjects[i].id);
    for (const auto i : val_idx) spec.validation_ids.push_back(cohort.subjects[i].id);
    return spec;
}

inline Cohort subset_by_ids(const Cohort& cohort, const std::vector<std::string>& ids,
                            const std::string& tag) {
    Cohort out;
    out.provenance = cohort.provenance + " (" + tag + ")";
    out.base_dir = cohort.base_dir;
    std::set<std::string_view> wanted(ids.begin(), ids.end());
    for (const auto& s : cohort.subjects)
        if (wanted.count(s.id)) out.subjects.push_back(s);
    if (out.subjects.size() != ids.size())
        throw DataError("subset_by_ids: " + std::to_string(ids.size() - out.subjects.size()) +
                        " requested ids not present in cohort");
    return out;
}

}  // namespace cogspeech
