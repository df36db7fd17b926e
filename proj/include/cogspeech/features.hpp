#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "cogspeech/common.hpp"
#include "cogspeech/corpus.hpp"
#include "cogspeech/io.hpp"
#include "cogspeech/rng.hpp"

namespace cogspeech {

struct FeatureKey {
    std::string subject_id;
    ElicitationTask task;

    auto operator<=>(const FeatureKey&) const = default;
};

// A named, fixed-dimension vector space with per-(subject, task) vectors.
struct FeatureSet {
    std::string name;
    std::size_t dim = 0;
    std::map<FeatureKey, std::vector<double>> vectors;

    const std::vector<double>* find(const std::string& id, ElicitationTask task) const {
        const auto it = vectors.find(FeatureKey{id, task});
        return it == vectors.end() ? nullptr : &it->second;
    }

    void insert(FeatureKey key, std::vector<double> v) {
        if (v.size() != dim)
            throw DataError("feature set '" + name + "': vector for " + key.subject_id + "/" +
                            std::string(to_string(key.task)) + " has length " + std::to_string(v.size()) +
                            ", expected " + std::to_string(dim));
        if (!vectors.emplace(std::move(key), std::move(v)).second)
            throw DataError("feature set '" + name + "': duplicate key");
    }
};

struct FeatureRegistry {
    std::map<std::string, FeatureSet> sets;

    void add(FeatureSet set) {
        const std::string name = set.name;
        if (!sets.emplace(name, std::move(set)).second)
            throw ConfigError("feature set '" + name + "' registered twice");
    }

    const FeatureSet& get(const std::string& name) const {
        const auto it = sets.find(name);
        if (it == sets.end()) throw ConfigError("unknown feature set '" + name + "'");
        return it->second;
    }
};

// ---------------------------------------------------------------------------
// Vector file: CSV with header subject_id,task,v0,...,v{dim-1}
// ---------------------------------------------------------------------------

inline FeatureSet load_feature_set(const fs::path& path, const std::string& name, std::size_t dim) {
    if (dim == 0) throw ConfigError("feature set dim must be positive");
    FeatureSet set;
    set.name = name;
    set.dim = dim;

    const DelimitedFile file = read_delimited(path);
    if (file.rows.empty()) {
        log_warn(path.string() + ": empty vector file for feature set '" + name + "'");
        return set;
    }
    const auto& [header_line, header] = file.rows.front();
    if (header.size() != dim + 2 || header[0] != "subject_id" || header[1] != "task")
        throw ParseError(row_context(path, header_line) + ": bad vector file header (want subject_id,task,v0..v" +
                         std::to_string(dim - 1) + ")");

    for (std::size_t r = 1; r < file.rows.size(); ++r) {
        const auto& [line_no, fields] = file.rows[r];
        const std::string where = row_context(path, line_no);
        if (fields.size() != dim + 2)
            throw ParseError(where + ": row has " + std::to_string(fields.size() - 2) +
                             " values, expected " + std::to_string(dim));
        FeatureKey key{std::string(trim(fields[0])), parse_task(trim(fields[1]), where)};
        std::vector<double> v(dim);
        for (std::size_t j = 0; j < dim; ++j) v[j] = parse_double_strict(fields[2 + j], where);
        if (set.vectors.count(key)) throw ParseError(where + ": duplicate (subject, task) key");
        set.vectors.emplace(std::move(key), std::move(v));
    }
    if (set.vectors.empty()) log_warn(path.string() + ": vector file has a header but no rows");
    return set;
}

inline void save_feature_set(const FeatureSet& set, const fs::path& path) {
    std::string out = "subject_id,task";
    for (std::size_t j = 0; j < set.dim; ++j) out += ",v" + std::to_string(j);
    out += '\n';
    for (const auto& [key, v] : set.vectors) {
        out += key.subject_id;
        out += ',';
        out += to_string(key.task);
        for (const double x : v) {
            out += ',';
            out += fmt_full(x);
        }
        out += '\n';
    }
    write_text_file(path, out);
}

// (subject, task) pairs in the cohort that have no vector in the set
inline std::vector<FeatureKey> missing_vectors(const FeatureSet& set, const Cohort& cohort) {
    std::vector<FeatureKey> out;
    for (const auto& s : cohort.subjects)
        for (const auto t : kAllTasks)
            if (!set.find(s.id, t)) out.push_back(FeatureKey{s.id, t});
    return out;
}

// ---------------------------------------------------------------------------
// Hashed n-gram featurizer — the desk-scale stand-in for pre-trained
// text encoders. Signed feature hashing over token n-grams; pause symbols
// participate as ordinary tokens so disfluency information reaches the
// model.
// ---------------------------------------------------------------------------

struct FeaturizerConfig {
    std::string name = "hash";
    std::vector<int> orders{1, 2};
    std::size_t dim = 256;
    std::uint64_t seed = 0;
};

inline std::vector<double> hashed_ngram_featurize(std::span<const std::string> tokens,
                                                  const FeaturizerConfig& cfg) {
    if (cfg.dim == 0) throw ConfigError("featurizer dim must be positive");
    std::vector<double> v(cfg.dim, 0.0);

    std::string gram;
    for (const int order : cfg.orders) {
        if (order < 1) throw ConfigError("n-gram order must be >= 1");
        const std::size_t n = static_cast<std::size_t>(order);
        if (tokens.size() < n) continue;
        for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
            gram.clear();
            for (std::size_t k = 0; k < n; ++k) {
                if (k) gram.push_back('\x1f');  // unit separator keeps token boundaries unambiguous
                gram += tokens[i + k];
            }
            const std::uint64_t h = fnv1a64(gram.data(), gram.size(), 0xCBF29CE484222325ull ^ cfg.seed);
            const std::size_t index = static_cast<std::size_t>(h % cfg.dim);
            const double sign = (splitmix64(h ^ 0x5F3759DF9E3779B9ull) >> 63) ? -1.0 : 1.0;
            v[index] += sign;
        }
    }

    double norm_sq = 0.0;
    for (const double x : v) norm_sq += x * x;
    if (norm_sq > 0.0) {
        const double inv = 1.0 / std::sqrt(norm_sq);
        for (double& x : v) x *= inv;
    }
    return v;
}

inline std::vector<double> hashed_ngram_featurize(const std::vector<std::string>& tokens,
                                                  const FeaturizerConfig& cfg) {
    return hashed_ngram_featurize(std::span<const std::string>(tokens), cfg);
}

}  // namespace cogspeech
