#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "cogspeech/common.hpp"
#include "cogspeech/corpus.hpp"

namespace cogspeech {

enum class TiePolicy : std::uint8_t {
    Severe = 0,      // most severe tied class wins (NonHC at stage 1, Dementia at stage 2)
    LeastSevere = 1,
    FirstSeen = 2,   // first tied class to appear in the vote list
};

inline std::string_view to_string(TiePolicy p) {
    switch (p) {
        case TiePolicy::Severe: return "severe";
        case TiePolicy::LeastSevere: return "least-severe";
        case TiePolicy::FirstSeen: return "first-seen";
    }
    return "?";
}

inline TiePolicy parse_tie_policy(std::string_view s) {
    if (s == "severe") return TiePolicy::Severe;
    if (s == "least-severe") return TiePolicy::LeastSevere;
    if (s == "first-seen") return TiePolicy::FirstSeen;
    throw ConfigError("unknown tie policy '" + std::string(s) + "'");
}

// Grid dimensions and aggregation policy. Defaults mirror the full
// experiment grid: 3 featurizers x 3 tasks x 10 seeds = 90 classifier
// voters per stage, and 3 regression models x 5 feature sets x 3 tasks
// = 45 regression pool members gated at validation RMSE < 3.
struct EnsembleConfig {
    std::size_t n_featurizers = 3;
    std::size_t n_tasks = 3;
    std::size_t n_seeds = 10;
    std::size_t n_regression_models = 3;
    std::size_t n_feature_sets = 5;
    double rmse_gate_threshold = 3.0;
    TiePolicy tie_policy = TiePolicy::Severe;
    bool clamp_scores = true;
    double clamp_lo = 0.0;
    double clamp_hi = 30.0;

    std::size_t classifier_grid_size() const { return n_featurizers * n_tasks * n_seeds; }
    std::size_t regression_pool_size() const { return n_regression_models * n_feature_sets * n_tasks; }
};

struct Vote {
    std::string voter;  // grid coordinate, e.g. "hash-bi/CTD/seed3"
    Diagnosis label = Diagnosis::HC;
};

struct VoteRecord {
    Diagnosis winner = Diagnosis::HC;
    std::size_t margin = 0;  // top count - runner-up count
    std::map<Diagnosis, std::size_t> counts;
    std::vector<Vote> voters;  // populated by the voter-level overload
};

inline VoteRecord majority_vote(std::span<const Diagnosis> labels, TiePolicy policy = TiePolicy::Severe) {
    if (labels.empty()) throw DataError("majority_vote: empty label list");
    VoteRecord rec;
    for (const auto d : labels) ++rec.counts[d];

    std::size_t top = 0;
    for (const auto& [d, n] : rec.counts) top = std::max(top, n);

    std::vector<Diagnosis> tied;
    for (const auto& [d, n] : rec.counts)
        if (n == top) tied.push_back(d);

    if (tied.size() == 1) {
        rec.winner = tied[0];
    } else {
        switch (policy) {
            case TiePolicy::Severe:
                rec.winner = *std::max_element(tied.begin(), tied.end(),
                                               [](Diagnosis a, Diagnosis b) { return severity(a) < severity(b); });
                break;
            case TiePolicy::LeastSevere:
                rec.winner = *std::min_element(tied.begin(), tied.end(),
                                               [](Diagnosis a, Diagnosis b) { return severity(a) < severity(b); });
                break;
            case TiePolicy::FirstSeen: {
                rec.winner = tied[0];
                for (const auto d : labels) {
                    if (std::find(tied.begin(), tied.end(), d) != tied.end()) {
                        rec.winner = d;
                        break;
                    }
                }
                break;
            }
        }
    }

    std::size_t runner_up = 0;
    for (const auto& [d, n] : rec.counts)
        if (d != rec.winner) runner_up = std::max(runner_up, n);
    rec.margin = rec.counts[rec.winner] - runner_up;
    return rec;
}

inline VoteRecord majority_vote(std::span<const Vote> votes, TiePolicy policy = TiePolicy::Severe) {
    std::vector<Diagnosis> labels;
    labels.reserve(votes.size());
    for (const auto& v : votes) labels.push_back(v.label);
    VoteRecord rec = majority_vote(std::span<const Diagnosis>(labels), policy);
    rec.voters.assign(votes.begin(), votes.end());
    return rec;
}

inline double seed_average(std::span<const double> scores) {
    if (scores.empty()) throw DataError("seed_average: empty score list");
    double sum = 0.0;
    for (const double s : scores) sum += s;
    return sum / static_cast<double>(scores.size());
}

// ---------------------------------------------------------------------------
// RMSE gate: keep pool members with validation RMSE strictly below the
// threshold; when none qualify, fall back to the single best member.
// ---------------------------------------------------------------------------

struct PoolEntry {
    std::string id;
    double validation_rmse = 0.0;
};

struct GateResult {
    std::vector<std::string> selected;  // pool order preserved
    bool fell_back = false;
};

inline GateResult rmse_gate(std::span<const PoolEntry> pool, double threshold) {
    if (pool.empty()) throw DataError("rmse_gate: empty pool");
    for (const auto& e : pool)
        if (e.validation_rmse < 0.0 || !std::isfinite(e.validation_rmse))
            throw DataError("rmse_gate: invalid RMSE for '" + e.id + "'");

    GateResult out;
    for (const auto& e : pool)
        if (e.validation_rmse < threshold) out.selected.push_back(e.id);

    if (out.selected.empty()) {
        const auto best = std::min_element(pool.begin(), pool.end(), [](const PoolEntry& a, const PoolEntry& b) {
            return a.validation_rmse < b.validation_rmse;
        });
        out.selected.push_back(best->id);
        out.fell_back = true;
        log_warn("rmse_gate: no model below " + fmt_full(threshold) + "; falling back to '" + best->id +
                 "' (rmse " + fmt_full(best->validation_rmse) + ")");
    }
    return out;
}

// Mean of the selected models' scores for one subject, clamped to the
// MMSE range when enabled.
inline double ensemble_regress(std::span<const double> outputs, const EnsembleConfig& cfg) {
    if (outputs.empty()) throw DataError("ensemble_regress: subject has no selected-model outputs");
    double mean = seed_average(outputs);
    if (cfg.clamp_scores) mean = std::clamp(mean, cfg.clamp_lo, cfg.clamp_hi);
    return mean;
}

// ---------------------------------------------------------------------------
// Grid accounting: complete runs must see the full voter grid per subject
// and the full regression pool before gating.
// ---------------------------------------------------------------------------

struct GridAudit {
    std::map<std::string, std::size_t> stage1_votes_per_subject;
    std::map<std::string, std::size_t> stage2_votes_per_subject;
    std::size_t stage2_consultations = 0;  // subjects whose final label consulted stage 2
    std::size_t regression_candidates = 0;  // pool members consulted before gating

    bool classification_complete(const EnsembleConfig& cfg, std::size_t n_subjects) const {
        if (stage1_votes_per_subject.size() != n_subjects) return false;
        if (stage2_votes_per_subject.size() != n_subjects) return false;
        for (const auto& [id, n] : stage1_votes_per_subject)
            if (n != cfg.classifier_grid_size()) return false;
        for (const auto& [id, n] : stage2_votes_per_subject)
            if (n != cfg.classifier_grid_size()) return false;
        return true;
    }
};

}  // namespace cogspeech
