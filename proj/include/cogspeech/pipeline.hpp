#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cogspeech/cascade.hpp"
#include "cogspeech/config.hpp"
#include "cogspeech/corpus.hpp"
#include "cogspeech/ensemble.hpp"
#include "cogspeech/features.hpp"
#include "cogspeech/metrics.hpp"
#include "cogspeech/pause.hpp"
#include "cogspeech/report.hpp"
#include "cogspeech/silence.hpp"
#include "cogspeech/transcript.hpp"

namespace cogspeech {

// ---------------------------------------------------------------------------
// Feature preparation
// ---------------------------------------------------------------------------

// Pause-encoded token streams for every (subject, task) with an alignment
// file; subjects without one are recorded in `missing`.
struct EncodedCorpus {
    std::map<FeatureKey, std::vector<std::string>> tokens;
    std::vector<FeatureKey> missing;

    static EncodedCorpus build(const Cohort& cohort, std::span<const ElicitationTask> tasks) {
        EncodedCorpus out;
        for (const auto& s : cohort.subjects) {
            for (const auto t : tasks) {
                const auto& rel = s.task(t).alignment;
                if (rel.empty() || !fs::exists(cohort.resolve(rel))) {
                    out.missing.push_back({s.id, t});
                    continue;
                }
                out.tokens.emplace(FeatureKey{s.id, t}, encode_pauses(parse_alignment(cohort.resolve(rel))));
            }
        }
        if (!out.missing.empty())
            log_info("encoded corpus: " + std::to_string(out.missing.size()) +
                     " (subject, task) pairs lack alignment files");
        return out;
    }

    const std::vector<std::string>* find(const std::string& id, ElicitationTask t) const {
        const auto it = tokens.find(FeatureKey{id, t});
        return it == tokens.end() ? nullptr : &it->second;
    }
};

// Hashed vectors for one (featurizer, task) binding over a whole cohort.
struct CellFeatures {
    std::map<std::string, std::vector<double>> by_id;

    const std::vector<double>* find(const std::string& id) const {
        const auto it = by_id.find(id);
        return it == by_id.end() ? nullptr : &it->second;
    }

    FeatureProvider provider() const {
        return [this](const Subject& s) { return find(s.id); };
    }
};

inline CellFeatures featurize_cell(const EncodedCorpus& corpus, const Cohort& cohort,
                                   const FeaturizerConfig& featurizer, ElicitationTask task) {
    CellFeatures out;
    for (const auto& s : cohort.subjects) {
        const auto* toks = corpus.find(s.id, task);
        if (!toks) continue;
        out.by_id.emplace(s.id, hashed_ngram_featurize(*toks, featurizer));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Classifier grid: (featurizer x task x seed) cascade and direct-3 voters
// ---------------------------------------------------------------------------

struct GridCell {
    std::size_t featurizer_index = 0;
    std::size_t task_index = 0;
    std::size_t seed_index = 0;
    std::string coordinate;  // "hash-bi/CTD/seed3"
};

inline std::vector<GridCell> enumerate_cells(const PipelineConfig& cfg) {
    std::vector<GridCell> cells;
    for (std::size_t f = 0; f < cfg.featurizers.size(); ++f)
        for (std::size_t t = 0; t < cfg.tasks.size(); ++t)
            for (std::size_t s = 0; s < cfg.model_seeds.size(); ++s) {
                GridCell cell{f, t, s, {}};
                cell.coordinate = cfg.featurizers[f].name + "/" + std::string(to_string(cfg.tasks[t])) +
                                  "/seed" + std::to_string(cfg.model_seeds[s]);
                cells.push_back(std::move(cell));
            }
    return cells;
}

// Stage-level votes for every evaluation subject. Stage-2 votes are
// recorded for all subjects (the stage-2 aggregate is consulted only for
// subjects the stage-1 vote routes to NonHC); direct-3 votes power the
// comparison baseline.
struct ClassificationVotes {
    std::vector<std::string> subject_ids;  // evaluation order
    std::map<std::string, std::vector<Vote>> stage1;
    std::map<std::string, std::vector<Vote>> stage2;
    std::map<std::string, std::vector<Vote>> direct3;
    GridAudit audit;

    void merge(const ClassificationVotes& other) {
        if (subject_ids.empty()) subject_ids = other.subject_ids;
        for (const auto& [id, votes] : other.stage1)
            stage1[id].insert(stage1[id].end(), votes.begin(), votes.end());
        for (const auto& [id, votes] : other.stage2)
            stage2[id].insert(stage2[id].end(), votes.begin(), votes.end());
        for (const auto& [id, votes] : other.direct3)
            direct3[id].insert(direct3[id].end(), votes.begin(), votes.end());
        for (const auto& [id, n] : other.audit.stage1_votes_per_subject) audit.stage1_votes_per_subject[id] += n;
        for (const auto& [id, n] : other.audit.stage2_votes_per_subject) audit.stage2_votes_per_subject[id] += n;
    }
};

struct GridRunOptions {
    bool with_direct3 = true;
    unsigned jobs = 1;
};

inline ClassificationVotes run_classifier_grid(const Cohort& train, const Cohort& eval_set,
                                               const EncodedCorpus& corpus, const PipelineConfig& cfg,
                                               const GridRunOptions& options) {
    const std::vector<GridCell> cells = enumerate_cells(cfg);

    // featurization depends on (featurizer, task) only; share across seeds
    std::map<std::pair<std::size_t, std::size_t>, CellFeatures> features;
    Cohort everyone = train;
    for (const auto& s : eval_set.subjects)
        if (!everyone.find(s.id)) everyone.subjects.push_back(s);
    for (std::size_t f = 0; f < cfg.featurizers.size(); ++f)
        for (std::size_t t = 0; t < cfg.tasks.size(); ++t)
            features.emplace(std::make_pair(f, t),
                             featurize_cell(corpus, everyone, cfg.featurizers[f], cfg.tasks[t]));

    struct CellResult {
        std::vector<std::pair<std::string, Diagnosis>> stage1, stage2, direct3;
    };
    std::vector<CellResult> results(cells.size());

    parallel_for(cells.size(), options.jobs, [&](std::size_t c) {
        const GridCell& cell = cells[c];
        const CellFeatures& feats = features.at({cell.featurizer_index, cell.task_index});

        TrainConfig train_cfg = cfg.train;
        train_cfg.seed = mix_seed(cfg.model_seeds[cell.seed_index],
                                  fnv1a64(cell.coordinate.data(), cell.coordinate.size()));

        const CascadeModel cascade =
            train_cascade(train, feats.provider(), train_cfg, cfg.stage1_threshold);
        std::optional<ClassifierHead> direct;
        if (options.with_direct3) direct = train_direct3(train, feats.provider(), train_cfg);

        CellResult& res = results[c];
        for (const auto& s : eval_set.subjects) {
            const auto* x = feats.find(s.id);
            if (!x) continue;
            const Prediction p1 = cascade.stage1.predict(*x);
            const bool nonhc = p1.probs[1] > cascade.stage1_threshold;
            res.stage1.emplace_back(s.id, nonhc ? Diagnosis::NonHC : Diagnosis::HC);
            const Prediction p2 = cascade.stage2.predict(*x);
            res.stage2.emplace_back(s.id, stage2_label(p2.label));
            if (direct) res.direct3.emplace_back(s.id, predict_direct3(*direct, *x));
        }
    });

    ClassificationVotes votes;
    for (const auto& s : eval_set.subjects) votes.subject_ids.push_back(s.id);
    for (std::size_t c = 0; c < cells.size(); ++c) {
        const auto& coord = cells[c].coordinate;
        for (const auto& [id, label] : results[c].stage1) {
            votes.stage1[id].push_back({coord, label});
            ++votes.audit.stage1_votes_per_subject[id];
        }
        for (const auto& [id, label] : results[c].stage2) {
            votes.stage2[id].push_back({coord, label});
            ++votes.audit.stage2_votes_per_subject[id];
        }
        for (const auto& [id, label] : results[c].direct3) votes.direct3[id].push_back({coord, label});
    }
    return votes;
}

// ---------------------------------------------------------------------------
// Vote aggregation
// ---------------------------------------------------------------------------

struct AggregatedDecision {
    Diagnosis label = Diagnosis::HC;
    VoteRecord stage1;
    VoteRecord stage2;  // counts empty when stage 2 was not consulted
    bool stage2_consulted = false;
};

// Stage-wise voting: the stage-1 vote decides HC vs NonHC; for routed
// subjects the stage-2 vote decides MCI vs Dementia. An oracle map, when
// given, overrides the stage-1 aggregate (used by routing-exactness
// checks).
inline std::map<std::string, AggregatedDecision> aggregate_cascade(
    ClassificationVotes& votes, TiePolicy policy,
    const std::map<std::string, Diagnosis>* stage1_oracle = nullptr) {
    std::map<std::string, AggregatedDecision> out;
    for (const auto& id : votes.subject_ids) {
        AggregatedDecision dec;
        const auto s1 = votes.stage1.find(id);
        if (s1 == votes.stage1.end()) continue;
        dec.stage1 = majority_vote(s1->second, policy);
        Diagnosis coarse = dec.stage1.winner;
        if (stage1_oracle) coarse = coarse_label(stage1_oracle->at(id));
        if (coarse == Diagnosis::HC) {
            dec.label = Diagnosis::HC;
        } else {
            dec.stage2 = majority_vote(votes.stage2.at(id), policy);
            dec.label = dec.stage2.winner;
            dec.stage2_consulted = true;
            ++votes.audit.stage2_consultations;
        }
        out.emplace(id, std::move(dec));
    }
    return out;
}

inline std::map<std::string, Diagnosis> aggregate_direct3(const ClassificationVotes& votes,
                                                          TiePolicy policy) {
    std::map<std::string, Diagnosis> out;
    for (const auto& id : votes.subject_ids) {
        const auto it = votes.direct3.find(id);
        if (it == votes.direct3.end()) continue;
        out.emplace(id, majority_vote(it->second, policy).winner);
    }
    return out;
}

inline double labeled_macro_f1(const Cohort& truth, const std::map<std::string, Diagnosis>& predicted) {
    std::vector<Diagnosis> y_true, y_pred;
    for (const auto& s : truth.subjects) {
        const auto it = predicted.find(s.id);
        if (it == predicted.end()) continue;
        y_true.push_back(s.diagnosis);
        y_pred.push_back(it->second);
    }
    return macro_f1_three_class(y_true, y_pred);
}

inline std::map<std::string, Diagnosis> decisions_to_labels(
    const std::map<std::string, AggregatedDecision>& decisions) {
    std::map<std::string, Diagnosis> out;
    for (const auto& [id, dec] : decisions) out.emplace(id, dec.label);
    return out;
}

// ---------------------------------------------------------------------------
// Vote/prediction files
// ---------------------------------------------------------------------------

inline void write_vote_file(const ClassificationVotes& votes, const fs::path& path) {
    std::string out = "subject_id,stage,voter,label\n";
    for (const auto& id : votes.subject_ids) {
        const auto emit = [&](const char* stage, const std::map<std::string, std::vector<Vote>>& table) {
            const auto it = table.find(id);
            if (it == table.end()) return;
            for (const auto& v : it->second)
                out += id + "," + stage + "," + v.voter + "," + std::string(to_string(v.label)) + "\n";
        };
        emit("stage1", votes.stage1);
        emit("stage2", votes.stage2);
        emit("direct3", votes.direct3);
    }
    write_text_file(path, out);
}

inline void write_decisions_file(const std::map<std::string, AggregatedDecision>& decisions,
                                 const std::vector<std::string>& order, const fs::path& path) {
    std::string out = "subject_id,predicted_label,stage1_vote_share,stage2_vote_share\n";
    for (const auto& id : order) {
        const auto it = decisions.find(id);
        if (it == decisions.end()) continue;
        const AggregatedDecision& dec = it->second;
        double s1_total = 0;
        for (const auto& [d, n] : dec.stage1.counts) s1_total += static_cast<double>(n);
        const double s1_share =
            s1_total > 0 ? static_cast<double>(dec.stage1.counts.at(dec.stage1.winner)) / s1_total : 0.0;
        out += id + "," + std::string(to_string(dec.label)) + "," + fmt_fixed(s1_share, 6) + ",";
        if (dec.stage2_consulted) {
            double s2_total = 0;
            for (const auto& [d, n] : dec.stage2.counts) s2_total += static_cast<double>(n);
            out += fmt_fixed(static_cast<double>(dec.stage2.counts.at(dec.stage2.winner)) / s2_total, 6);
        }
        out += '\n';
    }
    write_text_file(path, out);
}

// Single-model prediction file (the `predict` command):
// subject_id,predicted_label,stage1_prob,stage2_prob.
inline void write_prediction_file(const Cohort& cohort, const CascadeModel& model,
                                  const FeatureProvider& features, const fs::path& path) {
    std::string out = "subject_id,predicted_label,stage1_prob,stage2_prob\n";
    for (const auto& s : cohort.subjects) {
        const auto* x = features(s);
        if (!x) continue;
        const CascadeDecision dec = infer_cascade(model, *x);
        out += s.id + "," + std::string(to_string(dec.label)) + "," + fmt_fixed(dec.stage1_nonhc_prob, 6) + ",";
        if (dec.stage2_dementia_prob) out += fmt_fixed(*dec.stage2_dementia_prob, 6);
        out += '\n';
    }
    write_text_file(path, out);
}

// ---------------------------------------------------------------------------
// Split handling shared by experiments
// ---------------------------------------------------------------------------

struct ExperimentCohorts {
    Cohort pool;                 // everything except the held-out test subjects
    Cohort test;                 // empty when test_fraction == 0
    std::vector<SplitSpec> splits;
};

inline ExperimentCohorts make_experiment_cohorts(const Cohort& cohort, const PipelineConfig& cfg,
                                                 StratKey key) {
    ExperimentCohorts out;
    if (cfg.test_fraction > 0.0) {
        const SplitSpec carve = stratified_split(cohort, 1.0 - cfg.test_fraction, cfg.test_carve_seed, key);
        out.pool = subset_by_ids(cohort, carve.train_ids, "pool");
        out.test = subset_by_ids(cohort, carve.validation_ids, "test");
    } else {
        out.pool = cohort;
    }
    for (const auto seed : cfg.split_seeds)
        out.splits.push_back(stratified_split(out.pool, cfg.train_fraction, seed, key));
    return out;
}

inline void write_split_file(const SplitSpec& spec, const fs::path& path) {
    const nlohmann::json j{{"train_ids", spec.train_ids},
                           {"validation_ids", spec.validation_ids},
                           {"train_fraction", spec.train_fraction},
                           {"seed", spec.seed},
                           {"stratification", std::string(to_string(spec.key))}};
    write_text_file(path, j.dump(2) + "\n");
}

inline SplitSpec read_split_file(const fs::path& path) {
    const auto j = nlohmann::json::parse(read_text_file(path));
    SplitSpec spec;
    spec.train_ids = j.at("train_ids").get<std::vector<std::string>>();
    spec.validation_ids = j.at("validation_ids").get<std::vector<std::string>>();
    spec.train_fraction = j.at("train_fraction").get<double>();
    spec.seed = j.at("seed").get<std::uint64_t>();
    spec.key = j.at("stratification").get<std::string>() == "mmse-bin" ? StratKey::MmseBin : StratKey::Diagnosis;
    return spec;
}

// ---------------------------------------------------------------------------
// The cascaded-vs-direct comparison experiment (classification)
// ---------------------------------------------------------------------------

struct CompareOutcome {
    std::vector<double> cascade_val_f1;   // per split
    std::vector<double> direct_val_f1;    // per split
    std::optional<double> cascade_test_f1;          // multi-split vote on test
    std::optional<double> direct_test_f1;
    std::optional<double> cascade_retrain_test_f1;  // retrained on the full pool
    std::optional<double> direct_retrain_test_f1;
    ReportTable table;
    GridAudit audit;  // from the first split's validation run
};

inline CompareOutcome run_compare_experiment(const Cohort& cohort, const PipelineConfig& cfg,
                                             const fs::path& out_dir, unsigned jobs) {
    const ExperimentCohorts exp = make_experiment_cohorts(cohort, cfg, StratKey::Diagnosis);
    const EncodedCorpus corpus = EncodedCorpus::build(cohort, cfg.tasks);

    CompareOutcome outcome;
    ClassificationVotes test_votes_all_splits;
    GridRunOptions options{.with_direct3 = true, .jobs = jobs};

    for (std::size_t k = 0; k < exp.splits.size(); ++k) {
        const SplitSpec& split = exp.splits[k];
        const Cohort train = subset_by_ids(exp.pool, split.train_ids, "train");
        const Cohort val = subset_by_ids(exp.pool, split.validation_ids, "validation");

        ClassificationVotes val_votes = run_classifier_grid(train, val, corpus, cfg, options);
        const auto cascade_decisions = aggregate_cascade(val_votes, cfg.ensemble.tie_policy);
        outcome.cascade_val_f1.push_back(labeled_macro_f1(val, decisions_to_labels(cascade_decisions)));
        outcome.direct_val_f1.push_back(
            labeled_macro_f1(val, aggregate_direct3(val_votes, cfg.ensemble.tie_policy)));
        if (k == 0) outcome.audit = val_votes.audit;

        const std::string split_tag = "split" + std::to_string(k + 1);
        write_vote_file(val_votes, out_dir / (split_tag + "_validation_votes.csv"));
        write_decisions_file(cascade_decisions, val_votes.subject_ids,
                             out_dir / (split_tag + "_validation_decisions.csv"));
        write_split_file(split, out_dir / (split_tag + ".json"));

        if (!exp.test.subjects.empty()) {
            ClassificationVotes test_votes = run_classifier_grid(train, exp.test, corpus, cfg, options);
            test_votes_all_splits.merge(test_votes);
        }
    }

    if (!exp.test.subjects.empty()) {
        const auto cascade_decisions = aggregate_cascade(test_votes_all_splits, cfg.ensemble.tie_policy);
        outcome.cascade_test_f1 = labeled_macro_f1(exp.test, decisions_to_labels(cascade_decisions));
        outcome.direct_test_f1 =
            labeled_macro_f1(exp.test, aggregate_direct3(test_votes_all_splits, cfg.ensemble.tie_policy));
        write_vote_file(test_votes_all_splits, out_dir / "test_votes_multisplit.csv");
        write_decisions_file(cascade_decisions, test_votes_all_splits.subject_ids,
                             out_dir / "test_decisions_multisplit.csv");

        if (cfg.retrain_on_full) {
            ClassificationVotes retrain_votes =
                run_classifier_grid(exp.pool, exp.test, corpus, cfg, options);
            outcome.cascade_retrain_test_f1 = labeled_macro_f1(
                exp.test, decisions_to_labels(aggregate_cascade(retrain_votes, cfg.ensemble.tie_policy)));
            outcome.direct_retrain_test_f1 =
                labeled_macro_f1(exp.test, aggregate_direct3(retrain_votes, cfg.ensemble.tie_policy));
        }
    }

    // Table: per-split validation macro F1 for both methods, then the
    // multi-split (and retrained) ensembles on the held-out test subjects.
    ReportTable& table = outcome.table;
    table.title = "Classification macro F1: cascaded binary vs direct three-class";
    table.columns = {"row", "cascade_val", "direct3_val", "cascade_test", "direct3_test"};
    for (std::size_t k = 0; k < outcome.cascade_val_f1.size(); ++k)
        table.add_row({"split" + std::to_string(k + 1), fmt_fixed(outcome.cascade_val_f1[k], 4),
                       fmt_fixed(outcome.direct_val_f1[k], 4), "", ""});
    if (outcome.cascade_test_f1)
        table.add_row({"vote(all splits)", "", "", fmt_fixed(*outcome.cascade_test_f1, 4),
                       fmt_fixed(*outcome.direct_test_f1, 4)});
    if (outcome.cascade_retrain_test_f1)
        table.add_row({"vote(retrained)", "", "", fmt_fixed(*outcome.cascade_retrain_test_f1, 4),
                       fmt_fixed(*outcome.direct_retrain_test_f1, 4)});
    table.notes.push_back("voters per stage per subject: " + std::to_string(cfg.ensemble.classifier_grid_size()));
    table.notes.push_back("tie policy: " + std::string(to_string(cfg.ensemble.tie_policy)));
    table.write(out_dir / "report.txt", out_dir / "report.csv");
    return outcome;
}

}  // namespace cogspeech
