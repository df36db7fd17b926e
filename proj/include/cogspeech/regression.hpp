#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "cogspeech/config.hpp"
#include "cogspeech/corpus.hpp"
#include "cogspeech/ensemble.hpp"
#include "cogspeech/features.hpp"
#include "cogspeech/learners.hpp"
#include "cogspeech/metrics.hpp"
#include "cogspeech/pipeline.hpp"
#include "cogspeech/report.hpp"
#include "cogspeech/silence.hpp"

namespace cogspeech {

// ---------------------------------------------------------------------------
// Feature registry assembly: the computed silence set plus ingested
// embedding vector files.
// ---------------------------------------------------------------------------

inline FeatureSet compute_silence_set(const Cohort& cohort, std::span<const ElicitationTask> tasks) {
    FeatureSet set;
    set.name = "silence";
    set.dim = 10;
    for (const auto& s : cohort.subjects) {
        for (const auto t : tasks) {
            const auto& rel = s.task(t).vad;
            if (rel.empty() || !fs::exists(cohort.resolve(rel))) continue;
            const VadTrack track = parse_vad(cohort.resolve(rel));
            if (track.segments.empty()) continue;
            const SilenceVector v = silence_vector(track);
            set.insert({s.id, t}, std::vector<double>(v.begin(), v.end()));
        }
    }
    return set;
}

inline FeatureRegistry build_feature_registry(const Cohort& cohort, const PipelineConfig& cfg) {
    FeatureRegistry registry;
    for (const auto& want : cfg.regression_feature_sets) {
        if (want == "silence") {
            registry.add(compute_silence_set(cohort, cfg.tasks));
            continue;
        }
        const auto spec = std::find_if(cfg.vector_sets.begin(), cfg.vector_sets.end(),
                                       [&](const VectorSetConfig& v) { return v.name == want; });
        if (spec == cfg.vector_sets.end())
            throw ConfigError("regression feature set '" + want + "' has no vector_sets entry");
        registry.add(load_feature_set(cohort.base_dir / spec->path, spec->name, spec->dim));
    }
    return registry;
}

// ---------------------------------------------------------------------------
// Regression model presets and hyperparameter lattices
// ---------------------------------------------------------------------------

struct RegressorHp {
    bool is_svr = false;
    SvrConfig svr;
    GbrtConfig gbrt;
};

inline std::vector<RegressorHp> regressor_grid(const std::string& model_name) {
    std::vector<RegressorHp> grid;
    if (model_name == "svr") {
        for (const double epsilon : {0.5, 1.0})
            for (const double c : {1.0, 10.0}) {
                RegressorHp hp;
                hp.is_svr = true;
                hp.svr.epsilon = epsilon;
                hp.svr.c = c;
                hp.svr.iterations = 4000;
                grid.push_back(hp);
            }
    } else if (model_name == "gbrt-fine") {
        for (const int rounds : {60, 120})
            for (const int depth : {2, 3}) {
                RegressorHp hp;
                hp.gbrt.rounds = rounds;
                hp.gbrt.depth = depth;
                hp.gbrt.shrinkage = 0.1;
                grid.push_back(hp);
            }
    } else if (model_name == "gbrt-coarse") {
        for (const int rounds : {25, 60}) {
            RegressorHp hp;
            hp.gbrt.rounds = rounds;
            hp.gbrt.depth = 1;
            hp.gbrt.shrinkage = 0.3;
            grid.push_back(hp);
        }
    } else {
        throw ConfigError("unknown regression model '" + model_name + "'");
    }
    return grid;
}

struct FittedRegressor {
    Standardizer standardizer;
    std::variant<LinearSvr, Gbrt> model;

    double predict(std::span<const double> x) const {
        const std::vector<double> z = standardizer.apply(x);
        return std::visit([&](const auto& m) { return m.predict(z); }, model);
    }
};

inline FittedRegressor fit_regressor(const Matrix& x, const std::vector<double>& y, const RegressorHp& hp) {
    FittedRegressor out;
    out.standardizer = Standardizer::fit(x);
    const Matrix z = out.standardizer.apply(x);
    if (hp.is_svr)
        out.model = train_svr(z, y, hp.svr);
    else
        out.model = train_gbrt(z, y, hp.gbrt);
    return out;
}

// ---------------------------------------------------------------------------
// The 3 models x 5 feature sets x 3 tasks regression pool
// ---------------------------------------------------------------------------

struct RegressionCell {
    std::size_t model_index = 0;
    std::size_t set_index = 0;
    std::size_t task_index = 0;
    std::string coordinate;  // "svr/silence/CTD"
};

inline std::vector<RegressionCell> enumerate_regression_cells(const PipelineConfig& cfg) {
    std::vector<RegressionCell> cells;
    for (std::size_t m = 0; m < cfg.regression_models.size(); ++m)
        for (std::size_t s = 0; s < cfg.regression_feature_sets.size(); ++s)
            for (std::size_t t = 0; t < cfg.tasks.size(); ++t) {
                RegressionCell cell{m, s, t, {}};
                cell.coordinate = cfg.regression_models[m].name + "/" + cfg.regression_feature_sets[s] +
                                  "/" + std::string(to_string(cfg.tasks[t]));
                cells.push_back(std::move(cell));
            }
    return cells;
}

struct CellPredictions {
    std::string coordinate;
    std::map<std::string, double> validation;  // seed-averaged score per subject
    std::map<std::string, double> test;
    double validation_rmse = std::numeric_limits<double>::quiet_NaN();
    std::size_t train_samples = 0;
};

namespace detail {

struct CellData {
    Matrix x;
    std::vector<double> y;
    std::vector<std::string> ids;
};

inline CellData gather_cell_data(const Cohort& cohort, const FeatureSet& set, ElicitationTask task,
                                 bool require_target) {
    CellData data;
    for (const auto& s : cohort.subjects) {
        if (require_target && !s.mmse) continue;
        const auto* v = set.find(s.id, task);
        if (!v) continue;
        data.x.push_back(*v);
        data.y.push_back(s.mmse ? static_cast<double>(*s.mmse) : 0.0);
        data.ids.push_back(s.id);
    }
    return data;
}

}  // namespace detail

// Trains one pool cell: per model seed, grid-search CV picks the
// hyperparameters (the seed drives the fold assignment), the winning
// configuration is refit on the whole training set, and the per-seed
// predictions are averaged.
inline CellPredictions train_regression_cell(const RegressionCell& cell, const Cohort& train,
                                             const Cohort& validation, const Cohort& test,
                                             const FeatureRegistry& registry, const PipelineConfig& cfg) {
    const FeatureSet& set = registry.get(cfg.regression_feature_sets[cell.set_index]);
    const ElicitationTask task = cfg.tasks[cell.task_index];
    const std::string& model_name = cfg.regression_models[cell.model_index].name;

    const auto train_data = detail::gather_cell_data(train, set, task, true);
    const auto val_data = detail::gather_cell_data(validation, set, task, true);
    const auto test_data = detail::gather_cell_data(test, set, task, false);

    CellPredictions out;
    out.coordinate = cell.coordinate;
    out.train_samples = train_data.x.size();
    if (train_data.x.size() < static_cast<std::size_t>(cfg.cv_folds) || val_data.x.empty()) {
        log_warn("regression cell " + cell.coordinate + ": insufficient data (" +
                 std::to_string(train_data.x.size()) + " train rows)");
        return out;
    }

    const std::vector<RegressorHp> grid = regressor_grid(model_name);
    const auto trainer = [](const Matrix& xt, const std::vector<double>& yt, const RegressorHp& hp) {
        return fit_regressor(xt, yt, hp);
    };

    std::map<std::string, std::vector<double>> val_scores, test_scores;
    for (const auto seed : cfg.model_seeds) {
        const std::uint64_t cv_seed =
            mix_seed(seed, fnv1a64(cell.coordinate.data(), cell.coordinate.size()));
        const auto search = grid_search_cv(trainer, grid, train_data.x, train_data.y, cfg.cv_folds, cv_seed);
        const FittedRegressor model = fit_regressor(train_data.x, train_data.y, search.best);
        for (std::size_t i = 0; i < val_data.ids.size(); ++i)
            val_scores[val_data.ids[i]].push_back(model.predict(val_data.x[i]));
        for (std::size_t i = 0; i < test_data.ids.size(); ++i)
            test_scores[test_data.ids[i]].push_back(model.predict(test_data.x[i]));
    }

    for (const auto& [id, scores] : val_scores) out.validation.emplace(id, seed_average(scores));
    for (const auto& [id, scores] : test_scores) out.test.emplace(id, seed_average(scores));

    std::vector<double> y_true, y_pred;
    for (std::size_t i = 0; i < val_data.ids.size(); ++i) {
        y_true.push_back(val_data.y[i]);
        y_pred.push_back(out.validation.at(val_data.ids[i]));
    }
    out.validation_rmse = rmse(y_true, y_pred);
    return out;
}

// ---------------------------------------------------------------------------
// Split-level pool: gate on validation RMSE, average the survivors
// ---------------------------------------------------------------------------

struct RegressionSplitOutcome {
    std::vector<CellPredictions> pool;           // all cells, enumeration order
    GateResult gate;
    std::map<std::string, double> final_validation;  // gated ensemble scores
    std::map<std::string, double> final_test;
    double final_validation_rmse = std::numeric_limits<double>::quiet_NaN();
    double worst_pool_rmse = 0.0;
    std::size_t candidates_consulted = 0;
};

inline RegressionSplitOutcome run_regression_split(const Cohort& train, const Cohort& validation,
                                                   const Cohort& test, const FeatureRegistry& registry,
                                                   const PipelineConfig& cfg, unsigned jobs) {
    const std::vector<RegressionCell> cells = enumerate_regression_cells(cfg);
    RegressionSplitOutcome out;
    out.pool.resize(cells.size());
    parallel_for(cells.size(), jobs, [&](std::size_t c) {
        out.pool[c] = train_regression_cell(cells[c], train, validation, test, registry, cfg);
    });
    out.candidates_consulted = out.pool.size();

    std::vector<PoolEntry> entries;
    for (const auto& cell : out.pool) {
        if (!std::isfinite(cell.validation_rmse)) continue;
        entries.push_back({cell.coordinate, cell.validation_rmse});
        out.worst_pool_rmse = std::max(out.worst_pool_rmse, cell.validation_rmse);
    }
    if (entries.empty()) throw DataError("regression pool produced no usable cells");
    out.gate = rmse_gate(entries, cfg.ensemble.rmse_gate_threshold);
    const std::set<std::string> selected(out.gate.selected.begin(), out.gate.selected.end());

    std::map<std::string, std::vector<double>> val_outputs, test_outputs;
    for (const auto& cell : out.pool) {
        if (!selected.count(cell.coordinate)) continue;
        for (const auto& [id, score] : cell.validation) val_outputs[id].push_back(score);
        for (const auto& [id, score] : cell.test) test_outputs[id].push_back(score);
    }
    for (const auto& [id, scores] : val_outputs)
        out.final_validation.emplace(id, ensemble_regress(scores, cfg.ensemble));
    for (const auto& [id, scores] : test_outputs)
        out.final_test.emplace(id, ensemble_regress(scores, cfg.ensemble));

    std::vector<double> y_true, y_pred;
    for (const auto& s : validation.subjects) {
        if (!s.mmse) continue;
        const auto it = out.final_validation.find(s.id);
        if (it == out.final_validation.end()) continue;
        y_true.push_back(static_cast<double>(*s.mmse));
        y_pred.push_back(it->second);
    }
    if (!y_true.empty()) out.final_validation_rmse = rmse(y_true, y_pred);
    return out;
}

// ---------------------------------------------------------------------------
// Multi-split regression experiment (the score-averaging table)
// ---------------------------------------------------------------------------

struct RegressionOutcome {
    std::vector<RegressionSplitOutcome> splits;
    std::optional<double> test_rmse_scoreavg;   // per-subject mean of split scores
    std::optional<double> test_rmse_retrained;
    ReportTable table;
};

inline double scored_rmse(const Cohort& truth, const std::map<std::string, double>& scores) {
    std::vector<double> y_true, y_pred;
    for (const auto& s : truth.subjects) {
        if (!s.mmse) continue;
        const auto it = scores.find(s.id);
        if (it == scores.end()) continue;
        y_true.push_back(static_cast<double>(*s.mmse));
        y_pred.push_back(it->second);
    }
    if (y_true.empty()) return std::numeric_limits<double>::quiet_NaN();
    return rmse(y_true, y_pred);
}

inline void write_scores_file(const std::map<std::string, double>& scores, const fs::path& path) {
    std::string out = "subject_id,score\n";
    for (const auto& [id, score] : scores) out += id + "," + fmt_fixed(score, 6) + "\n";
    write_text_file(path, out);
}

inline RegressionOutcome run_regression_experiment(const Cohort& cohort, const PipelineConfig& cfg,
                                                   const fs::path& out_dir, unsigned jobs) {
    const Cohort scored = with_mmse(cohort);
    if (scored.subjects.empty()) throw DataError("regression experiment: no subjects carry MMSE scores");
    const ExperimentCohorts exp = make_experiment_cohorts(scored, cfg, StratKey::MmseBin);
    const FeatureRegistry registry = build_feature_registry(cohort, cfg);

    RegressionOutcome outcome;
    std::map<std::string, std::vector<double>> test_scores_across_splits;

    for (std::size_t k = 0; k < exp.splits.size(); ++k) {
        const SplitSpec& split = exp.splits[k];
        const Cohort train = subset_by_ids(exp.pool, split.train_ids, "train");
        const Cohort val = subset_by_ids(exp.pool, split.validation_ids, "validation");

        RegressionSplitOutcome split_out =
            run_regression_split(train, val, exp.test, registry, cfg, jobs);

        const std::string tag = "split" + std::to_string(k + 1);
        std::string pool_csv = "cell,validation_rmse,selected\n";
        for (const auto& cell : split_out.pool) {
            const bool selected = std::find(split_out.gate.selected.begin(), split_out.gate.selected.end(),
                                            cell.coordinate) != split_out.gate.selected.end();
            pool_csv += cell.coordinate + "," +
                        (std::isfinite(cell.validation_rmse) ? fmt_fixed(cell.validation_rmse, 4) : "") +
                        "," + (selected ? "yes" : "no") + "\n";
        }
        write_text_file(out_dir / (tag + "_pool.csv"), pool_csv);
        write_scores_file(split_out.final_validation, out_dir / (tag + "_validation_scores.csv"));
        if (!exp.test.subjects.empty())
            write_scores_file(split_out.final_test, out_dir / (tag + "_test_scores.csv"));
        write_split_file(split, out_dir / (tag + ".json"));

        for (const auto& [id, score] : split_out.final_test) test_scores_across_splits[id].push_back(score);
        outcome.splits.push_back(std::move(split_out));
    }

    if (!exp.test.subjects.empty()) {
        std::map<std::string, double> averaged;
        for (const auto& [id, scores] : test_scores_across_splits)
            averaged.emplace(id, ensemble_regress(scores, cfg.ensemble));
        outcome.test_rmse_scoreavg = scored_rmse(exp.test, averaged);
        write_scores_file(averaged, out_dir / "test_scores_scoreavg.csv");

        if (cfg.retrain_on_full) {
            // retrained on the whole pool; the gate reuses each cell's mean
            // validation RMSE across splits since a retrained model has no
            // held-out validation of its own
            std::map<std::string, std::pair<double, std::size_t>> mean_rmse;
            for (const auto& split_out : outcome.splits)
                for (const auto& cell : split_out.pool)
                    if (std::isfinite(cell.validation_rmse)) {
                        auto& [sum, count] = mean_rmse[cell.coordinate];
                        sum += cell.validation_rmse;
                        ++count;
                    }
            std::vector<PoolEntry> entries;
            const auto cells = enumerate_regression_cells(cfg);
            for (const auto& cell : cells) {
                const auto it = mean_rmse.find(cell.coordinate);
                if (it == mean_rmse.end() || it->second.second == 0) continue;
                entries.push_back({cell.coordinate, it->second.first / static_cast<double>(it->second.second)});
            }
            const GateResult gate = rmse_gate(entries, cfg.ensemble.rmse_gate_threshold);
            const std::set<std::string> selected(gate.selected.begin(), gate.selected.end());

            std::map<std::string, std::vector<double>> retrain_outputs;
            std::vector<CellPredictions> retrain_pool(cells.size());
            parallel_for(cells.size(), jobs, [&](std::size_t c) {
                retrain_pool[c] =
                    train_regression_cell(cells[c], exp.pool, exp.pool, exp.test, registry, cfg);
            });
            for (const auto& cell : retrain_pool) {
                if (!selected.count(cell.coordinate)) continue;
                for (const auto& [id, score] : cell.test) retrain_outputs[id].push_back(score);
            }
            std::map<std::string, double> retrained;
            for (const auto& [id, scores] : retrain_outputs)
                retrained.emplace(id, ensemble_regress(scores, cfg.ensemble));
            outcome.test_rmse_retrained = scored_rmse(exp.test, retrained);
            write_scores_file(retrained, out_dir / "test_scores_retrained.csv");
        }
    }

    ReportTable& table = outcome.table;
    table.title = "MMSE regression RMSE: gated multimodal ensemble";
    table.columns = {"row", "validation_rmse", "pool_worst", "selected", "test_rmse"};
    for (std::size_t k = 0; k < outcome.splits.size(); ++k) {
        const auto& s = outcome.splits[k];
        table.add_row({"split" + std::to_string(k + 1), fmt_fixed(s.final_validation_rmse, 4),
                       fmt_fixed(s.worst_pool_rmse, 4), std::to_string(s.gate.selected.size()), ""});
    }
    if (outcome.test_rmse_scoreavg)
        table.add_row({"scoreavg(all splits)", "", "", "", fmt_fixed(*outcome.test_rmse_scoreavg, 4)});
    if (outcome.test_rmse_retrained)
        table.add_row({"scoreavg(retrained)", "", "", "", fmt_fixed(*outcome.test_rmse_retrained, 4)});
    table.notes.push_back("pool size before gating: " + std::to_string(cfg.ensemble.regression_pool_size()));
    table.notes.push_back("gate: validation RMSE < " + fmt_full(cfg.ensemble.rmse_gate_threshold) +
                          " (strict)");
    table.write(out_dir / "regression_report.txt", out_dir / "regression_report.csv");
    return outcome;
}

}  // namespace cogspeech
