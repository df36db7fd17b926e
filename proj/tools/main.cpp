// cogspeech — speech-based cognitive screening pipeline CLI.
//
// Subcommands wire the library stages together: synthesize a desk-scale
// cohort, parse and pause-encode transcripts, extract silence features,
// featurize, split, train cascade/regression grids, aggregate ensembles,
// evaluate metrics, and run the cascaded-vs-direct comparison experiment.

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cogspeech/cascade.hpp"
#include "cogspeech/config.hpp"
#include "cogspeech/corpus.hpp"
#include "cogspeech/ensemble.hpp"
#include "cogspeech/features.hpp"
#include "cogspeech/learners.hpp"
#include "cogspeech/metrics.hpp"
#include "cogspeech/pause.hpp"
#include "cogspeech/pipeline.hpp"
#include "cogspeech/regression.hpp"
#include "cogspeech/report.hpp"
#include "cogspeech/silence.hpp"
#include "cogspeech/synth.hpp"
#include "cogspeech/transcript.hpp"

namespace {

using namespace cogspeech;

struct CommonArgs {
    std::string config_path;
    std::string manifest;
    std::string out_dir;
    unsigned jobs = default_jobs();
};

PipelineConfig resolve_config(const CommonArgs& args) {
    PipelineConfig cfg;
    if (!args.config_path.empty()) cfg = PipelineConfig::load(args.config_path);
    if (!args.manifest.empty()) cfg.manifest = args.manifest;
    if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
    cfg.sync_grid_dims();
    return cfg;
}

Cohort load_cohort(const PipelineConfig& cfg) {
    if (cfg.manifest.empty()) throw ConfigError("no manifest given (use --manifest or a config file)");
    return load_manifest(cfg.manifest);
}

void add_common(CLI::App* cmd, CommonArgs& args, bool with_manifest = true) {
    cmd->add_option("--config", args.config_path, "pipeline config JSON");
    if (with_manifest) cmd->add_option("--manifest", args.manifest, "cohort manifest CSV");
    cmd->add_option("--out", args.out_dir, "output directory");
    cmd->add_option("--jobs", args.jobs, "worker threads for grid training");
}

FeaturizerConfig find_featurizer(const PipelineConfig& cfg, const std::string& name) {
    for (const auto& f : cfg.featurizers)
        if (f.name == name) return f;
    throw ConfigError("unknown featurizer '" + name + "'");
}

int cmd_synth(const CommonArgs& args, int n_subjects, std::uint64_t seed, double mmse_fraction,
              const std::string& proportions) {
    synth::SynthConfig scfg;
    scfg.n_subjects = n_subjects;
    scfg.mmse_fraction = mmse_fraction;
    if (!proportions.empty()) {
        const auto parts = split_fields(proportions, ':');
        if (parts.size() != 3) throw ConfigError("proportions must be H:M:D, e.g. 5:4:1");
        for (std::size_t i = 0; i < 3; ++i)
            scfg.proportions[i] = parse_double_strict(parts[i], "proportions");
    }
    const fs::path out = args.out_dir.empty() ? "synth_cohort" : args.out_dir;
    const Cohort cohort = synth::synth_cohort(scfg, seed, out);
    const auto counts = cohort.label_counts();
    std::cout << "synthesized " << cohort.size() << " subjects under " << out.string() << " (HC "
              << counts.at(Diagnosis::HC) << ", MCI " << counts.at(Diagnosis::MCI) << ", Dementia "
              << counts.at(Diagnosis::Dementia) << ")\n";
    PipelineConfig cfg = resolve_config(args);
    cfg.manifest = (out / "manifest.csv").string();
    cfg.out_dir = out.string();
    write_provenance(out, "synth", cfg, {}, {"manifest.csv"});
    return 0;
}

int cmd_parse(const CommonArgs& args) {
    const PipelineConfig cfg = resolve_config(args);
    const Cohort cohort = load_cohort(cfg);
    const fs::path out = cfg.out_dir;
    std::size_t files = 0, annotations = 0;
    std::string index = "subject_id,task,tokens,annotations_removed\n";
    for (const auto& s : cohort.subjects) {
        for (const auto t : kAllTasks) {
            const auto& rel = s.task(t).transcript;
            if (rel.empty() || !fs::exists(cohort.resolve(rel))) continue;
            const auto clean = strip_annotations(read_text_file(cohort.resolve(rel)), rel);
            const std::string stem = s.id + "_" + std::string(to_string(t));
            write_text_file(out / "cleaned" / (stem + ".txt"), join_tokens(clean.tokens) + "\n");
            ++files;
            annotations += clean.annotations_removed;
            index += s.id + "," + std::string(to_string(t)) + "," + std::to_string(clean.tokens.size()) +
                     "," + std::to_string(clean.annotations_removed) + "\n";
        }
    }
    write_text_file(out / "cleaned_index.csv", index);
    write_provenance(out, "parse", cfg, {cfg.manifest}, {"cleaned_index.csv"});
    std::cout << "cleaned " << files << " transcripts (" << annotations << " annotations removed)\n";
    return 0;
}

int cmd_encode_pauses(const CommonArgs& args, const std::string& alignment_path) {
    if (!alignment_path.empty()) {
        const auto encoded = encode_pauses(parse_alignment(alignment_path));
        if (args.out_dir.empty()) {
            std::cout << join_tokens(encoded) << "\n";
        } else {
            const fs::path out = fs::path(args.out_dir) / (fs::path(alignment_path).stem().string() + ".txt");
            save_encoded(encoded, out);
            std::cout << "wrote " << out.string() << "\n";
        }
        return 0;
    }
    const PipelineConfig cfg = resolve_config(args);
    const Cohort cohort = load_cohort(cfg);
    const fs::path out = cfg.out_dir;
    std::size_t files = 0;
    for (const auto& s : cohort.subjects) {
        for (const auto t : kAllTasks) {
            const auto& rel = s.task(t).alignment;
            if (rel.empty() || !fs::exists(cohort.resolve(rel))) continue;
            const auto encoded = encode_pauses(parse_alignment(cohort.resolve(rel)));
            const std::string stem = s.id + "_" + std::string(to_string(t));
            save_encoded(encoded, out / "encoded" / (stem + ".txt"));
            ++files;
        }
    }
    write_provenance(out, "encode-pauses", cfg, {cfg.manifest}, {"encoded/"});
    std::cout << "pause-encoded " << files << " alignments\n";
    return 0;
}

int cmd_silence_features(const CommonArgs& args) {
    const PipelineConfig cfg = resolve_config(args);
    const Cohort cohort = load_cohort(cfg);
    const fs::path out = cfg.out_dir;
    const FeatureSet set = compute_silence_set(cohort, kAllTasks);
    save_feature_set(set, out / "silence.csv");
    write_provenance(out, "silence-features", cfg, {cfg.manifest}, {"silence.csv"});
    std::cout << "computed " << set.vectors.size() << " silence vectors -> "
              << (out / "silence.csv").string() << "\n";
    return 0;
}

int cmd_featurize(const CommonArgs& args, const std::string& featurizer_name) {
    const PipelineConfig cfg = resolve_config(args);
    const Cohort cohort = load_cohort(cfg);
    const fs::path out = cfg.out_dir;
    const FeaturizerConfig fc = find_featurizer(cfg, featurizer_name);
    const EncodedCorpus corpus = EncodedCorpus::build(cohort, kAllTasks);

    FeatureSet set;
    set.name = fc.name;
    set.dim = fc.dim;
    for (const auto& [key, tokens] : corpus.tokens) set.insert(key, hashed_ngram_featurize(tokens, fc));
    save_feature_set(set, out / (fc.name + ".csv"));
    write_provenance(out, "featurize", cfg, {cfg.manifest}, {fc.name + ".csv"});
    std::cout << "featurized " << set.vectors.size() << " (subject, task) pairs with " << fc.name << "\n";
    return 0;
}

int cmd_split(const CommonArgs& args, const std::string& key_name) {
    const PipelineConfig cfg = resolve_config(args);
    const Cohort cohort = load_cohort(cfg);
    const fs::path out = cfg.out_dir;
    const StratKey key = key_name == "mmse-bin" ? StratKey::MmseBin : StratKey::Diagnosis;
    const Cohort base = key == StratKey::MmseBin ? with_mmse(cohort) : cohort;
    std::vector<std::string> artifacts;
    for (const auto seed : cfg.split_seeds) {
        const SplitSpec spec = stratified_split(base, cfg.train_fraction, seed, key);
        const std::string name = "split_seed" + std::to_string(seed) + ".json";
        write_split_file(spec, out / name);
        artifacts.push_back(name);
        std::cout << name << ": " << spec.train_ids.size() << " train / " << spec.validation_ids.size()
                  << " validation\n";
    }
    write_provenance(out, "split", cfg, {cfg.manifest}, artifacts);
    return 0;
}

int cmd_train_cascade(const CommonArgs& args, const std::string& split_path,
                      const std::string& featurizer_name, const std::string& task_name,
                      std::uint64_t seed) {
    const PipelineConfig cfg = resolve_config(args);
    const Cohort cohort = load_cohort(cfg);
    const fs::path out = cfg.out_dir;
    const FeaturizerConfig fc = find_featurizer(cfg, featurizer_name);
    const ElicitationTask task = parse_task(task_name, "--task");

    const SplitSpec split = read_split_file(split_path);
    const Cohort train = subset_by_ids(cohort, split.train_ids, "train");
    const Cohort val = subset_by_ids(cohort, split.validation_ids, "validation");

    const std::array<ElicitationTask, 1> tasks{task};
    const EncodedCorpus corpus = EncodedCorpus::build(cohort, tasks);
    const CellFeatures feats = featurize_cell(corpus, cohort, fc, task);

    TrainConfig tc = cfg.train;
    tc.seed = seed;
    const CascadeModel model = train_cascade(train, feats.provider(), tc, cfg.stage1_threshold);

    nlohmann::json artifact{
        {"format_version", kModelFormatVersion},
        {"kind", "cascade"},
        {"featurizer", {{"name", fc.name}, {"orders", fc.orders}, {"dim", fc.dim}, {"seed", fc.seed}}},
        {"task", std::string(to_string(task))},
        {"stage1_threshold", model.stage1_threshold},
        {"stage1", to_json(model.stage1, tc)},
        {"stage2", to_json(model.stage2, tc)}};
    save_model(artifact, out / "cascade_model.json");
    write_prediction_file(val, model, feats.provider(), out / "validation_predictions.csv");
    write_provenance(out, "train-cascade", cfg, {cfg.manifest, split_path},
                     {"cascade_model.json", "validation_predictions.csv"});

    std::vector<Diagnosis> y_true, y_pred;
    for (const auto& s : val.subjects) {
        const auto* x = feats.find(s.id);
        if (!x) continue;
        y_true.push_back(s.diagnosis);
        y_pred.push_back(infer_cascade(model, *x).label);
    }
    std::cout << "cascade trained (stage1 n=" << model.provenance.stage1_samples << ", stage2 n="
              << model.provenance.stage2_samples << "); validation macro F1 "
              << fmt_fixed(macro_f1_three_class(y_true, y_pred), 4) << "\n";
    return 0;
}

int cmd_train_regress(const CommonArgs& args, const std::string& split_path, const std::string& model_name,
                      const std::string& set_name, const std::string& task_name) {
    PipelineConfig cfg = resolve_config(args);
    const Cohort cohort = load_cohort(cfg);
    const fs::path out = cfg.out_dir;
    const ElicitationTask task = parse_task(task_name, "--task");

    const SplitSpec split = read_split_file(split_path);
    const Cohort scored = with_mmse(cohort);
    const Cohort train = subset_by_ids(scored, split.train_ids, "train");
    const Cohort val = subset_by_ids(scored, split.validation_ids, "validation");

    const FeatureRegistry registry = build_feature_registry(cohort, cfg);
    RegressionCell cell;
    bool found = false;
    for (std::size_t i = 0; i < cfg.regression_models.size(); ++i)
        if (cfg.regression_models[i].name == model_name) cell.model_index = i, found = true;
    if (!found) throw ConfigError("unknown regression model '" + model_name + "'");
    found = false;
    for (std::size_t i = 0; i < cfg.regression_feature_sets.size(); ++i)
        if (cfg.regression_feature_sets[i] == set_name) cell.set_index = i, found = true;
    if (!found) throw ConfigError("unknown feature set '" + set_name + "'");
    found = false;
    for (std::size_t i = 0; i < cfg.tasks.size(); ++i)
        if (cfg.tasks[i] == task) cell.task_index = i, found = true;
    if (!found) throw ConfigError("task not in config task list");
    cell.coordinate = model_name + "/" + set_name + "/" + std::string(to_string(task));

    const CellPredictions preds = train_regression_cell(cell, train, val, Cohort{}, registry, cfg);
    std::string score_csv = "# cell=" + preds.coordinate +
                            " validation_rmse=" + fmt_fixed(preds.validation_rmse, 6) +
                            "\nsubject_id,score\n";
    for (const auto& [id, score] : preds.validation) score_csv += id + "," + fmt_fixed(score, 6) + "\n";
    write_text_file(out / "validation_scores.csv", score_csv);
    write_provenance(out, "train-regress", cfg, {cfg.manifest, split_path}, {"validation_scores.csv"});
    std::cout << preds.coordinate << ": validation RMSE " << fmt_fixed(preds.validation_rmse, 4) << " over "
              << preds.validation.size() << " subjects\n";
    return 0;
}

int cmd_predict(const CommonArgs& args, const std::string& model_path) {
    const PipelineConfig cfg = resolve_config(args);
    const Cohort cohort = load_cohort(cfg);
    const fs::path out = cfg.out_dir;

    const nlohmann::json artifact = load_model(model_path);
    if (artifact.at("kind").get<std::string>() != "cascade")
        throw ConfigError("predict expects a cascade model artifact");
    CascadeModel model;
    model.stage1 = classifier_head_from_json(artifact.at("stage1"));
    model.stage2 = classifier_head_from_json(artifact.at("stage2"));
    model.stage1_threshold = artifact.at("stage1_threshold").get<double>();
    FeaturizerConfig fc;
    fc.name = artifact.at("featurizer").at("name").get<std::string>();
    fc.orders = artifact.at("featurizer").at("orders").get<std::vector<int>>();
    fc.dim = artifact.at("featurizer").at("dim").get<std::size_t>();
    fc.seed = artifact.at("featurizer").at("seed").get<std::uint64_t>();
    const ElicitationTask task = parse_task(artifact.at("task").get<std::string>(), "model task");

    const std::array<ElicitationTask, 1> tasks{task};
    const EncodedCorpus corpus = EncodedCorpus::build(cohort, tasks);
    const CellFeatures feats = featurize_cell(corpus, cohort, fc, task);
    write_prediction_file(cohort, model, feats.provider(), out / "predictions.csv");
    write_provenance(out, "predict", cfg, {cfg.manifest, model_path}, {"predictions.csv"});
    std::cout << "wrote " << (out / "predictions.csv").string() << "\n";
    return 0;
}

int cmd_ensemble(const CommonArgs& args, const std::vector<std::string>& prediction_files,
                 const std::vector<std::string>& score_files) {
    const PipelineConfig cfg = resolve_config(args);
    const fs::path out = cfg.out_dir;

    if (prediction_files.empty() && score_files.empty())
        throw ConfigError("ensemble needs --predictions and/or --scores inputs");

    if (!prediction_files.empty()) {
        // majority vote across per-model prediction files
        std::map<std::string, std::vector<Vote>> votes;
        for (const auto& file : prediction_files) {
            const DelimitedFile rows = read_delimited(file);
            for (std::size_t r = 1; r < rows.rows.size(); ++r) {
                const auto& fields = rows.rows[r].second;
                if (fields.size() < 2) continue;
                Diagnosis d = Diagnosis::HC;
                const std::string_view label = trim(fields[1]);
                if (label == "MCI")
                    d = Diagnosis::MCI;
                else if (label == "Dementia")
                    d = Diagnosis::Dementia;
                else if (label == "NonHC")
                    d = Diagnosis::NonHC;
                votes[fields[0]].push_back({fs::path(file).filename().string(), d});
            }
        }
        std::string final_csv = "subject_id,label,margin,voters\n";
        for (const auto& [id, vs] : votes) {
            const VoteRecord rec = majority_vote(vs, cfg.ensemble.tie_policy);
            final_csv += id + "," + std::string(to_string(rec.winner)) + "," + std::to_string(rec.margin) +
                         "," + std::to_string(vs.size()) + "\n";
        }
        write_text_file(out / "ensemble_labels.csv", final_csv);
        std::cout << "voted over " << prediction_files.size() << " prediction files -> "
                  << (out / "ensemble_labels.csv").string() << "\n";
    }

    if (!score_files.empty()) {
        // RMSE-gated score averaging; each input's first line carries
        // "# cell=<id> validation_rmse=<r>"
        struct ScoreInput {
            std::string id;
            double rmse_value = 0.0;
            std::map<std::string, double> scores;
        };
        std::vector<ScoreInput> inputs;
        for (const auto& file : score_files) {
            const std::string text = read_text_file(file);
            const std::string header = text.substr(0, text.find('\n'));
            const auto rmse_pos = header.find("validation_rmse=");
            const auto cell_pos = header.find("cell=");
            if (rmse_pos == std::string::npos || cell_pos == std::string::npos)
                throw ParseError(file + ": missing '# cell=<id> validation_rmse=<r>' header");
            ScoreInput input;
            input.id = header.substr(cell_pos + 5, header.find(' ', cell_pos + 5) - cell_pos - 5);
            input.rmse_value = parse_double_strict(header.substr(rmse_pos + 16), file);
            const DelimitedFile rows = read_delimited(file);
            for (std::size_t r = 2; r < rows.rows.size(); ++r) {
                const auto& fields = rows.rows[r].second;
                if (fields.size() == 2)
                    input.scores.emplace(fields[0], parse_double_strict(fields[1], file));
            }
            inputs.push_back(std::move(input));
        }
        std::vector<PoolEntry> pool;
        for (const auto& input : inputs) pool.push_back({input.id, input.rmse_value});
        const GateResult gate = rmse_gate(pool, cfg.ensemble.rmse_gate_threshold);
        const std::set<std::string> selected(gate.selected.begin(), gate.selected.end());
        std::map<std::string, std::vector<double>> outputs;
        for (const auto& input : inputs)
            if (selected.count(input.id))
                for (const auto& [id, score] : input.scores) outputs[id].push_back(score);
        std::string final_csv = "subject_id,score\n";
        for (const auto& [id, scores] : outputs)
            final_csv += id + "," + fmt_fixed(ensemble_regress(scores, cfg.ensemble), 6) + "\n";
        write_text_file(out / "ensemble_scores.csv", final_csv);
        std::cout << "gated " << gate.selected.size() << " of " << inputs.size() << " score files"
                  << (gate.fell_back ? " (fallback)" : "") << " -> "
                  << (out / "ensemble_scores.csv").string() << "\n";
    }
    write_provenance(out, "ensemble", cfg, prediction_files, {});
    return 0;
}

int cmd_evaluate(const CommonArgs& args, const std::string& mode, const std::string& predictions_path,
                 const std::string& ref_path, const std::string& hyp_path) {
    const PipelineConfig cfg = resolve_config(args);
    if (mode == "macro-f1") {
        const Cohort cohort = load_cohort(cfg);
        const DelimitedFile rows = read_delimited(predictions_path);
        std::vector<Diagnosis> y_true, y_pred;
        for (std::size_t r = 1; r < rows.rows.size(); ++r) {
            const auto& fields = rows.rows[r].second;
            if (fields.size() < 2) continue;
            const Subject* s = cohort.find(fields[0]);
            if (!s) continue;
            y_true.push_back(s->diagnosis);
            y_pred.push_back(parse_diagnosis(trim(fields[1]), predictions_path));
        }
        std::cout << "macro_f1 " << fmt_fixed(macro_f1_three_class(y_true, y_pred), 6) << " over "
                  << y_true.size() << " subjects\n";
        return 0;
    }
    if (mode == "rmse") {
        const Cohort cohort = load_cohort(cfg);
        const DelimitedFile rows = read_delimited(predictions_path);
        std::vector<double> y_true, y_pred;
        for (std::size_t r = 0; r < rows.rows.size(); ++r) {
            const auto& fields = rows.rows[r].second;
            if (fields.size() < 2 || fields[0].rfind("#", 0) == 0 || fields[0] == "subject_id") continue;
            const Subject* s = cohort.find(fields[0]);
            if (!s || !s->mmse) continue;
            y_true.push_back(static_cast<double>(*s->mmse));
            y_pred.push_back(parse_double_strict(fields[1], predictions_path));
        }
        std::cout << "rmse " << fmt_fixed(rmse(y_true, y_pred), 6) << " over " << y_true.size()
                  << " subjects\n";
        return 0;
    }
    if (mode == "wer") {
        const auto ref_tokens = wer_normalize(load_encoded(ref_path));
        const auto hyp_tokens = wer_normalize(load_encoded(hyp_path));
        const EditCounts counts = wer_counts(ref_tokens, hyp_tokens);
        std::cout << "wer " << fmt_fixed(counts.rate(), 6) << " (" << counts.edits << " edits / "
                  << counts.ref_len << " reference words)\n";
        return 0;
    }
    throw ConfigError("unknown evaluate mode '" + mode + "' (macro-f1 | rmse | wer)");
}

int cmd_compare(const CommonArgs& args, const std::string& mode) {
    const PipelineConfig cfg = resolve_config(args);
    const Cohort cohort = load_cohort(cfg);
    const fs::path out = cfg.out_dir;
    fs::create_directories(out);

    if (mode == "classification" || mode == "both") {
        const CompareOutcome outcome = run_compare_experiment(cohort, cfg, out, args.jobs);
        std::cout << outcome.table.to_text();
    }
    if (mode == "regression" || mode == "both") {
        const RegressionOutcome outcome = run_regression_experiment(cohort, cfg, out, args.jobs);
        std::cout << outcome.table.to_text();
    }
    write_provenance(out, "compare", cfg, {cfg.manifest}, {"report.csv"});
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cogspeech: cascaded classification and multimodal MMSE regression over spontaneous speech"};
    app.require_subcommand(1);

    CommonArgs args;

    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic cohort with planted class signal");
    int n_subjects = 150;
    std::uint64_t synth_seed = 1;
    double mmse_fraction = 1.0;
    std::string proportions;
    synth_cmd->add_option("--subjects", n_subjects, "cohort size");
    synth_cmd->add_option("--seed", synth_seed, "generation seed");
    synth_cmd->add_option("--mmse-fraction", mmse_fraction, "fraction of subjects with recorded MMSE");
    synth_cmd->add_option("--proportions", proportions, "class ratio H:M:D (default 5:4:1)");
    add_common(synth_cmd, args, false);

    auto* parse_cmd = app.add_subcommand("parse", "strip annotations from manual transcripts");
    add_common(parse_cmd, args);

    auto* encode_cmd = app.add_subcommand("encode-pauses", "pause-encode alignment files");
    std::string alignment_path;
    encode_cmd->add_option("--alignment", alignment_path, "single alignment file (prints to stdout)");
    add_common(encode_cmd, args);

    auto* silence_cmd = app.add_subcommand("silence-features", "compute 10-dim silence vectors from VAD");
    add_common(silence_cmd, args);

    auto* featurize_cmd = app.add_subcommand("featurize", "hashed n-gram vectors from pause-encoded text");
    std::string featurizer_name = "hash-bi";
    featurize_cmd->add_option("--featurizer", featurizer_name, "featurizer preset name");
    add_common(featurize_cmd, args);

    auto* split_cmd = app.add_subcommand("split", "stratified train/validation splits");
    std::string key_name = "diagnosis";
    split_cmd->add_option("--key", key_name, "stratification key: diagnosis | mmse-bin");
    add_common(split_cmd, args);

    auto* traincas_cmd = app.add_subcommand("train-cascade", "train one cascade grid cell");
    std::string split_path, task_name = "CTD";
    std::uint64_t model_seed = 1;
    traincas_cmd->add_option("--split", split_path, "split JSON")->required();
    traincas_cmd->add_option("--featurizer", featurizer_name, "featurizer preset name");
    traincas_cmd->add_option("--task", task_name, "CTD | PFT | SFT");
    traincas_cmd->add_option("--seed", model_seed, "training seed");
    add_common(traincas_cmd, args);

    auto* trainreg_cmd = app.add_subcommand("train-regress", "train one regression pool cell");
    std::string reg_model = "svr", reg_set = "silence";
    trainreg_cmd->add_option("--split", split_path, "split JSON")->required();
    trainreg_cmd->add_option("--model", reg_model, "svr | gbrt-fine | gbrt-coarse");
    trainreg_cmd->add_option("--feature-set", reg_set, "feature set name");
    trainreg_cmd->add_option("--task", task_name, "CTD | PFT | SFT");
    add_common(trainreg_cmd, args);

    auto* predict_cmd = app.add_subcommand("predict", "apply a saved cascade model to a cohort");
    std::string model_path;
    predict_cmd->add_option("--model", model_path, "cascade model JSON")->required();
    add_common(predict_cmd, args);

    auto* ensemble_cmd = app.add_subcommand("ensemble", "aggregate prediction or score files");
    std::vector<std::string> prediction_files, score_files;
    ensemble_cmd->add_option("--predictions", prediction_files, "cascade prediction CSVs to vote over");
    ensemble_cmd->add_option("--scores", score_files, "regression score CSVs to gate and average");
    add_common(ensemble_cmd, args);

    auto* evaluate_cmd = app.add_subcommand("evaluate", "macro-F1 / RMSE / WER metrics");
    std::string eval_mode = "macro-f1", predictions_path, ref_path, hyp_path;
    evaluate_cmd->add_option("--mode", eval_mode, "macro-f1 | rmse | wer");
    evaluate_cmd->add_option("--predictions", predictions_path, "prediction or score CSV");
    evaluate_cmd->add_option("--ref", ref_path, "reference transcript (wer)");
    evaluate_cmd->add_option("--hyp", hyp_path, "hypothesis transcript (wer)");
    add_common(evaluate_cmd, args);

    auto* compare_cmd = app.add_subcommand("compare", "multi-split experiment with ensemble rows");
    std::string compare_mode = "classification";
    compare_cmd->add_option("--mode", compare_mode, "classification | regression | both");
    add_common(compare_cmd, args);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: usage: " << e.what() << "\n\n" << app.help() << "\n";
        return 2;
    }

    try {
        if (app.got_subcommand(synth_cmd))
            return cmd_synth(args, n_subjects, synth_seed, mmse_fraction, proportions);
        if (app.got_subcommand(parse_cmd)) return cmd_parse(args);
        if (app.got_subcommand(encode_cmd)) return cmd_encode_pauses(args, alignment_path);
        if (app.got_subcommand(silence_cmd)) return cmd_silence_features(args);
        if (app.got_subcommand(featurize_cmd)) return cmd_featurize(args, featurizer_name);
        if (app.got_subcommand(split_cmd)) return cmd_split(args, key_name);
        if (app.got_subcommand(traincas_cmd))
            return cmd_train_cascade(args, split_path, featurizer_name, task_name, model_seed);
        if (app.got_subcommand(trainreg_cmd))
            return cmd_train_regress(args, split_path, reg_model, reg_set, task_name);
        if (app.got_subcommand(predict_cmd)) return cmd_predict(args, model_path);
        if (app.got_subcommand(ensemble_cmd)) return cmd_ensemble(args, prediction_files, score_files);
        if (app.got_subcommand(evaluate_cmd))
            return cmd_evaluate(args, eval_mode, predictions_path, ref_path, hyp_path);
        if (app.got_subcommand(compare_cmd)) return cmd_compare(args, compare_mode);
    } catch (const cogspeech::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
