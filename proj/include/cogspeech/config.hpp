#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "cogspeech/common.hpp"
#include "cogspeech/corpus.hpp"
#include "cogspeech/ensemble.hpp"
#include "cogspeech/features.hpp"
#include "cogspeech/io.hpp"
#include "cogspeech/learners.hpp"

namespace cogspeech {

struct VectorSetConfig {
    std::string name;
    std::string path;  // relative to the manifest directory
    std::size_t dim = 0;
};

struct RegressionModelConfig {
    std::string name;  // "svr", "gbrt-fine", "gbrt-coarse"
};

// Everything a full experiment run needs; serialized alongside every
// artifact directory so runs can be replayed exactly.
struct PipelineConfig {
    std::string manifest;
    std::string out_dir = "out";

    std::vector<std::uint64_t> split_seeds{101, 211, 307, 401};
    double train_fraction = 0.75;
    double test_fraction = 0.2;       // carved out before splitting; 0 disables
    std::uint64_t test_carve_seed = 9001;

    TrainConfig train{.epochs = 15, .batch_size = 8, .learning_rate = 1e-3, .weight_decay = 0.01,
                      .dropout = 0.1, .hidden = 32, .seed = 0};
    double stage1_threshold = 0.5;

    std::vector<FeaturizerConfig> featurizers{
        {"hash-uni", {1}, 128, 0xA1},
        {"hash-bi", {1, 2}, 128, 0xB2},
        {"hash-tri", {1, 2, 3}, 128, 0xC3},
    };
    std::vector<ElicitationTask> tasks{ElicitationTask::CTD, ElicitationTask::PFT, ElicitationTask::SFT};
    std::vector<std::uint64_t> model_seeds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};

    EnsembleConfig ensemble;

    std::vector<RegressionModelConfig> regression_models{{"svr"}, {"gbrt-fine"}, {"gbrt-coarse"}};
    std::vector<std::string> regression_feature_sets{"w2v", "silence", "egemaps", "compare", "roberta"};
    std::vector<VectorSetConfig> vector_sets{
        {"w2v", "vectors/w2v.csv", 16},
        {"egemaps", "vectors/egemaps.csv", 8},
        {"compare", "vectors/compare.csv", 24},
        {"roberta", "vectors/roberta.csv", 16},
    };
    int cv_folds = 4;
    bool retrain_on_full = true;

    nlohmann::json to_json() const {
        nlohmann::json feats = nlohmann::json::array();
        for (const auto& f : featurizers)
            feats.push_back({{"name", f.name}, {"orders", f.orders}, {"dim", f.dim}, {"seed", f.seed}});
        nlohmann::json tasks_json = nlohmann::json::array();
        for (const auto t : tasks) tasks_json.push_back(std::string(to_string(t)));
        nlohmann::json vsets = nlohmann::json::array();
        for (const auto& v : vector_sets)
            vsets.push_back({{"name", v.name}, {"path", v.path}, {"dim", v.dim}});
        nlohmann::json models = nlohmann::json::array();
        for (const auto& m : regression_models) models.push_back(m.name);

        return nlohmann::json{
            {"manifest", manifest},
            {"out_dir", out_dir},
            {"split_seeds", split_seeds},
            {"train_fraction", train_fraction},
            {"test_fraction", test_fraction},
            {"test_carve_seed", test_carve_seed},
            {"train",
             {{"epochs", train.epochs},
              {"batch_size", train.batch_size},
              {"learning_rate", train.learning_rate},
              {"weight_decay", train.weight_decay},
              {"dropout", train.dropout},
              {"hidden", train.hidden},
              {"seed", train.seed}}},
            {"stage1_threshold", stage1_threshold},
            {"featurizers", feats},
            {"tasks", tasks_json},
            {"model_seeds", model_seeds},
            {"ensemble",
             {{"rmse_gate_threshold", ensemble.rmse_gate_threshold},
              {"tie_policy", std::string(to_string(ensemble.tie_policy))},
              {"clamp_scores", ensemble.clamp_scores},
              {"clamp_lo", ensemble.clamp_lo},
              {"clamp_hi", ensemble.clamp_hi}}},
            {"regression_models", models},
            {"regression_feature_sets", regression_feature_sets},
            {"vector_sets", vsets},
            {"cv_folds", cv_folds},
            {"retrain_on_full", retrain_on_full},
        };
    }

    static PipelineConfig from_json(const nlohmann::json& j) {
        PipelineConfig cfg;
        const auto get = [&](const char* key, auto& into) {
            if (j.contains(key)) into = j.at(key).get<std::decay_t<decltype(into)>>();
        };
        get("manifest", cfg.manifest);
        get("out_dir", cfg.out_dir);
        get("split_seeds", cfg.split_seeds);
        get("train_fraction", cfg.train_fraction);
        get("test_fraction", cfg.test_fraction);
        get("test_carve_seed", cfg.test_carve_seed);
        if (j.contains("train")) {
            const auto& t = j.at("train");
            const auto tget = [&](const char* key, auto& into) {
                if (t.contains(key)) into = t.at(key).get<std::decay_t<decltype(into)>>();
            };
            tget("epochs", cfg.train.epochs);
            tget("batch_size", cfg.train.batch_size);
            tget("learning_rate", cfg.train.learning_rate);
            tget("weight_decay", cfg.train.weight_decay);
            tget("dropout", cfg.train.dropout);
            tget("hidden", cfg.train.hidden);
            tget("seed", cfg.train.seed);
        }
        get("stage1_threshold", cfg.stage1_threshold);
        if (j.contains("featurizers")) {
            cfg.featurizers.clear();
            for (const auto& f : j.at("featurizers")) {
                FeaturizerConfig fc;
                fc.name = f.at("name").get<std::string>();
                fc.orders = f.at("orders").get<std::vector<int>>();
                fc.dim = f.at("dim").get<std::size_t>();
                fc.seed = f.at("seed").get<std::uint64_t>();
                cfg.featurizers.push_back(std::move(fc));
            }
        }
        if (j.contains("tasks")) {
            cfg.tasks.clear();
            for (const auto& t : j.at("tasks"))
                cfg.tasks.push_back(parse_task(t.get<std::string>(), "config.tasks"));
        }
        get("model_seeds", cfg.model_seeds);
        if (j.contains("ensemble")) {
            const auto& e = j.at("ensemble");
            if (e.contains("rmse_gate_threshold"))
                cfg.ensemble.rmse_gate_threshold = e.at("rmse_gate_threshold").get<double>();
            if (e.contains("tie_policy"))
                cfg.ensemble.tie_policy = parse_tie_policy(e.at("tie_policy").get<std::string>());
            if (e.contains("clamp_scores")) cfg.ensemble.clamp_scores = e.at("clamp_scores").get<bool>();
            if (e.contains("clamp_lo")) cfg.ensemble.clamp_lo = e.at("clamp_lo").get<double>();
            if (e.contains("clamp_hi")) cfg.ensemble.clamp_hi = e.at("clamp_hi").get<double>();
        }
        if (j.contains("regression_models")) {
            cfg.regression_models.clear();
            for (const auto& m : j.at("regression_models"))
                cfg.regression_models.push_back({m.get<std::string>()});
        }
        get("regression_feature_sets", cfg.regression_feature_sets);
        if (j.contains("vector_sets")) {
            cfg.vector_sets.clear();
            for (const auto& v : j.at("vector_sets"))
                cfg.vector_sets.push_back({v.at("name").get<std::string>(), v.at("path").get<std::string>(),
                                           v.at("dim").get<std::size_t>()});
        }
        get("cv_folds", cfg.cv_folds);
        get("retrain_on_full", cfg.retrain_on_full);

        // keep derived grid dimensions in sync with the configured lists
        cfg.ensemble.n_featurizers = cfg.featurizers.size();
        cfg.ensemble.n_tasks = cfg.tasks.size();
        cfg.ensemble.n_seeds = cfg.model_seeds.size();
        cfg.ensemble.n_regression_models = cfg.regression_models.size();
        cfg.ensemble.n_feature_sets = cfg.regression_feature_sets.size();
        return cfg;
    }

    static PipelineConfig load(const fs::path& path) {
        try {
            return from_json(nlohmann::json::parse(read_text_file(path)));
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(path.string() + ": " + e.what());
        }
    }

    void save(const fs::path& path) const { write_text_file(path, to_json().dump(2) + "\n"); }

    std::uint64_t config_hash() const {
        const std::string dump = to_json().dump();
        return fnv1a64(dump.data(), dump.size());
    }

    void sync_grid_dims() {
        ensemble.n_featurizers = featurizers.size();
        ensemble.n_tasks = tasks.size();
        ensemble.n_seeds = model_seeds.size();
        ensemble.n_regression_models = regression_models.size();
        ensemble.n_feature_sets = regression_feature_sets.size();
    }
};

inline std::string hash_hex(std::uint64_t h) {
    char buf[19];
    std::snprintf(buf, sizeof(buf), "0x%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// Provenance manifest written into every artifact directory. Contains no
// timestamps so that identical runs produce identical bytes.
inline void write_provenance(const fs::path& dir, const std::string& command, const PipelineConfig& cfg,
                             const std::vector<std::string>& inputs,
                             const std::vector<std::string>& artifacts) {
    const nlohmann::json j{
        {"command", command},
        {"config_hash", hash_hex(cfg.config_hash())},
        {"config", cfg.to_json()},
        {"inputs", inputs},
        {"artifacts", artifacts},
    };
    write_text_file(dir / "provenance.json", j.dump(2) + "\n");
}

}  // namespace cogspeech
