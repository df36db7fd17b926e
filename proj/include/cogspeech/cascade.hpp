#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cogspeech/common.hpp"
#include "cogspeech/corpus.hpp"
#include "cogspeech/learners.hpp"

namespace cogspeech {

// Returns the feature vector for a subject, or nullptr when the sample
// has no features under the active binding (excluded, with a logged count).
using FeatureProvider = std::function<const std::vector<double>*(const Subject&)>;

// Stage 1 separates HC from NonHC on the full (relabeled) training set;
// stage 2 separates MCI from Dementia and is trained only on the
// MCI+Dementia subset. Class index conventions:
//   stage 1: 0 = HC, 1 = NonHC      stage 2: 0 = MCI, 1 = Dementia
struct CascadeModel {
    ClassifierHead stage1;
    ClassifierHead stage2;
    double stage1_threshold = 0.5;  // classify NonHC when P(NonHC) > threshold

    struct Provenance {
        std::uint64_t seed = 0;
        std::string featurizer;
        std::string task;
        std::size_t stage1_samples = 0;
        std::size_t stage2_samples = 0;
    } provenance;
};

struct CascadeDecision {
    Diagnosis label = Diagnosis::HC;
    double stage1_nonhc_prob = 0.0;
    std::optional<double> stage2_dementia_prob;  // engaged only when stage 2 ran
};

inline int stage1_target(Diagnosis d) { return d == Diagnosis::HC ? 0 : 1; }

inline int stage2_target(Diagnosis d) {
    if (d == Diagnosis::MCI) return 0;
    if (d == Diagnosis::Dementia) return 1;
    throw DataError("stage2 target requested for label " + std::string(to_string(d)));
}

inline Diagnosis stage2_label(int index) { return index == 0 ? Diagnosis::MCI : Diagnosis::Dementia; }

// Pure routing rule: an HC stage-1 decision is final; otherwise stage 2's
// label is final.
inline Diagnosis route(Diagnosis stage1_decision, Diagnosis stage2_decision) {
    if (stage1_decision == Diagnosis::HC) return Diagnosis::HC;
    if (stage1_decision != Diagnosis::NonHC)
        throw DataError("route: stage1 decision must be HC or NonHC");
    if (stage2_decision != Diagnosis::MCI && stage2_decision != Diagnosis::Dementia)
        throw DataError("route: stage2 decision must be MCI or Dementia");
    return stage2_decision;
}

namespace detail {

struct BoundSamples {
    Matrix x;
    std::vector<Diagnosis> labels;
    std::vector<std::string> ids;
    std::size_t skipped = 0;
};

inline BoundSamples bind_features(const Cohort& cohort, const FeatureProvider& features) {
    BoundSamples out;
    for (const auto& s : cohort.subjects) {
        const std::vector<double>* v = features(s);
        if (!v) {
            ++out.skipped;
            continue;
        }
        out.x.push_back(*v);
        out.labels.push_back(s.diagnosis);
        out.ids.push_back(s.id);
    }
    if (out.skipped > 0)
        log_info("feature binding: excluded " + std::to_string(out.skipped) + " of " +
                 std::to_string(cohort.subjects.size()) + " subjects without vectors");
    return out;
}

}  // namespace detail

inline CascadeModel train_cascade(const Cohort& train, const FeatureProvider& features,
                                  const TrainConfig& cfg, double stage1_threshold = 0.5) {
    const auto bound = detail::bind_features(train, features);

    std::size_t n_hc = 0, n_mci = 0, n_dem = 0;
    for (const auto d : bound.labels) {
        if (d == Diagnosis::HC) ++n_hc;
        if (d == Diagnosis::MCI) ++n_mci;
        if (d == Diagnosis::Dementia) ++n_dem;
        if (d == Diagnosis::NonHC) throw DataError("train_cascade expects three-class labels");
    }
    if (n_hc == 0 || n_mci == 0 || n_dem == 0)
        throw TrainError("train_cascade: training data must contain HC, MCI, and Dementia (got " +
                         std::to_string(n_hc) + "/" + std::to_string(n_mci) + "/" + std::to_string(n_dem) + ")");

    // stage 1: every sample, relabeled coarse
    std::vector<int> y1;
    y1.reserve(bound.labels.size());
    for (const auto d : bound.labels) y1.push_back(stage1_target(d));

    // stage 2: MCI + Dementia subset only
    Matrix x2;
    std::vector<int> y2;
    for (std::size_t i = 0; i < bound.labels.size(); ++i) {
        if (bound.labels[i] == Diagnosis::HC) continue;
        x2.push_back(bound.x[i]);
        y2.push_back(stage2_target(bound.labels[i]));
    }

    TrainConfig cfg1 = cfg;
    cfg1.seed = mix_seed(cfg.seed, 0xCA5C1ull);
    TrainConfig cfg2 = cfg;
    cfg2.seed = mix_seed(cfg.seed, 0xCA5C2ull);

    CascadeModel model;
    model.stage1 = train_classifier_head(bound.x, y1, 2, cfg1);
    model.stage2 = train_classifier_head(x2, y2, 2, cfg2);
    model.stage1_threshold = stage1_threshold;
    model.provenance.seed = cfg.seed;
    model.provenance.stage1_samples = bound.x.size();
    model.provenance.stage2_samples = x2.size();
    return model;
}

// Stage 2 is evaluated lazily: an HC stage-1 decision never consults it.
inline CascadeDecision infer_cascade(const CascadeModel& model, std::span<const double> x) {
    CascadeDecision out;
    const Prediction p1 = model.stage1.predict(x);
    out.stage1_nonhc_prob = p1.probs[1];
    if (!(out.stage1_nonhc_prob > model.stage1_threshold)) {
        out.label = Diagnosis::HC;
        return out;
    }
    const Prediction p2 = model.stage2.predict(x);
    out.stage2_dementia_prob = p2.probs[1];
    out.label = stage2_label(p2.label);
    return out;
}

// Direct three-class baseline: same head architecture with 3 logits,
// class indices follow the Diagnosis enum order.
inline ClassifierHead train_direct3(const Cohort& train, const FeatureProvider& features,
                                    const TrainConfig& cfg) {
    const auto bound = detail::bind_features(train, features);
    std::vector<int> y;
    y.reserve(bound.labels.size());
    for (const auto d : bound.labels) {
        if (d == Diagnosis::NonHC) throw DataError("train_direct3 expects three-class labels");
        y.push_back(static_cast<int>(d));
    }
    TrainConfig cfg3 = cfg;
    cfg3.seed = mix_seed(cfg.seed, 0xD13EC7ull);
    return train_classifier_head(bound.x, y, 3, cfg3);
}

inline Diagnosis predict_direct3(const ClassifierHead& model, std::span<const double> x) {
    return static_cast<Diagnosis>(model.predict(x).label);
}

}  // namespace cogspeech
