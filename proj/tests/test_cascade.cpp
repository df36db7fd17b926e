#include <catch2/catch_amalgamated.hpp>

#include <map>

#include "cogspeech/cascade.hpp"
#include "cogspeech/rng.hpp"
#include "test_util.hpp"

using namespace cogspeech;

namespace {

// A cohort whose feature vectors carry a clean class signal; vectors are
// stored in a side map keyed by id so the FeatureProvider can find them.
struct ToyData {
    Cohort cohort;
    std::map<std::string, std::vector<double>> vectors;

    FeatureProvider provider() const {
        return [this](const Subject& s) -> const std::vector<double>* {
            const auto it = vectors.find(s.id);
            return it == vectors.end() ? nullptr : &it->second;
        };
    }
};

ToyData make_toy(std::size_t hc, std::size_t mci, std::size_t dem, std::uint64_t seed) {
    ToyData data;
    Rng rng(seed);
    std::size_t n = 0;
    const auto add = [&](Diagnosis d) {
        Subject s;
        s.id = "t" + std::to_string(++n);
        s.diagnosis = d;
        data.cohort.subjects.push_back(s);
        // well-separated class cluster centers in 3-D
        double cx = 0, cy = 0;
        if (d == Diagnosis::MCI) cx = 4.0;
        if (d == Diagnosis::Dementia) cx = 4.0, cy = 4.0;
        data.vectors[s.id] = {rng.normal(cx, 0.25), rng.normal(cy, 0.25), rng.normal(0.0, 0.25)};
    };
    for (std::size_t i = 0; i < hc; ++i) add(Diagnosis::HC);
    for (std::size_t i = 0; i < mci; ++i) add(Diagnosis::MCI);
    for (std::size_t i = 0; i < dem; ++i) add(Diagnosis::Dementia);
    return data;
}

TrainConfig quick_config(std::uint64_t seed) {
    TrainConfig cfg;
    cfg.epochs = 150;
    cfg.hidden = 8;
    cfg.dropout = 0.0;
    cfg.seed = seed;
    return cfg;
}

}  // namespace

TEST_CASE("cascade trains stage1 on all, stage2 on MCI+Dementia", "[cascade]") {
    const ToyData data = make_toy(82, 59, 16, 1);
    const CascadeModel model = train_cascade(data.cohort, data.provider(), quick_config(5));
    CHECK(model.provenance.stage1_samples == 157);
    CHECK(model.provenance.stage2_samples == 75);
}

TEST_CASE("cascade requires every class", "[cascade]") {
    const ToyData data = make_toy(10, 8, 0, 2);
    REQUIRE_THROWS_AS(train_cascade(data.cohort, data.provider(), quick_config(5)), TrainError);
}

TEST_CASE("cascade training is deterministic", "[cascade]") {
    const ToyData data = make_toy(12, 10, 4, 3);
    const CascadeModel a = train_cascade(data.cohort, data.provider(), quick_config(9));
    const CascadeModel b = train_cascade(data.cohort, data.provider(), quick_config(9));
    CHECK(a.stage1.params() == b.stage1.params());
    CHECK(a.stage2.params() == b.stage2.params());
}

TEST_CASE("cascade routing rules", "[cascade]") {
    CHECK(route(Diagnosis::HC, Diagnosis::MCI) == Diagnosis::HC);
    CHECK(route(Diagnosis::NonHC, Diagnosis::MCI) == Diagnosis::MCI);
    CHECK(route(Diagnosis::NonHC, Diagnosis::Dementia) == Diagnosis::Dementia);
    REQUIRE_THROWS_AS(route(Diagnosis::MCI, Diagnosis::MCI), DataError);
    REQUIRE_THROWS_AS(route(Diagnosis::NonHC, Diagnosis::HC), DataError);
}

TEST_CASE("inference consults stage2 only for NonHC", "[cascade]") {
    const ToyData data = make_toy(20, 15, 6, 4);
    const CascadeModel model = train_cascade(data.cohort, data.provider(), quick_config(11));

    std::size_t stage2_used = 0, hc_decisions = 0;
    for (const auto& s : data.cohort.subjects) {
        const CascadeDecision d = infer_cascade(model, data.vectors.at(s.id));
        if (d.label == Diagnosis::HC) {
            ++hc_decisions;
            CHECK_FALSE(d.stage2_dementia_prob.has_value());
        } else {
            ++stage2_used;
            CHECK(d.stage2_dementia_prob.has_value());
            CHECK((d.label == Diagnosis::MCI || d.label == Diagnosis::Dementia));
        }
        CHECK(d.stage1_nonhc_prob >= 0.0);
        CHECK(d.stage1_nonhc_prob <= 1.0);
    }
    // routing exactness: every final HC is exactly a stage1 HC decision
    CHECK(hc_decisions + stage2_used == data.cohort.size());
}

TEST_CASE("separable toy cohort is classified perfectly end to end", "[cascade]") {
    const ToyData data = make_toy(25, 20, 10, 6);
    const CascadeModel model = train_cascade(data.cohort, data.provider(), quick_config(13));
    std::size_t hits = 0;
    for (const auto& s : data.cohort.subjects)
        if (infer_cascade(model, data.vectors.at(s.id)).label == s.diagnosis) ++hits;
    CHECK(hits == data.cohort.size());
}

TEST_CASE("stage1 threshold shifts the HC boundary", "[cascade]") {
    const ToyData data = make_toy(15, 12, 5, 7);
    const CascadeModel base = train_cascade(data.cohort, data.provider(), quick_config(17), 0.5);
    CascadeModel strict = base;
    strict.stage1_threshold = 0.999999;  // nearly everything routes to HC
    std::size_t hc_base = 0, hc_strict = 0;
    for (const auto& s : data.cohort.subjects) {
        if (infer_cascade(base, data.vectors.at(s.id)).label == Diagnosis::HC) ++hc_base;
        if (infer_cascade(strict, data.vectors.at(s.id)).label == Diagnosis::HC) ++hc_strict;
    }
    CHECK(hc_strict >= hc_base);
}

TEST_CASE("direct three-class baseline", "[cascade]") {
    const ToyData data = make_toy(20, 16, 8, 8);
    const ClassifierHead model = train_direct3(data.cohort, data.provider(), quick_config(19));

    SECTION("softmax over three logits") {
        const auto p = model.predict(data.vectors.at("t1"));
        REQUIRE(p.probs.size() == 3);
        double sum = 0;
        for (double v : p.probs) sum += v;
        CHECK(sum == Catch::Approx(1.0).margin(1e-12));
    }
    SECTION("separable data fits exactly") {
        std::size_t hits = 0;
        for (const auto& s : data.cohort.subjects)
            if (predict_direct3(model, data.vectors.at(s.id)) == s.diagnosis) ++hits;
        CHECK(hits == data.cohort.size());
    }
    SECTION("deterministic") {
        const ClassifierHead again = train_direct3(data.cohort, data.provider(), quick_config(19));
        CHECK(again.params() == model.params());
    }
}

TEST_CASE("subjects without vectors are excluded from training", "[cascade]") {
    ToyData data = make_toy(10, 8, 3, 10);
    data.vectors.erase("t1");
    const CascadeModel model = train_cascade(data.cohort, data.provider(), quick_config(23));
    CHECK(model.provenance.stage1_samples == 20);
}
