#include <catch2/catch_amalgamated.hpp>

#include "cogspeech/ensemble.hpp"
#include "cogspeech/rng.hpp"

using namespace cogspeech;

TEST_CASE("majority vote basics", "[ensemble]") {
    const std::vector<Diagnosis> labels = {Diagnosis::HC, Diagnosis::HC, Diagnosis::NonHC};
    const VoteRecord rec = majority_vote(labels);
    CHECK(rec.winner == Diagnosis::HC);
    CHECK(rec.margin == 1);
    CHECK(rec.counts.at(Diagnosis::HC) == 2);

    CHECK(majority_vote(std::vector<Diagnosis>{Diagnosis::MCI}).winner == Diagnosis::MCI);
    REQUIRE_THROWS_AS(majority_vote(std::vector<Diagnosis>{}), DataError);
}

TEST_CASE("90-voter tie resolves by severity policy", "[ensemble]") {
    std::vector<Diagnosis> labels(45, Diagnosis::NonHC);
    labels.insert(labels.end(), 45, Diagnosis::HC);
    REQUIRE(labels.size() == 90);
    const VoteRecord rec = majority_vote(labels, TiePolicy::Severe);
    CHECK(rec.winner == Diagnosis::NonHC);
    CHECK(rec.margin == 0);

    CHECK(majority_vote(labels, TiePolicy::LeastSevere).winner == Diagnosis::HC);
    // first-seen follows input order
    CHECK(majority_vote(labels, TiePolicy::FirstSeen).winner == Diagnosis::NonHC);

    std::vector<Diagnosis> stage2(5, Diagnosis::MCI);
    stage2.insert(stage2.end(), 5, Diagnosis::Dementia);
    CHECK(majority_vote(stage2, TiePolicy::Severe).winner == Diagnosis::Dementia);
}

TEST_CASE("majority vote is permutation invariant", "[ensemble]") {
    Rng rng(77);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<Diagnosis> labels(static_cast<std::size_t>(rng.uniform_int(1, 25)));
        for (auto& d : labels)
            d = kThreeClasses[static_cast<std::size_t>(rng.uniform_int(0, 2))];
        const Diagnosis winner = majority_vote(labels, TiePolicy::Severe).winner;
        std::vector<Diagnosis> shuffled = labels;
        rng.shuffle(shuffled);
        CHECK(majority_vote(shuffled, TiePolicy::Severe).winner == winner);
    }
}

TEST_CASE("adding votes for the winner never flips the outcome", "[ensemble]") {
    Rng rng(78);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<Diagnosis> labels(static_cast<std::size_t>(rng.uniform_int(1, 20)));
        for (auto& d : labels)
            d = kThreeClasses[static_cast<std::size_t>(rng.uniform_int(0, 2))];
        const Diagnosis winner = majority_vote(labels, TiePolicy::Severe).winner;
        const int extra = static_cast<int>(rng.uniform_int(1, 10));
        std::vector<Diagnosis> more = labels;
        more.insert(more.end(), static_cast<std::size_t>(extra), winner);
        CHECK(majority_vote(more, TiePolicy::Severe).winner == winner);
    }
}

TEST_CASE("voter-level overload records coordinates", "[ensemble]") {
    const std::vector<Vote> votes = {{"hash-uni/CTD/seed0", Diagnosis::MCI},
                                     {"hash-bi/PFT/seed1", Diagnosis::Dementia},
                                     {"hash-tri/SFT/seed2", Diagnosis::MCI}};
    const VoteRecord rec = majority_vote(votes);
    CHECK(rec.winner == Diagnosis::MCI);
    REQUIRE(rec.voters.size() == 3);
    CHECK(rec.voters[1].voter == "hash-bi/PFT/seed1");
}

TEST_CASE("seed averaging", "[ensemble]") {
    CHECK(seed_average(std::vector<double>{20, 22}) == 21.0);
    const std::vector<double> same(10, 26.5);
    CHECK(seed_average(same) == 26.5);

    Rng rng(3);
    std::vector<double> scores(10);
    for (auto& s : scores) s = rng.uniform(0, 30);
    const double mean = seed_average(scores);
    std::vector<double> perm = scores;
    rng.shuffle(perm);
    CHECK(seed_average(perm) == Catch::Approx(mean).margin(1e-12));

    REQUIRE_THROWS_AS(seed_average(std::vector<double>{}), DataError);
}

TEST_CASE("rmse gate keeps strictly-below members in order", "[ensemble]") {
    const std::vector<PoolEntry> pool = {{"a", 2.5}, {"b", 3.2}, {"c", 2.9}};
    const GateResult r = rmse_gate(pool, 3.0);
    CHECK(r.selected == std::vector<std::string>{"a", "c"});
    CHECK_FALSE(r.fell_back);
}

TEST_CASE("rmse gate boundary is strict", "[ensemble]") {
    const std::vector<PoolEntry> pool = {{"a", 3.0}, {"b", 2.999999}};
    const GateResult r = rmse_gate(pool, 3.0);
    CHECK(r.selected == std::vector<std::string>{"b"});
}

TEST_CASE("rmse gate falls back to the single best with a warning", "[ensemble]") {
    const std::vector<PoolEntry> pool = {{"a", 4.5}, {"b", 3.1}, {"c", 5.0}};
    const auto warnings_before = warning_count();
    const GateResult r = rmse_gate(pool, 3.0);
    CHECK(r.selected == std::vector<std::string>{"b"});
    CHECK(r.fell_back);
    CHECK(warning_count() == warnings_before + 1);
}

TEST_CASE("rmse gate edge thresholds", "[ensemble]") {
    const std::vector<PoolEntry> pool = {{"a", 1.0}, {"b", 2.0}, {"c", 3.0}};
    CHECK(rmse_gate(pool, 1e18).selected.size() == 3);
    const GateResult zero = rmse_gate(pool, 0.0);
    CHECK(zero.fell_back);
    CHECK(zero.selected == std::vector<std::string>{"a"});
    REQUIRE_THROWS_AS(rmse_gate(std::vector<PoolEntry>{}, 3.0), DataError);
    REQUIRE_THROWS_AS(rmse_gate(std::vector<PoolEntry>{{"x", -0.1}}, 3.0), DataError);
}

TEST_CASE("ensemble regression averaging and clamping", "[ensemble]") {
    EnsembleConfig cfg;
    CHECK(ensemble_regress(std::vector<double>{26, 28}, cfg) == 27.0);
    CHECK(ensemble_regress(std::vector<double>{23.5}, cfg) == 23.5);
    CHECK(ensemble_regress(std::vector<double>{30.9, 30.5}, cfg) == 30.0);
    CHECK(ensemble_regress(std::vector<double>{-2.0, 1.0}, cfg) == 0.0);

    EnsembleConfig unclamped = cfg;
    unclamped.clamp_scores = false;
    CHECK(ensemble_regress(std::vector<double>{30.9, 30.5}, unclamped) == Catch::Approx(30.7));

    REQUIRE_THROWS_AS(ensemble_regress(std::vector<double>{}, cfg), DataError);
}

TEST_CASE("grid accounting shapes", "[ensemble]") {
    EnsembleConfig cfg;
    CHECK(cfg.classifier_grid_size() == 90);   // 3 featurizers x 3 tasks x 10 seeds
    CHECK(cfg.regression_pool_size() == 45);   // 3 models x 5 feature sets x 3 tasks

    GridAudit audit;
    for (int s = 0; s < 4; ++s) {
        const std::string id = "subj" + std::to_string(s);
        audit.stage1_votes_per_subject[id] = 90;
        audit.stage2_votes_per_subject[id] = 90;
    }
    CHECK(audit.classification_complete(cfg, 4));
    audit.stage2_votes_per_subject["subj2"] = 89;
    CHECK_FALSE(audit.classification_complete(cfg, 4));
}
