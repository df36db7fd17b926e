#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "cogspeech/features.hpp"
#include "cogspeech/pause.hpp"
#include "test_util.hpp"

using namespace cogspeech;

namespace {

double l2_norm(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

std::string vector_file_text(std::size_t rows, std::size_t dim) {
    std::string text = "subject_id,task";
    for (std::size_t j = 0; j < dim; ++j) text += ",v" + std::to_string(j);
    text += '\n';
    for (std::size_t r = 0; r < rows; ++r) {
        text += "s" + std::to_string(r) + ",CTD";
        for (std::size_t j = 0; j < dim; ++j) text += "," + std::to_string(0.25 * (r + j));
        text += '\n';
    }
    return text;
}

}  // namespace

TEST_CASE("feature set loads validated rows", "[features]") {
    testutil::TempDir dir("features");
    const auto path = testutil::write(dir, "vec.csv", vector_file_text(157, 16));
    const FeatureSet set = load_feature_set(path, "w2v", 16);
    REQUIRE(set.vectors.size() == 157);
    REQUIRE(set.find("s3", ElicitationTask::CTD) != nullptr);
    CHECK((*set.find("s3", ElicitationTask::CTD))[0] == Catch::Approx(0.75));
    CHECK(set.find("s3", ElicitationTask::PFT) == nullptr);
}

TEST_CASE("feature set rejects bad rows", "[features]") {
    testutil::TempDir dir("features");
    SECTION("dimension mismatch names the row") {
        std::string text = "subject_id,task,v0,v1\na,CTD,1.0,2.0\nb,CTD,1.0\n";
        const auto path = testutil::write(dir, "short.csv", text);
        REQUIRE_THROWS_WITH(load_feature_set(path, "x", 2), Catch::Matchers::ContainsSubstring("short.csv:3"));
    }
    SECTION("duplicate key") {
        std::string text = "subject_id,task,v0\na,CTD,1.0\na,CTD,2.0\n";
        const auto path = testutil::write(dir, "dup.csv", text);
        REQUIRE_THROWS_WITH(load_feature_set(path, "x", 1), Catch::Matchers::ContainsSubstring("duplicate"));
    }
    SECTION("empty file warns") {
        const auto path = testutil::write(dir, "empty.csv", "");
        const auto warnings_before = warning_count();
        const FeatureSet set = load_feature_set(path, "x", 4);
        CHECK(set.vectors.empty());
        CHECK(warning_count() == warnings_before + 1);
    }
}

TEST_CASE("feature set save/load round-trip", "[features]") {
    testutil::TempDir dir("features");
    FeatureSet set;
    set.name = "silence";
    set.dim = 3;
    set.insert({"a", ElicitationTask::CTD}, {0.125, -2.5, 31.0 / 7.0});
    set.insert({"a", ElicitationTask::SFT}, {1e-17, 4.0, 5.0});
    save_feature_set(set, dir.file("rt.csv"));
    const FeatureSet again = load_feature_set(dir.file("rt.csv"), "silence", 3);
    REQUIRE(again.vectors.size() == 2);
    CHECK(again.vectors == set.vectors);  // shortest round-trip formatting is exact
}

TEST_CASE("registry enforces unique names", "[features]") {
    FeatureRegistry reg;
    FeatureSet a;
    a.name = "w2v";
    a.dim = 4;
    reg.add(a);
    REQUIRE_THROWS_AS(reg.add(a), ConfigError);
    CHECK(reg.get("w2v").dim == 4);
    REQUIRE_THROWS_AS(reg.get("nope"), ConfigError);
}

TEST_CASE("hashed featurizer determinism and norm", "[features]") {
    FeaturizerConfig cfg;
    cfg.dim = 64;
    cfg.seed = 99;
    const std::vector<std::string> tokens = {"the", ",", "boy", "takes", "cookies"};
    const auto a = hashed_ngram_featurize(tokens, cfg);
    const auto b = hashed_ngram_featurize(tokens, cfg);
    CHECK(a == b);
    CHECK(a.size() == 64);
    CHECK(l2_norm(a) == Catch::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("hashed featurizer empty input gives zero vector", "[features]") {
    FeaturizerConfig cfg;
    cfg.dim = 16;
    const auto v = hashed_ngram_featurize(std::vector<std::string>{}, cfg);
    CHECK(l2_norm(v) == 0.0);
}

TEST_CASE("norm is zero or one over random token lists", "[features]") {
    FeaturizerConfig cfg;
    cfg.dim = 32;
    cfg.orders = {1, 2};
    Rng rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<std::string> tokens;
        const int n = static_cast<int>(rng.uniform_int(0, 10));
        for (int i = 0; i < n; ++i) tokens.push_back("t" + std::to_string(rng.uniform_int(0, 20)));
        const double norm = l2_norm(hashed_ngram_featurize(tokens, cfg));
        CHECK((std::abs(norm) < 1e-12 || std::abs(norm - 1.0) < 1e-12));
    }
}

TEST_CASE("bigrams make token order matter", "[features]") {
    FeaturizerConfig cfg;
    cfg.dim = 128;
    cfg.orders = {1, 2};
    const auto ab = hashed_ngram_featurize(std::vector<std::string>{"the", "boy"}, cfg);
    const auto ba = hashed_ngram_featurize(std::vector<std::string>{"boy", "the"}, cfg);
    CHECK(ab != ba);

    FeaturizerConfig uni = cfg;
    uni.orders = {1};
    const auto u_ab = hashed_ngram_featurize(std::vector<std::string>{"the", "boy"}, uni);
    const auto u_ba = hashed_ngram_featurize(std::vector<std::string>{"boy", "the"}, uni);
    CHECK(u_ab == u_ba);  // unigrams alone are order-blind
}

TEST_CASE("pause symbols change the vector", "[features]") {
    FeaturizerConfig cfg;
    cfg.dim = 64;
    const std::vector<std::string> with_pause = {"the", ",", "boy"};
    const std::vector<std::string> without = {"the", "boy"};
    CHECK(hashed_ngram_featurize(with_pause, cfg) != hashed_ngram_featurize(without, cfg));
}

TEST_CASE("missing vectors are reported against a cohort", "[features]") {
    testutil::TempDir dir("features");
    std::string manifest = manifest_header();
    manifest += "\na,HC,25,t,l,v,t,l,v,t,l,v\n";
    const Cohort cohort = load_manifest(testutil::write(dir, "m.csv", manifest));

    FeatureSet set;
    set.name = "w2v";
    set.dim = 2;
    set.insert({"a", ElicitationTask::CTD}, {1.0, 2.0});
    const auto missing = missing_vectors(set, cohort);
    REQUIRE(missing.size() == 2);
    CHECK(missing[0].task == ElicitationTask::PFT);
    CHECK(missing[1].task == ElicitationTask::SFT);
}
