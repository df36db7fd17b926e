#include <catch2/catch_amalgamated.hpp>

#include "cogspeech/pause.hpp"
#include "cogspeech/synth.hpp"
#include "test_util.hpp"

using namespace cogspeech;

TEST_CASE("apportionment hits exact proportions", "[synth]") {
    const std::array<double, 3> w{5, 4, 1};
    const auto counts = synth::apportion(150, w);
    CHECK(counts == std::vector<int>{75, 60, 15});

    const auto odd = synth::apportion(157, w);
    CHECK(odd[0] + odd[1] + odd[2] == 157);

    REQUIRE_THROWS_AS(synth::apportion(10, std::array<double, 2>{0.0, 0.0}), ConfigError);
}

TEST_CASE("synth cohort writes a loadable, coherent corpus", "[synth]") {
    testutil::TempDir dir("synth");
    synth::SynthConfig cfg;
    cfg.n_subjects = 20;
    const Cohort cohort = synth::synth_cohort(cfg, 7, dir.path());
    REQUIRE(cohort.size() == 20);

    const Cohort loaded = load_manifest(dir.file("manifest.csv"));
    REQUIRE(loaded.subjects == cohort.subjects);

    // every artifact parses, and alignment words match the cleaned transcript
    for (const auto& s : loaded.subjects) {
        for (const auto task : kAllTasks) {
            const auto& art = s.task(task);
            const auto tokens = parse_alignment(loaded.resolve(art.alignment));
            REQUIRE(!tokens.empty());
            const auto clean = strip_annotations(read_text_file(loaded.resolve(art.transcript)));
            std::vector<std::string> aligned_words;
            for (const auto& t : tokens)
                if (!t.is_sil()) aligned_words.push_back(t.text);
            REQUIRE(clean.tokens == aligned_words);

            const VadTrack vad = parse_vad(loaded.resolve(art.vad));
            REQUIRE(!vad.segments.empty());
            CHECK(vad.total_duration >= vad.segments.back().end - 1e-9);
            CHECK_NOTHROW(silence_vector(vad));

            CHECK_NOTHROW(encode_pauses(tokens));
        }
    }
}

TEST_CASE("synth is byte-identical per seed", "[synth]") {
    testutil::TempDir a("syntha"), b("synthb");
    synth::SynthConfig cfg;
    cfg.n_subjects = 8;
    synth::synth_cohort(cfg, 42, a.path());
    synth::synth_cohort(cfg, 42, b.path());

    namespace fs = std::filesystem;
    std::vector<fs::path> rel;
    for (const auto& entry : fs::recursive_directory_iterator(a.path()))
        if (entry.is_regular_file()) rel.push_back(fs::relative(entry.path(), a.path()));
    REQUIRE(rel.size() > 8 * 12);
    for (const auto& r : rel) {
        CAPTURE(r.string());
        REQUIRE(read_text_file(a.path() / r) == read_text_file(b.path() / r));
    }

    testutil::TempDir c("synthc");
    synth::synth_cohort(cfg, 43, c.path());
    CHECK(read_text_file(a.file("manifest.csv")) != read_text_file(c.file("manifest.csv")));
}

TEST_CASE("class MMSE means land near their targets", "[synth]") {
    testutil::TempDir dir("synth");
    synth::SynthConfig cfg;
    cfg.n_subjects = 500;  // 250 HC / 200 MCI / 50 Dementia
    const Cohort cohort = synth::synth_cohort(cfg, 11, dir.path());

    std::array<double, 3> sum{}, n{};
    for (const auto& s : cohort.subjects) {
        REQUIRE(s.mmse.has_value());
        sum[static_cast<std::size_t>(s.diagnosis)] += *s.mmse;
        n[static_cast<std::size_t>(s.diagnosis)] += 1;
    }
    CHECK(std::abs(sum[0] / n[0] - cfg.profiles[0].mmse_mean) < 1.0);
    CHECK(std::abs(sum[1] / n[1] - cfg.profiles[1].mmse_mean) < 1.0);
    CHECK(std::abs(sum[2] / n[2] - cfg.profiles[2].mmse_mean) < 1.0);
}

TEST_CASE("pause behavior separates the classes in aggregate", "[synth]") {
    testutil::TempDir dir("synth");
    synth::SynthConfig cfg;
    cfg.n_subjects = 60;
    const Cohort cohort = synth::synth_cohort(cfg, 13, dir.path());

    std::array<double, 3> pauses_per_word{}, words{};
    for (const auto& s : cohort.subjects) {
        const auto tokens = parse_alignment(cohort.resolve(s.task(ElicitationTask::CTD).alignment));
        const auto encoded = encode_pauses(tokens);
        for (const auto& t : encoded) {
            const auto c = static_cast<std::size_t>(s.diagnosis);
            if (is_pause_symbol(t))
                pauses_per_word[c] += 1;
            else
                words[c] += 1;
        }
    }
    const double hc_rate = pauses_per_word[0] / words[0];
    const double mci_rate = pauses_per_word[1] / words[1];
    const double dem_rate = pauses_per_word[2] / words[2];
    CHECK(hc_rate < mci_rate);
    CHECK(mci_rate < dem_rate);
}

TEST_CASE("mmse_fraction hides scores", "[synth]") {
    testutil::TempDir dir("synth");
    synth::SynthConfig cfg;
    cfg.n_subjects = 100;
    cfg.mmse_fraction = 0.45;
    const Cohort cohort = synth::synth_cohort(cfg, 5, dir.path());
    std::size_t scored = 0;
    for (const auto& s : cohort.subjects) scored += s.mmse.has_value() ? 1 : 0;
    CHECK(scored > 25);
    CHECK(scored < 65);
}

TEST_CASE("synth rejects non-positive cohort size", "[synth]") {
    testutil::TempDir dir("synth");
    synth::SynthConfig cfg;
    cfg.n_subjects = 0;
    REQUIRE_THROWS_AS(synth::synth_cohort(cfg, 1, dir.path()), ConfigError);
}
