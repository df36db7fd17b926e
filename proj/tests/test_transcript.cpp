#include <catch2/catch_amalgamated.hpp>

#include <regex>

#include "cogspeech/transcript.hpp"
#include "test_util.hpp"

using namespace cogspeech;

namespace {

// reference oracle: regex removal of annotation spans, then tokenization
std::vector<std::string> regex_clean(const std::string& raw) {
    std::string s = std::regex_replace(raw, std::regex(R"(\[[^\[\]]*\]|\([^()]*\))"), " ");
    s = std::regex_replace(s, std::regex(R"([^A-Za-z0-9'\- ])"), " ");
    std::vector<std::string> tokens;
    std::string cur;
    for (char c : s) {
        if (c == ' ') {
            if (!cur.empty()) tokens.push_back(cur), cur.clear();
        } else {
            cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        }
    }
    if (!cur.empty()) tokens.push_back(cur);
    return tokens;
}

}  // namespace

TEST_CASE("strip_annotations removes tags and punctuation", "[transcript]") {
    const auto clean = strip_annotations("[INV] okay [NOISE] the boy , takes cookies");
    CHECK(clean.tokens == std::vector<std::string>{"okay", "the", "boy", "takes", "cookies"});
    CHECK(clean.annotations_removed == 2);
}

TEST_CASE("strip_annotations matches a regex oracle", "[transcript]") {
    const std::vector<std::string> cases = {
        "[INV] okay [NOISE] the boy , takes cookies",
        "the (2.3) cookie jar ... fell",
        "plain text with no markup",
        "MiXeD Case AND [TAG with words] trailing",
        "numbers 123 and hyphen-words stay, (0.5) pauses go",
        "[A][B][C] dense tags",
    };
    for (const auto& raw : cases) {
        CAPTURE(raw);
        CHECK(strip_annotations(raw).tokens == regex_clean(raw));
    }
}

TEST_CASE("strip_annotations trivial cases", "[transcript]") {
    SECTION("no annotations") {
        const auto clean = strip_annotations("the boy takes cookies");
        CHECK(clean.tokens == std::vector<std::string>{"the", "boy", "takes", "cookies"});
        CHECK(clean.annotations_removed == 0);
    }
    SECTION("empty input") {
        const auto clean = strip_annotations("");
        CHECK(clean.tokens.empty());
        CHECK(clean.annotations_removed == 0);
    }
}

TEST_CASE("strip_annotations is idempotent", "[transcript]") {
    const std::string raw = "[INV] so, the boy... (1.2) climbs [NOISE] up";
    const auto once = strip_annotations(raw);
    const auto twice = strip_annotations(join_tokens(once.tokens));
    CHECK(twice.tokens == once.tokens);
    CHECK(twice.annotations_removed == 0);
}

TEST_CASE("strip_annotations rejects unbalanced delimiters with offsets", "[transcript]") {
    REQUIRE_THROWS_WITH(strip_annotations("a [tag never closes"), Catch::Matchers::ContainsSubstring("byte 2"));
    REQUIRE_THROWS_WITH(strip_annotations("stray ] here"), Catch::Matchers::ContainsSubstring("byte 6"));
    REQUIRE_THROWS_WITH(strip_annotations("open ( paren"), Catch::Matchers::ContainsSubstring("unclosed"));
    REQUIRE_THROWS_AS(strip_annotations("[a [b]]"), ParseError);
}

TEST_CASE("parse_alignment reads ordered rows", "[transcript]") {
    testutil::TempDir dir("align");
    const auto path = testutil::write(dir, "a.csv",
                                      "token,start_sec,end_sec\n"
                                      "the,0.0,0.4\n"
                                      "SIL,0.4,1.0\n"
                                      "boy,1.0,1.3\n");
    const auto tokens = parse_alignment(path);
    REQUIRE(tokens.size() == 3);
    CHECK(tokens[0] == AlignedToken{"the", 0.0, 0.4});
    CHECK(tokens[1].is_sil());
    CHECK(tokens[2] == AlignedToken{"boy", 1.0, 1.3});
}

TEST_CASE("parse_alignment rejects malformed rows", "[transcript]") {
    testutil::TempDir dir("align");
    SECTION("end before start") {
        const auto path = testutil::write(dir, "bad.csv", "token,start_sec,end_sec\nthe,0.5,0.2\n");
        REQUIRE_THROWS_WITH(parse_alignment(path), Catch::Matchers::ContainsSubstring("bad.csv:2"));
    }
    SECTION("overlap") {
        const auto path =
            testutil::write(dir, "ovl.csv", "token,start_sec,end_sec\na,0.0,0.6\nb,0.5,0.9\n");
        REQUIRE_THROWS_WITH(parse_alignment(path), Catch::Matchers::ContainsSubstring("overlaps"));
    }
    SECTION("non-numeric timestamp") {
        const auto path = testutil::write(dir, "nan.csv", "token,start_sec,end_sec\na,zero,0.6\n");
        REQUIRE_THROWS_WITH(parse_alignment(path), Catch::Matchers::ContainsSubstring("not a number"));
    }
    SECTION("empty file yields empty list") {
        const auto path = testutil::write(dir, "empty.csv", "");
        CHECK(parse_alignment(path).empty());
    }
}

TEST_CASE("alignment durations tile the covered interval", "[transcript]") {
    testutil::TempDir dir("align");
    const auto path = testutil::write(dir, "t.csv",
                                      "token,start_sec,end_sec\n"
                                      "a,0.0,0.5\nSIL,0.5,1.5\nb,1.5,2.0\n");
    const auto tokens = parse_alignment(path);
    double total = 0;
    for (const auto& t : tokens) total += t.duration();
    CHECK(total == Catch::Approx(tokens.back().end - tokens.front().start));
}

TEST_CASE("alignment round-trips through save", "[transcript]") {
    testutil::TempDir dir("align");
    const std::vector<AlignedToken> tokens = {{"the", 0.0, 0.42}, {"SIL", 0.42, 1.0}, {"boy", 1.0, 1.25}};
    save_alignment(tokens, dir.file("rt.csv"));
    CHECK(parse_alignment(dir.file("rt.csv")) == tokens);
}
