#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cogspeech/common.hpp"
#include "cogspeech/transcript.hpp"

namespace cogspeech {

// Three-way pause categorization. Both boundary durations (0.5 s and
// 2.0 s) classify as Medium: the medium interval is closed.
enum class PauseClass : std::uint8_t { Short = 0, Medium = 1, Long = 2 };

constexpr double kShortMaxSeconds = 0.5;
constexpr double kLongMinSeconds = 2.0;

// Gaps between words that carry no SIL row still count as pauses at or
// above this length; below it they are treated as aligner jitter.
constexpr double kMinBareGapSeconds = 0.05;

inline std::string_view pause_symbol(PauseClass c) {
    switch (c) {
        case PauseClass::Short: return ",";
        case PauseClass::Medium: return ".";
        case PauseClass::Long: return "...";
    }
    return "?";
}

inline bool is_pause_symbol(std::string_view tok) {
    return tok == "," || tok == "." || tok == "...";
}

inline PauseClass classify_pause(double seconds) {
    if (!(seconds > 0.0)) throw DataError("classify_pause: non-positive duration " + fmt_full(seconds));
    if (seconds < kShortMaxSeconds) return PauseClass::Short;
    if (seconds <= kLongMinSeconds) return PauseClass::Medium;
    return PauseClass::Long;
}

// Pause-encodes an aligned token stream:
//   - leading and trailing pause regions are dropped;
//   - between consecutive words, the whole interval from the first word's
//     end to the next word's start is one pause when it contains a SIL row
//     or is at least kMinBareGapSeconds long;
//   - each pause becomes its class symbol as a standalone token.
// Words pass through in order, so the word subsequence of the output
// equals the word sequence of the input.
inline std::vector<std::string> encode_pauses(std::span<const AlignedToken> tokens) {
    std::vector<std::size_t> words;
    for (std::size_t i = 0; i < tokens.size(); ++i)
        if (!tokens[i].is_sil()) words.push_back(i);

    if (words.empty()) {
        if (!tokens.empty()) log_warn("encode_pauses: input contains only SIL tokens");
        return {};
    }

    std::vector<std::string> out;
    out.push_back(tokens[words[0]].text);
    for (std::size_t w = 1; w < words.size(); ++w) {
        const AlignedToken& prev = tokens[words[w - 1]];
        const AlignedToken& next = tokens[words[w]];
        bool has_sil = false;
        for (std::size_t i = words[w - 1] + 1; i < words[w]; ++i)
            if (tokens[i].is_sil()) has_sil = true;
        const double gap = next.start - prev.end;
        if (has_sil || gap >= kMinBareGapSeconds) out.emplace_back(pause_symbol(classify_pause(gap)));
        out.push_back(next.text);
    }
    return out;
}

inline std::vector<std::string> encode_pauses(const std::vector<AlignedToken>& tokens) {
    return encode_pauses(std::span<const AlignedToken>(tokens));
}

// Pause-encoded transcript file: tokens separated by single spaces.
inline void save_encoded(const std::vector<std::string>& tokens, const fs::path& path) {
    write_text_file(path, join_tokens(tokens) + "\n");
}

inline std::vector<std::string> load_encoded(const fs::path& path) {
    std::vector<std::string> tokens;
    const std::string text = read_text_file(path);
    std::string current;
    for (const char c : text) {
        if (c == ' ' || c == '\n' || c == '\t' || c == '\r') {
            if (!current.empty()) {
                tokens.push_back(current);
                current.clear();
            }
        } else {
            current.push_back(c);
        }
    }
    if (!current.empty()) tokens.push_back(current);
    return tokens;
}

}  // namespace cogspeech
