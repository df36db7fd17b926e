#pragma once

#include <cctype>
#include <string>
#include <string_view>
#include <vector>

#include "cogspeech/common.hpp"
#include "cogspeech/io.hpp"

namespace cogspeech {

struct AlignedToken {
    std::string text;  // word or literal "SIL"
    double start = 0.0;
    double end = 0.0;

    bool is_sil() const { return text == "SIL"; }
    double duration() const { return end - start; }
    bool operator==(const AlignedToken&) const = default;
};

struct CleanTranscript {
    std::vector<std::string> tokens;
    std::string source;
    std::size_t annotations_removed = 0;
};

namespace detail {

inline bool is_word_char(unsigned char c) { return std::isalnum(c) || c == '\'' || c == '-'; }

}  // namespace detail

// Removes annotation spans — square-bracket tags "[TAG ...]" and
// parenthesized duration marks "(1.2)" — then drops punctuation,
// lowercases, and normalizes whitespace. Spans do not nest; an
// unbalanced delimiter is an error reported with its byte offset.
inline CleanTranscript strip_annotations(std::string_view raw, std::string source = "") {
    CleanTranscript out;
    out.source = std::move(source);

    enum class State { Outside, Bracket, Paren };
    State state = State::Outside;
    std::size_t open_at = 0;
    std::string current;
    const auto flush = [&] {
        if (!current.empty()) {
            out.tokens.push_back(current);
            current.clear();
        }
    };

    for (std::size_t i = 0; i < raw.size(); ++i) {
        const unsigned char c = static_cast<unsigned char>(raw[i]);
        switch (state) {
            case State::Outside:
                if (c == '[') {
                    state = State::Bracket;
                    open_at = i;
                    flush();
                } else if (c == '(') {
                    state = State::Paren;
                    open_at = i;
                    flush();
                } else if (c == ']' || c == ')') {
                    throw ParseError(out.source + ": unbalanced '" + std::string(1, raw[i]) +
                                     "' at byte " + std::to_string(i));
                } else if (detail::is_word_char(c)) {
                    current.push_back(static_cast<char>(std::tolower(c)));
                } else {
                    flush();  // whitespace and punctuation both end a token
                }
                break;
            case State::Bracket:
                if (c == '[')
                    throw ParseError(out.source + ": nested '[' at byte " + std::to_string(i));
                if (c == ']') {
                    state = State::Outside;
                    ++out.annotations_removed;
                }
                break;
            case State::Paren:
                if (c == '(')
                    throw ParseError(out.source + ": nested '(' at byte " + std::to_string(i));
                if (c == ')') {
                    state = State::Outside;
                    ++out.annotations_removed;
                }
                break;
        }
    }
    if (state != State::Outside)
        throw ParseError(out.source + ": unclosed '" + (state == State::Bracket ? std::string("[") : std::string("(")) +
                         "' at byte " + std::to_string(open_at));
    flush();
    return out;
}

inline std::string join_tokens(const std::vector<std::string>& tokens) {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) out += ' ';
        out += tokens[i];
    }
    return out;
}

// Alignment file: CSV with header token,start_sec,end_sec; pause rows use
// token "SIL". Rows must be time-ordered and non-overlapping.
inline std::vector<AlignedToken> parse_alignment(const fs::path& path) {
    const DelimitedFile file = read_delimited(path);
    if (file.rows.empty()) return {};

    const auto& [header_line, header] = file.rows.front();
    if (header != std::vector<std::string>{"token", "start_sec", "end_sec"})
        throw ParseError(row_context(path, header_line) + ": bad alignment header");

    std::vector<AlignedToken> tokens;
    for (std::size_t r = 1; r < file.rows.size(); ++r) {
        const auto& [line_no, fields] = file.rows[r];
        const std::string where = row_context(path, line_no);
        if (fields.size() != 3)
            throw ParseError(where + ": expected 3 fields, got " + std::to_string(fields.size()));
        AlignedToken tok;
        tok.text = std::string(trim(fields[0]));
        if (tok.text.empty()) throw ParseError(where + ": empty token");
        tok.start = parse_double_strict(fields[1], where);
        tok.end = parse_double_strict(fields[2], where);
        if (tok.start < 0.0) throw ParseError(where + ": negative start time");
        if (tok.end <= tok.start)
            throw ParseError(where + ": end " + fmt_full(tok.end) + " <= start " + fmt_full(tok.start));
        if (!tokens.empty() && tok.start < tokens.back().end - 1e-9)
            throw ParseError(where + ": token overlaps previous (start " + fmt_full(tok.start) +
                             " < previous end " + fmt_full(tokens.back().end) + ")");
        tokens.push_back(std::move(tok));
    }
    return tokens;
}

inline void save_alignment(const std::vector<AlignedToken>& tokens, const fs::path& path) {
    std::string out = "token,start_sec,end_sec\n";
    for (const auto& t : tokens)
        out += t.text + "," + fmt_fixed(t.start, 3) + "," + fmt_fixed(t.end, 3) + "\n";
    write_text_file(path, out);
}

}  // namespace cogspeech
