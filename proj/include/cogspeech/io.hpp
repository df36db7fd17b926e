#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "cogspeech/common.hpp"

namespace cogspeech {

namespace fs = std::filesystem;

inline std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text_file(const fs::path& path, std::string_view content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << content;
    if (!out) throw IoError("short write to " + path.string());
}

// Plain delimiter split, no quoting; fields must not contain the delimiter.
inline std::vector<std::string> split_fields(std::string_view line, char delim = ',') {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(delim, start);
        if (pos == std::string_view::npos) {
            out.emplace_back(line.substr(start));
            break;
        }
        out.emplace_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline double parse_double_strict(std::string_view field, const std::string& where) {
    const std::string_view t = trim(field);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (ec != std::errc{} || ptr != t.data() + t.size())
        throw ParseError(where + ": not a number: '" + std::string(field) + "'");
    return value;
}

inline long parse_int_strict(std::string_view field, const std::string& where) {
    const std::string_view t = trim(field);
    long value = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (ec != std::errc{} || ptr != t.data() + t.size())
        throw ParseError(where + ": not an integer: '" + std::string(field) + "'");
    return value;
}

inline std::string fmt_fixed(double v, int precision) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", precision, v);
    return buf;
}

// shortest round-trip representation
inline std::string fmt_full(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

// Lines of a delimited file with 1-based line numbers; skips nothing,
// callers decide what a header is. Trailing '\n' does not produce an
// empty final row.
struct DelimitedFile {
    fs::path path;
    std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;
};

inline DelimitedFile read_delimited(const fs::path& path, char delim = ',') {
    DelimitedFile out;
    out.path = path;
    const std::string text = read_text_file(path);
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        if (start == text.size()) {
            break;
        }
        std::size_t end = text.find('\n', start);
        if (end == std::string::npos) end = text.size();
        ++line_no;
        std::string_view line(text.data() + start, end - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (!line.empty()) out.rows.emplace_back(line_no, split_fields(line, delim));
        start = end + 1;
    }
    return out;
}

inline std::string row_context(const fs::path& path, std::size_t line_no) {
    return path.filename().string() + ":" + std::to_string(line_no);
}

}  // namespace cogspeech
