#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "cogspeech/common.hpp"
#include "cogspeech/io.hpp"

namespace cogspeech {

// A speech interval from voice activity detection.
struct VadSegment {
    double start = 0.0;
    double end = 0.0;

    double duration() const { return end - start; }
    bool operator==(const VadSegment&) const = default;
};

struct VadTrack {
    std::vector<VadSegment> segments;
    double total_duration = 0.0;
};

// Fixed component order of the 10-dimensional silence feature vector.
enum SilenceIndex : std::size_t {
    kSilCountPerSec = 0,
    kSilToSpeechRatio = 1,
    kSilMax = 2,
    kSilMin = 3,
    kSilMean = 4,
    kSilStd = 5,
    kSpeechMax = 6,
    kSpeechMin = 7,
    kSpeechMean = 8,
    kSpeechStd = 9,
};

using SilenceVector = std::array<double, 10>;

namespace detail {

// max, min, mean, population std; zeros for an empty set
inline std::array<double, 4> duration_stats(std::span<const double> values) {
    if (values.empty()) return {0.0, 0.0, 0.0, 0.0};
    double mx = values[0], mn = values[0], sum = 0.0;
    for (const double v : values) {
        mx = std::max(mx, v);
        mn = std::min(mn, v);
        sum += v;
    }
    const double mean = sum / static_cast<double>(values.size());
    double ss = 0.0;
    for (const double v : values) ss += (v - mean) * (v - mean);
    const double std_dev = std::sqrt(ss / static_cast<double>(values.size()));
    return {mx, mn, mean, std_dev};
}

}  // namespace detail

// Silences are the gaps between consecutive speech segments; regions
// before the first and after the last segment are excluded, consistent
// with pause-encoder trimming. count_per_sec is per second of the whole
// recording window [window_start, window_start + total_duration]; ratio
// is total silence over total speech.
inline SilenceVector silence_vector(std::span<const VadSegment> segments, double total_duration,
                                    double window_start = 0.0) {
    if (segments.empty()) throw DataError("silence_vector: no speech segments");
    for (std::size_t i = 0; i < segments.size(); ++i) {
        if (segments[i].end <= segments[i].start)
            throw DataError("silence_vector: segment " + std::to_string(i) + " has non-positive duration");
        if (i > 0 && segments[i].start < segments[i - 1].end - 1e-12)
            throw DataError("silence_vector: segment " + std::to_string(i) + " overlaps previous");
    }
    if (segments.front().start < window_start - 1e-9)
        throw DataError("silence_vector: first segment starts before the window");
    if (window_start + total_duration < segments.back().end - 1e-9)
        throw DataError("silence_vector: total duration " + fmt_full(total_duration) +
                        " shorter than coverage " + fmt_full(segments.back().end - window_start));

    std::vector<double> silences;
    std::vector<double> speeches;
    speeches.reserve(segments.size());
    for (std::size_t i = 0; i < segments.size(); ++i) {
        speeches.push_back(segments[i].duration());
        if (i > 0) {
            const double gap = segments[i].start - segments[i - 1].end;
            if (gap > 1e-12) silences.push_back(gap);
        }
    }

    double sil_total = 0.0, sp_total = 0.0;
    for (const double v : silences) sil_total += v;
    for (const double v : speeches) sp_total += v;

    const auto sil_stats = detail::duration_stats(silences);
    const auto sp_stats = detail::duration_stats(speeches);

    SilenceVector out{};
    out[kSilCountPerSec] = static_cast<double>(silences.size()) / total_duration;
    out[kSilToSpeechRatio] = sil_total / sp_total;
    out[kSilMax] = sil_stats[0];
    out[kSilMin] = sil_stats[1];
    out[kSilMean] = sil_stats[2];
    out[kSilStd] = sil_stats[3];
    out[kSpeechMax] = sp_stats[0];
    out[kSpeechMin] = sp_stats[1];
    out[kSpeechMean] = sp_stats[2];
    out[kSpeechStd] = sp_stats[3];
    return out;
}

inline SilenceVector silence_vector(const VadTrack& track) {
    return silence_vector(std::span<const VadSegment>(track.segments), track.total_duration);
}

// ---------------------------------------------------------------------------
// VAD file: line 1 "# total_duration_sec=<seconds>", line 2 the column
// header "start_sec,end_sec", then one row per speech segment.
// ---------------------------------------------------------------------------

inline VadTrack parse_vad(const fs::path& path) {
    const DelimitedFile file = read_delimited(path);
    if (file.rows.size() < 2) throw ParseError(path.string() + ": missing VAD header lines");

    const auto& [meta_line, meta] = file.rows[0];
    constexpr std::string_view kPrefix = "# total_duration_sec=";
    if (meta.size() != 1 || meta[0].rfind(kPrefix, 0) != 0)
        throw ParseError(row_context(path, meta_line) + ": expected '" + std::string(kPrefix) + "<seconds>'");
    VadTrack track;
    track.total_duration =
        parse_double_strict(std::string_view(meta[0]).substr(kPrefix.size()), row_context(path, meta_line));

    const auto& [header_line, header] = file.rows[1];
    if (header != std::vector<std::string>{"start_sec", "end_sec"})
        throw ParseError(row_context(path, header_line) + ": bad VAD column header");

    for (std::size_t r = 2; r < file.rows.size(); ++r) {
        const auto& [line_no, fields] = file.rows[r];
        const std::string where = row_context(path, line_no);
        if (fields.size() != 2) throw ParseError(where + ": expected 2 fields");
        VadSegment seg;
        seg.start = parse_double_strict(fields[0], where);
        seg.end = parse_double_strict(fields[1], where);
        if (seg.end <= seg.start) throw ParseError(where + ": end <= start");
        if (!track.segments.empty() && seg.start < track.segments.back().end - 1e-9)
            throw ParseError(where + ": segment overlaps previous");
        track.segments.push_back(seg);
    }
    return track;
}

inline void save_vad(const VadTrack& track, const fs::path& path) {
    std::string out = "# total_duration_sec=" + fmt_fixed(track.total_duration, 3) + "\n";
    out += "start_sec,end_sec\n";
    for (const auto& seg : track.segments)
        out += fmt_fixed(seg.start, 3) + "," + fmt_fixed(seg.end, 3) + "\n";
    write_text_file(path, out);
}

}  // namespace cogspeech
