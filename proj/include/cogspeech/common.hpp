#pragma once

#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace cogspeech {

// Errors carry a stable machine-readable class token as the first word of
// what(), e.g. "parse: manifest.csv:12: mmse out of range". The CLI prints
// this line verbatim and maps the class to its exit status.
class Error : public std::runtime_error {
public:
    Error(std::string cls, const std::string& msg)
        : std::runtime_error(cls + ": " + msg), cls_(std::move(cls)) {}
    const std::string& error_class() const noexcept { return cls_; }

private:
    std::string cls_;
};

struct ParseError : Error {
    explicit ParseError(const std::string& m) : Error("parse", m) {}
};
struct DataError : Error {
    explicit DataError(const std::string& m) : Error("data", m) {}
};
struct ConfigError : Error {
    explicit ConfigError(const std::string& m) : Error("config", m) {}
};
struct TrainError : Error {
    explicit TrainError(const std::string& m) : Error("train", m) {}
};
struct IoError : Error {
    explicit IoError(const std::string& m) : Error("io", m) {}
};

enum class LogLevel { Debug = 0, Info = 1, Warn = 2, Err = 3, Silent = 4 };

namespace detail {

inline LogLevel parse_log_level(const char* s) {
    if (!s) return LogLevel::Info;
    std::string_view v(s);
    if (v == "debug") return LogLevel::Debug;
    if (v == "info") return LogLevel::Info;
    if (v == "warn") return LogLevel::Warn;
    if (v == "error") return LogLevel::Err;
    if (v == "silent") return LogLevel::Silent;
    return LogLevel::Info;
}

inline LogLevel& log_threshold() {
    static LogLevel lvl = parse_log_level(std::getenv("COGSPEECH_LOG"));
    return lvl;
}

using LogSink = std::function<void(LogLevel, const std::string&)>;

inline LogSink& log_sink() {
    static LogSink sink;  // empty -> stderr
    return sink;
}

inline std::mutex& log_mutex() {
    static std::mutex m;
    return m;
}

inline std::atomic<std::size_t>& warn_counter() {
    static std::atomic<std::size_t> n{0};
    return n;
}

inline void log(LogLevel lvl, std::string_view tag, const std::string& msg) {
    if (lvl == LogLevel::Warn) warn_counter().fetch_add(1);
    if (lvl < log_threshold()) return;
    std::lock_guard<std::mutex> lock(log_mutex());
    if (log_sink()) {
        log_sink()(lvl, msg);
    } else {
        std::cerr << "[" << tag << "] " << msg << "\n";
    }
}

}  // namespace detail

inline void set_log_level(LogLevel lvl) { detail::log_threshold() = lvl; }
inline void set_log_sink(detail::LogSink sink) { detail::log_sink() = std::move(sink); }
inline std::size_t warning_count() { return detail::warn_counter().load(); }

inline void log_debug(const std::string& msg) { detail::log(LogLevel::Debug, "debug", msg); }
inline void log_info(const std::string& msg) { detail::log(LogLevel::Info, "info", msg); }
inline void log_warn(const std::string& msg) { detail::log(LogLevel::Warn, "warn", msg); }
inline void log_error(const std::string& msg) { detail::log(LogLevel::Err, "error", msg); }

// Runs fn(i) for i in [0, n) on up to `jobs` threads. Work is claimed by
// atomic counter; callers must make fn(i) independent and write only to
// slot i of any shared output.
inline void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& fn) {
    if (n == 0) return;
    if (jobs <= 1 || n == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    unsigned count = std::min<std::size_t>(jobs, n);
    std::vector<std::exception_ptr> errors(count);
    for (unsigned t = 0; t < count; ++t) {
        workers.emplace_back([&, t] {
            try {
                for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
            } catch (...) {
                errors[t] = std::current_exception();
                next.store(n);
            }
        });
    }
    for (auto& w : workers) w.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

inline unsigned default_jobs() {
    if (const char* env = std::getenv("COGSPEECH_JOBS")) {
        long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<unsigned>(v);
    }
    return 1;
}

}  // namespace cogspeech
