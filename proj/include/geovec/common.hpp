#pragma once
// Shared small utilities: error types, content hashing, number formatting,
// atomic file writes, structured log lines.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace geovec {

// Usage or configuration problem (CLI exit code 1).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed or inconsistent input data (CLI exit code 2).
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Parse failure with position information (CLI exit code 2).
class ParseError : public DataError {
public:
    ParseError(const std::string& msg, std::size_t offset)
        : DataError(msg + " (at offset " + std::to_string(offset) + ")"), offset_(offset) {}
    explicit ParseError(const std::string& msg) : DataError(msg), offset_(0) {}
    std::size_t offset() const { return offset_; }

private:
    std::size_t offset_;
};

// FNV-1a 64-bit over a byte sequence. Used for config and artifact hashes.
inline std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ull) {
    std::uint64_t h = seed;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::uint64_t fnv1a64_file(const std::filesystem::path& path);

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    static const char* digits = "0123456789abcdef";
    for (int i = 15; i >= 0; --i) {
        buf[15 - i] = digits[(v >> (i * 4)) & 0xf];
    }
    return std::string(buf, 16);
}

// Shortest round-trip decimal form of a double ("1.5", "0.25", "1e-06").
// Canonical: equal doubles format identically.
inline std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s, bool& ok) {
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    ok = res.ec == std::errc() && res.ptr == s.data() + s.size();
    return v;
}

// Writes content to `path` atomically (temp file in the same directory + rename).
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

// Splits on a single character; keeps empty fields.
std::vector<std::string_view> split(std::string_view s, char sep);

// Emits one structured `key=value` log line to stderr.
void log_kv(std::string_view stage, const std::vector<std::pair<std::string, std::string>>& fields);

// SplitMix64 step; used to derive independent RNG streams from (seed, index).
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

}  // namespace geovec
