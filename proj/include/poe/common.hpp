#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace poe {

// Error categories map 1:1 onto CLI exit codes.
enum class ErrorKind : int {
    usage = 2,       // bad flags, bad arguments, violated preconditions
    data = 3,        // malformed input data (JSONL schema, empty corpus, ...)
    checkpoint = 4,  // checkpoint magic/version/shape problems
    numeric = 5,     // NaN/Inf or other numerical failure
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const { return kind_; }
    int exit_code() const { return static_cast<int>(kind_); }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

inline void require(bool condition, ErrorKind kind, const std::string& message) {
    if (!condition) {
        fail(kind, message);
    }
}

// FNV-1a, used for content hashes in manifests and determinism checks.
inline std::uint64_t fnv1a_bytes(const void* data, std::size_t len, std::uint64_t seed = 14695981039346656037ull) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= bytes[i];
        h *= 1099511628211ull;
    }
    return h;
}

inline std::uint64_t fnv1a(std::string_view text, std::uint64_t seed = 14695981039346656037ull) {
    return fnv1a_bytes(text.data(), text.size(), seed);
}

inline std::string hex64(std::uint64_t value) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[value & 0xf];
        value >>= 4;
    }
    return out;
}

}  // namespace poe
