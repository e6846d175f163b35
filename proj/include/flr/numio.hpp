#pragma once

// Text formatting helpers shared by the CSV / JSON writers.  All floating-point
// output uses the shortest decimal form that round-trips exactly, so rereading
// an emitted file reproduces the in-memory doubles bit for bit.

#include <charconv>
#include <cstdint>
#include <string>
#include <string_view>

#include "flr/errors.hpp"

namespace flr {

/// Shortest round-trip decimal representation of a finite double.
inline std::string fmt_double(double x) {
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    if (res.ec != std::errc())
        throw io_error("cannot format floating-point value");
    return std::string(buf, res.ptr);
}

/// Strict double parse of a whole token (no trailing junk allowed).
inline double parse_double(std::string_view tok) {
    double out = 0.0;
    const char* first = tok.data();
    const char* last = tok.data() + tok.size();
    auto res = std::from_chars(first, last, out);
    if (res.ec != std::errc() || res.ptr != last)
        throw parse_error("bad numeric token '" + std::string(tok) + "'");
    return out;
}

inline long long parse_int(std::string_view tok) {
    long long out = 0;
    auto res = std::from_chars(tok.data(), tok.data() + tok.size(), out);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
        throw parse_error("bad integer token '" + std::string(tok) + "'");
    return out;
}

}  // namespace flr
