#pragma once

#include <charconv>
#include <cstdio>
#include <string>

namespace moluq {

// Shortest round-trip decimal form. All doubles written to run artifacts go
// through here so that reruns are byte-identical.
inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace moluq
