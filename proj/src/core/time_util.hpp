#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace evad {

// Microseconds since the Unix epoch, UTC.
using Timestamp = std::int64_t;

// Parses RFC 3339 UTC: "2024-01-05T10:30:00Z", optional fractional seconds
// (up to 9 digits, truncated past microseconds). The 'Z' designator is
// required; numeric offsets are rejected. Returns nullopt on malformation.
std::optional<Timestamp> parse_rfc3339(std::string_view text);

// Formats as RFC 3339 UTC. Fractional seconds are emitted only when nonzero,
// with trailing zeros trimmed, so parse(format(t)) == t.
std::string format_rfc3339(Timestamp t);

}  // namespace evad
