#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "core/types.hpp"

namespace evad {

// Machine-readable reasons attached to rejected sessions.
namespace drop_reason {
inline constexpr const char* missing_signal = "missing_signal";
inline constexpr const char* too_short = "too_short";
inline constexpr const char* non_finite_value = "non_finite_value";
inline constexpr const char* timestamp_disorder = "timestamp_disorder";
inline constexpr const char* missing_metadata_field = "missing_metadata_field";
inline constexpr const char* missing_metadata = "missing_metadata";
inline constexpr const char* invalid_metadata = "invalid_metadata";
inline constexpr const char* invalid_signal = "invalid_signal";
inline constexpr const char* empty_intersection = "empty_intersection";
}  // namespace drop_reason

struct ParseResult {
    std::vector<SessionRecord> sessions;  // valid sessions, metadata file order
    std::vector<DropReport> dropped;      // one report per rejected session
};

// Reads the two-file corpus format (see README). Sessions failing validation
// are dropped with a reason; file-level problems throw: unreadable file,
// malformed header, duplicate session_id in the metadata file.
ParseResult parse_sessions(const std::string& meta_path, const std::string& signals_path);

// Inner join of the two series on exact timestamps; no interpolation.
// Throws ValidationError when the grids are disjoint.
std::pair<SignalSeries, SignalSeries> align_signals(const SignalSeries& power,
                                                    const SignalSeries& temperature);

void write_sessions_csv(std::span<const SessionRecord> sessions, const std::string& meta_path,
                        const std::string& signals_path);

// JSON Lines, one {"session_id":...,"reason":...} object per rejected session.
void write_drop_report(std::span<const DropReport> dropped, const std::string& path);

}  // namespace evad
