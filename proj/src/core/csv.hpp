#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace evad {

// Record-oriented CSV reader. Understands quoted fields with "" escapes and
// embedded newlines; tolerates \r\n line endings.
class CsvReader {
public:
    explicit CsvReader(std::istream& in) : in_(in) {}

    // Reads one record into `fields`; returns false at end of input.
    // Throws FormatError on an unterminated quoted field.
    bool next(std::vector<std::string>& fields);

    // 1-based line number where the last record started.
    std::size_t line() const { return record_line_; }

private:
    std::istream& in_;
    std::size_t line_ = 1;
    std::size_t record_line_ = 1;
};

// Quotes a field only when it contains a comma, quote, CR or LF.
std::string csv_escape(std::string_view field);

// Joins pre-escaped or raw fields into one CSV line (no trailing newline).
std::string csv_join(const std::vector<std::string>& fields);

// Shortest round-trip decimal form (std::to_chars).
std::string format_double(double v);

// Strict full-string parse; accepts "inf"/"nan" spellings, which callers
// reject later via finiteness checks.
std::optional<double> parse_double(std::string_view text);

}  // namespace evad
