#include "core/csv.hpp"

#include <charconv>
#include <istream>

#include "core/errors.hpp"

namespace evad {

bool CsvReader::next(std::vector<std::string>& fields) {
    fields.clear();
    record_line_ = line_;

    std::string field;
    bool in_quotes = false;
    bool any = false;

    int ci;
    while ((ci = in_.get()) != std::char_traits<char>::eof()) {
        const char c = static_cast<char>(ci);
        any = true;
        if (in_quotes) {
            if (c == '"') {
                if (in_.peek() == '"') {
                    in_.get();
                    field += '"';
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line_;
                field += c;
            }
            continue;
        }
        switch (c) {
            case '"':
                in_quotes = true;
                break;
            case ',':
                fields.push_back(std::move(field));
                field.clear();
                break;
            case '\r':
                break;
            case '\n':
                ++line_;
                fields.push_back(std::move(field));
                return true;
            default:
                field += c;
        }
    }
    if (in_quotes) throw FormatError("unterminated quoted field at line " + std::to_string(record_line_));
    if (!any) return false;
    fields.push_back(std::move(field));
    return true;
}

std::string csv_escape(std::string_view field) {
    if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
    std::string out;
    out.reserve(field.size() + 2);
    out += '"';
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::string csv_join(const std::vector<std::string>& fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out += ',';
        out += fields[i];
    }
    return out;
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::optional<double> parse_double(std::string_view text) {
    if (text.empty()) return std::nullopt;
    double v = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    if (*first == '+') ++first;  // from_chars rejects a leading plus
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last) return std::nullopt;
    return v;
}

}  // namespace evad
