#include "core/time_util.hpp"

#include <cstdio>

namespace evad {

namespace {

constexpr std::int64_t kUsPerSecond = 1'000'000;
constexpr std::int64_t kUsPerDay = 86'400 * kUsPerSecond;

// Civil <-> day-count conversions (Howard Hinnant's algorithms, public domain).
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, std::int64_t& y, unsigned& m, unsigned& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t yr = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = doy - (153 * mp + 2) / 5 + 1;
    m = mp < 10 ? mp + 3 : mp - 9;
    y = m <= 2 ? yr + 1 : yr;
}

bool is_leap(std::int64_t y) { return y % 4 == 0 && (y % 100 != 0 || y % 400 == 0); }

unsigned days_in_month(std::int64_t y, unsigned m) {
    static constexpr unsigned lengths[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (m == 2 && is_leap(y)) return 29;
    return lengths[m - 1];
}

bool read_digits(std::string_view s, std::size_t pos, std::size_t count, std::int64_t& out) {
    if (pos + count > s.size()) return false;
    std::int64_t v = 0;
    for (std::size_t i = 0; i < count; ++i) {
        const char c = s[pos + i];
        if (c < '0' || c > '9') return false;
        v = v * 10 + (c - '0');
    }
    out = v;
    return true;
}

}  // namespace

std::optional<Timestamp> parse_rfc3339(std::string_view text) {
    std::int64_t year, month, day, hour, minute, second;
    if (!read_digits(text, 0, 4, year)) return std::nullopt;
    if (text.size() < 20 || text[4] != '-' || text[7] != '-') return std::nullopt;
    if (!read_digits(text, 5, 2, month) || !read_digits(text, 8, 2, day)) return std::nullopt;
    if (text[10] != 'T' && text[10] != 't') return std::nullopt;
    if (!read_digits(text, 11, 2, hour)) return std::nullopt;
    if (text[13] != ':' || text[16] != ':') return std::nullopt;
    if (!read_digits(text, 14, 2, minute) || !read_digits(text, 17, 2, second)) return std::nullopt;

    std::size_t pos = 19;
    std::int64_t micros = 0;
    if (pos < text.size() && text[pos] == '.') {
        ++pos;
        std::size_t digits = 0;
        std::int64_t scale = 100'000;
        while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') {
            if (digits < 6) {
                micros += (text[pos] - '0') * scale;
                scale /= 10;
            }
            ++digits;
            ++pos;
        }
        if (digits == 0 || digits > 9) return std::nullopt;
    }
    if (pos + 1 != text.size() || (text[pos] != 'Z' && text[pos] != 'z')) return std::nullopt;

    if (month < 1 || month > 12) return std::nullopt;
    if (day < 1 || day > days_in_month(year, static_cast<unsigned>(month))) return std::nullopt;
    if (hour > 23 || minute > 59 || second > 59) return std::nullopt;

    const std::int64_t days = days_from_civil(year, static_cast<unsigned>(month), static_cast<unsigned>(day));
    const std::int64_t secs = ((days * 24 + hour) * 60 + minute) * 60 + second;
    return secs * kUsPerSecond + micros;
}

std::string format_rfc3339(Timestamp t) {
    std::int64_t days = t / kUsPerDay;
    std::int64_t rem = t % kUsPerDay;
    if (rem < 0) {
        rem += kUsPerDay;
        --days;
    }
    std::int64_t year;
    unsigned month, day;
    civil_from_days(days, year, month, day);
    const std::int64_t micros = rem % kUsPerSecond;
    std::int64_t secs = rem / kUsPerSecond;
    const int hour = static_cast<int>(secs / 3600);
    const int minute = static_cast<int>((secs / 60) % 60);
    const int second = static_cast<int>(secs % 60);

    char buf[48];
    int n = std::snprintf(buf, sizeof(buf), "%04lld-%02u-%02uT%02d:%02d:%02d",
                          static_cast<long long>(year), month, day, hour, minute, second);
    std::string out(buf, static_cast<std::size_t>(n));
    if (micros != 0) {
        char frac[16];
        std::snprintf(frac, sizeof(frac), ".%06lld", static_cast<long long>(micros));
        std::string f(frac);
        while (f.back() == '0') f.pop_back();
        out += f;
    }
    out += 'Z';
    return out;
}

}  // namespace evad
