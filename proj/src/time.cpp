#include "calltopics/time.hpp"

#include <charconv>
#include <cstdio>

#include "calltopics/error.hpp"

namespace calltopics {

namespace {

int parse_fixed(std::string_view text, std::size_t pos, std::size_t len, std::string_view whole) {
    int value = 0;
    auto piece = text.substr(pos, len);
    auto [ptr, ec] = std::from_chars(piece.data(), piece.data() + piece.size(), value);
    if (ec != std::errc{} || ptr != piece.data() + piece.size())
        throw ParameterError("malformed date/time: '" + std::string(whole) + "'");
    return value;
}

}  // namespace

Date parse_date(std::string_view text) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-')
        throw ParameterError("expected YYYY-MM-DD, got '" + std::string(text) + "'");
    using namespace std::chrono;
    year_month_day ymd{year{parse_fixed(text, 0, 4, text)},
                       month{static_cast<unsigned>(parse_fixed(text, 5, 2, text))},
                       day{static_cast<unsigned>(parse_fixed(text, 8, 2, text))}};
    if (!ymd.ok()) throw ParameterError("invalid calendar date '" + std::string(text) + "'");
    return sys_days{ymd};
}

std::string format_date(Date date) {
    using namespace std::chrono;
    year_month_day ymd{date};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

Timestamp parse_timestamp(std::string_view text) {
    if (text.size() == 10) return start_of(parse_date(text));
    if (text.size() != 20 || text[10] != 'T' || text[13] != ':' || text[16] != ':' || text[19] != 'Z')
        throw ParameterError("expected YYYY-MM-DDTHH:MM:SSZ, got '" + std::string(text) + "'");
    Date date = parse_date(text.substr(0, 10));
    int h = parse_fixed(text, 11, 2, text);
    int m = parse_fixed(text, 14, 2, text);
    int s = parse_fixed(text, 17, 2, text);
    if (h > 23 || m > 59 || s > 59) throw ParameterError("invalid time of day in '" + std::string(text) + "'");
    return start_of(date) + std::chrono::hours{h} + std::chrono::minutes{m} + std::chrono::seconds{s};
}

std::string format_timestamp(Timestamp ts) {
    using namespace std::chrono;
    auto day = floor<days>(ts);
    hh_mm_ss<seconds> tod{ts - day};
    char buf[64];
    std::snprintf(buf, sizeof buf, "T%02d:%02d:%02dZ", static_cast<int>(tod.hours().count()),
                  static_cast<int>(tod.minutes().count()), static_cast<int>(tod.seconds().count()));
    return format_date(day) + buf;
}

FiscalQuarter FiscalQuarter::parse(std::string_view text) {
    if (text.size() != 6 || (text[4] != 'Q' && text[4] != 'q'))
        throw ParameterError("expected fiscal quarter YYYYQn, got '" + std::string(text) + "'");
    int year = parse_fixed(text, 0, 4, text);
    int quarter = parse_fixed(text, 5, 1, text);
    if (year < 1900 || year > 2100 || quarter < 1 || quarter > 4)
        throw ParameterError("fiscal quarter out of range: '" + std::string(text) + "'");
    return {year, quarter};
}

std::string FiscalQuarter::str() const {
    return std::to_string(year) + "Q" + std::to_string(quarter);
}

}  // namespace calltopics
