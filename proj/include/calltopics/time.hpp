#pragma once

#include <chrono>
#include <compare>
#include <string>
#include <string_view>

namespace calltopics {

using Date = std::chrono::sys_days;
using Timestamp = std::chrono::sys_seconds;

/// Parses "YYYY-MM-DD". Throws ParameterError on anything else.
Date parse_date(std::string_view text);
std::string format_date(Date date);

/// Parses "YYYY-MM-DDTHH:MM:SSZ" (a bare date is accepted as midnight UTC).
Timestamp parse_timestamp(std::string_view text);
std::string format_timestamp(Timestamp ts);

inline Timestamp start_of(Date date) { return Timestamp{date}; }

/// A fiscal quarter written "YYYYQn".
struct FiscalQuarter {
    int year = 1900;
    int quarter = 1;

    static FiscalQuarter parse(std::string_view text);
    std::string str() const;

    /// Consecutive quarters have consecutive ordinals.
    int ordinal() const { return year * 4 + (quarter - 1); }
    static FiscalQuarter from_ordinal(int ordinal) { return {ordinal / 4, ordinal % 4 + 1}; }
    FiscalQuarter next() const { return from_ordinal(ordinal() + 1); }

    friend auto operator<=>(const FiscalQuarter&, const FiscalQuarter&) = default;
};

}  // namespace calltopics
