#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace minimr {

// A calendar day. Stored as plain fields; rendered as ISO-8601 YYYY-MM-DD.
struct Date {
    int year = 1970;
    unsigned month = 1;  // 1..12
    unsigned day = 1;    // 1..days_in_month

    auto operator<=>(const Date&) const = default;

    bool valid() const;
    std::string to_string() const;

    // Parses strict `YYYY-MM-DD`. Throws ParseError on malformed text or an
    // impossible calendar day.
    static Date parse(std::string_view text);

    // Days since 1970-01-01 (may be negative). Used for uniform sampling
    // over a date range.
    std::int64_t to_epoch_days() const;
    static Date from_epoch_days(std::int64_t days);
};

}  // namespace minimr
