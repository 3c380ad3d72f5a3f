#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "lifestyles/error.hpp"

namespace lifestyles {

// Calendar date with civil-day arithmetic; ISO-8601 text form.
struct Date {
    int year = 1970;
    int month = 1;  // 1..12
    int day = 1;    // 1..31

    static Date parse(std::string_view iso, long line = -1);
    static Date from_day_number(std::int64_t n);
    std::int64_t day_number() const;  // days since 1970-01-01
    Date next() const { return from_day_number(day_number() + 1); }
    std::string iso() const;

    friend bool operator==(const Date&, const Date&) = default;
    friend auto operator<=>(const Date& a, const Date& b) {
        return a.day_number() <=> b.day_number();
    }
};

// One household-day of hourly consumption.
struct ReadingDay {
    Date date;
    std::array<double, 24> kwh{};
};

struct Household {
    std::string id;
    std::vector<ReadingDay> days;  // sorted by date, gap-free
};

// All households share an identical, gap-free date range.
struct Dataset {
    std::vector<Household> households;
    Date coverage_begin;
    Date coverage_end;

    std::size_t total_days() const;
    // Sorts days, checks invariants; throws CompletenessError naming the
    // offending household.
    void validate();
};

enum class Season : int { Autumn = 0, Winter = 1, Spring = 2, Summer = 3 };

struct SeasonWindow {
    Season season;
    std::array<int, 3> months;
};

constexpr std::array<const char*, 4> kSeasonNames = {"autumn", "winter", "spring", "summer"};

// Sep-Nov / Dec-Feb / Mar-May / Jun-Aug; the four windows partition the year.
SeasonWindow season_window(Season s);
Season season_of_month(int month);
const char* season_name(Season s);

// Unit-sum daily profile. zero_day marks raw days that summed to zero and
// were mapped to the uniform shape.
struct ShapeVector {
    std::array<double, 24> values{};
    bool zero_day = false;
};

enum class NormalizeMode { sum, none };

ShapeVector normalize_day(const ReadingDay& day, NormalizeMode mode);

// Every ReadingDay lands in exactly one seasonal dataset.
std::array<Dataset, 4> partition_seasons(const Dataset& data);

// Wide-daily CSV: header `household_id,date,h00,...,h23`, ISO dates, UTF-8.
Dataset load_readings(const std::string& path);
void save_readings(const Dataset& data, const std::string& path);

}  // namespace lifestyles
