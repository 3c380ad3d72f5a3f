#include "lifestyles/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <unordered_map>
#include <unordered_set>

#include "lifestyles/text.hpp"

namespace lifestyles {

Date Date::parse(std::string_view iso, long line) {
    if (iso.size() != 10 || iso[4] != '-' || iso[7] != '-')
        throw ParseError("bad date '" + std::string(iso) + "', expected YYYY-MM-DD", line);
    Date d;
    d.year = static_cast<int>(parse_long(iso.substr(0, 4), line));
    d.month = static_cast<int>(parse_long(iso.substr(5, 2), line));
    d.day = static_cast<int>(parse_long(iso.substr(8, 2), line));
    if (d.month < 1 || d.month > 12 || d.day < 1 || d.day > 31)
        throw ParseError("date out of range '" + std::string(iso) + "'", line);
    return d;
}

std::int64_t Date::day_number() const {
    // days_from_civil (proleptic Gregorian)
    std::int64_t y = year;
    y -= month <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * (month + (month > 2 ? -3 : 9)) + 2) / 5 + day - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

Date Date::from_day_number(std::int64_t n) {
    n += 719468;
    const std::int64_t era = (n >= 0 ? n : n - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(n - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    Date d;
    d.day = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    d.month = static_cast<int>(mp + (mp < 10 ? 3 : -9));
    d.year = static_cast<int>(y + (d.month <= 2));
    return d;
}

std::string Date::iso() const {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", year, month, day);
    return buf;
}

std::size_t Dataset::total_days() const {
    std::size_t n = 0;
    for (const auto& h : households) n += h.days.size();
    return n;
}

void Dataset::validate() {
    if (households.empty()) throw CompletenessError("dataset has no households");
    std::unordered_set<std::string> seen;
    for (auto& h : households) {
        if (!seen.insert(h.id).second)
            throw CompletenessError("duplicate household id '" + h.id + "'");
        if (h.days.empty())
            throw CompletenessError("household '" + h.id + "' has no readings");
        std::sort(h.days.begin(), h.days.end(),
                  [](const ReadingDay& a, const ReadingDay& b) { return a.date < b.date; });
        for (std::size_t i = 0; i < h.days.size(); ++i) {
            for (double v : h.days[i].kwh)
                if (!(v >= 0.0) || !std::isfinite(v))
                    throw CompletenessError("household '" + h.id + "' has a negative or non-finite reading on " +
                                            h.days[i].date.iso());
            if (i > 0) {
                auto gap = h.days[i].date.day_number() - h.days[i - 1].date.day_number();
                if (gap == 0)
                    throw CompletenessError("household '" + h.id + "' has duplicate date " +
                                            h.days[i].date.iso());
                if (gap != 1)
                    throw CompletenessError("household '" + h.id + "' has a gap before " +
                                            h.days[i].date.iso());
            }
        }
    }
    coverage_begin = households.front().days.front().date;
    coverage_end = households.front().days.back().date;
    for (const auto& h : households) {
        if (h.days.front().date != coverage_begin || h.days.back().date != coverage_end)
            throw CompletenessError("household '" + h.id + "' does not cover " +
                                    coverage_begin.iso() + ".." + coverage_end.iso());
    }
}

SeasonWindow season_window(Season s) {
    switch (s) {
        case Season::Autumn: return {s, {9, 10, 11}};
        case Season::Winter: return {s, {12, 1, 2}};
        case Season::Spring: return {s, {3, 4, 5}};
        case Season::Summer: return {s, {6, 7, 8}};
    }
    throw ConfigError("bad season");
}

Season season_of_month(int month) {
    switch (month) {
        case 9: case 10: case 11: return Season::Autumn;
        case 12: case 1: case 2: return Season::Winter;
        case 3: case 4: case 5: return Season::Spring;
        case 6: case 7: case 8: return Season::Summer;
    }
    throw ConfigError("bad month " + std::to_string(month));
}

const char* season_name(Season s) { return kSeasonNames[static_cast<int>(s)]; }

ShapeVector normalize_day(const ReadingDay& day, NormalizeMode mode) {
    ShapeVector out;
    for (double v : day.kwh)
        if (!std::isfinite(v)) throw DomainError("non-finite reading on " + day.date.iso());
    if (mode == NormalizeMode::none) {
        out.values = day.kwh;
        return out;
    }
    double sum = 0.0;
    for (double v : day.kwh) sum += v;
    if (sum == 0.0) {
        out.values.fill(1.0 / 24.0);
        out.zero_day = true;
        return out;
    }
    for (std::size_t h = 0; h < 24; ++h) out.values[h] = day.kwh[h] / sum;
    return out;
}

std::array<Dataset, 4> partition_seasons(const Dataset& data) {
    std::array<Dataset, 4> parts;
    for (const auto& h : data.households) {
        std::array<Household, 4> split;
        for (auto& s : split) s.id = h.id;
        for (const auto& d : h.days)
            split[static_cast<int>(season_of_month(d.date.month))].days.push_back(d);
        for (int s = 0; s < 4; ++s)
            if (!split[s].days.empty()) parts[s].households.push_back(std::move(split[s]));
    }
    for (auto& p : parts) {
        for (auto& h : p.households) {
            if (h.days.empty()) continue;
            p.coverage_begin = std::min(p.coverage_begin, h.days.front().date);
            p.coverage_end = std::max(p.coverage_end, h.days.back().date);
        }
        if (!p.households.empty()) {
            p.coverage_begin = p.households.front().days.front().date;
            p.coverage_end = p.households.front().days.back().date;
            for (const auto& h : p.households) {
                for (const auto& d : h.days) {
                    p.coverage_begin = std::min(p.coverage_begin, d.date);
                    p.coverage_end = std::max(p.coverage_end, d.date);
                }
            }
        }
    }
    return parts;
}

Dataset load_readings(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");
    std::string line;
    long lineno = 0;

    if (!std::getline(in, line)) throw ParseError("empty file '" + path + "'");
    ++lineno;
    {
        auto cols = split(trim(line), ',');
        if (cols.size() != 26 || cols[0] != "household_id" || cols[1] != "date")
            throw ParseError("bad header, expected household_id,date,h00,...,h23", lineno);
        for (int h = 0; h < 24; ++h) {
            char want[4];
            std::snprintf(want, sizeof(want), "h%02d", h);
            if (cols[static_cast<std::size_t>(2 + h)] != want)
                throw ParseError(std::string("bad header column, expected ") + want, lineno);
        }
    }

    Dataset data;
    std::unordered_map<std::string, std::size_t> index;
    while (std::getline(in, line)) {
        ++lineno;
        auto row = trim(line);
        if (row.empty()) continue;
        auto cols = split(row, ',');
        if (cols.size() != 26) {
            if (cols.size() < 26)
                throw CompletenessError("row with " + std::to_string(cols.size() - 2) +
                                        " hour columns (need 24) at line " + std::to_string(lineno));
            throw ParseError("expected 26 columns, got " + std::to_string(cols.size()), lineno);
        }
        ReadingDay day;
        std::string id(trim(cols[0]));
        if (id.empty()) throw ParseError("empty household_id", lineno);
        day.date = Date::parse(trim(cols[1]), lineno);
        for (int h = 0; h < 24; ++h) {
            double v = parse_double(trim(cols[static_cast<std::size_t>(2 + h)]), lineno);
            if (!(v >= 0.0) || !std::isfinite(v))
                throw ParseError("negative or non-finite kwh value", lineno);
            day.kwh[static_cast<std::size_t>(h)] = v;
        }
        auto [it, inserted] = index.try_emplace(id, data.households.size());
        if (inserted) data.households.push_back(Household{id, {}});
        data.households[it->second].days.push_back(day);
    }
    data.validate();
    return data;
}

void save_readings(const Dataset& data, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write '" + path + "'");
    out << "household_id,date";
    for (int h = 0; h < 24; ++h) {
        char buf[8];
        std::snprintf(buf, sizeof(buf), ",h%02d", h);
        out << buf;
    }
    out << '\n';
    std::string row;
    for (const auto& h : data.households) {
        for (const auto& d : h.days) {
            row.clear();
            row += h.id;
            row += ',';
            row += d.date.iso();
            for (double v : d.kwh) {
                row += ',';
                row += format_double(v);
            }
            row += '\n';
            out << row;
        }
    }
    if (!out) throw ParseError("write failed for '" + path + "'");
}

}  // namespace lifestyles
