#include "lifestyles/features.hpp"

#include <algorithm>
#include <fstream>
#include <limits>

#include "lifestyles/parallel.hpp"
#include "lifestyles/text.hpp"

namespace lifestyles {

namespace {

constexpr std::array<int, 4> kMorning = {6, 7, 8, 9};
constexpr std::array<int, 4> kNoon = {10, 11, 12, 13};
constexpr std::array<int, 4> kEvening = {18, 19, 20, 21};
constexpr std::array<int, 4> kNight = {22, 23, 0, 1};

double window_sum(const std::array<double, 24>& kwh, const std::array<int, 4>& hours) {
    double s = 0.0;
    for (int h : hours) s += kwh[static_cast<std::size_t>(h)];
    return s;
}

}  // namespace

FeatureVector extract_features(const std::vector<ReadingDay>& days) {
    if (days.empty()) throw DomainError("no readings to extract features from");

    FeatureVector f;
    const double n = static_cast<double>(days.size());
    std::size_t ratio_days = 0;

    for (const auto& day : days) {
        double total = 0.0, peak = 0.0, low = std::numeric_limits<double>::infinity();
        int peak_hour = 0;
        for (int h = 0; h < 24; ++h) {
            double v = day.kwh[static_cast<std::size_t>(h)];
            total += v;
            if (v > peak) {
                peak = v;
                peak_hour = h;
            }
            low = std::min(low, v);
        }
        std::array<double, 24> sorted = day.kwh;
        std::nth_element(sorted.begin(), sorted.begin() + 2, sorted.end());
        double base = (sorted[0] + sorted[1] + sorted[2]) / 3.0;
        double morning = window_sum(day.kwh, kMorning);
        double noon = window_sum(day.kwh, kNoon);
        double evening = window_sum(day.kwh, kEvening);
        double night = window_sum(day.kwh, kNight);

        f.e_day += total;
        f.e_hour += total / 24.0;
        f.e_peak += peak;
        f.e_base += base;
        f.e_min += low;
        f.e_morning += morning;
        f.e_noon += noon;
        f.e_evening += evening;
        f.e_night += night;
        f.e_wholeday += total;
        f.pi[static_cast<std::size_t>(peak_hour)] += 1.0;

        if (total == 0.0) {
            ++f.zero_day_skips;
            continue;
        }
        ++ratio_days;
        f.r_base += base / total;
        f.r_min2max += low / peak;
        f.r_m2w += morning / total;
        f.r_n2w += noon / total;
        f.r_e2w += evening / total;
        f.r_ni2w += night / total;
    }

    f.e_day /= n;
    f.e_hour /= n;
    f.e_peak /= n;
    f.e_base /= n;
    f.e_min /= n;
    f.e_morning /= n;
    f.e_noon /= n;
    f.e_evening /= n;
    f.e_night /= n;
    f.e_wholeday /= n;
    for (auto& p : f.pi) p /= n;
    if (ratio_days > 0) {
        const double rn = static_cast<double>(ratio_days);
        f.r_base /= rn;
        f.r_min2max /= rn;
        f.r_m2w /= rn;
        f.r_n2w /= rn;
        f.r_e2w /= rn;
        f.r_ni2w /= rn;
    }
    return f;
}

const std::vector<std::string>& feature_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> n = {"e_day",  "e_hour",    "e_peak", "e_base", "e_min",
                                      "e_morning", "e_noon", "e_evening", "e_night", "e_wholeday",
                                      "r_base", "r_min2max", "r_m2w",  "r_n2w",  "r_e2w", "r_ni2w"};
        for (int h = 0; h < 24; ++h) n.push_back("pi_" + std::to_string(h));
        return n;
    }();
    return names;
}

std::vector<double> to_row(const FeatureVector& f) {
    std::vector<double> row = {f.e_day,  f.e_hour,    f.e_peak, f.e_base, f.e_min,
                               f.e_morning, f.e_noon, f.e_evening, f.e_night, f.e_wholeday,
                               f.r_base, f.r_min2max, f.r_m2w,  f.r_n2w,  f.r_e2w, f.r_ni2w};
    row.insert(row.end(), f.pi.begin(), f.pi.end());
    return row;
}

FeatureMatrix feature_matrix(const Dataset& data) {
    FeatureMatrix m;
    m.household_ids.resize(data.households.size());
    m.rows.resize(data.households.size());
    parallel_for(data.households.size(), [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            m.household_ids[i] = data.households[i].id;
            m.rows[i] = to_row(extract_features(data.households[i].days));
        }
    });
    return m;
}

std::vector<std::vector<double>> minmax_scale(const std::vector<std::vector<double>>& rows) {
    auto scaled = rows;
    if (rows.empty()) return scaled;
    const std::size_t cols = rows.front().size();
    for (std::size_t c = 0; c < cols; ++c) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        for (const auto& r : rows) {
            lo = std::min(lo, r[c]);
            hi = std::max(hi, r[c]);
        }
        double range = hi - lo;
        for (auto& r : scaled) r[c] = range > 0.0 ? (r[c] - lo) / range : 0.0;
    }
    return scaled;
}

void save_features(const FeatureMatrix& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write '" + path + "'");
    out << "household_id";
    for (const auto& n : feature_names()) out << ',' << n;
    out << '\n';
    for (std::size_t i = 0; i < m.rows.size(); ++i) {
        out << m.household_ids[i];
        for (double v : m.rows[i]) out << ',' << format_double(v);
        out << '\n';
    }
}

FeatureMatrix load_features(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");
    std::string line;
    long lineno = 0;
    if (!std::getline(in, line)) throw ParseError("empty features file");
    ++lineno;
    auto header = split(trim(line), ',');
    if (header.size() != kFeatureCount + 1 || header[0] != "household_id")
        throw ParseError("bad features header", lineno);

    FeatureMatrix m;
    while (std::getline(in, line)) {
        ++lineno;
        auto row = trim(line);
        if (row.empty()) continue;
        auto cols = split(row, ',');
        if (cols.size() != kFeatureCount + 1) throw ParseError("bad features row", lineno);
        m.household_ids.emplace_back(cols[0]);
        std::vector<double> r(kFeatureCount);
        for (std::size_t c = 0; c < kFeatureCount; ++c) r[c] = parse_double(cols[c + 1], lineno);
        m.rows.push_back(std::move(r));
    }
    return m;
}

}  // namespace lifestyles
