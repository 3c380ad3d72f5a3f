#pragma once

#include <array>
#include <string>
#include <vector>

#include "lifestyles/data.hpp"

namespace lifestyles {

// Per-household load features in kWh and dimensionless daily ratios. The
// energy fields are means of per-day quantities; the ratio fields are means
// of per-day ratios. pi is the normalized peak-hour histogram.
struct FeatureVector {
    double e_day = 0.0;       // daily total
    double e_hour = 0.0;      // hourly mean
    double e_peak = 0.0;      // daily max hour
    double e_base = 0.0;      // mean of the 3 smallest hours of a day
    double e_min = 0.0;       // daily min hour
    double e_morning = 0.0;   // hours 6-9
    double e_noon = 0.0;      // hours 10-13
    double e_evening = 0.0;   // hours 18-21
    double e_night = 0.0;     // hours 22,23,0,1 of the same day
    double e_wholeday = 0.0;  // all 24 hours
    double r_base = 0.0;      // E_base / E_day
    double r_min2max = 0.0;   // E_min / E_peak
    double r_m2w = 0.0;       // E_morning / E_wholeday
    double r_n2w = 0.0;       // E_noon / E_wholeday
    double r_e2w = 0.0;       // E_evening / E_wholeday
    double r_ni2w = 0.0;      // E_night / E_wholeday
    std::array<double, 24> pi{};  // peak-hour frequency, ties to the earliest hour
    std::size_t zero_day_skips = 0;  // days excluded from the ratio means
};

constexpr std::size_t kFeatureCount = 40;

FeatureVector extract_features(const std::vector<ReadingDay>& days);

// Fixed column order: the 10 energy means, the 6 ratio means, then pi_0..pi_23.
const std::vector<std::string>& feature_names();

std::vector<double> to_row(const FeatureVector& f);

struct FeatureMatrix {
    std::vector<std::string> household_ids;
    std::vector<std::vector<double>> rows;  // n x 40
};

FeatureMatrix feature_matrix(const Dataset& data);

// Per-column min-max scaling onto [0,1]; constant columns map to 0.
std::vector<std::vector<double>> minmax_scale(const std::vector<std::vector<double>>& rows);

void save_features(const FeatureMatrix& m, const std::string& path);
FeatureMatrix load_features(const std::string& path);

}  // namespace lifestyles
