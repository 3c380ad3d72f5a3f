#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "lifestyles/data.hpp"
#include "lifestyles/lda.hpp"

namespace lifestyles {

// k-means centers in attribute-mixture space, ordered by descending cluster
// size so label 0 is always the most common lifestyle.
struct LifestyleModel {
    std::vector<std::vector<double>> centers;
    std::vector<std::string> names;  // optional cosmetic labels
    double inertia = 0.0;
};

// counts[p][a][b]: households labeled a in season p and b in season p+1.
struct TransitionTable {
    std::vector<Season> seasons;
    std::vector<std::vector<std::vector<std::size_t>>> counts;
};

struct ChangerLabels {
    std::vector<std::string> household_ids;
    std::vector<std::uint8_t> changer;  // 1 unless all four seasonal labels agree
    // per lifestyle: (household row, 0/1) over households that ever held it;
    // 0 means the lifestyle was held in all four seasons
    std::vector<std::vector<std::pair<std::size_t, std::uint8_t>>> per_lifestyle;
};

LifestyleModel fit_lifestyles(const std::vector<std::vector<double>>& theta, std::size_t k,
                              std::uint64_t seed);

// Inertia per k; non-increasing along k_range (warm-started when a fresh fit
// would regress).
std::vector<std::pair<std::size_t, double>> elbow_curve(
    const std::vector<std::vector<double>>& theta, const std::vector<std::size_t>& k_range,
    std::uint64_t seed);

// Nearest center by Euclidean distance; ties go to the lowest index.
std::size_t assign(const std::vector<double>& theta_row, const LifestyleModel& model);

// labels[i][s]: lifestyle of household i in season s (season order as in
// kSeasonNames).
TransitionTable transitions(const std::vector<std::array<int, 4>>& seasonal_labels);

ChangerLabels changer_split(const std::vector<std::string>& household_ids,
                            const std::vector<std::array<int, 4>>& seasonal_labels);

// Seasonal mixtures: per season, encode that season's days against the
// dictionary and run inference with the annual psi frozen. Seasons with no
// days are skipped with a warning.
struct SeasonalThetas {
    std::array<std::vector<std::vector<double>>, 4> theta;  // empty when season missing
    std::array<bool, 4> present{};
    std::vector<std::string> warnings;
};

SeasonalThetas seasonal_thetas(const Dataset& data, const ShapeDictionary& dict,
                               const AttributeModel& model);

void save_seasonal_labels(const std::vector<std::string>& household_ids,
                          const std::vector<std::array<int, 4>>& seasonal_labels,
                          const ChangerLabels& changer, const std::string& path);

// Plot-ready flow rows: source label, target label, season pair, count.
void save_transition_flows(const TransitionTable& table, const std::string& path);

std::string serialize_lifestyles(const LifestyleModel& model);
void save_lifestyles(const LifestyleModel& model, const std::string& path);
LifestyleModel load_lifestyles(const std::string& path);

}  // namespace lifestyles
