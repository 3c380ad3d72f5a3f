#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lifestyles/clustering.hpp"
#include "lifestyles/data.hpp"
#include "lifestyles/metrics.hpp"

namespace lifestyles {

// Two-stage dictionary build settings: households are shuffled into bins of
// bin_size, each bin's normalized days are clustered to stage1_centers, and
// the pooled stage-1 centers are clustered to stage2_centers.
struct DictConfig {
    std::size_t bin_size = 100;
    std::size_t stage1_centers = 100;
    std::size_t stage2_centers = 200;
    DistanceKind metric{Metric::hybrid, 0.5};
    CenterRule center_rule = CenterRule::median;
    std::uint64_t seed = 0;

    void validate() const;
};

struct ShapeDictionary {
    std::vector<std::array<double, 24>> shapes;  // unit-sum rows, pairwise distinct
    DistanceKind metric{Metric::hybrid, 0.5};
    DictConfig provenance;
    std::vector<std::string> warnings;

    std::uint64_t fingerprint() const;
};

// Per-household shape frequencies over a period; each row sums to the
// household's day count in that period.
struct CountMatrix {
    std::vector<std::string> household_ids;
    std::vector<std::vector<std::uint32_t>> rows;
    std::string period;
};

ShapeDictionary build_dictionary(const Dataset& data, const DictConfig& config);

// Nearest dictionary shape for each sum-normalized day; ties break toward the
// lowest shape index.
CountMatrix encode_counts(const Dataset& data, const ShapeDictionary& dict,
                          std::optional<Season> period = std::nullopt);

std::size_t nearest_shape(const ShapeDictionary& dict, std::span<const double> shape);

std::string serialize_dictionary(const ShapeDictionary& dict);
void save_dictionary(const ShapeDictionary& dict, const std::string& path);
ShapeDictionary load_dictionary(const std::string& path);

void save_counts(const CountMatrix& counts, const std::string& path);
CountMatrix load_counts(const std::string& path);

}  // namespace lifestyles
