#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "lifestyles/data.hpp"

namespace lifestyles {

// Generator settings. The defaults plant no lifestyles: each household gets
// an independent Dir(alpha) attribute mixture. Setting n_lifestyles > 0
// concentrates household mixtures around that many prototype mixtures and
// lets switch_fraction of households change prototype for one season.
struct SyntheticConfig {
    std::size_t n_households = 100;
    std::size_t n_days = 365;
    std::size_t n_archetypes = 4;  // also the number of latent attributes
    double alpha = 0.5;            // Dirichlet prior for household mixtures
    double noise_sd = 0.02;        // truncated-at-zero Gaussian, per hour
    double magnitude_lo = 1.0;     // daily scale drawn log-uniform
    double magnitude_hi = 1.0;
    Date start_date{2021, 9, 1};

    std::size_t n_lifestyles = 0;
    double switch_fraction = 0.0;
    double mixture_concentration = 40.0;  // Dirichlet pull toward the prototype
    double psi_offdiagonal = 0.1;         // attribute mass spread off its own archetype

    void validate() const;
};

// Planted parameters for recovery tests. seasonal_lifestyle and
// annual_lifestyle are -1 when no lifestyles were planted.
struct GroundTruth {
    std::vector<std::vector<double>> theta;       // household x attribute, simplex rows
    std::vector<std::vector<double>> psi;         // attribute x archetype, simplex rows
    std::vector<std::array<double, 24>> archetypes;
    std::vector<std::array<int, 4>> seasonal_lifestyle;  // per household, per season
    std::vector<int> annual_lifestyle;
    std::vector<std::uint8_t> switcher;  // 1 when a season was switched
};

struct SyntheticResult {
    Dataset data;
    GroundTruth truth;
};

// Smooth unit-sum daily profiles with staggered peak hours; index-distinct.
std::vector<std::array<double, 24>> make_archetypes(std::size_t n);

SyntheticResult generate_synthetic(const SyntheticConfig& config, std::uint64_t seed);

}  // namespace lifestyles
