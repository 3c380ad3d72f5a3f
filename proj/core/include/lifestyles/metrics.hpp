#pragma once

#include <span>
#include <string>

#include "lifestyles/error.hpp"

namespace lifestyles {

enum class Metric { euclidean, manhattan, cosine, dtw, hybrid, correlation };

// Distance selector. gamma is meaningful only for Metric::hybrid and weighs
// the Euclidean term against the DTW term.
struct DistanceKind {
    Metric kind = Metric::euclidean;
    double gamma = 0.5;

    static DistanceKind parse(const std::string& name, double gamma = 0.5);
    std::string name() const;
    void validate() const;
};

double euclidean(std::span<const double> a, std::span<const double> b);
double manhattan(std::span<const double> a, std::span<const double> b);
double cosine_distance(std::span<const double> a, std::span<const double> b);

// Cumulative alignment cost with squared per-cell cost and no windowing.
// Carries squared units: dtw_distance(a,b) <= sum_k (a_k - b_k)^2.
double dtw_distance(std::span<const double> a, std::span<const double> b);

// gamma * euclidean + (1 - gamma) * dtw, combined as-is without rescaling.
double hybrid_distance(std::span<const double> a, std::span<const double> b, double gamma);

double correlation_distance(std::span<const double> a, std::span<const double> b);

double distance(const DistanceKind& kind, std::span<const double> a, std::span<const double> b);

// Cost used for cluster assignment and inertia: squared Euclidean under the
// euclidean metric (the k-means distortion), the raw distance otherwise.
double assignment_cost(const DistanceKind& kind, std::span<const double> a, std::span<const double> b);

namespace detail {

// dtw_distance that gives up once every alignment must exceed `cutoff`;
// returns a value > cutoff in that case. Exact when the result <= cutoff.
double dtw_distance_abandoning(std::span<const double> a, std::span<const double> b, double cutoff);

// assignment_cost with the same abandonment contract.
double assignment_cost_abandoning(const DistanceKind& kind, std::span<const double> a,
                                  std::span<const double> b, double cutoff);

}  // namespace detail

}  // namespace lifestyles
