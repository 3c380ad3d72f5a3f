#pragma once

#include <cstdint>
#include <vector>

#include "lifestyles/metrics.hpp"

namespace lifestyles {

using Point = std::vector<double>;
using Points = std::vector<Point>;

enum class CenterRule { mean, median };

// Result of any clustering fit. labels use -1 for DBSCAN noise; every other
// label indexes centers. inertia is the assignment cost summed over points
// (squared Euclidean under the euclidean metric, the raw metric otherwise).
struct Clustering {
    Points centers;
    std::vector<int> labels;
    double inertia = 0.0;
    std::vector<double> inertia_trace;  // one entry per assignment pass
};

// Lloyd-style alternation with distance-weighted seeding. Centers update by
// element-wise mean or median; empty clusters are re-seeded from the point
// farthest from its center.
Clustering kcenter_fit(const Points& points, std::size_t k, const DistanceKind& metric,
                       CenterRule rule, std::uint64_t seed, std::size_t max_iter = 100,
                       double tol = 1e-9);

// Same alternation from caller-supplied initial centers.
Clustering kcenter_fit_from(const Points& points, Points initial_centers,
                            const DistanceKind& metric, CenterRule rule,
                            std::size_t max_iter = 100, double tol = 1e-9);

// Agglomerative merging that minimizes the sum-of-squares increase
// n_a*n_b/(n_a+n_b) * ||c_a - c_b||^2 until k clusters remain.
Clustering ward_fit(const Points& points, std::size_t k);

// Density clustering; centers are per-cluster barycenters appended post hoc.
Clustering dbscan_fit(const Points& points, double eps, std::size_t n_min,
                      const DistanceKind& metric);

// Representative center of a point set: element-wise mean under euclidean,
// element-wise median under manhattan, alignment-averaged under dtw/hybrid.
Point barycenter(const Points& points, const DistanceKind& metric);

// Calinski-Harabasz: [B/(k-1)] / [W/(n-k)] with Euclidean scatter about means.
// Returns +inf when W = 0.
double chi_score(const Points& points, const std::vector<int>& labels);

// Davies-Bouldin: mean over clusters of max_j (s_i+s_j)/d_ij. Returns +inf on
// coincident centroids.
double dbi_score(const Points& points, const std::vector<int>& labels);

std::size_t count_distinct(const Points& points);

}  // namespace lifestyles
