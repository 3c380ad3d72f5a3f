#include "lifestyles/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "lifestyles/parallel.hpp"
#include "lifestyles/rng.hpp"

namespace lifestyles {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_points(const Points& points) {
    if (points.empty()) throw DomainError("no points to cluster");
    const std::size_t dim = points.front().size();
    if (dim == 0) throw DimensionError("zero-dimensional points");
    for (const auto& p : points)
        if (p.size() != dim) throw DimensionError("points have mixed dimensions");
}

double sq_euclidean(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

// Nearest center under the assignment cost; ties go to the lowest index.
// `hint` is tried first to tighten the abandonment cutoff.
std::pair<int, double> nearest_center(const Points& centers, std::span<const double> x,
                                      const DistanceKind& metric, int hint) {
    int best = -1;
    double best_cost = kInf;
    if (hint >= 0 && static_cast<std::size_t>(hint) < centers.size()) {
        best = hint;
        best_cost = assignment_cost(metric, x, centers[static_cast<std::size_t>(hint)]);
    }
    for (std::size_t j = 0; j < centers.size(); ++j) {
        if (static_cast<int>(j) == best) continue;
        double c = detail::assignment_cost_abandoning(metric, x, centers[j], best_cost);
        if (c < best_cost || (c == best_cost && static_cast<int>(j) < best)) {
            best = static_cast<int>(j);
            best_cost = c;
        }
    }
    return {best, best_cost};
}

void assign_all(const Points& points, const Points& centers, const DistanceKind& metric,
                std::vector<int>& labels, std::vector<double>& costs) {
    parallel_for(points.size(), [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            auto [lab, cost] = nearest_center(centers, points[i], metric, labels[i]);
            labels[i] = lab;
            costs[i] = cost;
        }
    });
}

Point column_mean(const Points& points, const std::vector<int>& labels, int cluster,
                  std::size_t dim, std::size_t& count_out) {
    Point c(dim, 0.0);
    std::size_t n = 0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (labels[i] != cluster) continue;
        ++n;
        for (std::size_t d = 0; d < dim; ++d) c[d] += points[i][d];
    }
    if (n > 0)
        for (auto& v : c) v /= static_cast<double>(n);
    count_out = n;
    return c;
}

Point column_median(const Points& points, const std::vector<int>& labels, int cluster,
                    std::size_t dim, std::size_t& count_out) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < points.size(); ++i)
        if (labels[i] == cluster) members.push_back(i);
    count_out = members.size();
    Point c(dim, 0.0);
    if (members.empty()) return c;
    std::vector<double> col(members.size());
    for (std::size_t d = 0; d < dim; ++d) {
        for (std::size_t m = 0; m < members.size(); ++m) col[m] = points[members[m]][d];
        auto mid = col.begin() + static_cast<std::ptrdiff_t>(col.size() / 2);
        std::nth_element(col.begin(), mid, col.end());
        if (col.size() % 2 == 1) {
            c[d] = *mid;
        } else {
            double hi = *mid;
            double lo = *std::max_element(col.begin(), mid);
            c[d] = 0.5 * (lo + hi);
        }
    }
    return c;
}

// Distance-weighted seeding: first center uniform, then each next center
// drawn with probability proportional to the current assignment cost.
Points seed_centers(const Points& points, std::size_t k, const DistanceKind& metric, Rng& rng) {
    Points centers;
    centers.reserve(k);
    std::vector<double> mindist(points.size(), kInf);
    centers.push_back(points[rng.next_below(points.size())]);
    for (std::size_t c = 1; c <= k; ++c) {
        const Point& latest = centers.back();
        parallel_for(points.size(), [&](std::size_t b, std::size_t e) {
            for (std::size_t i = b; i < e; ++i) {
                double cut = mindist[i];
                double d = detail::assignment_cost_abandoning(metric, points[i], latest, cut);
                if (d < cut) mindist[i] = d;
            }
        });
        if (c == k) break;
        double total = std::accumulate(mindist.begin(), mindist.end(), 0.0);
        std::size_t pick = 0;
        if (total > 0.0) {
            double target = rng.next_double() * total;
            double acc = 0.0;
            pick = points.size() - 1;
            for (std::size_t i = 0; i < points.size(); ++i) {
                acc += mindist[i];
                if (target < acc) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = rng.next_below(points.size());
        }
        centers.push_back(points[pick]);
    }
    return centers;
}

Clustering lloyd(const Points& points, Points centers, const DistanceKind& metric,
                 CenterRule rule, std::size_t max_iter, double tol) {
    const std::size_t dim = points.front().size();
    const std::size_t k = centers.size();

    Clustering result;
    result.labels.assign(points.size(), -1);
    std::vector<double> costs(points.size(), 0.0);
    bool converged = false;

    for (std::size_t iter = 0; iter < max_iter; ++iter) {
        assign_all(points, centers, metric, result.labels, costs);
        result.inertia = std::accumulate(costs.begin(), costs.end(), 0.0);
        result.inertia_trace.push_back(result.inertia);
        if (converged) break;

        Points next(k);
        std::vector<std::size_t> sizes(k, 0);
        for (std::size_t j = 0; j < k; ++j)
            next[j] = rule == CenterRule::mean
                          ? column_mean(points, result.labels, static_cast<int>(j), dim, sizes[j])
                          : column_median(points, result.labels, static_cast<int>(j), dim, sizes[j]);

        // farthest-point re-seeding for empty clusters
        bool repaired = false;
        std::vector<char> used(points.size(), 0);
        for (std::size_t j = 0; j < k; ++j) {
            if (sizes[j] > 0) continue;
            std::size_t far = 0;
            double far_cost = -1.0;
            for (std::size_t i = 0; i < points.size(); ++i) {
                if (used[i]) continue;
                if (costs[i] > far_cost) {
                    far_cost = costs[i];
                    far = i;
                }
            }
            used[far] = 1;
            next[j] = points[far];
            repaired = true;
        }

        double shift = 0.0;
        for (std::size_t j = 0; j < k; ++j)
            shift = std::max(shift, std::sqrt(sq_euclidean(centers[j], next[j])));
        centers = std::move(next);
        converged = !repaired && shift < tol;
    }

    result.centers = std::move(centers);
    return result;
}

}  // namespace

std::size_t count_distinct(const Points& points) {
    Points sorted = points;
    std::sort(sorted.begin(), sorted.end());
    return static_cast<std::size_t>(std::distance(
        sorted.begin(), std::unique(sorted.begin(), sorted.end())));
}

Clustering kcenter_fit(const Points& points, std::size_t k, const DistanceKind& metric,
                       CenterRule rule, std::uint64_t seed, std::size_t max_iter, double tol) {
    check_points(points);
    metric.validate();
    if (k < 1) throw ConfigError("k must be >= 1");
    if (max_iter < 1) throw ConfigError("max_iter must be >= 1");
    if (k > count_distinct(points))
        throw ConfigError("k = " + std::to_string(k) + " exceeds distinct point count");
    Rng rng(seed);
    return lloyd(points, seed_centers(points, k, metric, rng), metric, rule, max_iter, tol);
}

Clustering kcenter_fit_from(const Points& points, Points initial_centers,
                            const DistanceKind& metric, CenterRule rule, std::size_t max_iter,
                            double tol) {
    check_points(points);
    metric.validate();
    if (initial_centers.empty()) throw ConfigError("no initial centers");
    for (const auto& c : initial_centers)
        if (c.size() != points.front().size())
            throw DimensionError("initial center dimension mismatch");
    return lloyd(points, std::move(initial_centers), metric, rule, max_iter, tol);
}

Clustering ward_fit(const Points& points, std::size_t k) {
    check_points(points);
    if (k < 1) throw ConfigError("k must be >= 1");
    if (k > points.size()) throw ConfigError("k exceeds point count");
    const std::size_t dim = points.front().size();

    struct Node {
        Point center;
        std::size_t size;
        std::vector<std::size_t> members;
    };
    std::vector<Node> clusters;
    clusters.reserve(points.size());
    for (std::size_t i = 0; i < points.size(); ++i)
        clusters.push_back({points[i], 1, {i}});

    while (clusters.size() > k) {
        double best = kInf;
        std::size_t bi = 0, bj = 1;
        for (std::size_t i = 0; i + 1 < clusters.size(); ++i) {
            for (std::size_t j = i + 1; j < clusters.size(); ++j) {
                double na = static_cast<double>(clusters[i].size);
                double nb = static_cast<double>(clusters[j].size);
                double delta =
                    na * nb / (na + nb) * sq_euclidean(clusters[i].center, clusters[j].center);
                if (delta < best) {
                    best = delta;
                    bi = i;
                    bj = j;
                }
            }
        }
        Node& a = clusters[bi];
        Node& b = clusters[bj];
        double na = static_cast<double>(a.size), nb = static_cast<double>(b.size);
        for (std::size_t d = 0; d < dim; ++d)
            a.center[d] = (na * a.center[d] + nb * b.center[d]) / (na + nb);
        a.size += b.size;
        a.members.insert(a.members.end(), b.members.begin(), b.members.end());
        clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(bj));
    }

    Clustering result;
    result.labels.assign(points.size(), -1);
    for (std::size_t c = 0; c < clusters.size(); ++c) {
        result.centers.push_back(clusters[c].center);
        for (std::size_t m : clusters[c].members) result.labels[m] = static_cast<int>(c);
    }
    result.inertia = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i)
        result.inertia += sq_euclidean(points[i], result.centers[static_cast<std::size_t>(result.labels[i])]);
    result.inertia_trace.push_back(result.inertia);
    return result;
}

Clustering dbscan_fit(const Points& points, double eps, std::size_t n_min,
                      const DistanceKind& metric) {
    check_points(points);
    metric.validate();
    if (!(eps > 0.0)) throw ConfigError("eps must be > 0");
    if (n_min < 1) throw ConfigError("n_min must be >= 1");
    const std::size_t n = points.size();

    // neighborhoods include the point itself
    std::vector<std::vector<std::size_t>> neigh(n);
    parallel_for(n, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (distance(metric, points[i], points[j]) <= eps) neigh[i].push_back(j);
    });

    Clustering result;
    result.labels.assign(n, -1);
    std::vector<char> visited(n, 0);
    int next_label = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (visited[i]) continue;
        visited[i] = 1;
        if (neigh[i].size() < n_min) continue;  // noise unless claimed later
        int label = next_label++;
        result.labels[i] = label;
        std::vector<std::size_t> queue = neigh[i];
        for (std::size_t q = 0; q < queue.size(); ++q) {
            std::size_t p = queue[q];
            if (result.labels[p] == -1) result.labels[p] = label;  // border point
            if (visited[p]) continue;
            visited[p] = 1;
            result.labels[p] = label;
            if (neigh[p].size() >= n_min)
                queue.insert(queue.end(), neigh[p].begin(), neigh[p].end());
        }
    }

    for (int c = 0; c < next_label; ++c) {
        Points members;
        for (std::size_t i = 0; i < n; ++i)
            if (result.labels[i] == c) members.push_back(points[i]);
        result.centers.push_back(barycenter(members, metric));
    }
    result.inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        if (result.labels[i] >= 0)
            result.inertia += assignment_cost(
                metric, points[i], result.centers[static_cast<std::size_t>(result.labels[i])]);
    return result;
}

namespace {

// Monotone warping path of (i, j) pairs recovered from the cumulative table;
// ties prefer the diagonal step.
std::vector<std::pair<std::size_t, std::size_t>> dtw_path(std::span<const double> a,
                                                          std::span<const double> b) {
    const std::size_t m = a.size();
    std::vector<double> D(m * m);
    auto at = [&](std::size_t i, std::size_t j) -> double& { return D[i * m + j]; };
    auto nu = [&](std::size_t i, std::size_t j) {
        double d = a[i] - b[j];
        return d * d;
    };
    at(0, 0) = nu(0, 0);
    for (std::size_t j = 1; j < m; ++j) at(0, j) = at(0, j - 1) + nu(0, j);
    for (std::size_t i = 1; i < m; ++i) {
        at(i, 0) = at(i - 1, 0) + nu(i, 0);
        for (std::size_t j = 1; j < m; ++j)
            at(i, j) = std::min(std::min(at(i - 1, j), at(i - 1, j - 1)), at(i, j - 1)) + nu(i, j);
    }
    std::vector<std::pair<std::size_t, std::size_t>> path;
    std::size_t i = m - 1, j = m - 1;
    path.emplace_back(i, j);
    while (i > 0 || j > 0) {
        if (i == 0) {
            --j;
        } else if (j == 0) {
            --i;
        } else {
            double diag = at(i - 1, j - 1), up = at(i - 1, j), left = at(i, j - 1);
            if (diag <= up && diag <= left) {
                --i;
                --j;
            } else if (up <= left) {
                --i;
            } else {
                --j;
            }
        }
        path.emplace_back(i, j);
    }
    std::reverse(path.begin(), path.end());
    return path;
}

}  // namespace

Point barycenter(const Points& points, const DistanceKind& metric) {
    if (points.empty()) throw DomainError("barycenter of empty set");
    check_points(points);
    const std::size_t dim = points.front().size();

    if (metric.kind == Metric::manhattan) {
        std::vector<int> labels(points.size(), 0);
        std::size_t n = 0;
        return column_median(points, labels, 0, dim, n);
    }
    std::vector<int> labels(points.size(), 0);
    std::size_t n = 0;
    Point center = column_mean(points, labels, 0, dim, n);
    if (metric.kind != Metric::dtw && metric.kind != Metric::hybrid) return center;

    // alignment averaging: re-estimate each slot from the values warped onto it
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> paths(points.size());
    for (int pass = 0; pass < 30; ++pass) {
        bool changed = false;
        for (std::size_t p = 0; p < points.size(); ++p) {
            auto path = dtw_path(center, points[p]);
            if (path != paths[p]) {
                changed = true;
                paths[p] = std::move(path);
            }
        }
        if (!changed && pass > 0) break;
        Point sums(dim, 0.0);
        std::vector<std::size_t> counts(dim, 0);
        for (std::size_t p = 0; p < points.size(); ++p) {
            for (auto [ci, pj] : paths[p]) {
                sums[ci] += points[p][pj];
                ++counts[ci];
            }
        }
        Point next(dim);
        for (std::size_t d = 0; d < dim; ++d)
            next[d] = counts[d] > 0 ? sums[d] / static_cast<double>(counts[d]) : center[d];
        if (next == center && pass > 0) break;
        center = std::move(next);
    }
    return center;
}

namespace {

struct LabeledStats {
    Points centroids;
    std::vector<std::size_t> sizes;
    std::vector<std::size_t> dense;  // dense cluster id per point
};

LabeledStats cluster_stats(const Points& points, const std::vector<int>& labels) {
    if (points.size() != labels.size()) throw DimensionError("labels/points size mismatch");
    check_points(points);
    std::vector<int> ids;
    for (int l : labels) {
        if (l < 0) throw DomainError("negative label in validity scoring");
        ids.push_back(l);
    }
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());

    LabeledStats st;
    st.centroids.assign(ids.size(), Point(points.front().size(), 0.0));
    st.sizes.assign(ids.size(), 0);
    st.dense.resize(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        auto it = std::lower_bound(ids.begin(), ids.end(), labels[i]);
        std::size_t c = static_cast<std::size_t>(std::distance(ids.begin(), it));
        st.dense[i] = c;
        ++st.sizes[c];
        for (std::size_t d = 0; d < points[i].size(); ++d) st.centroids[c][d] += points[i][d];
    }
    for (std::size_t c = 0; c < st.centroids.size(); ++c)
        for (auto& v : st.centroids[c]) v /= static_cast<double>(st.sizes[c]);
    return st;
}

}  // namespace

double chi_score(const Points& points, const std::vector<int>& labels) {
    auto st = cluster_stats(points, labels);
    const std::size_t k = st.centroids.size();
    const std::size_t n = points.size();
    if (k < 2) throw DomainError("validity score needs >= 2 clusters");
    if (n <= k) throw DomainError("validity score needs n > k");

    Point grand(points.front().size(), 0.0);
    for (const auto& p : points)
        for (std::size_t d = 0; d < p.size(); ++d) grand[d] += p[d];
    for (auto& v : grand) v /= static_cast<double>(n);

    double between = 0.0;
    for (std::size_t c = 0; c < k; ++c)
        between += static_cast<double>(st.sizes[c]) * sq_euclidean(st.centroids[c], grand);
    double within = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        within += sq_euclidean(points[i], st.centroids[st.dense[i]]);

    if (within == 0.0) return kInf;
    return (between / static_cast<double>(k - 1)) / (within / static_cast<double>(n - k));
}

double dbi_score(const Points& points, const std::vector<int>& labels) {
    auto st = cluster_stats(points, labels);
    const std::size_t k = st.centroids.size();
    if (k < 2) throw DomainError("validity score needs >= 2 clusters");

    std::vector<double> scatter(k, 0.0);
    for (std::size_t i = 0; i < points.size(); ++i)
        scatter[st.dense[i]] += std::sqrt(sq_euclidean(points[i], st.centroids[st.dense[i]]));
    for (std::size_t c = 0; c < k; ++c) scatter[c] /= static_cast<double>(st.sizes[c]);

    double total = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        double worst = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            if (i == j) continue;
            double d = std::sqrt(sq_euclidean(st.centroids[i], st.centroids[j]));
            if (d == 0.0) return kInf;
            worst = std::max(worst, (scatter[i] + scatter[j]) / d);
        }
        total += worst;
    }
    return total / static_cast<double>(k);
}

}  // namespace lifestyles
