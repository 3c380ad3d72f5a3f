#include "lifestyles/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace lifestyles {

namespace {

void check_lengths(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw DimensionError("vector length mismatch: " + std::to_string(a.size()) + " vs " +
                             std::to_string(b.size()));
    if (a.empty()) throw DimensionError("empty vectors");
}

}  // namespace

DistanceKind DistanceKind::parse(const std::string& name, double gamma) {
    DistanceKind k;
    k.gamma = gamma;
    if (name == "euclidean") k.kind = Metric::euclidean;
    else if (name == "manhattan") k.kind = Metric::manhattan;
    else if (name == "cosine") k.kind = Metric::cosine;
    else if (name == "dtw") k.kind = Metric::dtw;
    else if (name == "hybrid") k.kind = Metric::hybrid;
    else if (name == "correlation") k.kind = Metric::correlation;
    else throw ConfigError("unknown metric '" + name + "'");
    k.validate();
    return k;
}

std::string DistanceKind::name() const {
    switch (kind) {
        case Metric::euclidean: return "euclidean";
        case Metric::manhattan: return "manhattan";
        case Metric::cosine: return "cosine";
        case Metric::dtw: return "dtw";
        case Metric::hybrid: return "hybrid";
        case Metric::correlation: return "correlation";
    }
    return "?";
}

void DistanceKind::validate() const {
    if (kind == Metric::hybrid && !(gamma >= 0.0 && gamma <= 1.0))
        throw ConfigError("hybrid gamma must lie in [0,1], got " + std::to_string(gamma));
}

double euclidean(std::span<const double> a, std::span<const double> b) {
    check_lengths(a, b);
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        double d = a[k] - b[k];
        s += d * d;
    }
    return std::sqrt(s);
}

double manhattan(std::span<const double> a, std::span<const double> b) {
    check_lengths(a, b);
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += std::abs(a[k] - b[k]);
    return s;
}

double cosine_distance(std::span<const double> a, std::span<const double> b) {
    check_lengths(a, b);
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        dot += a[k] * b[k];
        na += a[k] * a[k];
        nb += b[k] * b[k];
    }
    if (na == 0.0 || nb == 0.0) throw DomainError("cosine distance undefined for zero vectors");
    return 1.0 - dot / (std::sqrt(na) * std::sqrt(nb));
}

double dtw_distance(std::span<const double> a, std::span<const double> b) {
    check_lengths(a, b);
    const std::size_t m = a.size();
    // rolling row of the cumulative-cost table
    double row[64];
    std::vector<double> heap_row;
    double* prev;
    if (m <= 64) {
        prev = row;
    } else {
        heap_row.resize(m);
        prev = heap_row.data();
    }

    double d0 = a[0] - b[0];
    prev[0] = d0 * d0;
    for (std::size_t j = 1; j < m; ++j) {
        double d = a[0] - b[j];
        prev[j] = prev[j - 1] + d * d;
    }
    for (std::size_t i = 1; i < m; ++i) {
        double diag = prev[0];  // D(i-1, j-1) for j = 1
        double d = a[i] - b[0];
        prev[0] += d * d;       // column 0 can only come from above
        double left = prev[0];
        for (std::size_t j = 1; j < m; ++j) {
            double up = prev[j];
            double best = std::min(std::min(up, diag), left);
            d = a[i] - b[j];
            left = best + d * d;
            diag = up;
            prev[j] = left;
        }
    }
    return prev[m - 1];
}

double hybrid_distance(std::span<const double> a, std::span<const double> b, double gamma) {
    if (!(gamma >= 0.0 && gamma <= 1.0))
        throw ConfigError("hybrid gamma must lie in [0,1], got " + std::to_string(gamma));
    return gamma * euclidean(a, b) + (1.0 - gamma) * dtw_distance(a, b);
}

double correlation_distance(std::span<const double> a, std::span<const double> b) {
    check_lengths(a, b);
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        ma += a[k];
        mb += b[k];
    }
    ma /= n;
    mb /= n;
    double dot = 0.0, va = 0.0, vb = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        double xa = a[k] - ma, xb = b[k] - mb;
        dot += xa * xb;
        va += xa * xa;
        vb += xb * xb;
    }
    if (va == 0.0 || vb == 0.0)
        throw DomainError("correlation distance undefined for constant vectors");
    return 1.0 - dot / (std::sqrt(va) * std::sqrt(vb));
}

double distance(const DistanceKind& kind, std::span<const double> a, std::span<const double> b) {
    switch (kind.kind) {
        case Metric::euclidean: return euclidean(a, b);
        case Metric::manhattan: return manhattan(a, b);
        case Metric::cosine: return cosine_distance(a, b);
        case Metric::dtw: return dtw_distance(a, b);
        case Metric::hybrid: return hybrid_distance(a, b, kind.gamma);
        case Metric::correlation: return correlation_distance(a, b);
    }
    throw ConfigError("unknown metric");
}

double assignment_cost(const DistanceKind& kind, std::span<const double> a,
                       std::span<const double> b) {
    if (kind.kind == Metric::euclidean) {
        check_lengths(a, b);
        double s = 0.0;
        for (std::size_t k = 0; k < a.size(); ++k) {
            double d = a[k] - b[k];
            s += d * d;
        }
        return s;
    }
    return distance(kind, a, b);
}

namespace detail {

double dtw_distance_abandoning(std::span<const double> a, std::span<const double> b,
                               double cutoff) {
    check_lengths(a, b);
    const std::size_t m = a.size();
    double row[64];
    std::vector<double> heap_row;
    double* prev;
    if (m <= 64) {
        prev = row;
    } else {
        heap_row.resize(m);
        prev = heap_row.data();
    }

    double d0 = a[0] - b[0];
    prev[0] = d0 * d0;
    double rowmin = prev[0];
    for (std::size_t j = 1; j < m; ++j) {
        double d = a[0] - b[j];
        prev[j] = prev[j - 1] + d * d;
        rowmin = std::min(rowmin, prev[j]);
    }
    if (rowmin > cutoff) return rowmin;
    for (std::size_t i = 1; i < m; ++i) {
        double diag = prev[0];
        double d = a[i] - b[0];
        prev[0] += d * d;
        double left = prev[0];
        rowmin = left;
        for (std::size_t j = 1; j < m; ++j) {
            double up = prev[j];
            double best = std::min(std::min(up, diag), left);
            d = a[i] - b[j];
            left = best + d * d;
            diag = up;
            prev[j] = left;
            rowmin = std::min(rowmin, left);
        }
        // cell costs are non-negative, so no alignment can recover below rowmin
        if (rowmin > cutoff) return rowmin;
    }
    return prev[m - 1];
}

double assignment_cost_abandoning(const DistanceKind& kind, std::span<const double> a,
                                  std::span<const double> b, double cutoff) {
    switch (kind.kind) {
        case Metric::dtw:
            return dtw_distance_abandoning(a, b, cutoff);
        case Metric::hybrid: {
            double e = euclidean(a, b);
            double base = kind.gamma * e;
            if (base > cutoff) return base;
            if (kind.gamma >= 1.0) return base;
            double budget = (cutoff - base) / (1.0 - kind.gamma);
            return base + (1.0 - kind.gamma) * dtw_distance_abandoning(a, b, budget);
        }
        default:
            return assignment_cost(kind, a, b);
    }
}

}  // namespace detail

}  // namespace lifestyles
