#include "lifestyles/dictionary.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "lifestyles/parallel.hpp"
#include "lifestyles/rng.hpp"
#include "lifestyles/text.hpp"

namespace lifestyles {

namespace {

constexpr std::size_t kStageMaxIter = 60;
constexpr double kStageTol = 1e-9;

std::vector<double> to_point(const ShapeVector& s) {
    return std::vector<double>(s.values.begin(), s.values.end());
}

}  // namespace

void DictConfig::validate() const {
    if (bin_size < 1) throw ConfigError("bin_size must be >= 1");
    if (stage1_centers < 1 || stage2_centers < 1)
        throw ConfigError("stage center counts must be >= 1");
    metric.validate();
}

std::uint64_t ShapeDictionary::fingerprint() const { return fnv1a64(serialize_dictionary(*this)); }

ShapeDictionary build_dictionary(const Dataset& data, const DictConfig& config) {
    config.validate();
    if (data.households.empty()) throw DomainError("empty dataset");

    const std::size_t n_households = data.households.size();
    const std::size_t bin_count = (n_households + config.bin_size - 1) / config.bin_size;
    if (config.stage2_centers > bin_count * config.stage1_centers)
        throw ConfigError("stage2_centers exceeds bin_count * stage1_centers (" +
                          std::to_string(bin_count * config.stage1_centers) + ")");

    ShapeDictionary dict;
    dict.metric = config.metric;
    dict.provenance = config;

    // seeded shuffle of household order; remainder households form a short bin
    std::vector<std::size_t> order(n_households);
    std::iota(order.begin(), order.end(), 0);
    Rng bin_rng(derive_seed(config.seed, "dict.bins"));
    bin_rng.shuffle(order);

    Points pooled;
    pooled.reserve(bin_count * config.stage1_centers);
    for (std::size_t b = 0; b < bin_count; ++b) {
        Points days;
        std::size_t lo = b * config.bin_size;
        std::size_t hi = std::min(n_households, lo + config.bin_size);
        for (std::size_t i = lo; i < hi; ++i)
            for (const auto& day : data.households[order[i]].days)
                days.push_back(to_point(normalize_day(day, NormalizeMode::sum)));

        std::size_t distinct = count_distinct(days);
        std::size_t k = std::min(config.stage1_centers, distinct);
        if (k < config.stage1_centers)
            dict.warnings.push_back("bin " + std::to_string(b) + ": only " +
                                    std::to_string(distinct) +
                                    " distinct days, stage-1 centers reduced");
        auto fit = kcenter_fit(days, k, config.metric, config.center_rule,
                               derive_seed(config.seed, "dict.stage1.bin" + std::to_string(b)),
                               kStageMaxIter, kStageTol);
        for (auto& c : fit.centers) pooled.push_back(std::move(c));
    }

    std::size_t distinct = count_distinct(pooled);
    std::size_t k2 = std::min(config.stage2_centers, distinct);
    if (k2 < config.stage2_centers)
        dict.warnings.push_back("pooled stage-1 centers hold only " + std::to_string(distinct) +
                                " distinct points, dictionary size reduced");
    auto fit = kcenter_fit(pooled, k2, config.metric, config.center_rule,
                           derive_seed(config.seed, "dict.stage2"), kStageMaxIter, kStageTol);

    // unit-sum shape rows; exact duplicates collapse
    std::vector<std::array<double, 24>> shapes;
    for (const auto& c : fit.centers) {
        std::array<double, 24> s{};
        double sum = std::accumulate(c.begin(), c.end(), 0.0);
        for (std::size_t h = 0; h < 24; ++h) s[h] = sum > 0.0 ? c[h] / sum : 1.0 / 24.0;
        if (std::find(shapes.begin(), shapes.end(), s) == shapes.end()) shapes.push_back(s);
    }
    if (shapes.size() < fit.centers.size())
        dict.warnings.push_back("duplicate stage-2 centers collapsed to " +
                                std::to_string(shapes.size()));
    dict.shapes = std::move(shapes);
    return dict;
}

std::size_t nearest_shape(const ShapeDictionary& dict, std::span<const double> shape) {
    const auto& shapes = dict.shapes;
    if (shapes.empty()) throw DomainError("empty dictionary");
    if (shape.size() != 24) throw DimensionError("shape must have 24 values");
    const DistanceKind& metric = dict.metric;

    if (metric.kind != Metric::hybrid && metric.kind != Metric::dtw) {
        std::size_t best = 0;
        double best_cost = assignment_cost(metric, shape, shapes[0]);
        for (std::size_t j = 1; j < shapes.size(); ++j) {
            double c = assignment_cost(metric, shape, shapes[j]);
            if (c < best_cost) {
                best = j;
                best_cost = c;
            }
        }
        return best;
    }

    // Squared-Euclidean pre-pass: it is both the identity-path upper bound on
    // DTW and, with the endpoint cells, a source of cheap lower bounds.
    const double gamma = metric.kind == Metric::hybrid ? metric.gamma : 0.0;
    const std::size_t m = shape.size();
    std::vector<double> sq(shapes.size());
    std::vector<std::uint32_t> idx(shapes.size());
    for (std::size_t j = 0; j < shapes.size(); ++j) {
        double s = 0.0;
        for (std::size_t h = 0; h < m; ++h) {
            double d = shape[h] - shapes[j][h];
            s += d * d;
        }
        sq[j] = s;
        idx[j] = static_cast<std::uint32_t>(j);
    }
    std::sort(idx.begin(), idx.end(), [&](std::uint32_t a, std::uint32_t b) {
        return sq[a] < sq[b] || (sq[a] == sq[b] && a < b);
    });

    std::size_t best = idx[0];
    double best_cost = std::numeric_limits<double>::infinity();
    for (std::uint32_t j : idx) {
        double e = std::sqrt(sq[j]);
        double d0 = shape[0] - shapes[j][0];
        double dm = shape[m - 1] - shapes[j][m - 1];
        double lb = gamma * e + (1.0 - gamma) * (d0 * d0 + (m > 1 ? dm * dm : 0.0));
        if (lb > best_cost) continue;
        double base = gamma * e;
        double cost;
        if (gamma >= 1.0) {
            cost = base;
        } else {
            double budget = (best_cost - base) / (1.0 - gamma);
            cost = base + (1.0 - gamma) * detail::dtw_distance_abandoning(shape, shapes[j], budget);
        }
        if (cost < best_cost || (cost == best_cost && j < best)) {
            best = j;
            best_cost = cost;
        }
    }
    return best;
}

CountMatrix encode_counts(const Dataset& data, const ShapeDictionary& dict,
                          std::optional<Season> period) {
    if (dict.shapes.empty()) throw DomainError("empty dictionary");
    CountMatrix counts;
    counts.period = period ? season_name(*period) : "annual";
    counts.household_ids.resize(data.households.size());
    counts.rows.assign(data.households.size(),
                       std::vector<std::uint32_t>(dict.shapes.size(), 0));

    parallel_for(data.households.size(), [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            const auto& home = data.households[i];
            counts.household_ids[i] = home.id;
            auto& row = counts.rows[i];
            for (const auto& day : home.days) {
                if (period && season_of_month(day.date.month) != *period) continue;
                auto shape = normalize_day(day, NormalizeMode::sum);
                ++row[nearest_shape(dict, shape.values)];
            }
        }
    });
    return counts;
}

std::string serialize_dictionary(const ShapeDictionary& dict) {
    std::ostringstream out;
    out << "lifestyles-dictionary v1\n";
    out << "metric " << dict.metric.name();
    if (dict.metric.kind == Metric::hybrid) out << ' ' << format_double(dict.metric.gamma);
    out << '\n';
    out << "center_rule " << (dict.provenance.center_rule == CenterRule::mean ? "mean" : "median")
        << '\n';
    out << "bin_size " << dict.provenance.bin_size << '\n';
    out << "stage1_centers " << dict.provenance.stage1_centers << '\n';
    out << "stage2_centers " << dict.provenance.stage2_centers << '\n';
    out << "seed " << dict.provenance.seed << '\n';
    out << "shapes " << dict.shapes.size() << '\n';
    for (const auto& s : dict.shapes) {
        for (std::size_t h = 0; h < 24; ++h) {
            if (h) out << ' ';
            out << format_double(s[h]);
        }
        out << '\n';
    }
    return out.str();
}

void save_dictionary(const ShapeDictionary& dict, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write '" + path + "'");
    out << serialize_dictionary(dict);
}

ShapeDictionary load_dictionary(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");
    std::string line;
    long lineno = 0;
    auto next_line = [&]() -> std::string& {
        if (!std::getline(in, line)) throw ParseError("truncated dictionary file", lineno);
        ++lineno;
        return line;
    };

    if (next_line() != "lifestyles-dictionary v1")
        throw ParseError("not a lifestyles-dictionary v1 file", lineno);

    ShapeDictionary dict;
    auto fields = split(trim(next_line()), ' ');
    if (fields.size() < 2 || fields[0] != "metric") throw ParseError("expected metric line", lineno);
    dict.metric = DistanceKind::parse(std::string(fields[1]),
                                      fields.size() > 2 ? parse_double(fields[2], lineno) : 0.5);

    fields = split(trim(next_line()), ' ');
    if (fields.size() != 2 || fields[0] != "center_rule")
        throw ParseError("expected center_rule line", lineno);
    dict.provenance.center_rule = fields[1] == "mean" ? CenterRule::mean : CenterRule::median;

    auto read_u64 = [&](const char* key) -> std::uint64_t {
        auto f = split(trim(next_line()), ' ');
        if (f.size() != 2 || f[0] != key)
            throw ParseError(std::string("expected ") + key + " line", lineno);
        return static_cast<std::uint64_t>(parse_long(f[1], lineno));
    };
    dict.provenance.bin_size = read_u64("bin_size");
    dict.provenance.stage1_centers = read_u64("stage1_centers");
    dict.provenance.stage2_centers = read_u64("stage2_centers");
    dict.provenance.seed = read_u64("seed");
    dict.provenance.metric = dict.metric;

    std::size_t n = read_u64("shapes");
    dict.shapes.resize(n);
    for (std::size_t s = 0; s < n; ++s) {
        auto cols = split(trim(next_line()), ' ');
        if (cols.size() != 24) throw ParseError("shape row needs 24 values", lineno);
        for (std::size_t h = 0; h < 24; ++h) dict.shapes[s][h] = parse_double(cols[h], lineno);
    }
    return dict;
}

void save_counts(const CountMatrix& counts, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write '" + path + "'");
    out << "household_id";
    for (std::size_t j = 0; j < (counts.rows.empty() ? 0 : counts.rows.front().size()); ++j)
        out << ",c" << j;
    out << ",period\n";
    for (std::size_t i = 0; i < counts.rows.size(); ++i) {
        out << counts.household_ids[i];
        for (auto c : counts.rows[i]) out << ',' << c;
        out << ',' << counts.period << '\n';
    }
}

CountMatrix load_counts(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");
    std::string line;
    long lineno = 0;
    if (!std::getline(in, line)) throw ParseError("empty counts file");
    ++lineno;
    auto header = split(trim(line), ',');
    if (header.size() < 3 || header.front() != "household_id" || header.back() != "period")
        throw ParseError("bad counts header", lineno);
    std::size_t n_shapes = header.size() - 2;

    CountMatrix counts;
    while (std::getline(in, line)) {
        ++lineno;
        auto row = trim(line);
        if (row.empty()) continue;
        auto cols = split(row, ',');
        if (cols.size() != n_shapes + 2) throw ParseError("bad counts row", lineno);
        counts.household_ids.emplace_back(cols.front());
        std::vector<std::uint32_t> r(n_shapes);
        for (std::size_t j = 0; j < n_shapes; ++j)
            r[j] = static_cast<std::uint32_t>(parse_long(cols[j + 1], lineno));
        counts.rows.push_back(std::move(r));
        counts.period = std::string(cols.back());
    }
    return counts;
}

}  // namespace lifestyles
