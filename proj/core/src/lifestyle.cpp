#include "lifestyles/lifestyle.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "lifestyles/clustering.hpp"
#include "lifestyles/text.hpp"

namespace lifestyles {

namespace {

const DistanceKind kEuclidean{Metric::euclidean, 0.5};

LifestyleModel from_clustering(Clustering fit) {
    // relabel by descending cluster size; ties keep center order
    std::vector<std::size_t> sizes(fit.centers.size(), 0);
    for (int l : fit.labels)
        if (l >= 0) ++sizes[static_cast<std::size_t>(l)];
    std::vector<std::size_t> order(fit.centers.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return sizes[a] > sizes[b]; });

    LifestyleModel model;
    model.inertia = fit.inertia;
    model.centers.resize(fit.centers.size());
    for (std::size_t rank = 0; rank < order.size(); ++rank)
        model.centers[rank] = std::move(fit.centers[order[rank]]);
    return model;
}

}  // namespace

LifestyleModel fit_lifestyles(const std::vector<std::vector<double>>& theta, std::size_t k,
                              std::uint64_t seed) {
    return from_clustering(kcenter_fit(theta, k, kEuclidean, CenterRule::mean, seed));
}

std::vector<std::pair<std::size_t, double>> elbow_curve(
    const std::vector<std::vector<double>>& theta, const std::vector<std::size_t>& k_range,
    std::uint64_t seed) {
    for (std::size_t i = 1; i < k_range.size(); ++i)
        if (k_range[i] <= k_range[i - 1]) throw ConfigError("k_range must be sorted ascending");

    std::vector<std::pair<std::size_t, double>> curve;
    Points prev_centers;
    double prev_inertia = std::numeric_limits<double>::infinity();
    for (std::size_t k : k_range) {
        auto fit = kcenter_fit(theta, k, kEuclidean, CenterRule::mean,
                               derive_seed(seed, "elbow.k" + std::to_string(k)));
        // adding the worst-served point as a center can only improve on the
        // previous k, so a warm start repairs any seeding regression
        if (!prev_centers.empty() && fit.inertia > prev_inertia) {
            Points warm = prev_centers;
            while (warm.size() < k) {
                std::size_t worst = 0;
                double worst_cost = -1.0;
                for (std::size_t i = 0; i < theta.size(); ++i) {
                    double best = std::numeric_limits<double>::infinity();
                    for (const auto& c : warm)
                        best = std::min(best, assignment_cost(kEuclidean, theta[i], c));
                    if (best > worst_cost) {
                        worst_cost = best;
                        worst = i;
                    }
                }
                warm.push_back(theta[worst]);
            }
            auto warm_fit = kcenter_fit_from(theta, std::move(warm), kEuclidean, CenterRule::mean);
            if (warm_fit.inertia < fit.inertia) fit = std::move(warm_fit);
        }
        curve.emplace_back(k, fit.inertia);
        prev_centers = std::move(fit.centers);
        prev_inertia = fit.inertia;
    }
    return curve;
}

std::size_t assign(const std::vector<double>& theta_row, const LifestyleModel& model) {
    if (model.centers.empty()) throw ConfigError("lifestyle model has no centers");
    if (theta_row.size() != model.centers.front().size())
        throw DimensionError("mixture dimension does not match lifestyle centers");
    std::size_t best = 0;
    double best_cost = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < model.centers.size(); ++c) {
        double d = assignment_cost(kEuclidean, theta_row, model.centers[c]);
        if (d < best_cost) {
            best = c;
            best_cost = d;
        }
    }
    return best;
}

TransitionTable transitions(const std::vector<std::array<int, 4>>& seasonal_labels) {
    int max_label = -1;
    for (std::size_t i = 0; i < seasonal_labels.size(); ++i)
        for (int s = 0; s < 4; ++s) {
            if (seasonal_labels[i][static_cast<std::size_t>(s)] < 0)
                throw DomainError("household row " + std::to_string(i) + " is missing season " +
                                  kSeasonNames[s]);
            max_label = std::max(max_label, seasonal_labels[i][static_cast<std::size_t>(s)]);
        }
    const std::size_t k = static_cast<std::size_t>(max_label + 1);

    TransitionTable table;
    table.seasons = {Season::Autumn, Season::Winter, Season::Spring, Season::Summer};
    table.counts.assign(3, std::vector<std::vector<std::size_t>>(k, std::vector<std::size_t>(k, 0)));
    for (const auto& labels : seasonal_labels)
        for (std::size_t p = 0; p < 3; ++p)
            ++table.counts[p][static_cast<std::size_t>(labels[p])]
                          [static_cast<std::size_t>(labels[p + 1])];
    return table;
}

ChangerLabels changer_split(const std::vector<std::string>& household_ids,
                            const std::vector<std::array<int, 4>>& seasonal_labels) {
    if (household_ids.size() != seasonal_labels.size())
        throw DimensionError("ids/labels size mismatch");
    int max_label = -1;
    for (const auto& l : seasonal_labels)
        for (int s = 0; s < 4; ++s) {
            if (l[static_cast<std::size_t>(s)] < 0) throw DomainError("missing seasonal label");
            max_label = std::max(max_label, l[static_cast<std::size_t>(s)]);
        }

    ChangerLabels out;
    out.household_ids = household_ids;
    out.changer.resize(seasonal_labels.size());
    out.per_lifestyle.assign(static_cast<std::size_t>(max_label + 1), {});
    for (std::size_t i = 0; i < seasonal_labels.size(); ++i) {
        const auto& l = seasonal_labels[i];
        bool constant = l[0] == l[1] && l[1] == l[2] && l[2] == l[3];
        out.changer[i] = constant ? 0 : 1;
        for (int s = 0; s < 4; ++s) {
            bool already = false;
            for (int t = 0; t < s; ++t)
                already |= l[static_cast<std::size_t>(t)] == l[static_cast<std::size_t>(s)];
            if (already) continue;
            std::size_t lifestyle = static_cast<std::size_t>(l[static_cast<std::size_t>(s)]);
            out.per_lifestyle[lifestyle].emplace_back(i, constant ? 0 : 1);
        }
    }
    return out;
}

SeasonalThetas seasonal_thetas(const Dataset& data, const ShapeDictionary& dict,
                               const AttributeModel& model) {
    SeasonalThetas out;
    auto parts = partition_seasons(data);
    for (int s = 0; s < 4; ++s) {
        if (parts[static_cast<std::size_t>(s)].households.empty() ||
            parts[static_cast<std::size_t>(s)].total_days() == 0) {
            out.present[static_cast<std::size_t>(s)] = false;
            out.warnings.push_back(std::string("season ") + kSeasonNames[s] +
                                   " has no days; skipped");
            continue;
        }
        auto counts = encode_counts(data, dict, static_cast<Season>(s));
        out.theta[static_cast<std::size_t>(s)] = lda_transform(counts, model);
        out.present[static_cast<std::size_t>(s)] = true;
    }
    return out;
}

void save_seasonal_labels(const std::vector<std::string>& household_ids,
                          const std::vector<std::array<int, 4>>& seasonal_labels,
                          const ChangerLabels& changer, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write '" + path + "'");
    out << "household_id,autumn,winter,spring,summer,changer_flag\n";
    for (std::size_t i = 0; i < household_ids.size(); ++i) {
        out << household_ids[i];
        for (int s = 0; s < 4; ++s) out << ',' << seasonal_labels[i][static_cast<std::size_t>(s)];
        out << ',' << (changer.changer[i] ? "Changer" : "NoChanger") << '\n';
    }
}

void save_transition_flows(const TransitionTable& table, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write '" + path + "'");
    out << "source,target,season_pair,count\n";
    for (std::size_t p = 0; p < table.counts.size(); ++p) {
        std::string pair = std::string(season_name(table.seasons[p])) + "_" +
                           season_name(table.seasons[p + 1]);
        for (std::size_t a = 0; a < table.counts[p].size(); ++a)
            for (std::size_t b = 0; b < table.counts[p][a].size(); ++b)
                out << a << ',' << b << ',' << pair << ',' << table.counts[p][a][b] << '\n';
    }
}

std::string serialize_lifestyles(const LifestyleModel& model) {
    std::ostringstream out;
    out << "lifestyles-centers v1\n";
    out << "k " << model.centers.size() << '\n';
    out << "dim " << (model.centers.empty() ? 0 : model.centers.front().size()) << '\n';
    out << "inertia " << format_double(model.inertia) << '\n';
    for (std::size_t c = 0; c < model.centers.size(); ++c) {
        std::string name = c < model.names.size() ? model.names[c] : "lifestyle_" + std::to_string(c);
        out << name;
        for (double v : model.centers[c]) out << ' ' << format_double(v);
        out << '\n';
    }
    return out.str();
}

void save_lifestyles(const LifestyleModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write '" + path + "'");
    out << serialize_lifestyles(model);
}

LifestyleModel load_lifestyles(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");
    std::string line;
    long lineno = 0;
    auto next_line = [&]() -> std::string& {
        if (!std::getline(in, line)) throw ParseError("truncated lifestyle file", lineno);
        ++lineno;
        return line;
    };
    if (next_line() != "lifestyles-centers v1")
        throw ParseError("not a lifestyles-centers v1 file", lineno);
    auto read_field = [&](const char* key) -> std::string {
        auto f = split(trim(next_line()), ' ');
        if (f.size() != 2 || f[0] != key)
            throw ParseError(std::string("expected ") + key + " line", lineno);
        return std::string(f[1]);
    };
    LifestyleModel model;
    std::size_t k = static_cast<std::size_t>(parse_long(read_field("k"), lineno));
    std::size_t dim = static_cast<std::size_t>(parse_long(read_field("dim"), lineno));
    model.inertia = parse_double(read_field("inertia"), lineno);
    model.centers.assign(k, std::vector<double>(dim));
    model.names.resize(k);
    for (std::size_t c = 0; c < k; ++c) {
        auto cols = split(trim(next_line()), ' ');
        if (cols.size() != dim + 1) throw ParseError("bad center row", lineno);
        model.names[c] = std::string(cols[0]);
        for (std::size_t d = 0; d < dim; ++d) model.centers[c][d] = parse_double(cols[d + 1], lineno);
    }
    return model;
}

}  // namespace lifestyles
