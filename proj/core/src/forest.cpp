#include "lifestyles/forest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <tuple>

#include "lifestyles/parallel.hpp"
#include "lifestyles/rng.hpp"
#include "lifestyles/text.hpp"

namespace lifestyles {

namespace {

std::vector<int> dense_classes(const std::vector<int>& y) {
    std::vector<int> classes = y;
    std::sort(classes.begin(), classes.end());
    classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
    return classes;
}

std::size_t class_index(const std::vector<int>& classes, int label) {
    auto it = std::lower_bound(classes.begin(), classes.end(), label);
    return static_cast<std::size_t>(std::distance(classes.begin(), it));
}

void check_matrix(const std::vector<std::vector<double>>& X, std::size_t n_rows) {
    if (X.size() != n_rows) throw DimensionError("X/y size mismatch");
    if (X.empty()) throw DomainError("empty dataset");
    const std::size_t p = X.front().size();
    for (const auto& r : X) {
        if (r.size() != p) throw DimensionError("ragged feature matrix");
        for (double v : r)
            if (!std::isfinite(v)) throw DomainError("non-finite feature value");
    }
}

struct TreeBuilder {
    const std::vector<std::vector<double>>& X;
    const std::vector<std::size_t>& y_dense;
    std::size_t n_classes;
    std::size_t max_features;
    Rng& rng;
    DecisionTree& tree;

    int build(std::vector<std::size_t>& idx) {
        std::vector<std::size_t> counts(n_classes, 0);
        for (std::size_t i : idx) ++counts[y_dense[i]];
        std::size_t majority = static_cast<std::size_t>(std::distance(
            counts.begin(), std::max_element(counts.begin(), counts.end())));
        bool pure = counts[majority] == idx.size();

        if (pure || idx.size() < 2) return make_leaf(static_cast<int>(majority));

        auto [feature, threshold, found] = best_split(idx, counts);
        if (!found) return make_leaf(static_cast<int>(majority));

        std::vector<std::size_t> left_idx, right_idx;
        for (std::size_t i : idx)
            (X[i][static_cast<std::size_t>(feature)] <= threshold ? left_idx : right_idx)
                .push_back(i);
        if (left_idx.empty() || right_idx.empty()) return make_leaf(static_cast<int>(majority));

        int node = static_cast<int>(tree.nodes.size());
        tree.nodes.push_back({feature, threshold, -1, -1, 0});
        int left = build(left_idx);
        int right = build(right_idx);
        tree.nodes[static_cast<std::size_t>(node)].left = left;
        tree.nodes[static_cast<std::size_t>(node)].right = right;
        return node;
    }

    int make_leaf(int cls) {
        tree.nodes.push_back({-1, 0.0, -1, -1, cls});
        return static_cast<int>(tree.nodes.size()) - 1;
    }

    // Gini-gain maximizing (feature, threshold) over a sqrt(p) candidate
    // subset; ties resolve to the lower feature index, then lower threshold.
    std::tuple<int, double, bool> best_split(const std::vector<std::size_t>& idx,
                                             const std::vector<std::size_t>& node_counts) {
        const std::size_t p = X.front().size();
        std::vector<std::size_t> candidates(p);
        std::iota(candidates.begin(), candidates.end(), 0);
        for (std::size_t c = 0; c < max_features && c + 1 < p; ++c) {
            std::size_t j = c + static_cast<std::size_t>(rng.next_below(p - c));
            std::swap(candidates[c], candidates[j]);
        }
        candidates.resize(std::min(max_features, p));
        std::sort(candidates.begin(), candidates.end());

        const double n = static_cast<double>(idx.size());
        double parent_gini = 1.0;
        for (std::size_t c : node_counts) {
            double q = static_cast<double>(c) / n;
            parent_gini -= q * q;
        }

        int best_feature = -1;
        double best_threshold = 0.0;
        double best_gain = 1e-12;  // require a strict improvement

        std::vector<std::pair<double, std::size_t>> vals(idx.size());
        std::vector<std::size_t> left_counts(n_classes);
        for (std::size_t f : candidates) {
            for (std::size_t i = 0; i < idx.size(); ++i)
                vals[i] = {X[idx[i]][f], y_dense[idx[i]]};
            std::sort(vals.begin(), vals.end());
            if (vals.front().first == vals.back().first) continue;

            std::fill(left_counts.begin(), left_counts.end(), 0);
            std::size_t n_left = 0;
            for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
                ++left_counts[vals[i].second];
                ++n_left;
                if (vals[i].first == vals[i + 1].first) continue;

                double nl = static_cast<double>(n_left);
                double nr = n - nl;
                double gini_l = 1.0, gini_r = 1.0;
                for (std::size_t c = 0; c < n_classes; ++c) {
                    double ql = static_cast<double>(left_counts[c]) / nl;
                    double qr = static_cast<double>(node_counts[c] - left_counts[c]) / nr;
                    gini_l -= ql * ql;
                    gini_r -= qr * qr;
                }
                double gain = parent_gini - (nl * gini_l + nr * gini_r) / n;
                if (gain > best_gain) {
                    best_gain = gain;
                    best_feature = static_cast<int>(f);
                    best_threshold = vals[i].first + 0.5 * (vals[i + 1].first - vals[i].first);
                }
            }
        }
        return {best_feature, best_threshold, best_feature >= 0};
    }
};

}  // namespace

int DecisionTree::predict(const std::vector<double>& x) const {
    int node = 0;
    while (nodes[static_cast<std::size_t>(node)].feature >= 0) {
        const Node& nd = nodes[static_cast<std::size_t>(node)];
        node = x[static_cast<std::size_t>(nd.feature)] <= nd.threshold ? nd.left : nd.right;
    }
    return nodes[static_cast<std::size_t>(node)].leaf_class;
}

DataSplit split_data(const std::vector<std::vector<double>>& X, const std::vector<int>& y,
                     std::array<double, 3> fractions, std::uint64_t seed) {
    check_matrix(X, y.size());
    double fsum = fractions[0] + fractions[1] + fractions[2];
    if (std::abs(fsum - 1.0) > 1e-9) throw ConfigError("split fractions must sum to 1");

    auto classes = dense_classes(y);
    std::vector<std::vector<std::size_t>> by_class(classes.size());
    for (std::size_t i = 0; i < y.size(); ++i) by_class[class_index(classes, y[i])].push_back(i);

    DataSplit out;
    std::vector<std::size_t> pooled;
    Rng rng(derive_seed(seed, "split"));

    auto allocate = [&](std::vector<std::size_t>& idx) {
        rng.shuffle(idx);
        const double n = static_cast<double>(idx.size());
        std::array<std::size_t, 3> take{};
        std::array<double, 3> rem{};
        std::size_t assigned = 0;
        for (int s = 0; s < 3; ++s) {
            double exact = fractions[static_cast<std::size_t>(s)] * n;
            take[static_cast<std::size_t>(s)] = static_cast<std::size_t>(exact);
            rem[static_cast<std::size_t>(s)] = exact - std::floor(exact);
            assigned += take[static_cast<std::size_t>(s)];
        }
        while (assigned < idx.size()) {
            int best = 0;
            for (int s = 1; s < 3; ++s)
                if (rem[static_cast<std::size_t>(s)] > rem[static_cast<std::size_t>(best)]) best = s;
            ++take[static_cast<std::size_t>(best)];
            rem[static_cast<std::size_t>(best)] = -1.0;
            ++assigned;
        }
        std::size_t pos = 0;
        for (std::size_t i = 0; i < take[0]; ++i) out.train.push_back(idx[pos++]);
        for (std::size_t i = 0; i < take[1]; ++i) out.validation.push_back(idx[pos++]);
        for (std::size_t i = 0; i < take[2]; ++i) out.test.push_back(idx[pos++]);
    };

    for (std::size_t c = 0; c < classes.size(); ++c) {
        if (by_class[c].size() < 3) {
            out.warnings.push_back("class " + std::to_string(classes[c]) +
                                   " has fewer than 3 samples; unstratified");
            pooled.insert(pooled.end(), by_class[c].begin(), by_class[c].end());
        } else {
            allocate(by_class[c]);
        }
    }
    if (!pooled.empty()) allocate(pooled);
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.validation.begin(), out.validation.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

ForestModel rf_fit(const std::vector<std::vector<double>>& X, const std::vector<int>& y,
                   std::size_t n_estimators, std::uint64_t seed,
                   std::vector<std::string> feature_names) {
    check_matrix(X, y.size());
    if (n_estimators < 1) throw ConfigError("n_estimators must be >= 1");
    auto classes = dense_classes(y);
    if (classes.size() < 2) throw DomainError("need at least two classes to fit");

    std::vector<std::size_t> y_dense(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) y_dense[i] = class_index(classes, y[i]);

    const std::size_t p = X.front().size();
    const std::size_t max_features =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(p))));

    ForestModel model;
    model.classes = classes;
    model.feature_names = std::move(feature_names);
    model.trees.resize(n_estimators);

    parallel_for(n_estimators, [&](std::size_t b, std::size_t e) {
        for (std::size_t t = b; t < e; ++t) {
            Rng rng(derive_seed(seed, "tree" + std::to_string(t)));
            std::vector<std::size_t> bootstrap(y.size());
            for (auto& i : bootstrap) i = static_cast<std::size_t>(rng.next_below(y.size()));
            TreeBuilder builder{X, y_dense, classes.size(), max_features, rng, model.trees[t]};
            builder.build(bootstrap);
        }
    });
    return model;
}

Prediction rf_predict(const ForestModel& model, const std::vector<std::vector<double>>& X) {
    if (model.trees.empty()) throw ConfigError("unfitted model");
    check_matrix(X, X.size());
    const std::size_t k = model.classes.size();

    Prediction out;
    out.labels.resize(X.size());
    out.votes.assign(X.size(), std::vector<double>(k, 0.0));
    parallel_for(X.size(), [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            for (const auto& tree : model.trees)
                out.votes[i][static_cast<std::size_t>(tree.predict(X[i]))] += 1.0;
            std::size_t best = 0;
            for (std::size_t c = 1; c < k; ++c)
                if (out.votes[i][c] > out.votes[i][best]) best = c;
            out.labels[i] = model.classes[best];
            for (auto& v : out.votes[i]) v /= static_cast<double>(model.trees.size());
        }
    });
    return out;
}

EvalMetrics evaluate(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                     const std::vector<double>* scores) {
    if (y_true.size() != y_pred.size()) throw DimensionError("label vectors differ in length");
    if (y_true.empty()) throw DomainError("nothing to evaluate");

    std::vector<int> classes = y_true;
    classes.insert(classes.end(), y_pred.begin(), y_pred.end());
    std::sort(classes.begin(), classes.end());
    classes.erase(std::unique(classes.begin(), classes.end()), classes.end());

    EvalMetrics m;
    m.classes = classes;
    const std::size_t k = classes.size();
    m.confusion.assign(k, std::vector<std::size_t>(k, 0));
    std::size_t correct = 0;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        ++m.confusion[class_index(classes, y_true[i])][class_index(classes, y_pred[i])];
        if (y_true[i] == y_pred[i]) ++correct;
    }
    m.accuracy = static_cast<double>(correct) / static_cast<double>(y_true.size());

    for (std::size_t c = 0; c < k; ++c) {
        std::size_t tp = m.confusion[c][c];
        std::size_t fp = 0, fn = 0, support = 0;
        for (std::size_t o = 0; o < k; ++o) {
            if (o != c) {
                fp += m.confusion[o][c];
                fn += m.confusion[c][o];
            }
            support += m.confusion[c][o];
        }
        if (support == 0 && fp == 0) {
            m.notes.push_back("class " + std::to_string(classes[c]) +
                              " absent from both label vectors; omitted");
            continue;
        }
        PerClassMetrics pc;
        pc.label = classes[c];
        pc.support = support;
        pc.precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
        pc.recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
        pc.f1 = pc.precision + pc.recall > 0.0
                    ? 2.0 * pc.precision * pc.recall / (pc.precision + pc.recall)
                    : 0.0;
        m.per_class.push_back(pc);
    }

    if (scores) {
        bool binary01 = true;
        for (int v : y_true) binary01 &= v == 0 || v == 1;
        bool both = false, any0 = false, any1 = false;
        for (int v : y_true) {
            any0 |= v == 0;
            any1 |= v == 1;
        }
        both = any0 && any1;
        if (binary01 && both) {
            auto [roc, auc] = roc_auc(*scores, y_true);
            m.roc = std::move(roc);
            m.auc = auc;
        } else {
            m.notes.push_back("scores ignored: ROC/AUC needs binary 0/1 labels with both present");
        }
    }
    return m;
}

std::pair<std::vector<std::pair<double, double>>, double> roc_auc(
    const std::vector<double>& scores, const std::vector<int>& y) {
    if (scores.size() != y.size()) throw DimensionError("scores/labels size mismatch");
    std::size_t n_pos = 0, n_neg = 0;
    for (int v : y) {
        if (v == 1) ++n_pos;
        else if (v == 0) ++n_neg;
        else throw DomainError("labels must be 0 or 1");
    }
    if (n_pos == 0 || n_neg == 0) throw DomainError("both classes required for ROC");

    std::vector<std::size_t> order(y.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    std::vector<std::pair<double, double>> roc;
    roc.emplace_back(0.0, 0.0);
    std::size_t tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) {
            if (y[order[j]] == 1) ++tp;
            else ++fp;
            ++j;
        }
        roc.emplace_back(static_cast<double>(fp) / static_cast<double>(n_neg),
                         static_cast<double>(tp) / static_cast<double>(n_pos));
        i = j;
    }

    // rank-sum AUC with midranks: ties contribute half
    std::vector<std::size_t> asc(order.rbegin(), order.rend());
    double rank_sum_pos = 0.0;
    std::size_t a = 0;
    while (a < asc.size()) {
        std::size_t b = a;
        while (b < asc.size() && scores[asc[b]] == scores[asc[a]]) ++b;
        double midrank = 0.5 * (static_cast<double>(a + 1) + static_cast<double>(b));
        for (std::size_t t = a; t < b; ++t)
            if (y[asc[t]] == 1) rank_sum_pos += midrank;
        a = b;
    }
    double auc = (rank_sum_pos -
                  static_cast<double>(n_pos) * (static_cast<double>(n_pos) + 1.0) / 2.0) /
                 (static_cast<double>(n_pos) * static_cast<double>(n_neg));
    return {std::move(roc), auc};
}

std::vector<std::size_t> chi2_select(const std::vector<std::vector<double>>& X_scaled,
                                     const std::vector<int>& y, std::size_t top_k) {
    check_matrix(X_scaled, y.size());
    const std::size_t p = X_scaled.front().size();
    for (const auto& r : X_scaled)
        for (double v : r)
            if (v < 0.0) throw DomainError("chi2 screening requires non-negative features");

    auto classes = dense_classes(y);
    std::vector<double> class_count(classes.size(), 0.0);
    for (int v : y) class_count[class_index(classes, v)] += 1.0;
    const double n = static_cast<double>(y.size());

    std::vector<double> stat(p, 0.0);
    std::vector<double> observed(classes.size());
    for (std::size_t f = 0; f < p; ++f) {
        std::fill(observed.begin(), observed.end(), 0.0);
        double total = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            observed[class_index(classes, y[i])] += X_scaled[i][f];
            total += X_scaled[i][f];
        }
        double s = 0.0;
        for (std::size_t c = 0; c < classes.size(); ++c) {
            double expected = class_count[c] / n * total;
            if (expected > 0.0) {
                double d = observed[c] - expected;
                s += d * d / expected;
            }
        }
        stat[f] = s;
    }

    std::vector<std::size_t> order(p);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return stat[a] > stat[b]; });
    order.resize(std::min(top_k, p));
    return order;
}

std::vector<double> permutation_importance(const ForestModel& model,
                                           const std::vector<std::vector<double>>& X,
                                           const std::vector<int>& y, std::size_t n_repeats,
                                           std::uint64_t seed) {
    if (n_repeats < 1) throw ConfigError("n_repeats must be >= 1");
    check_matrix(X, y.size());
    const std::size_t p = X.front().size();
    double baseline = evaluate(y, rf_predict(model, X).labels).accuracy;

    std::vector<double> importance(p, 0.0);
    parallel_for(p, [&](std::size_t b, std::size_t e) {
        for (std::size_t f = b; f < e; ++f) {
            double drop_sum = 0.0;
            for (std::size_t r = 0; r < n_repeats; ++r) {
                Rng rng(derive_seed(seed, "perm.f" + std::to_string(f) + ".r" + std::to_string(r)));
                std::vector<double> column(X.size());
                for (std::size_t i = 0; i < X.size(); ++i) column[i] = X[i][f];
                rng.shuffle(column);
                auto shuffled = X;
                for (std::size_t i = 0; i < X.size(); ++i) shuffled[i][f] = column[i];
                drop_sum += baseline - evaluate(y, rf_predict(model, shuffled).labels).accuracy;
            }
            importance[f] = drop_sum / static_cast<double>(n_repeats);
        }
    });
    return importance;
}

void save_metrics_report(const EvalMetrics& m, const std::string& txt_path,
                         const std::string& csv_path) {
    {
        std::ofstream out(txt_path);
        if (!out) throw ParseError("cannot write '" + txt_path + "'");
        out << "class | precision | recall | f1 | support\n";
        for (const auto& pc : m.per_class) {
            char buf[96];
            std::snprintf(buf, sizeof(buf), "%5d | %9.4f | %6.4f | %6.4f | %zu\n", pc.label,
                          pc.precision, pc.recall, pc.f1, pc.support);
            out << buf;
        }
        char acc[48];
        std::snprintf(acc, sizeof(acc), "accuracy = %.4f\n", m.accuracy);
        out << acc;
        if (m.auc >= 0.0) {
            char auc[32];
            std::snprintf(auc, sizeof(auc), "auc = %.6f\n", m.auc);
            out << auc;
        }
        for (const auto& n : m.notes) out << "note: " << n << '\n';
    }
    {
        std::ofstream out(csv_path);
        if (!out) throw ParseError("cannot write '" + csv_path + "'");
        out << "class,precision,recall,f1,support\n";
        for (const auto& pc : m.per_class)
            out << pc.label << ',' << format_double(pc.precision) << ',' << format_double(pc.recall)
                << ',' << format_double(pc.f1) << ',' << pc.support << '\n';
        out << "accuracy," << format_double(m.accuracy) << ",,,\n";
        if (m.auc >= 0.0) out << "auc," << format_double(m.auc) << ",,,\n";
    }
}

void save_roc(const std::vector<std::pair<double, double>>& roc, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write '" + path + "'");
    out << "fpr,tpr\n";
    for (auto [fpr, tpr] : roc) out << format_double(fpr) << ',' << format_double(tpr) << '\n';
}

}  // namespace lifestyles
