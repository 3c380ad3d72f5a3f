#include "lifestyles/lda.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "lifestyles/parallel.hpp"
#include "lifestyles/rng.hpp"
#include "lifestyles/text.hpp"

namespace lifestyles {

namespace {

constexpr std::size_t kDocMaxIter = 120;
constexpr double kDocTol = 1e-4;      // mean absolute change of a doc's gamma
constexpr std::size_t kBlock = 256;   // fixed reduction block; keeps parallel
                                      // sums identical to sequential ones

double digamma(double x) {
    double result = 0.0;
    while (x < 6.0) {
        result -= 1.0 / x;
        x += 1.0;
    }
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    return result + std::log(x) - 0.5 * inv -
           inv2 * (1.0 / 12.0 - inv2 * (1.0 / 120.0 - inv2 / 252.0));
}

struct SparseDoc {
    std::vector<std::uint32_t> word;
    std::vector<double> count;
    double total = 0.0;
};

std::vector<SparseDoc> to_sparse(const CountMatrix& counts) {
    std::vector<SparseDoc> docs(counts.rows.size());
    for (std::size_t j = 0; j < counts.rows.size(); ++j) {
        for (std::size_t v = 0; v < counts.rows[j].size(); ++v) {
            if (counts.rows[j][v] == 0) continue;
            docs[j].word.push_back(static_cast<std::uint32_t>(v));
            docs[j].count.push_back(static_cast<double>(counts.rows[j][v]));
            docs[j].total += static_cast<double>(counts.rows[j][v]);
        }
    }
    return docs;
}

// One document's variational loop. exp_elog_psi is exp(E[log psi]) (fit) or
// psi itself (transform). Returns gamma; phi-weighted counts go to sstats
// when provided.
void doc_posterior(const SparseDoc& doc, const std::vector<std::vector<double>>& exp_elog_psi,
                   std::size_t K, double alpha, std::vector<double>& gamma,
                   std::vector<double>* sstats_flat) {
    gamma.assign(K, alpha + doc.total / static_cast<double>(K));
    if (doc.word.empty()) return;

    std::vector<double> exp_elog_theta(K);
    std::vector<double> phi_norm(doc.word.size());
    std::vector<double> next(K);

    for (std::size_t it = 0; it < kDocMaxIter; ++it) {
        double gsum = std::accumulate(gamma.begin(), gamma.end(), 0.0);
        double dg = digamma(gsum);
        for (std::size_t k = 0; k < K; ++k) exp_elog_theta[k] = std::exp(digamma(gamma[k]) - dg);

        for (std::size_t w = 0; w < doc.word.size(); ++w) {
            double denom = 0.0;
            const std::uint32_t v = doc.word[w];
            for (std::size_t k = 0; k < K; ++k) denom += exp_elog_theta[k] * exp_elog_psi[k][v];
            phi_norm[w] = denom > 0.0 ? doc.count[w] / denom : 0.0;
        }
        std::fill(next.begin(), next.end(), alpha);
        for (std::size_t w = 0; w < doc.word.size(); ++w) {
            const std::uint32_t v = doc.word[w];
            for (std::size_t k = 0; k < K; ++k)
                next[k] += exp_elog_theta[k] * exp_elog_psi[k][v] * phi_norm[w];
        }
        double change = 0.0;
        for (std::size_t k = 0; k < K; ++k) change += std::abs(next[k] - gamma[k]);
        gamma.swap(next);
        if (change / static_cast<double>(K) < kDocTol) break;
    }

    if (sstats_flat) {
        double gsum = std::accumulate(gamma.begin(), gamma.end(), 0.0);
        double dg = digamma(gsum);
        for (std::size_t k = 0; k < K; ++k) exp_elog_theta[k] = std::exp(digamma(gamma[k]) - dg);
        const std::size_t V = exp_elog_psi.front().size();
        for (std::size_t w = 0; w < doc.word.size(); ++w) {
            const std::uint32_t v = doc.word[w];
            double denom = 0.0;
            for (std::size_t k = 0; k < K; ++k) denom += exp_elog_theta[k] * exp_elog_psi[k][v];
            if (denom <= 0.0) continue;
            double scale = doc.count[w] / denom;
            for (std::size_t k = 0; k < K; ++k)
                (*sstats_flat)[k * V + v] += exp_elog_theta[k] * exp_elog_psi[k][v] * scale;
        }
    }
}

std::vector<std::vector<double>> normalize_rows(const std::vector<std::vector<double>>& m) {
    auto out = m;
    for (auto& row : out) {
        double s = std::accumulate(row.begin(), row.end(), 0.0);
        if (s > 0.0)
            for (auto& v : row) v /= s;
        else
            for (auto& v : row) v = 1.0 / static_cast<double>(row.size());
    }
    return out;
}

}  // namespace

AttributeModel lda_fit(const CountMatrix& counts, std::size_t K, double alpha, double beta,
                       std::size_t max_iter, double tol, std::uint64_t seed) {
    if (K < 1) throw ConfigError("K must be >= 1");
    if (!(alpha > 0.0) || !(beta > 0.0)) throw ConfigError("alpha and beta must be > 0");
    if (max_iter < 1) throw ConfigError("max_iter must be >= 1");
    if (counts.rows.empty()) throw DomainError("empty count matrix");
    const std::size_t M = counts.rows.size();
    const std::size_t V = counts.rows.front().size();
    for (const auto& r : counts.rows)
        if (r.size() != V) throw DimensionError("ragged count matrix");

    auto docs = to_sparse(counts);

    AttributeModel model;
    model.K = K;
    model.alpha = alpha;
    model.beta = beta;

    for (std::size_t j = 0; j < M; ++j)
        if (docs[j].word.empty())
            model.warnings.push_back("household '" + counts.household_ids[j] +
                                     "' has an all-zero count row; using the prior-mean mixture");

    // lambda init: mean-1 gamma noise, matching common variational LDA practice
    std::vector<std::vector<double>> lambda(K, std::vector<double>(V));
    {
        Rng rng(derive_seed(seed, "lda.init"));
        for (auto& row : lambda)
            for (auto& v : row) v = rng.gamma(100.0) * 0.01;
    }

    std::vector<std::vector<double>> gamma(M);
    std::vector<std::vector<double>> exp_elog_psi(K, std::vector<double>(V));
    std::vector<std::vector<double>> elog_psi(K, std::vector<double>(V));

    const std::size_t n_blocks = (M + kBlock - 1) / kBlock;
    std::vector<std::vector<double>> block_sstats(n_blocks);
    std::vector<double> block_bound(n_blocks);

    double prev_bound = 0.0;
    bool have_prev = false;

    for (std::size_t iter = 0; iter < max_iter; ++iter) {
        for (std::size_t k = 0; k < K; ++k) {
            double lsum = std::accumulate(lambda[k].begin(), lambda[k].end(), 0.0);
            double dg = digamma(lsum);
            for (std::size_t v = 0; v < V; ++v) {
                elog_psi[k][v] = digamma(lambda[k][v]) - dg;
                exp_elog_psi[k][v] = std::exp(elog_psi[k][v]);
            }
        }

        parallel_for(n_blocks, [&](std::size_t bb, std::size_t be) {
            for (std::size_t blk = bb; blk < be; ++blk) {
                auto& sstats = block_sstats[blk];
                sstats.assign(K * V, 0.0);
                std::size_t lo = blk * kBlock, hi = std::min(M, lo + kBlock);
                for (std::size_t j = lo; j < hi; ++j)
                    doc_posterior(docs[j], exp_elog_psi, K, alpha, gamma[j], &sstats);
            }
        });

        for (std::size_t k = 0; k < K; ++k)
            for (std::size_t v = 0; v < V; ++v) {
                double s = beta;
                for (std::size_t blk = 0; blk < n_blocks; ++blk)
                    s += block_sstats[blk][k * V + v];
                lambda[k][v] = s;
            }

        // evidence lower bound with the current gamma/lambda
        for (std::size_t k = 0; k < K; ++k) {
            double lsum = std::accumulate(lambda[k].begin(), lambda[k].end(), 0.0);
            double dg = digamma(lsum);
            for (std::size_t v = 0; v < V; ++v) {
                elog_psi[k][v] = digamma(lambda[k][v]) - dg;
                exp_elog_psi[k][v] = std::exp(elog_psi[k][v]);
            }
        }
        parallel_for(n_blocks, [&](std::size_t bb, std::size_t be) {
            for (std::size_t blk = bb; blk < be; ++blk) {
                double score = 0.0;
                std::size_t lo = blk * kBlock, hi = std::min(M, lo + kBlock);
                std::vector<double> elog_theta(K);
                for (std::size_t j = lo; j < hi; ++j) {
                    const auto& g = gamma[j];
                    double gsum = std::accumulate(g.begin(), g.end(), 0.0);
                    double dgs = digamma(gsum);
                    for (std::size_t k = 0; k < K; ++k) elog_theta[k] = digamma(g[k]) - dgs;
                    for (std::size_t w = 0; w < docs[j].word.size(); ++w) {
                        const std::uint32_t v = docs[j].word[w];
                        double tmax = -std::numeric_limits<double>::infinity();
                        for (std::size_t k = 0; k < K; ++k)
                            tmax = std::max(tmax, elog_theta[k] + elog_psi[k][v]);
                        double acc = 0.0;
                        for (std::size_t k = 0; k < K; ++k)
                            acc += std::exp(elog_theta[k] + elog_psi[k][v] - tmax);
                        score += docs[j].count[w] * (tmax + std::log(acc));
                    }
                    for (std::size_t k = 0; k < K; ++k) {
                        score += (alpha - g[k]) * elog_theta[k];
                        score += std::lgamma(g[k]);
                    }
                    score -= std::lgamma(gsum);
                    score += std::lgamma(alpha * static_cast<double>(K)) -
                             static_cast<double>(K) * std::lgamma(alpha);
                }
                block_bound[blk] = score;
            }
        });
        double bound = 0.0;
        for (std::size_t blk = 0; blk < n_blocks; ++blk) bound += block_bound[blk];
        for (std::size_t k = 0; k < K; ++k) {
            double lsum = 0.0;
            for (std::size_t v = 0; v < V; ++v) {
                bound += (beta - lambda[k][v]) * elog_psi[k][v];
                bound += std::lgamma(lambda[k][v]);
                lsum += lambda[k][v];
            }
            bound -= std::lgamma(lsum);
            bound += std::lgamma(beta * static_cast<double>(V)) -
                     static_cast<double>(V) * std::lgamma(beta);
        }
        model.log_likelihood_trace.push_back(bound);

        if (have_prev) {
            double rel = std::abs(bound - prev_bound) / std::max(1.0, std::abs(prev_bound));
            if (rel < tol) break;
        }
        prev_bound = bound;
        have_prev = true;
    }

    model.psi = normalize_rows(lambda);
    model.theta = normalize_rows(gamma);
    return model;
}

std::vector<std::vector<double>> lda_transform(const CountMatrix& counts,
                                               const AttributeModel& model) {
    if (model.K == 0 || model.psi.empty()) throw ConfigError("unfitted model");
    const std::size_t V = model.psi.front().size();
    for (const auto& r : counts.rows)
        if (r.size() != V)
            throw DimensionError("count row width " + std::to_string(r.size()) +
                                 " does not match model vocabulary " + std::to_string(V));

    auto docs = to_sparse(counts);
    std::vector<std::vector<double>> theta(docs.size());
    parallel_for(docs.size(), [&](std::size_t b, std::size_t e) {
        for (std::size_t j = b; j < e; ++j) {
            std::vector<double> g;
            doc_posterior(docs[j], model.psi, model.K, model.alpha, g, nullptr);
            double s = std::accumulate(g.begin(), g.end(), 0.0);
            for (auto& v : g) v /= s;
            theta[j] = std::move(g);
        }
    });
    return theta;
}

std::pair<CountMatrix, SampleTrace> lda_sample(const AttributeModel& model, std::size_t n_docs,
                                               std::size_t doc_len, std::uint64_t seed,
                                               bool use_model_theta) {
    if (model.K == 0 || model.psi.empty()) throw ConfigError("unfitted model");
    if (use_model_theta && n_docs != model.theta.size())
        throw ConfigError("use_model_theta requires n_docs == model theta rows");
    const std::size_t V = model.psi.front().size();

    CountMatrix counts;
    counts.period = "sampled";
    counts.household_ids.resize(n_docs);
    counts.rows.assign(n_docs, std::vector<std::uint32_t>(V, 0));
    SampleTrace trace;
    trace.z.assign(n_docs, {});
    trace.s.assign(n_docs, {});

    Rng rng(derive_seed(seed, "lda.sample"));
    for (std::size_t j = 0; j < n_docs; ++j) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "D%06zu", j);
        counts.household_ids[j] = buf;
        std::vector<double> theta =
            use_model_theta ? model.theta[j] : rng.dirichlet(model.alpha, model.K);
        trace.z[j].resize(doc_len);
        trace.s[j].resize(doc_len);
        for (std::size_t t = 0; t < doc_len; ++t) {
            std::size_t z = rng.categorical(theta);
            std::size_t s = rng.categorical(model.psi[z]);
            trace.z[j][t] = static_cast<int>(z);
            trace.s[j][t] = static_cast<int>(s);
            ++counts.rows[j][s];
        }
    }
    return {std::move(counts), std::move(trace)};
}

std::vector<std::array<double, 24>> attribute_shape(const AttributeModel& model,
                                                    const ShapeDictionary& dict) {
    if (model.psi.empty() || model.psi.front().size() != dict.shapes.size())
        throw DimensionError("model vocabulary does not match dictionary size");
    std::vector<std::array<double, 24>> composites(model.K);
    for (std::size_t k = 0; k < model.K; ++k) {
        composites[k].fill(0.0);
        for (std::size_t i = 0; i < dict.shapes.size(); ++i)
            for (std::size_t h = 0; h < 24; ++h)
                composites[k][h] += model.psi[k][i] * dict.shapes[i][h];
    }
    return composites;
}

AttributeModel merge_attributes(const AttributeModel& model, const ShapeDictionary& dict,
                                double threshold) {
    if (!(threshold > 0.0 && threshold < 2.0))
        throw ConfigError("merge threshold must lie in (0,2)");
    auto composites = attribute_shape(model, dict);
    const std::size_t K = model.K;

    // union-find over the similarity graph
    std::vector<std::size_t> parent(K);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (std::size_t a = 0; a + 1 < K; ++a)
        for (std::size_t b = a + 1; b < K; ++b) {
            double d = correlation_distance(composites[a], composites[b]);
            if (d < threshold) {
                auto ra = find(a), rb = find(b);
                if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
            }
        }

    std::vector<std::vector<std::size_t>> groups;
    std::vector<int> group_of(K, -1);
    for (std::size_t k = 0; k < K; ++k) {
        std::size_t root = find(k);
        if (group_of[root] < 0) {
            group_of[root] = static_cast<int>(groups.size());
            groups.push_back({});
        }
        group_of[k] = group_of[root];
        groups[static_cast<std::size_t>(group_of[root])].push_back(k);
    }
    if (groups.size() == K) return model;  // nothing similar

    // attribute usage mass weights the psi combination
    std::vector<double> weight(K, 1.0);
    if (!model.theta.empty()) {
        for (auto& w : weight) w = 0.0;
        for (const auto& row : model.theta)
            for (std::size_t k = 0; k < K; ++k) weight[k] += row[k];
    }

    AttributeModel merged;
    merged.K = groups.size();
    merged.alpha = model.alpha;
    merged.beta = model.beta;
    merged.dictionary_fingerprint = model.dictionary_fingerprint;
    merged.log_likelihood_trace = model.log_likelihood_trace;
    merged.warnings = model.warnings;

    const std::size_t V = model.psi.front().size();
    merged.psi.assign(groups.size(), std::vector<double>(V, 0.0));
    for (std::size_t g = 0; g < groups.size(); ++g) {
        double wsum = 0.0;
        for (std::size_t k : groups[g]) wsum += weight[k];
        for (std::size_t k : groups[g]) {
            double w = wsum > 0.0 ? weight[k] / wsum : 1.0 / static_cast<double>(groups[g].size());
            for (std::size_t v = 0; v < V; ++v) merged.psi[g][v] += w * model.psi[k][v];
        }
        double rsum = std::accumulate(merged.psi[g].begin(), merged.psi[g].end(), 0.0);
        if (rsum > 0.0)
            for (auto& v : merged.psi[g]) v /= rsum;
    }

    merged.theta.assign(model.theta.size(), std::vector<double>(groups.size(), 0.0));
    for (std::size_t j = 0; j < model.theta.size(); ++j)
        for (std::size_t k = 0; k < K; ++k)
            merged.theta[j][static_cast<std::size_t>(group_of[k])] += model.theta[j][k];

    return merged;
}

std::string serialize_model(const AttributeModel& model) {
    std::ostringstream out;
    out << "lifestyles-attributes v1\n";
    out << "K " << model.K << '\n';
    out << "alpha " << format_double(model.alpha) << '\n';
    out << "beta " << format_double(model.beta) << '\n';
    char fp[24];
    std::snprintf(fp, sizeof(fp), "%016llx",
                  static_cast<unsigned long long>(model.dictionary_fingerprint));
    out << "dictionary_fingerprint " << fp << '\n';
    out << "vocabulary " << (model.psi.empty() ? 0 : model.psi.front().size()) << '\n';
    out << "households " << model.theta.size() << '\n';
    out << "psi\n";
    for (const auto& row : model.psi) {
        for (std::size_t v = 0; v < row.size(); ++v) {
            if (v) out << ' ';
            out << format_double(row[v]);
        }
        out << '\n';
    }
    out << "theta\n";
    for (const auto& row : model.theta) {
        for (std::size_t k = 0; k < row.size(); ++k) {
            if (k) out << ' ';
            out << format_double(row[k]);
        }
        out << '\n';
    }
    return out.str();
}

void save_model(const AttributeModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write '" + path + "'");
    out << serialize_model(model);
}

AttributeModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");
    std::string line;
    long lineno = 0;
    auto next_line = [&]() -> std::string& {
        if (!std::getline(in, line)) throw ParseError("truncated model file", lineno);
        ++lineno;
        return line;
    };
    if (next_line() != "lifestyles-attributes v1")
        throw ParseError("not a lifestyles-attributes v1 file", lineno);

    AttributeModel model;
    auto read_field = [&](const char* key) -> std::string {
        auto f = split(trim(next_line()), ' ');
        if (f.size() != 2 || f[0] != key)
            throw ParseError(std::string("expected ") + key + " line", lineno);
        return std::string(f[1]);
    };
    model.K = static_cast<std::size_t>(parse_long(read_field("K"), lineno));
    model.alpha = parse_double(read_field("alpha"), lineno);
    model.beta = parse_double(read_field("beta"), lineno);
    model.dictionary_fingerprint =
        std::stoull(read_field("dictionary_fingerprint"), nullptr, 16);
    std::size_t V = static_cast<std::size_t>(parse_long(read_field("vocabulary"), lineno));
    std::size_t M = static_cast<std::size_t>(parse_long(read_field("households"), lineno));

    if (next_line() != "psi") throw ParseError("expected psi section", lineno);
    model.psi.assign(model.K, std::vector<double>(V));
    for (auto& row : model.psi) {
        auto cols = split(trim(next_line()), ' ');
        if (cols.size() != V) throw ParseError("bad psi row width", lineno);
        for (std::size_t v = 0; v < V; ++v) row[v] = parse_double(cols[v], lineno);
    }
    if (next_line() != "theta") throw ParseError("expected theta section", lineno);
    model.theta.assign(M, std::vector<double>(model.K));
    for (auto& row : model.theta) {
        auto cols = split(trim(next_line()), ' ');
        if (cols.size() != model.K) throw ParseError("bad theta row width", lineno);
        for (std::size_t k = 0; k < model.K; ++k) row[k] = parse_double(cols[k], lineno);
    }
    return model;
}

}  // namespace lifestyles
