#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "lifestyles/dictionary.hpp"

namespace lifestyles {

// Latent attribute model over dictionary shapes. theta rows are per-household
// posterior-mean mixtures, psi rows per-attribute shape distributions; both
// lie on the probability simplex.
struct AttributeModel {
    std::size_t K = 0;
    double alpha = 0.0;  // symmetric Dirichlet prior on mixtures
    double beta = 0.0;   // symmetric Dirichlet prior on shape weights
    std::vector<std::vector<double>> theta;  // M x K
    std::vector<std::vector<double>> psi;    // K x V
    std::vector<double> log_likelihood_trace;  // evidence lower bound per iteration
    std::uint64_t dictionary_fingerprint = 0;
    std::vector<std::string> warnings;
};

// Token-level draws from the generative process.
struct SampleTrace {
    std::vector<std::vector<int>> z;  // attribute assignment per document token
    std::vector<std::vector<int>> s;  // shape index per document token
};

inline double default_alpha(std::size_t k) { return 1.0 / static_cast<double>(k); }
inline double default_beta(std::size_t vocabulary) {
    return 1.0 / static_cast<double>(vocabulary);
}

// Mean-field variational EM. Stops when the relative bound improvement falls
// below tol or after max_iter iterations. All-zero count rows get the
// prior-mean mixture and a warning.
AttributeModel lda_fit(const CountMatrix& counts, std::size_t K, double alpha, double beta,
                       std::size_t max_iter, double tol, std::uint64_t seed);

// Posterior mixtures for new counts with psi frozen.
std::vector<std::vector<double>> lda_transform(const CountMatrix& counts,
                                               const AttributeModel& model);

// Runs the generative steps: mixtures from Dir(alpha) (or the model's own
// theta rows when use_model_theta is set), then per-token attribute and shape
// draws.
std::pair<CountMatrix, SampleTrace> lda_sample(const AttributeModel& model, std::size_t n_docs,
                                               std::size_t doc_len, std::uint64_t seed,
                                               bool use_model_theta = false);

// composite_k = sum_i psi_ki * shape_i; unit-sum by convexity.
std::vector<std::array<double, 24>> attribute_shape(const AttributeModel& model,
                                                    const ShapeDictionary& dict);

// Merges connected components of the composite-shape similarity graph
// (correlation distance < threshold). psi rows combine weighted by attribute
// usage; theta columns add.
AttributeModel merge_attributes(const AttributeModel& model, const ShapeDictionary& dict,
                                double threshold);

std::string serialize_model(const AttributeModel& model);
void save_model(const AttributeModel& model, const std::string& path);
AttributeModel load_model(const std::string& path);

}  // namespace lifestyles
