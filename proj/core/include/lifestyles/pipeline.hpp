#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lifestyles/data.hpp"
#include "lifestyles/dictionary.hpp"
#include "lifestyles/features.hpp"
#include "lifestyles/forest.hpp"
#include "lifestyles/lda.hpp"
#include "lifestyles/lifestyle.hpp"
#include "lifestyles/synthetic.hpp"

namespace lifestyles {

struct LdaStageConfig {
    std::size_t k_initial = 10;
    double merge_threshold = 0.1;
    double alpha = 0.0;  // 0 -> 1/K
    double beta = 0.0;   // 0 -> 1/|S|
    std::size_t max_iter = 200;
    double tol = 1e-4;
};

struct LifestyleStageConfig {
    std::size_t k = 6;
    std::vector<std::size_t> k_range;  // optional elbow sweep
    std::vector<std::string> names;    // optional center names
};

struct ClassifyStageConfig {
    std::size_t n_estimators = 25;
    std::array<double, 3> split = {0.7, 0.1, 0.2};
    std::size_t top_k = 15;
    std::size_t n_repeats = 5;
};

// Exactly one of input_path / synthetic must be set. The master seed feeds
// every stage through derive_seed(seed, "stage.<name>").
struct PipelineConfig {
    std::string input_path;
    std::optional<SyntheticConfig> synthetic;
    DictConfig dict;
    LdaStageConfig lda;
    LifestyleStageConfig lifestyles;
    bool seasons = true;
    ClassifyStageConfig classify;
    std::uint64_t seed = 0;
    std::string output_dir = "out";

    void validate() const;
    // JSON config file; LIFESTYLES_OUTPUT_DIR overrides output_dir.
    static PipelineConfig from_file(const std::string& path);
};

struct ManifestEntry {
    std::string artifact;
    std::string path;
    std::string fingerprint;         // hex hash of file bytes when written
    std::string inputs;              // ';'-joined input artifact names
    std::string inputs_fingerprint;  // combined hash of input files at write time
};

struct StageTiming {
    std::string stage;
    double seconds = 0.0;
};

struct Report {
    std::vector<ManifestEntry> manifest;
    std::array<std::vector<std::size_t>, 4> population_splits;  // per season, per lifestyle
    double changer_fraction = -1.0;
    std::vector<std::pair<std::string, double>> classifier_accuracy;
    std::vector<std::pair<std::string, double>> classifier_auc;
    std::vector<StageTiming> timings;
    std::vector<std::string> notes;
};

// Aborts carry the failing stage name.
struct StageError : std::runtime_error {
    StageError(const std::string& stage, const std::string& msg)
        : std::runtime_error("stage " + stage + ": " + msg), stage_name(stage) {}
    std::string stage_name;
};

extern const std::vector<std::string> kStageNames;  // ingest..report order

// Runs every stage in order, persisting each artifact under
// config.output_dir and recording fingerprints in manifest.csv.
Report run_pipeline(const PipelineConfig& config);

// Runs one stage from persisted upstream artifacts. Refuses stale inputs
// (fingerprint drift recorded in the manifest) unless force is set.
Report run_stage(const PipelineConfig& config, const std::string& stage, bool force = false);

std::uint64_t file_fingerprint(const std::string& path);

}  // namespace lifestyles
