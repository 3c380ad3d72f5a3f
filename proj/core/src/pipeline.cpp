#include "lifestyles/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "lifestyles/rng.hpp"
#include "lifestyles/text.hpp"

namespace lifestyles {

namespace fs = std::filesystem;
using nlohmann::json;

const std::vector<std::string> kStageNames = {"ingest",     "dict",    "encode",  "lda",
                                              "merge",      "lifestyles", "seasons", "features",
                                              "classify",   "report"};

void PipelineConfig::validate() const {
    if (input_path.empty() == !synthetic.has_value())
        throw ConfigError("exactly one of input path / synthetic block must be set");
    if (synthetic) synthetic->validate();
    dict.validate();
    if (lda.k_initial < 1) throw ConfigError("lda.k_initial must be >= 1");
    if (!(lda.merge_threshold > 0.0 && lda.merge_threshold < 2.0))
        throw ConfigError("lda.merge_threshold must lie in (0,2)");
    if (lda.alpha < 0.0 || lda.beta < 0.0) throw ConfigError("lda priors must be >= 0");
    if (lifestyles.k < 1) throw ConfigError("lifestyles.k must be >= 1");
    double fsum = classify.split[0] + classify.split[1] + classify.split[2];
    if (std::abs(fsum - 1.0) > 1e-9) throw ConfigError("classify.split must sum to 1");
    if (classify.n_estimators < 1) throw ConfigError("classify.n_estimators must be >= 1");
    if (output_dir.empty()) throw ConfigError("output_dir must be set");
}

PipelineConfig PipelineConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open config '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError("config parse failure: " + std::string(e.what()));
    }

    PipelineConfig cfg;
    cfg.seed = j.value("seed", std::uint64_t{0});
    cfg.output_dir = j.value("output_dir", std::string("out"));
    cfg.input_path = j.value("input", std::string{});
    if (j.contains("synthetic")) {
        const auto& s = j["synthetic"];
        SyntheticConfig sc;
        sc.n_households = s.value("n_households", sc.n_households);
        sc.n_days = s.value("n_days", sc.n_days);
        sc.n_archetypes = s.value("n_archetypes", sc.n_archetypes);
        sc.alpha = s.value("alpha", sc.alpha);
        sc.noise_sd = s.value("noise_sd", sc.noise_sd);
        if (s.contains("magnitude_range")) {
            auto r = s["magnitude_range"];
            if (!r.is_array() || r.size() != 2)
                throw ConfigError("synthetic.magnitude_range must be [lo, hi]");
            sc.magnitude_lo = r[0].get<double>();
            sc.magnitude_hi = r[1].get<double>();
        }
        if (s.contains("start_date")) sc.start_date = Date::parse(s["start_date"].get<std::string>());
        sc.n_lifestyles = s.value("n_lifestyles", sc.n_lifestyles);
        sc.switch_fraction = s.value("switch_fraction", sc.switch_fraction);
        sc.mixture_concentration = s.value("mixture_concentration", sc.mixture_concentration);
        sc.psi_offdiagonal = s.value("psi_offdiagonal", sc.psi_offdiagonal);
        cfg.synthetic = sc;
    }
    if (j.contains("dict")) {
        const auto& d = j["dict"];
        cfg.dict.bin_size = d.value("bin_size", cfg.dict.bin_size);
        cfg.dict.stage1_centers = d.value("stage1_centers", cfg.dict.stage1_centers);
        cfg.dict.stage2_centers = d.value("stage2_centers", cfg.dict.stage2_centers);
        cfg.dict.metric = DistanceKind::parse(d.value("metric", std::string("hybrid")),
                                              d.value("gamma", 0.5));
        std::string rule = d.value("center_rule", std::string("median"));
        if (rule != "mean" && rule != "median") throw ConfigError("dict.center_rule must be mean|median");
        cfg.dict.center_rule = rule == "mean" ? CenterRule::mean : CenterRule::median;
    }
    if (j.contains("lda")) {
        const auto& l = j["lda"];
        cfg.lda.k_initial = l.value("k_initial", cfg.lda.k_initial);
        cfg.lda.merge_threshold = l.value("merge_threshold", cfg.lda.merge_threshold);
        cfg.lda.alpha = l.value("alpha", cfg.lda.alpha);
        cfg.lda.beta = l.value("beta", cfg.lda.beta);
        cfg.lda.max_iter = l.value("max_iter", cfg.lda.max_iter);
        cfg.lda.tol = l.value("tol", cfg.lda.tol);
    }
    if (j.contains("lifestyles")) {
        const auto& l = j["lifestyles"];
        cfg.lifestyles.k = l.value("k", cfg.lifestyles.k);
        if (l.contains("k_range"))
            cfg.lifestyles.k_range = l["k_range"].get<std::vector<std::size_t>>();
        if (l.contains("names"))
            cfg.lifestyles.names = l["names"].get<std::vector<std::string>>();
    }
    cfg.seasons = j.value("seasons", true);
    if (j.contains("classify")) {
        const auto& c = j["classify"];
        cfg.classify.n_estimators = c.value("n_estimators", cfg.classify.n_estimators);
        if (c.contains("split")) {
            auto s = c["split"];
            if (!s.is_array() || s.size() != 3) throw ConfigError("classify.split must be [a,b,c]");
            for (int i = 0; i < 3; ++i)
                cfg.classify.split[static_cast<std::size_t>(i)] = s[i].get<double>();
        }
        cfg.classify.top_k = c.value("top_k", cfg.classify.top_k);
        cfg.classify.n_repeats = c.value("n_repeats", cfg.classify.n_repeats);
    }
    if (const char* env = std::getenv("LIFESTYLES_OUTPUT_DIR")) cfg.output_dir = env;
    cfg.validate();
    return cfg;
}

std::uint64_t file_fingerprint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open '" + path + "' for fingerprinting");
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[65536];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
    }
    return h;
}

namespace {

std::string hex64(std::uint64_t v) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

class Manifest {
public:
    explicit Manifest(const fs::path& dir) : path_(dir / "manifest.csv") {
        if (fs::exists(path_)) load();
    }

    void record(const std::string& artifact, const fs::path& file,
                const std::vector<std::string>& inputs) {
        ManifestEntry e;
        e.artifact = artifact;
        e.path = file.string();
        e.fingerprint = hex64(file_fingerprint(file.string()));
        std::string joined;
        std::uint64_t combined = 0xcbf29ce484222325ULL;
        for (const auto& in : inputs) {
            if (!joined.empty()) joined += ';';
            joined += in;
            auto row = find(in);
            if (row) combined = splitmix64(combined ^ file_fingerprint(row->path));
        }
        e.inputs = joined;
        e.inputs_fingerprint = hex64(combined);
        entries_.erase(std::remove_if(entries_.begin(), entries_.end(),
                                      [&](const ManifestEntry& x) { return x.artifact == artifact; }),
                       entries_.end());
        entries_.push_back(e);
        save();
    }

    const ManifestEntry* find(const std::string& artifact) const {
        for (const auto& e : entries_)
            if (e.artifact == artifact) return &e;
        return nullptr;
    }

    // Verifies the artifact file still matches what the manifest recorded,
    // recursively over its recorded inputs.
    void check_fresh(const std::string& artifact) const {
        const ManifestEntry* e = find(artifact);
        if (!e)
            throw ConfigError("artifact '" + artifact +
                              "' has no manifest record; run its producing stage first or pass --force");
        if (!fs::exists(e->path))
            throw ConfigError("artifact file missing: " + e->path);
        if (hex64(file_fingerprint(e->path)) != e->fingerprint)
            throw ConfigError("artifact '" + artifact + "' changed since it was recorded (stale); " +
                              "rerun its producing stage or pass --force");
        std::uint64_t combined = 0xcbf29ce484222325ULL;
        if (!e->inputs.empty()) {
            for (auto part : split(e->inputs, ';')) {
                std::string name(part);
                check_fresh(name);
                auto row = find(name);
                combined = splitmix64(combined ^ file_fingerprint(row->path));
            }
        }
        if (hex64(combined) != e->inputs_fingerprint)
            throw ConfigError("artifact '" + artifact +
                              "' was built from inputs that have since changed (stale); "
                              "rerun its producing stage or pass --force");
    }

    std::vector<ManifestEntry> entries() const { return entries_; }

private:
    void load() {
        std::ifstream in(path_);
        std::string line;
        std::getline(in, line);  // header
        while (std::getline(in, line)) {
            if (trim(line).empty()) continue;
            auto cols = split(trim(line), ',');
            if (cols.size() != 5) continue;
            entries_.push_back({std::string(cols[0]), std::string(cols[1]), std::string(cols[2]),
                                std::string(cols[3]), std::string(cols[4])});
        }
    }

    void save() const {
        std::ofstream out(path_);
        out << "artifact,path,fingerprint,inputs,inputs_fingerprint\n";
        for (const auto& e : entries_)
            out << e.artifact << ',' << e.path << ',' << e.fingerprint << ',' << e.inputs << ','
                << e.inputs_fingerprint << '\n';
    }

    fs::path path_;
    std::vector<ManifestEntry> entries_;
};

struct StageClock {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

// Shared state across stages of one invocation. Individual stage runs
// populate fields lazily from persisted artifacts.
struct Context {
    PipelineConfig cfg;
    fs::path dir;
    Manifest manifest;
    Report report;
    bool force = false;
    bool fresh_chain = false;  // true inside run_pipeline: inputs just written

    std::optional<Dataset> dataset;
    std::optional<GroundTruth> truth;
    std::optional<ShapeDictionary> dictionary;
    std::optional<CountMatrix> counts;
    std::optional<AttributeModel> model_initial;
    std::optional<AttributeModel> model;
    std::optional<LifestyleModel> lifestyle_model;
    std::optional<std::vector<int>> annual_labels;
    std::optional<std::vector<std::array<int, 4>>> seasonal_labels;
    std::optional<FeatureMatrix> features;

    Context(PipelineConfig c, bool force_flag)
        : cfg(std::move(c)), dir(cfg.output_dir), manifest(ensure_dir(cfg.output_dir)), force(force_flag) {}

    static fs::path ensure_dir(const std::string& d) {
        fs::create_directories(d);
        return d;
    }

    void require(const std::string& artifact) {
        if (force || fresh_chain) return;
        manifest.check_fresh(artifact);
    }

    std::uint64_t stage_seed(const std::string& stage) const {
        return derive_seed(cfg.seed, "stage." + stage);
    }
};

void write_matrix_csv(const fs::path& path, const std::vector<std::string>& ids,
                      const std::vector<std::vector<double>>& rows, const std::string& col_prefix) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write '" + path.string() + "'");
    out << "household_id";
    for (std::size_t c = 0; c < (rows.empty() ? 0 : rows.front().size()); ++c)
        out << ',' << col_prefix << c;
    out << '\n';
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out << ids[i];
        for (double v : rows[i]) out << ',' << format_double(v);
        out << '\n';
    }
}

std::vector<std::vector<double>> read_matrix_csv(const fs::path& path,
                                                 std::vector<std::string>* ids = nullptr) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path.string() + "'");
    std::string line;
    std::getline(in, line);
    std::vector<std::vector<double>> rows;
    long lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        auto cols = split(trim(line), ',');
        if (ids) ids->push_back(std::string(cols[0]));
        std::vector<double> r(cols.size() - 1);
        for (std::size_t c = 1; c < cols.size(); ++c) r[c - 1] = parse_double(cols[c], lineno);
        rows.push_back(std::move(r));
    }
    return rows;
}

// ---- stages ---------------------------------------------------------------

void stage_ingest(Context& ctx) {
    StageClock clock;
    if (ctx.cfg.synthetic) {
        auto result = generate_synthetic(*ctx.cfg.synthetic, ctx.stage_seed("synth"));
        ctx.dataset = std::move(result.data);
        ctx.truth = std::move(result.truth);
        save_readings(*ctx.dataset, (ctx.dir / "dataset.csv").string());
        ctx.manifest.record("dataset", ctx.dir / "dataset.csv", {});

        fs::create_directories(ctx.dir / "truth");
        std::vector<std::string> ids;
        for (const auto& h : ctx.dataset->households) ids.push_back(h.id);
        write_matrix_csv(ctx.dir / "truth" / "theta.csv", ids, ctx.truth->theta, "a");
        {
            std::vector<std::string> attr_ids;
            for (std::size_t k = 0; k < ctx.truth->psi.size(); ++k)
                attr_ids.push_back("attribute_" + std::to_string(k));
            write_matrix_csv(ctx.dir / "truth" / "psi.csv", attr_ids, ctx.truth->psi, "s");
            std::vector<std::vector<double>> arch;
            for (const auto& a : ctx.truth->archetypes) arch.emplace_back(a.begin(), a.end());
            std::vector<std::string> arch_ids;
            for (std::size_t k = 0; k < arch.size(); ++k)
                arch_ids.push_back("archetype_" + std::to_string(k));
            write_matrix_csv(ctx.dir / "truth" / "archetypes.csv", arch_ids, arch, "h");
        }
        {
            std::ofstream out(ctx.dir / "truth" / "lifestyles.csv");
            out << "household_id,autumn,winter,spring,summer,annual,switcher\n";
            for (std::size_t j = 0; j < ids.size(); ++j) {
                out << ids[j];
                for (int s = 0; s < 4; ++s)
                    out << ',' << ctx.truth->seasonal_lifestyle[j][static_cast<std::size_t>(s)];
                out << ',' << ctx.truth->annual_lifestyle[j] << ','
                    << int(ctx.truth->switcher[j]) << '\n';
            }
        }
        ctx.manifest.record("truth", ctx.dir / "truth" / "lifestyles.csv", {});
    } else {
        ctx.dataset = load_readings(ctx.cfg.input_path);
        save_readings(*ctx.dataset, (ctx.dir / "dataset.csv").string());
        ctx.manifest.record("dataset", ctx.dir / "dataset.csv", {});
    }
    ctx.report.timings.push_back({"ingest", clock.seconds()});
}

Dataset& need_dataset(Context& ctx) {
    if (!ctx.dataset) {
        ctx.require("dataset");
        ctx.dataset = load_readings((ctx.dir / "dataset.csv").string());
    }
    return *ctx.dataset;
}

void stage_dict(Context& ctx) {
    StageClock clock;
    auto& data = need_dataset(ctx);
    DictConfig dc = ctx.cfg.dict;
    dc.seed = ctx.stage_seed("dict");
    ctx.dictionary = build_dictionary(data, dc);
    save_dictionary(*ctx.dictionary, (ctx.dir / "dictionary.txt").string());
    ctx.manifest.record("dictionary", ctx.dir / "dictionary.txt", {"dataset"});
    for (const auto& w : ctx.dictionary->warnings) ctx.report.notes.push_back("dict: " + w);
    ctx.report.timings.push_back({"dict", clock.seconds()});
}

ShapeDictionary& need_dictionary(Context& ctx) {
    if (!ctx.dictionary) {
        ctx.require("dictionary");
        ctx.dictionary = load_dictionary((ctx.dir / "dictionary.txt").string());
    }
    return *ctx.dictionary;
}

void stage_encode(Context& ctx) {
    StageClock clock;
    auto& data = need_dataset(ctx);
    auto& dict = need_dictionary(ctx);
    ctx.counts = encode_counts(data, dict);
    save_counts(*ctx.counts, (ctx.dir / "counts_annual.csv").string());
    ctx.manifest.record("counts_annual", ctx.dir / "counts_annual.csv", {"dataset", "dictionary"});
    ctx.report.timings.push_back({"encode", clock.seconds()});
}

CountMatrix& need_counts(Context& ctx) {
    if (!ctx.counts) {
        ctx.require("counts_annual");
        ctx.counts = load_counts((ctx.dir / "counts_annual.csv").string());
    }
    return *ctx.counts;
}

void stage_lda(Context& ctx) {
    StageClock clock;
    auto& counts = need_counts(ctx);
    const std::size_t V = counts.rows.empty() ? 0 : counts.rows.front().size();
    double alpha = ctx.cfg.lda.alpha > 0.0 ? ctx.cfg.lda.alpha : default_alpha(ctx.cfg.lda.k_initial);
    double beta = ctx.cfg.lda.beta > 0.0 ? ctx.cfg.lda.beta : default_beta(V);
    ctx.model_initial = lda_fit(counts, ctx.cfg.lda.k_initial, alpha, beta, ctx.cfg.lda.max_iter,
                                ctx.cfg.lda.tol, ctx.stage_seed("lda"));
    ctx.model_initial->dictionary_fingerprint = need_dictionary(ctx).fingerprint();
    save_model(*ctx.model_initial, (ctx.dir / "attributes_initial.txt").string());
    ctx.manifest.record("attributes_initial", ctx.dir / "attributes_initial.txt",
                        {"counts_annual", "dictionary"});
    for (const auto& w : ctx.model_initial->warnings) ctx.report.notes.push_back("lda: " + w);
    ctx.report.timings.push_back({"lda", clock.seconds()});
}

AttributeModel& need_model_initial(Context& ctx) {
    if (!ctx.model_initial) {
        ctx.require("attributes_initial");
        ctx.model_initial = load_model((ctx.dir / "attributes_initial.txt").string());
    }
    return *ctx.model_initial;
}

void stage_merge(Context& ctx) {
    StageClock clock;
    auto& initial = need_model_initial(ctx);
    auto& dict = need_dictionary(ctx);
    if (initial.dictionary_fingerprint != dict.fingerprint())
        throw ConfigError("attribute model was fitted against a different dictionary");
    ctx.model = merge_attributes(initial, dict, ctx.cfg.lda.merge_threshold);
    save_model(*ctx.model, (ctx.dir / "attributes.txt").string());
    ctx.manifest.record("attributes", ctx.dir / "attributes.txt",
                        {"attributes_initial", "dictionary"});
    if (ctx.model->K != initial.K)
        ctx.report.notes.push_back("merge: " + std::to_string(initial.K) + " attributes merged to " +
                                   std::to_string(ctx.model->K));
    ctx.report.timings.push_back({"merge", clock.seconds()});
}

AttributeModel& need_model(Context& ctx) {
    if (!ctx.model) {
        ctx.require("attributes");
        ctx.model = load_model((ctx.dir / "attributes.txt").string());
    }
    return *ctx.model;
}

void stage_lifestyles(Context& ctx) {
    StageClock clock;
    auto& model = need_model(ctx);
    auto& counts = need_counts(ctx);

    ctx.lifestyle_model = fit_lifestyles(model.theta, ctx.cfg.lifestyles.k,
                                         ctx.stage_seed("lifestyles"));
    for (std::size_t c = 0; c < ctx.cfg.lifestyles.names.size() &&
                            c < ctx.lifestyle_model->centers.size();
         ++c)
        ctx.lifestyle_model->names.push_back(ctx.cfg.lifestyles.names[c]);
    save_lifestyles(*ctx.lifestyle_model, (ctx.dir / "lifestyle_model.txt").string());
    ctx.manifest.record("lifestyle_model", ctx.dir / "lifestyle_model.txt", {"attributes"});

    std::vector<int> labels(model.theta.size());
    for (std::size_t j = 0; j < model.theta.size(); ++j)
        labels[j] = static_cast<int>(assign(model.theta[j], *ctx.lifestyle_model));
    ctx.annual_labels = labels;
    {
        std::ofstream out(ctx.dir / "labels_annual.csv");
        out << "household_id,lifestyle\n";
        for (std::size_t j = 0; j < labels.size(); ++j)
            out << counts.household_ids[j] << ',' << labels[j] << '\n';
    }
    ctx.manifest.record("labels_annual", ctx.dir / "labels_annual.csv",
                        {"attributes", "lifestyle_model"});

    if (!ctx.cfg.lifestyles.k_range.empty()) {
        auto curve = elbow_curve(model.theta, ctx.cfg.lifestyles.k_range,
                                 ctx.stage_seed("lifestyles.elbow"));
        std::ofstream out(ctx.dir / "elbow.csv");
        out << "k,inertia\n";
        for (auto [k, inertia] : curve) out << k << ',' << format_double(inertia) << '\n';
        ctx.manifest.record("elbow", ctx.dir / "elbow.csv", {"attributes"});
    }
    ctx.report.timings.push_back({"lifestyles", clock.seconds()});
}

LifestyleModel& need_lifestyle_model(Context& ctx) {
    if (!ctx.lifestyle_model) {
        ctx.require("lifestyle_model");
        ctx.lifestyle_model = load_lifestyles((ctx.dir / "lifestyle_model.txt").string());
    }
    return *ctx.lifestyle_model;
}

std::vector<int> need_annual_labels(Context& ctx) {
    if (!ctx.annual_labels) {
        ctx.require("labels_annual");
        std::ifstream in(ctx.dir / "labels_annual.csv");
        if (!in) throw ParseError("cannot open labels_annual.csv");
        std::string line;
        std::getline(in, line);
        std::vector<int> labels;
        long lineno = 1;
        while (std::getline(in, line)) {
            ++lineno;
            if (trim(line).empty()) continue;
            auto cols = split(trim(line), ',');
            if (cols.size() != 2) throw ParseError("bad labels_annual row", lineno);
            labels.push_back(static_cast<int>(parse_long(cols[1], lineno)));
        }
        ctx.annual_labels = std::move(labels);
    }
    return *ctx.annual_labels;
}

void stage_seasons(Context& ctx) {
    StageClock clock;
    if (!ctx.cfg.seasons) {
        ctx.report.notes.push_back("seasons: disabled by config");
        ctx.report.timings.push_back({"seasons", clock.seconds()});
        return;
    }
    auto& data = need_dataset(ctx);
    auto& dict = need_dictionary(ctx);
    auto& model = need_model(ctx);
    auto& lm = need_lifestyle_model(ctx);

    auto seasonal = seasonal_thetas(data, dict, model);
    for (const auto& w : seasonal.warnings) ctx.report.notes.push_back("seasons: " + w);

    fs::create_directories(ctx.dir / "seasons");
    std::vector<std::string> ids;
    for (const auto& h : data.households) ids.push_back(h.id);
    for (int s = 0; s < 4; ++s) {
        if (!seasonal.present[static_cast<std::size_t>(s)]) continue;
        write_matrix_csv(ctx.dir / "seasons" / ("theta_" + std::string(kSeasonNames[s]) + ".csv"),
                         ids, seasonal.theta[static_cast<std::size_t>(s)], "a");
    }

    bool all_present = seasonal.present[0] && seasonal.present[1] && seasonal.present[2] &&
                       seasonal.present[3];
    if (!all_present) {
        ctx.report.notes.push_back("seasons: not all four seasons have data; transitions skipped");
        ctx.report.timings.push_back({"seasons", clock.seconds()});
        return;
    }

    std::vector<std::array<int, 4>> labels(ids.size());
    for (std::size_t j = 0; j < ids.size(); ++j)
        for (int s = 0; s < 4; ++s)
            labels[j][static_cast<std::size_t>(s)] = static_cast<int>(
                assign(seasonal.theta[static_cast<std::size_t>(s)][j], lm));
    ctx.seasonal_labels = labels;

    auto changer = changer_split(ids, labels);
    save_seasonal_labels(ids, labels, changer, (ctx.dir / "labels_seasonal.csv").string());
    ctx.manifest.record("labels_seasonal", ctx.dir / "labels_seasonal.csv",
                        {"dataset", "dictionary", "attributes", "lifestyle_model"});

    auto table = transitions(labels);
    save_transition_flows(table, (ctx.dir / "flows.csv").string());
    ctx.manifest.record("flows", ctx.dir / "flows.csv", {"labels_seasonal"});

    // population splits and changer fraction for the report
    const std::size_t k = lm.centers.size();
    for (int s = 0; s < 4; ++s) {
        auto& column = ctx.report.population_splits[static_cast<std::size_t>(s)];
        column.assign(k, 0);
        for (const auto& l : labels) ++column[static_cast<std::size_t>(l[static_cast<std::size_t>(s)])];
    }
    std::size_t changers = 0;
    for (auto c : changer.changer) changers += c;
    ctx.report.changer_fraction = static_cast<double>(changers) / static_cast<double>(ids.size());
    {
        std::ofstream out(ctx.dir / "population_splits.csv");
        out << "season";
        for (std::size_t c = 0; c < k; ++c) out << ",lifestyle_" << c;
        out << '\n';
        for (int s = 0; s < 4; ++s) {
            out << kSeasonNames[s];
            for (auto v : ctx.report.population_splits[static_cast<std::size_t>(s)]) out << ',' << v;
            out << '\n';
        }
    }
    ctx.manifest.record("population_splits", ctx.dir / "population_splits.csv",
                        {"labels_seasonal"});
    ctx.report.timings.push_back({"seasons", clock.seconds()});
}

void stage_features(Context& ctx) {
    StageClock clock;
    auto& data = need_dataset(ctx);
    ctx.features = feature_matrix(data);
    save_features(*ctx.features, (ctx.dir / "features.csv").string());
    ctx.manifest.record("features", ctx.dir / "features.csv", {"dataset"});
    ctx.report.timings.push_back({"features", clock.seconds()});
}

FeatureMatrix& need_features(Context& ctx) {
    if (!ctx.features) {
        ctx.require("features");
        ctx.features = load_features((ctx.dir / "features.csv").string());
    }
    return *ctx.features;
}

std::vector<std::array<int, 4>> load_seasonal_labels_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path.string() + "'");
    std::string line;
    std::getline(in, line);
    std::vector<std::array<int, 4>> labels;
    long lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        auto cols = split(trim(line), ',');
        if (cols.size() != 6) throw ParseError("bad labels_seasonal row", lineno);
        std::array<int, 4> l{};
        for (int s = 0; s < 4; ++s)
            l[static_cast<std::size_t>(s)] =
                static_cast<int>(parse_long(cols[static_cast<std::size_t>(s + 1)], lineno));
        labels.push_back(l);
    }
    return labels;
}

// One classification task: chi2 screening on scaled features, stratified
// split, forest fit, test metrics, permutation importance.
void run_classifier(Context& ctx, const std::string& task, const std::vector<std::size_t>& subset,
                    const std::vector<int>& y_all, bool binary_roc) {
    auto& features = need_features(ctx);
    const auto& names = feature_names();

    std::vector<std::vector<double>> X;
    std::vector<int> y;
    for (std::size_t i : subset) {
        X.push_back(features.rows[i]);
        y.push_back(y_all[i]);
    }

    std::vector<int> distinct = y;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() < 2 || y.size() < 10) {
        ctx.report.notes.push_back("classify." + task + ": skipped (needs >= 2 classes and >= 10 samples)");
        return;
    }

    auto scaled = minmax_scale(X);
    auto selected = chi2_select(scaled, y, ctx.cfg.classify.top_k);
    std::sort(selected.begin(), selected.end());

    std::vector<std::vector<double>> Xsel(scaled.size(), std::vector<double>(selected.size()));
    std::vector<std::string> sel_names;
    for (std::size_t f = 0; f < selected.size(); ++f) sel_names.push_back(names[selected[f]]);
    for (std::size_t i = 0; i < scaled.size(); ++i)
        for (std::size_t f = 0; f < selected.size(); ++f) Xsel[i][f] = scaled[i][selected[f]];

    auto split_result =
        split_data(Xsel, y, ctx.cfg.classify.split, ctx.stage_seed("classify." + task + ".split"));
    for (const auto& w : split_result.warnings)
        ctx.report.notes.push_back("classify." + task + ": " + w);

    auto gather = [&](const std::vector<std::size_t>& idx, std::vector<std::vector<double>>& Xo,
                      std::vector<int>& yo) {
        for (std::size_t i : idx) {
            Xo.push_back(Xsel[i]);
            yo.push_back(y[i]);
        }
    };
    std::vector<std::vector<double>> Xtrain, Xtest;
    std::vector<int> ytrain, ytest;
    gather(split_result.train, Xtrain, ytrain);
    gather(split_result.test, Xtest, ytest);

    std::vector<int> train_distinct = ytrain;
    std::sort(train_distinct.begin(), train_distinct.end());
    train_distinct.erase(std::unique(train_distinct.begin(), train_distinct.end()),
                         train_distinct.end());
    if (train_distinct.size() < 2) {
        ctx.report.notes.push_back("classify." + task + ": skipped (train split single-class)");
        return;
    }

    auto model = rf_fit(Xtrain, ytrain, ctx.cfg.classify.n_estimators,
                        ctx.stage_seed("classify." + task + ".forest"), sel_names);
    auto pred = rf_predict(model, Xtest);

    std::vector<double> scores;
    const std::vector<double>* scores_ptr = nullptr;
    if (binary_roc) {
        auto it = std::find(model.classes.begin(), model.classes.end(), 1);
        if (it != model.classes.end()) {
            std::size_t pos = static_cast<std::size_t>(std::distance(model.classes.begin(), it));
            for (const auto& v : pred.votes) scores.push_back(v[pos]);
            scores_ptr = &scores;
        }
    }
    auto metrics = evaluate(ytest, pred.labels, scores_ptr);

    fs::create_directories(ctx.dir / "classify");
    save_metrics_report(metrics, (ctx.dir / "classify" / (task + "_metrics.txt")).string(),
                        (ctx.dir / "classify" / (task + "_metrics.csv")).string());
    {
        std::ofstream out(ctx.dir / "classify" / (task + "_confusion.csv"));
        out << "true\\pred";
        for (int c : metrics.classes) out << ',' << c;
        out << '\n';
        for (std::size_t r = 0; r < metrics.confusion.size(); ++r) {
            out << metrics.classes[r];
            for (auto v : metrics.confusion[r]) out << ',' << v;
            out << '\n';
        }
    }
    {
        std::ofstream out(ctx.dir / "classify" / (task + "_selected.csv"));
        out << "rank,feature\n";
        auto ranked = chi2_select(scaled, y, ctx.cfg.classify.top_k);
        for (std::size_t r = 0; r < ranked.size(); ++r)
            out << r << ',' << names[ranked[r]] << '\n';
    }
    if (!metrics.roc.empty())
        save_roc(metrics.roc, (ctx.dir / "classify" / (task + "_roc.csv")).string());

    auto importance = permutation_importance(model, Xtest, ytest, ctx.cfg.classify.n_repeats,
                                             ctx.stage_seed("classify." + task + ".perm"));
    {
        std::ofstream out(ctx.dir / "classify" / (task + "_importance.csv"));
        out << "feature,importance\n";
        std::vector<std::size_t> order(importance.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return importance[a] > importance[b];
        });
        for (std::size_t f : order)
            out << sel_names[f] << ',' << format_double(importance[f]) << '\n';
    }
    ctx.manifest.record("classify_" + task, ctx.dir / "classify" / (task + "_metrics.csv"),
                        {"features"});

    ctx.report.classifier_accuracy.emplace_back(task, metrics.accuracy);
    if (metrics.auc >= 0.0) ctx.report.classifier_auc.emplace_back(task, metrics.auc);
}

void stage_classify(Context& ctx) {
    StageClock clock;
    auto& features = need_features(ctx);
    auto annual = need_annual_labels(ctx);
    if (annual.size() != features.rows.size())
        throw DimensionError("labels_annual and features disagree on household count");

    std::vector<std::size_t> all(features.rows.size());
    std::iota(all.begin(), all.end(), 0);
    run_classifier(ctx, "lifestyle", all, annual, false);

    if (ctx.cfg.seasons) {
        std::vector<std::array<int, 4>> seasonal;
        if (ctx.seasonal_labels) {
            seasonal = *ctx.seasonal_labels;
        } else if (fs::exists(ctx.dir / "labels_seasonal.csv")) {
            ctx.require("labels_seasonal");
            seasonal = load_seasonal_labels_file(ctx.dir / "labels_seasonal.csv");
        }
        if (seasonal.empty()) {
            ctx.report.notes.push_back("classify: no seasonal labels; changer tasks skipped");
        } else {
            std::vector<std::string> ids;
            for (const auto& h : need_dataset(ctx).households) ids.push_back(h.id);
            auto changer = changer_split(ids, seasonal);
            for (std::size_t L = 0; L < changer.per_lifestyle.size(); ++L) {
                const auto& members = changer.per_lifestyle[L];
                std::vector<std::size_t> subset;
                std::vector<int> y_all(features.rows.size(), 0);
                for (auto [row, flag] : members) {
                    subset.push_back(row);
                    y_all[row] = flag;
                }
                run_classifier(ctx, "changer_" + std::to_string(L), subset, y_all, true);
            }
        }
    }
    ctx.report.timings.push_back({"classify", clock.seconds()});
}

void stage_report(Context& ctx) {
    StageClock clock;
    std::ofstream out(ctx.dir / "report.txt");
    if (!out) throw ParseError("cannot write report.txt");

    out << "pipeline report\n===============\n\n";
    out << "artifacts\n";
    for (const auto& e : ctx.manifest.entries())
        out << "  " << e.artifact << " -> " << e.path << " (" << e.fingerprint << ")\n";

    bool have_population = false;
    for (const auto& s : ctx.report.population_splits) have_population |= !s.empty();
    if (have_population) {
        out << "\npopulation splits (households per lifestyle per season)\n";
        for (int s = 0; s < 4; ++s) {
            out << "  " << kSeasonNames[s] << ":";
            for (auto v : ctx.report.population_splits[static_cast<std::size_t>(s)]) out << ' ' << v;
            out << '\n';
        }
    }
    if (ctx.report.changer_fraction >= 0.0) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "\nchanger fraction: %.4f\n", ctx.report.changer_fraction);
        out << buf;
    }
    if (!ctx.report.classifier_accuracy.empty()) {
        out << "\nclassifier accuracy\n";
        for (const auto& [task, acc] : ctx.report.classifier_accuracy) {
            char buf[96];
            std::snprintf(buf, sizeof(buf), "  %s: %.4f\n", task.c_str(), acc);
            out << buf;
        }
    }
    if (!ctx.report.classifier_auc.empty()) {
        out << "\nclassifier AUC\n";
        for (const auto& [task, auc] : ctx.report.classifier_auc) {
            char buf[96];
            std::snprintf(buf, sizeof(buf), "  %s: %.4f\n", task.c_str(), auc);
            out << buf;
        }
    }
    if (!ctx.report.timings.empty()) {
        out << "\nstage timings (s)\n";
        for (const auto& t : ctx.report.timings) {
            char buf[96];
            std::snprintf(buf, sizeof(buf), "  %-12s %.3f\n", t.stage.c_str(), t.seconds);
            out << buf;
        }
    }
    if (!ctx.report.notes.empty()) {
        out << "\nnotes\n";
        for (const auto& n : ctx.report.notes) out << "  " << n << '\n';
    }
    out.close();
    ctx.report.timings.push_back({"report", clock.seconds()});
    ctx.report.manifest = ctx.manifest.entries();
}

void dispatch_stage(Context& ctx, const std::string& stage) {
    try {
        if (stage == "ingest") stage_ingest(ctx);
        else if (stage == "dict") stage_dict(ctx);
        else if (stage == "encode") stage_encode(ctx);
        else if (stage == "lda") stage_lda(ctx);
        else if (stage == "merge") stage_merge(ctx);
        else if (stage == "lifestyles") stage_lifestyles(ctx);
        else if (stage == "seasons") stage_seasons(ctx);
        else if (stage == "features") stage_features(ctx);
        else if (stage == "classify") stage_classify(ctx);
        else if (stage == "report") stage_report(ctx);
        else throw ConfigError("unknown stage '" + stage + "'");
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(stage, e.what());
    }
}

}  // namespace

Report run_pipeline(const PipelineConfig& config) {
    config.validate();
    Context ctx(config, /*force=*/false);
    ctx.fresh_chain = true;
    for (const auto& stage : kStageNames) dispatch_stage(ctx, stage);
    return ctx.report;
}

Report run_stage(const PipelineConfig& config, const std::string& stage, bool force) {
    config.validate();
    Context ctx(config, force);
    dispatch_stage(ctx, stage);
    if (stage != "report") {
        // keep report.txt and the manifest list current after a stage rerun
        ctx.report.manifest = ctx.manifest.entries();
    }
    return ctx.report;
}

}  // namespace lifestyles
