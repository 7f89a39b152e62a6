#include "geovec/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include <json.hpp>

namespace geovec {

using nlohmann::json;

const char* stage_name(Stage s) {
    switch (s) {
        case Stage::Ingest: return "ingest";
        case Stage::Flood: return "flood";
        case Stage::Weight: return "weight";
        case Stage::Walk: return "walk";
        case Stage::Train: return "train";
        case Stage::Evaluate: return "evaluate";
        case Stage::Stats: return "stats";
    }
    return "?";
}

std::optional<Stage> stage_from_name(std::string_view name) {
    for (Stage s : {Stage::Ingest, Stage::Flood, Stage::Weight, Stage::Walk, Stage::Train,
                    Stage::Evaluate, Stage::Stats}) {
        if (name == stage_name(s)) return s;
    }
    return std::nullopt;
}

namespace {

constexpr int kStageVersion = 1;

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("config key '") + key + "' has the wrong type");
    }
}

const json& section(const json& j, const char* key) {
    static const json empty = json::object();
    if (!j.contains(key)) return empty;
    if (!j.at(key).is_object()) {
        throw ConfigError(std::string("config section '") + key + "' must be an object");
    }
    return j.at(key);
}

}  // namespace

PipelineConfig load_config(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw ConfigError("config parse error: " + std::string(e.what()));
    }
    if (!j.is_object()) throw ConfigError("config must be a JSON object");

    static const std::vector<std::string> known = {"input",  "output_dir", "seed",  "workers",
                                                   "ingest", "flood",      "weight", "walk",
                                                   "train",  "evaluate"};
    for (const auto& [key, _] : j.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            throw ConfigError("unknown config key '" + key + "'");
        }
    }

    PipelineConfig cfg;
    if (!j.contains("input")) throw ConfigError("config is missing 'input'");
    if (!j.contains("output_dir")) throw ConfigError("config is missing 'output_dir'");
    cfg.input = j.at("input").get<std::string>();
    cfg.output_dir = j.at("output_dir").get<std::string>();
    cfg.seed = get_or<std::uint64_t>(j, "seed", 1);
    cfg.workers = get_or<std::uint32_t>(j, "workers", 1);

    const json& ingest = section(j, "ingest");
    // Absent key: the common GeoSPARQL predicate. An explicit empty list
    // disables geometry routing.
    cfg.ingest.geometry_predicates = get_or<std::vector<std::string>>(
        ingest, "geometry_predicates", {"http://www.opengis.net/ont/geosparql#asWKT"});
    const std::string policy = get_or<std::string>(ingest, "literal_policy", "drop");
    if (policy == "drop") {
        cfg.ingest.literal_policy = LiteralPolicy::Drop;
    } else if (policy == "keep") {
        cfg.ingest.literal_policy = LiteralPolicy::Keep;
    } else {
        throw ConfigError("ingest.literal_policy must be 'drop' or 'keep'");
    }
    cfg.ingest.strict = get_or<bool>(ingest, "strict", false);

    const json& flood = section(j, "flood");
    cfg.flood_strict_wkt = get_or<bool>(flood, "strict_wkt", true);
    cfg.flood_max_iterations = get_or<std::uint32_t>(flood, "max_iterations", 0);

    const json& weight = section(j, "weight");
    const std::string kernel = get_or<std::string>(weight, "kernel", "exponential");
    if (kernel == "exponential") {
        cfg.weight.kernel = WeightKernel::Exponential;
    } else if (kernel == "threshold") {
        cfg.weight.kernel = WeightKernel::Threshold;
    } else if (kernel == "inverse") {
        cfg.weight.kernel = WeightKernel::InverseDistance;
    } else {
        throw ConfigError("weight.kernel must be 'exponential', 'threshold' or 'inverse'");
    }
    cfg.weight.normalize = get_or<bool>(weight, "normalize", true);
    cfg.weight.threshold = get_or<double>(weight, "threshold", 5.0);
    cfg.weight.alpha = get_or<int>(weight, "alpha", 1);
    if (cfg.weight.kernel == WeightKernel::Threshold && cfg.weight.threshold <= 0.0) {
        throw ConfigError("weight.threshold must be positive");
    }
    if (cfg.weight.kernel == WeightKernel::InverseDistance && cfg.weight.alpha < 1) {
        throw ConfigError("weight.alpha must be a positive integer");
    }

    const json& walk = section(j, "walk");
    cfg.walk.depth = get_or<std::uint32_t>(walk, "depth", 4);
    cfg.walk.walks_per_vertex = get_or<std::uint32_t>(walk, "walks_per_vertex", 10);
    cfg.walk.weighted = get_or<bool>(walk, "weighted", true);
    cfg.walk.include_predicates = get_or<bool>(walk, "include_predicates", true);
    if (cfg.walk.depth < 1 || cfg.walk.walks_per_vertex < 1) {
        throw ConfigError("walk.depth and walk.walks_per_vertex must be >= 1");
    }

    const json& train = section(j, "train");
    cfg.train.dimension = get_or<int>(train, "dimension", 100);
    cfg.train.window = get_or<int>(train, "window", 5);
    cfg.train.negatives = get_or<int>(train, "negatives", 5);
    cfg.train.epochs = get_or<int>(train, "epochs", 5);
    cfg.train.learning_rate = get_or<double>(train, "learning_rate", 0.025);
    cfg.train.lr_floor = get_or<double>(train, "lr_floor", 1e-4);
    cfg.train_export_predicates = get_or<bool>(train, "export_predicates", false);
    const std::string mode = get_or<std::string>(train, "mode", "skipgram");
    if (mode == "skipgram") {
        cfg.train.mode = TrainMode::SkipGram;
    } else if (mode == "cbow") {
        cfg.train.mode = TrainMode::Cbow;
    } else {
        throw ConfigError("train.mode must be 'skipgram' or 'cbow'");
    }
    if (cfg.train.dimension < 1 || cfg.train.window < 1 || cfg.train.negatives < 0 ||
        cfg.train.epochs < 1 || cfg.train.learning_rate <= 0.0) {
        throw ConfigError("invalid train section");
    }

    const json& eval = section(j, "evaluate");
    cfg.eval.labels = get_or<std::string>(eval, "labels", "");
    cfg.eval.train_fraction = get_or<double>(eval, "train_fraction", 0.8);
    cfg.eval.knn_k = get_or<int>(eval, "knn_k", 5);
    cfg.eval.trials = get_or<int>(eval, "trials", 1);
    const std::string model = get_or<std::string>(eval, "model", "logistic");
    if (model == "logistic") {
        cfg.eval.model = ClassifierKind::Logistic;
    } else if (model == "knn") {
        cfg.eval.model = ClassifierKind::Knn;
    } else {
        throw ConfigError("evaluate.model must be 'logistic' or 'knn'");
    }
    cfg.eval.regions = get_or<std::string>(eval, "regions", "");
    cfg.eval.boundaries = get_or<std::string>(eval, "boundaries", "");
    cfg.eval.holdout_fraction = get_or<double>(eval, "holdout_fraction", 0.0);
    cfg.eval.holdout_threshold_km = get_or<double>(eval, "holdout_threshold_km", 25.0);
    cfg.eval.sample_cap = get_or<std::uint64_t>(eval, "sample_cap", 0);
    if (cfg.eval.trials < 1) throw ConfigError("evaluate.trials must be >= 1");
    if (cfg.eval.knn_k < 1 || cfg.eval.knn_k % 2 == 0) {
        throw ConfigError("evaluate.knn_k must be odd");
    }
    return cfg;
}

namespace {

json config_subset(const PipelineConfig& cfg, Stage stage) {
    json j;
    j["input"] = cfg.input.string();
    json ingest;
    ingest["geometry_predicates"] = cfg.ingest.geometry_predicates;
    ingest["literal_policy"] = cfg.ingest.literal_policy == LiteralPolicy::Keep ? "keep" : "drop";
    ingest["strict"] = cfg.ingest.strict;
    j["ingest"] = ingest;
    if (stage == Stage::Ingest) return j;

    j["flood"] = {{"strict_wkt", cfg.flood_strict_wkt},
                  {"max_iterations", cfg.flood_max_iterations}};
    if (stage == Stage::Flood) return j;

    const char* kernel = cfg.weight.kernel == WeightKernel::Exponential ? "exponential"
                         : cfg.weight.kernel == WeightKernel::Threshold ? "threshold"
                                                                        : "inverse";
    j["weight"] = {{"kernel", kernel},
                   {"normalize", cfg.weight.normalize},
                   {"threshold", cfg.weight.threshold},
                   {"alpha", cfg.weight.alpha}};
    if (stage == Stage::Weight || stage == Stage::Stats) return j;

    j["walk"] = {{"depth", cfg.walk.depth},
                 {"walks_per_vertex", cfg.walk.walks_per_vertex},
                 {"weighted", cfg.walk.weighted},
                 {"include_predicates", cfg.walk.include_predicates}};
    j["seed"] = cfg.seed;
    if (stage == Stage::Walk) return j;

    j["train"] = {{"dimension", cfg.train.dimension},
                  {"window", cfg.train.window},
                  {"negatives", cfg.train.negatives},
                  {"epochs", cfg.train.epochs},
                  {"learning_rate", cfg.train.learning_rate},
                  {"lr_floor", cfg.train.lr_floor},
                  {"mode", cfg.train.mode == TrainMode::Cbow ? "cbow" : "skipgram"},
                  {"export_predicates", cfg.train_export_predicates}};
    if (stage == Stage::Train) return j;

    j["evaluate"] = {{"labels", cfg.eval.labels.string()},
                     {"train_fraction", cfg.eval.train_fraction},
                     {"model", cfg.eval.model == ClassifierKind::Knn ? "knn" : "logistic"},
                     {"knn_k", cfg.eval.knn_k},
                     {"trials", cfg.eval.trials},
                     {"regions", cfg.eval.regions.string()},
                     {"boundaries", cfg.eval.boundaries.string()},
                     {"holdout_fraction", cfg.eval.holdout_fraction},
                     {"holdout_threshold_km", cfg.eval.holdout_threshold_km},
                     {"sample_cap", cfg.eval.sample_cap}};
    return j;
}

}  // namespace

std::string stage_config_hash(const PipelineConfig& cfg, Stage stage) {
    return hex64(fnv1a64(config_subset(cfg, stage).dump()));
}

std::filesystem::path artifact_path(const PipelineConfig& cfg, Stage stage) {
    switch (stage) {
        case Stage::Ingest: return cfg.output_dir / "graph.bin";
        case Stage::Flood: return cfg.output_dir / "flooded.tsv";
        case Stage::Weight: return cfg.output_dir / "weights.tsv";
        case Stage::Walk: return cfg.output_dir / "walks.txt";
        case Stage::Train: return cfg.output_dir / "embeddings.txt";
        case Stage::Evaluate: return cfg.output_dir / "metrics.json";
        case Stage::Stats: return cfg.output_dir / "stats.json";
    }
    throw ConfigError("unknown stage");
}

std::filesystem::path manifest_path(const PipelineConfig& cfg, Stage stage) {
    return cfg.output_dir / (std::string(stage_name(stage)) + ".manifest.json");
}

namespace {

std::vector<Stage> stage_dependencies(const PipelineConfig& cfg, Stage stage) {
    switch (stage) {
        case Stage::Ingest: return {};
        case Stage::Flood: return {Stage::Ingest};
        case Stage::Weight: return {Stage::Ingest, Stage::Flood};
        case Stage::Stats: return {Stage::Ingest, Stage::Weight};
        case Stage::Walk: return {Stage::Ingest, Stage::Weight};
        case Stage::Train: return {Stage::Walk};
        case Stage::Evaluate: {
            std::vector<Stage> deps;
            const bool classification = !cfg.eval.labels.empty();
            const bool flooding_eval = !cfg.eval.regions.empty() && !cfg.eval.boundaries.empty();
            const bool holdout = cfg.eval.holdout_fraction > 0.0;
            if (classification) deps.push_back(Stage::Train);
            if (flooding_eval || holdout) {
                deps.push_back(Stage::Ingest);
                deps.push_back(Stage::Flood);
            }
            if (deps.empty()) {
                throw ConfigError(
                    "evaluate stage has nothing to do: configure evaluate.labels and/or "
                    "evaluate.regions + evaluate.boundaries or evaluate.holdout_fraction");
            }
            return deps;
        }
    }
    return {};
}

void check_upstream(const PipelineConfig& cfg, Stage stage) {
    for (Stage dep : stage_dependencies(cfg, stage)) {
        const std::filesystem::path artifact = artifact_path(cfg, dep);
        if (!std::filesystem::exists(artifact)) {
            throw ConfigError(std::string("stage '") + stage_name(stage) +
                              "' requires stage: " + stage_name(dep));
        }
        const std::filesystem::path manifest = manifest_path(cfg, dep);
        if (!std::filesystem::exists(manifest)) continue;
        try {
            json m = json::parse(read_file(manifest));
            const std::string recorded = m.value("config_hash", "");
            const std::string expected = stage_config_hash(cfg, dep);
            if (!recorded.empty() && recorded != expected && !cfg.force) {
                log_kv(stage_name(stage),
                       {{"warning", "config-hash-mismatch"},
                        {"upstream", stage_name(dep)},
                        {"recorded", recorded},
                        {"expected", expected}});
            }
        } catch (const json::exception&) {
            log_kv(stage_name(stage),
                   {{"warning", "unreadable-manifest"}, {"upstream", stage_name(dep)}});
        }
    }
}

void write_manifest(const PipelineConfig& cfg, Stage stage,
                    const std::vector<std::filesystem::path>& inputs, const json& stats) {
    json m;
    m["stage"] = stage_name(stage);
    m["stage_version"] = kStageVersion;
    m["config_hash"] = stage_config_hash(cfg, stage);
    m["seed"] = cfg.seed;
    json in = json::object();
    for (const auto& p : inputs) {
        in[p.filename().string()] = {{"path", p.string()}, {"fnv64", hex64(fnv1a64_file(p))}};
    }
    m["inputs"] = in;
    const std::filesystem::path artifact = artifact_path(cfg, stage);
    m["outputs"] = {{artifact.filename().string(),
                     {{"path", artifact.string()}, {"fnv64", hex64(fnv1a64_file(artifact))}}}};
    m["stats"] = stats;
    write_file_atomic(manifest_path(cfg, stage), m.dump(2) + "\n");
}

struct LoadedRun {
    KnowledgeGraph graph;
    std::unordered_map<NodeId, std::vector<std::string>> raw_geometries;
};

LoadedRun load_graph_artifact(const PipelineConfig& cfg) {
    auto [g, raw] = KnowledgeGraph::load(artifact_path(cfg, Stage::Ingest));
    return LoadedRun{std::move(g), std::move(raw)};
}

GeometryStore load_flooded_artifact(const PipelineConfig& cfg, const KnowledgeGraph& g) {
    std::ifstream in(artifact_path(cfg, Stage::Flood));
    if (!in) throw DataError("cannot open flooded store artifact");
    return store_from_tsv(in, g);
}

std::vector<WeightedEdge> load_weights_artifact(const PipelineConfig& cfg,
                                                const KnowledgeGraph& g) {
    std::ifstream in(artifact_path(cfg, Stage::Weight));
    if (!in) throw DataError("cannot open weights artifact");
    return weights_from_tsv(in, g);
}

void run_ingest(const PipelineConfig& cfg) {
    ParsedGraph parsed = parse_ntriples_file(cfg.input, cfg.ingest);
    parsed.graph.save(artifact_path(cfg, Stage::Ingest), parsed.raw_geometries);
    const ParseStats& s = parsed.stats;
    log_kv("ingest", {{"lines", std::to_string(s.lines_total)},
                      {"triples", std::to_string(s.triples_parsed)},
                      {"geometry_literals", std::to_string(s.geometry_literals)},
                      {"literals_skipped", std::to_string(s.literals_skipped)},
                      {"malformed", std::to_string(s.lines_malformed)},
                      {"nodes", std::to_string(parsed.graph.node_count())},
                      {"relations", std::to_string(parsed.graph.relation_count())}});
    json stats = {{"lines_total", s.lines_total},
                  {"lines_blank_or_comment", s.lines_blank_or_comment},
                  {"triples_parsed", s.triples_parsed},
                  {"geometry_literals", s.geometry_literals},
                  {"literals_skipped", s.literals_skipped},
                  {"lines_malformed", s.lines_malformed},
                  {"nodes", parsed.graph.node_count()},
                  {"relations", parsed.graph.relation_count()}};
    write_manifest(cfg, Stage::Ingest, {cfg.input}, stats);
}

void run_flood(const PipelineConfig& cfg) {
    LoadedRun run = load_graph_artifact(cfg);
    StoreBuildStats build;
    GeometryStore store =
        flood(run.graph, make_initial_store(run.raw_geometries, cfg.flood_strict_wkt, &build),
              cfg.flood_max_iterations);
    std::ostringstream out;
    store_to_tsv(out, run.graph, store);
    write_file_atomic(artifact_path(cfg, Stage::Flood), out.str());

    FloodingReport report = flooding_report(run.graph, store);
    log_kv("flood", {{"geometries_parsed", std::to_string(build.parsed)},
                     {"geometries_failed", std::to_string(build.failed)},
                     {"assigned", std::to_string(report.assigned_nodes)},
                     {"unassigned", std::to_string(report.unassigned_nodes)},
                     {"iterations", std::to_string(report.iterations)}});
    json histogram = json::object();
    for (const auto& [iter, n] : report.nodes_per_iteration) {
        histogram[std::to_string(iter)] = n;
    }
    json set_sizes = json::object();
    for (const auto& [size, n] : report.set_size_histogram) {
        set_sizes[std::to_string(size)] = n;
    }
    json stats = {{"geometries_parsed", build.parsed},
                  {"geometries_failed", build.failed},
                  {"assigned_nodes", report.assigned_nodes},
                  {"unassigned_nodes", report.unassigned_nodes},
                  {"iterations", report.iterations},
                  {"nodes_per_iteration", histogram},
                  {"set_size_histogram", set_sizes}};
    write_manifest(cfg, Stage::Flood, {artifact_path(cfg, Stage::Ingest)}, stats);
}

void run_weight(const PipelineConfig& cfg) {
    LoadedRun run = load_graph_artifact(cfg);
    GeometryStore store = load_flooded_artifact(cfg, run.graph);
    std::vector<WeightedEdge> edges = assign_edge_weights(run.graph, store, cfg.weight);
    std::ostringstream out;
    weights_to_tsv(out, run.graph, edges);
    write_file_atomic(artifact_path(cfg, Stage::Weight), out.str());

    std::uint64_t geographic = 0;
    for (const WeightedEdge& e : edges) {
        if (e.distance_km) ++geographic;
    }
    log_kv("weight", {{"edges", std::to_string(edges.size())},
                      {"geographic_edges", std::to_string(geographic)}});
    json stats = {{"edges", edges.size()}, {"geographic_edges", geographic}};
    write_manifest(cfg, Stage::Weight,
                   {artifact_path(cfg, Stage::Ingest), artifact_path(cfg, Stage::Flood)}, stats);
}

void run_stats(const PipelineConfig& cfg) {
    LoadedRun run = load_graph_artifact(cfg);
    std::vector<WeightedEdge> edges = load_weights_artifact(cfg, run.graph);
    GraphStatistics s = graph_statistics(run.graph, edges);
    json out = {{"nodes", s.nodes},
                {"triples", s.triples},
                {"average_degree", s.average_degree},
                {"average_unique_neighbors", s.average_unique_neighbors},
                {"edges_with_distance", s.edges_with_distance},
                {"average_edge_distance_km", s.average_edge_distance_km},
                {"average_weight_all", s.average_weight_all},
                {"average_weight_geographic", s.average_weight_geographic}};
    write_file_atomic(artifact_path(cfg, Stage::Stats), out.dump(2) + "\n");
    log_kv("stats", {{"nodes", std::to_string(s.nodes)},
                     {"triples", std::to_string(s.triples)},
                     {"average_degree", format_double(s.average_degree)},
                     {"average_edge_distance_km", format_double(s.average_edge_distance_km)},
                     {"average_weight_all", format_double(s.average_weight_all)}});
    write_manifest(cfg, Stage::Stats,
                   {artifact_path(cfg, Stage::Ingest), artifact_path(cfg, Stage::Weight)}, out);
}

void run_walk(const PipelineConfig& cfg) {
    LoadedRun run = load_graph_artifact(cfg);
    std::vector<WeightedEdge> edges = load_weights_artifact(cfg, run.graph);
    WalkConfig wc = cfg.walk;
    wc.seed = cfg.seed;
    wc.workers = cfg.workers;
    WalkCorpus corpus = generate_walks(run.graph, edge_weight_values(edges), wc);
    std::ostringstream out;
    corpus_to_text(out, run.graph, corpus, wc.include_predicates);
    write_file_atomic(artifact_path(cfg, Stage::Walk), out.str());

    std::uint64_t tokens = 0;
    for (const Walk& w : corpus.walks) tokens += w.entities.size() + w.predicates.size();
    log_kv("walk", {{"walks", std::to_string(corpus.walks.size())},
                    {"tokens", std::to_string(tokens)},
                    {"weighted", wc.weighted ? "true" : "false"}});
    json stats = {{"walks", corpus.walks.size()}, {"tokens", tokens}, {"weighted", wc.weighted}};
    write_manifest(cfg, Stage::Walk,
                   {artifact_path(cfg, Stage::Ingest), artifact_path(cfg, Stage::Weight)}, stats);
}

void run_train(const PipelineConfig& cfg) {
    std::ifstream in(artifact_path(cfg, Stage::Walk));
    if (!in) throw DataError("cannot open walk corpus artifact");
    TokenizedCorpus corpus = tokenize_corpus(in, cfg.walk.include_predicates);
    TrainConfig tc = cfg.train;
    tc.seed = cfg.seed;
    tc.workers = static_cast<int>(cfg.workers);
    TrainResult result = train(corpus, tc);
    std::ostringstream out;
    export_embeddings(out, result.model, !cfg.train_export_predicates);
    write_file_atomic(artifact_path(cfg, Stage::Train), out.str());

    log_kv("train",
           {{"vocab", std::to_string(corpus.vocab.size())},
            {"sentences", std::to_string(corpus.sentences.size())},
            {"final_loss",
             result.epoch_loss.empty() ? "0" : format_double(result.epoch_loss.back())}});
    json stats = {{"vocab", corpus.vocab.size()},
                  {"sentences", corpus.sentences.size()},
                  {"epoch_loss", result.epoch_loss},
                  {"epoch_pairs", result.epoch_pairs}};
    write_manifest(cfg, Stage::Train, {artifact_path(cfg, Stage::Walk)}, stats);
}

json metrics_to_json(const ClassificationMetrics& m) {
    return {{"accuracy", m.accuracy}, {"macro_f1", m.macro_f1}, {"mcc", m.mcc}};
}

void run_evaluate(const PipelineConfig& cfg) {
    json out;
    out["seed"] = cfg.seed;
    std::vector<std::filesystem::path> inputs;

    const bool classification = !cfg.eval.labels.empty();
    const bool flooding_eval = !cfg.eval.regions.empty() && !cfg.eval.boundaries.empty();
    const bool holdout = cfg.eval.holdout_fraction > 0.0;

    if (classification) {
        std::ifstream emb_in(artifact_path(cfg, Stage::Train));
        if (!emb_in) throw DataError("cannot open embeddings artifact");
        LoadedEmbeddings embeddings = load_embeddings(emb_in);
        std::ifstream labels_in(cfg.eval.labels);
        if (!labels_in) throw DataError("cannot open labels file: " + cfg.eval.labels.string());
        std::vector<LabeledExample> labeled = load_labels_tsv(labels_in);
        inputs.push_back(artifact_path(cfg, Stage::Train));
        inputs.push_back(cfg.eval.labels);

        ClassifyOptions options;
        options.model = cfg.eval.model;
        options.knn_k = cfg.eval.knn_k;

        json trials = json::array();
        std::vector<ClassificationMetrics> per_trial;
        for (int t = 0; t < cfg.eval.trials; ++t) {
            const std::uint64_t split_seed = cfg.seed + static_cast<std::uint64_t>(t);
            LabeledSplit split = split_labels(labeled, cfg.eval.train_fraction, split_seed);
            ClassificationMetrics m = metrics(classify(embeddings, split, options));
            per_trial.push_back(m);
            json trial = metrics_to_json(m);
            trial["split_seed"] = split_seed;
            trials.push_back(trial);
            log_kv("evaluate", {{"trial", std::to_string(t)},
                                {"accuracy", format_double(m.accuracy)},
                                {"macro_f1", format_double(m.macro_f1)},
                                {"mcc", format_double(m.mcc)}});
        }
        auto aggregate = [&](auto selector) {
            double mean = 0.0;
            for (const auto& m : per_trial) mean += selector(m);
            mean /= static_cast<double>(per_trial.size());
            double var = 0.0;
            for (const auto& m : per_trial) {
                var += (selector(m) - mean) * (selector(m) - mean);
            }
            const double stdev =
                per_trial.size() > 1 ? std::sqrt(var / static_cast<double>(per_trial.size() - 1))
                                     : 0.0;
            return std::pair<double, double>(mean, stdev);
        };
        auto [acc_m, acc_s] = aggregate([](const auto& m) { return m.accuracy; });
        auto [f1_m, f1_s] = aggregate([](const auto& m) { return m.macro_f1; });
        auto [mcc_m, mcc_s] = aggregate([](const auto& m) { return m.mcc; });
        out["classification"] = {
            {"model", cfg.eval.model == ClassifierKind::Knn ? "knn" : "logistic"},
            {"labels", cfg.eval.labels.string()},
            {"labels_hash", hex64(fnv1a64_file(cfg.eval.labels))},
            {"train_fraction", cfg.eval.train_fraction},
            {"trials", trials},
            {"mean", {{"accuracy", acc_m}, {"macro_f1", f1_m}, {"mcc", mcc_m}}},
            {"stdev", {{"accuracy", acc_s}, {"macro_f1", f1_s}, {"mcc", mcc_s}}}};
    }

    if (flooding_eval || holdout) {
        LoadedRun run = load_graph_artifact(cfg);
        GeometryStore store = load_flooded_artifact(cfg, run.graph);
        inputs.push_back(artifact_path(cfg, Stage::Flood));

        std::unordered_map<std::string, Geometry> boundaries;
        std::vector<std::pair<std::string, std::string>> region_rows;
        std::unordered_map<NodeId, std::string> regions_by_node;
        if (flooding_eval) {
            std::ifstream bin(cfg.eval.boundaries);
            if (!bin) {
                throw DataError("cannot open boundaries file: " + cfg.eval.boundaries.string());
            }
            boundaries = load_boundaries_tsv(bin);
            std::ifstream rin(cfg.eval.regions);
            if (!rin) throw DataError("cannot open regions file: " + cfg.eval.regions.string());
            region_rows = load_regions_tsv(rin);
            inputs.push_back(cfg.eval.boundaries);
            inputs.push_back(cfg.eval.regions);
        }

        if (flooding_eval) {
            std::vector<std::pair<NodeId, std::string>> ground_truth;
            for (const auto& [iri, region] : region_rows) {
                NodeId v = run.graph.find_node(iri);
                if (v == kInvalidNode) {
                    throw DataError("regions file names unknown node: " + iri);
                }
                ground_truth.emplace_back(v, region);
                regions_by_node.emplace(v, region);
            }
            if (cfg.eval.sample_cap > 0 && ground_truth.size() > cfg.eval.sample_cap) {
                std::mt19937_64 rng(splitmix64(cfg.seed ^ 0x43415055ull));
                std::shuffle(ground_truth.begin(), ground_truth.end(), rng);
                ground_truth.resize(cfg.eval.sample_cap);
            }
            FloodingEvalResult fr = flooding_accuracy(store, ground_truth, boundaries);
            out["flooding"] = {{"total", fr.total},
                               {"hits", fr.hits},
                               {"missing_geometry", fr.missing_geometry},
                               {"accuracy", fr.accuracy}};
            log_kv("evaluate", {{"flooding_accuracy", format_double(fr.accuracy)},
                                {"flooding_total", std::to_string(fr.total)}});
        }

        if (holdout) {
            // Original geometries are the iteration-0 rows of the flooded store.
            GeometryStore original;
            for (const auto& [v, ng] : store.assignments) {
                if (ng.iteration != 0) continue;
                for (GeometryId id : ng.geometry) original.assign_original(v, store.table.at(id));
            }
            HoldoutOptions options;
            options.test_fraction = cfg.eval.holdout_fraction;
            options.seed = cfg.seed;
            options.threshold_km = cfg.eval.holdout_threshold_km;
            HoldoutResult hr =
                flooding_holdout(run.graph, original, options,
                                 flooding_eval ? &regions_by_node : nullptr,
                                 flooding_eval ? &boundaries : nullptr);
            out["holdout"] = {{"held_out", hr.held_out},
                              {"flooded", hr.flooded},
                              {"hits", hr.hits},
                              {"accuracy", hr.accuracy},
                              {"mode", flooding_eval ? "boundary" : "distance"},
                              {"threshold_km", cfg.eval.holdout_threshold_km}};
            log_kv("evaluate", {{"holdout_accuracy", format_double(hr.accuracy)},
                                {"holdout_held_out", std::to_string(hr.held_out)}});
        }
    }

    write_file_atomic(artifact_path(cfg, Stage::Evaluate), out.dump(2) + "\n");

    // Human-readable summary table.
    std::ostringstream table;
    table << "metric            value\n";
    if (out.contains("classification")) {
        const json& mean = out["classification"]["mean"];
        const json& stdev = out["classification"]["stdev"];
        for (const char* key : {"accuracy", "macro_f1", "mcc"}) {
            table << key;
            for (std::size_t i = std::string(key).size(); i < 18; ++i) table << ' ';
            table << mean[key].get<double>() << " +- " << stdev[key].get<double>() << '\n';
        }
    }
    if (out.contains("flooding")) {
        table << "flooding_accuracy " << out["flooding"]["accuracy"].get<double>() << '\n';
    }
    if (out.contains("holdout")) {
        table << "holdout_accuracy  " << out["holdout"]["accuracy"].get<double>() << '\n';
    }
    std::cerr << table.str();

    write_manifest(cfg, Stage::Evaluate, inputs, json::object());
}

}  // namespace

void run_stage(const PipelineConfig& cfg, Stage stage) {
    std::filesystem::create_directories(cfg.output_dir);
    check_upstream(cfg, stage);
    switch (stage) {
        case Stage::Ingest: run_ingest(cfg); return;
        case Stage::Flood: run_flood(cfg); return;
        case Stage::Weight: run_weight(cfg); return;
        case Stage::Stats: run_stats(cfg); return;
        case Stage::Walk: run_walk(cfg); return;
        case Stage::Train: run_train(cfg); return;
        case Stage::Evaluate: run_evaluate(cfg); return;
    }
    throw ConfigError("unknown stage");
}

void run_all(const PipelineConfig& cfg) {
    run_stage(cfg, Stage::Ingest);
    run_stage(cfg, Stage::Flood);
    run_stage(cfg, Stage::Weight);
    run_stage(cfg, Stage::Walk);
    run_stage(cfg, Stage::Train);
    run_stage(cfg, Stage::Stats);
    const bool evaluate = !cfg.eval.labels.empty() ||
                          (!cfg.eval.regions.empty() && !cfg.eval.boundaries.empty()) ||
                          cfg.eval.holdout_fraction > 0.0;
    if (evaluate) run_stage(cfg, Stage::Evaluate);
}

CompareReport compare_runs(const std::filesystem::path& run_a,
                           const std::filesystem::path& run_b) {
    auto load_metrics = [](const std::filesystem::path& dir) {
        const std::filesystem::path path = dir / "metrics.json";
        if (!std::filesystem::exists(path)) {
            throw DataError("missing metrics file: " + path.string());
        }
        json j = json::parse(read_file(path));
        if (!j.contains("classification")) {
            throw DataError("metrics file has no classification section: " + path.string());
        }
        return j;
    };
    json a = load_metrics(run_a);
    json b = load_metrics(run_b);
    const std::string hash_a = a["classification"].value("labels_hash", "");
    const std::string hash_b = b["classification"].value("labels_hash", "");
    if (hash_a != hash_b) {
        throw DataError("runs were evaluated on different label files");
    }

    CompareReport report;
    auto read_trials = [](const json& j, std::vector<TrialMetrics>& out) {
        for (const json& t : j["classification"]["trials"]) {
            TrialMetrics tm;
            tm.split_seed = t.value("split_seed", 0ull);
            tm.metrics.accuracy = t.value("accuracy", 0.0);
            tm.metrics.macro_f1 = t.value("macro_f1", 0.0);
            tm.metrics.mcc = t.value("mcc", 0.0);
            out.push_back(tm);
        }
    };
    read_trials(a, report.a);
    read_trials(b, report.b);
    auto read_agg = [](const json& j, const char* key) {
        ClassificationMetrics m;
        m.accuracy = j["classification"][key].value("accuracy", 0.0);
        m.macro_f1 = j["classification"][key].value("macro_f1", 0.0);
        m.mcc = j["classification"][key].value("mcc", 0.0);
        return m;
    };
    report.mean_a = read_agg(a, "mean");
    report.mean_b = read_agg(b, "mean");
    report.stdev_a = read_agg(a, "stdev");
    report.stdev_b = read_agg(b, "stdev");

    std::ostringstream text;
    text << "metric     run A (mean +- stdev)      run B (mean +- stdev)      delta (B-A)\n";
    auto row = [&](const char* name, double ma, double sa, double mb, double sb) {
        text << name;
        for (std::size_t i = std::string(name).size(); i < 11; ++i) text << ' ';
        text << format_double(ma) << " +- " << format_double(sa) << "    " << format_double(mb)
             << " +- " << format_double(sb) << "    " << format_double(mb - ma) << '\n';
    };
    row("accuracy", report.mean_a.accuracy, report.stdev_a.accuracy, report.mean_b.accuracy,
        report.stdev_b.accuracy);
    row("macro_f1", report.mean_a.macro_f1, report.stdev_a.macro_f1, report.mean_b.macro_f1,
        report.stdev_b.macro_f1);
    row("mcc", report.mean_a.mcc, report.stdev_a.mcc, report.mean_b.mcc, report.stdev_b.mcc);
    text << "trials     A: ";
    for (const TrialMetrics& t : report.a) text << format_double(t.metrics.accuracy) << ' ';
    text << "\n           B: ";
    for (const TrialMetrics& t : report.b) text << format_double(t.metrics.accuracy) << ' ';
    text << '\n';
    report.text = text.str();
    return report;
}

}  // namespace geovec
