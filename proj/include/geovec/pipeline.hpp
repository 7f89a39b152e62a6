#pragma once
// Staged pipeline: ingest -> flood -> weight -> walk -> train -> evaluate,
// plus stats and run comparison. Stages communicate only through files in the
// run directory; every artifact is written atomically and carries a manifest
// with the config hash, input hashes and seed that produced it.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "geovec/eval.hpp"
#include "geovec/kg.hpp"
#include "geovec/spatial.hpp"
#include "geovec/walker.hpp"

namespace geovec {

enum class Stage { Ingest, Flood, Weight, Walk, Train, Evaluate, Stats };

const char* stage_name(Stage s);
std::optional<Stage> stage_from_name(std::string_view name);

struct EvalConfig {
    std::filesystem::path labels;       // node IRI <TAB> class label
    double train_fraction = 0.8;
    ClassifierKind model = ClassifierKind::Logistic;
    int knn_k = 5;
    int trials = 1;
    std::filesystem::path regions;      // node IRI <TAB> region id
    std::filesystem::path boundaries;   // region id <TAB> WKT multipolygon
    double holdout_fraction = 0.0;      // > 0 runs the flooding hold-out experiment
    double holdout_threshold_km = 25.0;
    std::uint64_t sample_cap = 0;       // cap on ground-truth rows, 0 = all
};

struct PipelineConfig {
    std::filesystem::path input;
    std::filesystem::path output_dir;
    std::uint64_t seed = 1;
    std::uint32_t workers = 1;
    bool force = false;  // silence config-hash mismatch warnings

    ParseOptions ingest;
    bool flood_strict_wkt = true;
    std::uint32_t flood_max_iterations = 0;
    WeightingOptions weight;
    WalkConfig walk;    // seed and workers are taken from the globals above
    TrainConfig train;  // likewise
    bool train_export_predicates = false;  // keep predicate vectors in the export
    EvalConfig eval;
};

// Reads and validates the JSON config file (schema in the README).
PipelineConfig load_config(const std::filesystem::path& path);

// Hash of the config subset that affects a stage's artifact (upstream
// settings included, so any upstream change propagates).
std::string stage_config_hash(const PipelineConfig& cfg, Stage stage);

std::filesystem::path artifact_path(const PipelineConfig& cfg, Stage stage);
std::filesystem::path manifest_path(const PipelineConfig& cfg, Stage stage);

// Runs one stage: verifies upstream artifacts (error names the missing
// stage), warns on upstream config-hash mismatches unless cfg.force, writes
// the artifact atomically and its manifest alongside.
void run_stage(const PipelineConfig& cfg, Stage stage);

// ingest .. train (+ evaluate and stats when configured).
void run_all(const PipelineConfig& cfg);

struct TrialMetrics {
    std::uint64_t split_seed = 0;
    ClassificationMetrics metrics;
};

struct CompareReport {
    std::vector<TrialMetrics> a, b;
    ClassificationMetrics mean_a, mean_b;
    ClassificationMetrics stdev_a, stdev_b;
    std::string text;  // human-readable table
};

// Side-by-side comparison of two evaluated run directories; requires both to
// have been evaluated on the same labels file.
CompareReport compare_runs(const std::filesystem::path& run_a, const std::filesystem::path& run_b);

}  // namespace geovec
