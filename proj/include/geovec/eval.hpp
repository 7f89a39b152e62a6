#pragma once
// Node-classification evaluation (accuracy, macro-F1, MCC) over trained
// embeddings, centroid-in-boundary flooding evaluation, and weighted-graph
// statistics.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "geovec/embedding.hpp"
#include "geovec/flooding.hpp"
#include "geovec/spatial.hpp"

namespace geovec {

struct ConfusionMatrix {
    std::size_t k = 0;
    std::vector<std::uint64_t> counts;  // row-major, rows = true, columns = predicted
    std::vector<std::string> labels;    // class index -> label, sorted

    explicit ConfusionMatrix(std::size_t classes = 0)
        : k(classes), counts(classes * classes, 0) {}

    std::uint64_t& at(std::size_t truth, std::size_t predicted) {
        return counts[truth * k + predicted];
    }
    std::uint64_t at(std::size_t truth, std::size_t predicted) const {
        return counts[truth * k + predicted];
    }
    std::uint64_t total() const {
        std::uint64_t t = 0;
        for (std::uint64_t c : counts) t += c;
        return t;
    }
};

struct ClassificationMetrics {
    double accuracy = 0.0;
    double macro_f1 = 0.0;
    double mcc = 0.0;
};

// Zero-denominator conventions: a class with no predictions and no true
// instances contributes F1 = 0; an MCC denominator of 0 yields 0.
ClassificationMetrics metrics(const ConfusionMatrix& cm);

struct LabeledExample {
    std::string node;   // IRI
    std::string label;
};

struct LabeledSplit {
    std::vector<LabeledExample> train;
    std::vector<LabeledExample> test;
};

enum class ClassifierKind { Knn, Logistic };

struct ClassifyOptions {
    ClassifierKind model = ClassifierKind::Logistic;
    int knn_k = 5;            // odd
    double tolerance = 1e-6;  // logistic objective convergence
    int max_iterations = 5000;
};

// Fits the model on the train vectors and scores the test vectors. kNN uses
// cosine distance with ties broken towards the smallest class index. Throws
// DataError listing any labeled node without an embedding.
ConfusionMatrix classify(const LoadedEmbeddings& embeddings, const LabeledSplit& split,
                         const ClassifyOptions& options);

struct FloodingEvalResult {
    std::uint64_t total = 0;
    std::uint64_t hits = 0;
    std::uint64_t missing_geometry = 0;  // counted as misses
    double accuracy = 0.0;
};

// Fraction of ground-truth nodes whose assigned-geometry-set centroid lies
// inside the named region's polygon. Throws DataError on empty ground truth
// or an unknown region id.
FloodingEvalResult flooding_accuracy(
    const GeometryStore& store, std::span<const std::pair<NodeId, std::string>> ground_truth,
    const std::unordered_map<std::string, Geometry>& boundaries);

struct HoldoutOptions {
    double test_fraction = 0.2;
    std::uint64_t seed = 1;
    // Without boundary data a hidden node scores a hit when its flooded
    // centroid lies within this distance of its true centroid.
    double threshold_km = 25.0;
};

struct HoldoutResult {
    std::uint64_t held_out = 0;
    std::uint64_t flooded = 0;  // hidden nodes that received a geometry
    std::uint64_t hits = 0;
    double accuracy = 0.0;
};

// Hides the geometries of a random fraction of geographic nodes, floods the
// rest, and scores the hidden nodes: centroid-in-boundary when region ground
// truth is given, otherwise distance to the true centroid.
HoldoutResult flooding_holdout(
    const KnowledgeGraph& g, const GeometryStore& original, const HoldoutOptions& options,
    const std::unordered_map<NodeId, std::string>* regions = nullptr,
    const std::unordered_map<std::string, Geometry>* boundaries = nullptr);

struct GraphStatistics {
    std::uint64_t nodes = 0;
    std::uint64_t triples = 0;
    double average_degree = 0.0;            // 2|E| / |V|
    double average_unique_neighbors = 0.0;  // mean |N(v)|
    std::uint64_t edges_with_distance = 0;
    double average_edge_distance_km = 0.0;  // over edges with a distance
    double average_weight_all = 0.0;        // including weight-1 non-geographic edges
    double average_weight_geographic = 0.0; // edges with a distance only
};

GraphStatistics graph_statistics(const KnowledgeGraph& g, std::span<const WeightedEdge> edges);

// File loaders for the tab-separated evaluation inputs.
std::vector<LabeledExample> load_labels_tsv(std::istream& in);
std::unordered_map<std::string, Geometry> load_boundaries_tsv(std::istream& in);
std::vector<std::pair<std::string, std::string>> load_regions_tsv(std::istream& in);

// Deterministic train/test split of a labels file: shuffles with the seed and
// keeps train_fraction for training.
LabeledSplit split_labels(std::span<const LabeledExample> labeled, double train_fraction,
                          std::uint64_t seed);

}  // namespace geovec
