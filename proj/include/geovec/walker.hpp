#pragma once
// Random-walk corpus extraction: transition probabilities proportional to
// edge weights, a fixed number of walks per vertex, tokens alternating
// entities and predicates.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "geovec/kg.hpp"
#include "geovec/spatial.hpp"

namespace geovec {

struct WalkConfig {
    std::uint32_t depth = 4;            // max hops; token length <= 2*depth + 1
    std::uint32_t walks_per_vertex = 10;
    std::uint64_t seed = 1;
    bool weighted = true;               // false: uniform out-edge sampling
    bool include_predicates = true;     // false: entity-only corpus lines
    std::uint32_t workers = 1;
};

struct Walk {
    std::vector<NodeId> entities;        // size predicates.size() + 1
    std::vector<RelationId> predicates;

    friend bool operator==(const Walk&, const Walk&) = default;
};

struct WalkCorpus {
    std::vector<Walk> walks;  // grouped by start vertex, in vertex order
};

struct TransitionProbability {
    std::uint32_t triple;
    double probability;
};

// Out-edge transition distribution of v: weight / weighted out-degree.
// Parallel edges carry independent probability mass. Returns an empty list
// for a terminal vertex (no out-edges, or total weight 0).
std::vector<TransitionProbability> transition_probabilities(
    const KnowledgeGraph& g, NodeId v, std::span<const double> triple_weights);

// Extracts walks_per_vertex walks from every vertex. Sampling uses
// cumulative-probability inversion over the out-edge list in input order;
// each vertex draws from an RNG stream derived from (seed, vertex), so the
// corpus is byte-identical for any worker count. triple_weights must hold
// one weight per triple when cfg.weighted is set.
WalkCorpus generate_walks(const KnowledgeGraph& g, std::span<const double> triple_weights,
                          const WalkConfig& cfg);

inline std::vector<double> edge_weight_values(std::span<const WeightedEdge> edges) {
    std::vector<double> w(edges.size());
    for (const WeightedEdge& e : edges) w[e.triple] = e.weight;
    return w;
}

// Corpus token rendering: IRIs pass through; whitespace and '%' are
// percent-encoded so literal tokens cannot break the one-walk-per-line,
// space-separated format.
std::string render_token(std::string_view raw);

void corpus_to_text(std::ostream& out, const KnowledgeGraph& g, const WalkCorpus& corpus,
                    bool include_predicates);

}  // namespace geovec
