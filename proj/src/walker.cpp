#include "geovec/walker.hpp"

#include <ostream>
#include <random>
#include <thread>

namespace geovec {

std::vector<TransitionProbability> transition_probabilities(
    const KnowledgeGraph& g, NodeId v, std::span<const double> triple_weights) {
    std::vector<TransitionProbability> out;
    double total = 0.0;
    for (const AdjEntry& e : g.out_edges(v)) {
        double w = triple_weights.empty() ? 1.0 : triple_weights[e.triple];
        total += w;
        out.push_back(TransitionProbability{e.triple, w});
    }
    if (total <= 0.0) return {};  // terminal
    for (TransitionProbability& p : out) p.probability /= total;
    return out;
}

namespace {

inline double next_unit_double(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

void walk_vertex_range(const KnowledgeGraph& g, std::span<const double> weights,
                       const WalkConfig& cfg, NodeId begin, NodeId end,
                       std::vector<Walk>& walks) {
    for (NodeId v = begin; v < end; ++v) {
        std::mt19937_64 rng(splitmix64(cfg.seed ^ splitmix64(0x57414c4bull + v)));
        for (std::uint32_t i = 0; i < cfg.walks_per_vertex; ++i) {
            Walk walk;
            walk.entities.push_back(v);
            NodeId cur = v;
            for (std::uint32_t hop = 0; hop < cfg.depth; ++hop) {
                std::span<const AdjEntry> edges = g.out_edges(cur);
                if (edges.empty()) break;
                double total = 0.0;
                if (cfg.weighted) {
                    for (const AdjEntry& e : edges) total += weights[e.triple];
                } else {
                    total = static_cast<double>(edges.size());
                }
                if (total <= 0.0) break;
                const double r = next_unit_double(rng) * total;
                double cum = 0.0;
                const AdjEntry* chosen = nullptr;
                const AdjEntry* last_positive = nullptr;
                for (const AdjEntry& e : edges) {
                    const double w = cfg.weighted ? weights[e.triple] : 1.0;
                    if (w > 0.0) last_positive = &e;
                    cum += w;
                    if (r < cum) {
                        chosen = &e;
                        break;
                    }
                }
                if (!chosen) chosen = last_positive;  // r landed on the rounding spill
                walk.predicates.push_back(chosen->predicate);
                walk.entities.push_back(chosen->node);
                cur = chosen->node;
            }
            walks[static_cast<std::size_t>(v) * cfg.walks_per_vertex + i] = std::move(walk);
        }
    }
}

}  // namespace

WalkCorpus generate_walks(const KnowledgeGraph& g, std::span<const double> triple_weights,
                          const WalkConfig& cfg) {
    if (cfg.weighted && triple_weights.size() != g.triples().size()) {
        throw DataError("weighted walk extraction needs one weight per triple");
    }
    WalkCorpus corpus;
    const std::size_t n = g.node_count();
    corpus.walks.resize(n * cfg.walks_per_vertex);

    const std::uint32_t workers = std::max<std::uint32_t>(1, cfg.workers);
    if (workers == 1 || n < 2 * workers) {
        walk_vertex_range(g, triple_weights, cfg, 0, static_cast<NodeId>(n), corpus.walks);
        return corpus;
    }
    std::vector<std::thread> threads;
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::uint32_t w = 0; w < workers; ++w) {
        const NodeId begin = static_cast<NodeId>(std::min(n, w * chunk));
        const NodeId end = static_cast<NodeId>(std::min(n, (w + 1) * chunk));
        if (begin >= end) break;
        threads.emplace_back([&, begin, end] {
            walk_vertex_range(g, triple_weights, cfg, begin, end, corpus.walks);
        });
    }
    for (std::thread& t : threads) t.join();
    return corpus;
}

std::string render_token(std::string_view raw) {
    bool clean = true;
    for (char c : raw) {
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '%') {
            clean = false;
            break;
        }
    }
    if (clean) return std::string(raw);
    std::string out;
    out.reserve(raw.size() + 8);
    for (char c : raw) {
        switch (c) {
            case ' ': out += "%20"; break;
            case '\t': out += "%09"; break;
            case '\n': out += "%0A"; break;
            case '\r': out += "%0D"; break;
            case '%': out += "%25"; break;
            default: out += c;
        }
    }
    return out;
}

void corpus_to_text(std::ostream& out, const KnowledgeGraph& g, const WalkCorpus& corpus,
                    bool include_predicates) {
    for (const Walk& walk : corpus.walks) {
        for (std::size_t i = 0; i < walk.entities.size(); ++i) {
            if (i) out << ' ';
            out << render_token(g.node_name(walk.entities[i]));
            if (include_predicates && i < walk.predicates.size()) {
                out << ' ' << render_token(g.relation_name(walk.predicates[i]));
            }
        }
        out << '\n';
    }
}

}  // namespace geovec
