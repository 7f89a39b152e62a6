#pragma once
// Directed labeled multigraph over interned IRIs, with the neighborhood
// queries used by flooding, weighting and walk extraction.
//
// Construction is single-writer; once finalized the graph is immutable and
// safe to share across threads.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "geovec/common.hpp"

namespace geovec {

using NodeId = std::uint32_t;
using RelationId = std::uint32_t;

inline constexpr NodeId kInvalidNode = 0xffffffffu;

struct Triple {
    NodeId subject;
    RelationId predicate;
    NodeId object;

    friend bool operator==(const Triple&, const Triple&) = default;
};

// Dense string interner: index <-> string is a bijection, stable for the
// lifetime of the table.
class StringTable {
public:
    std::uint32_t intern(std::string_view s) {
        auto it = index_.find(s);
        if (it != index_.end()) return it->second;
        std::uint32_t id = static_cast<std::uint32_t>(items_.size());
        items_.emplace_back(s);
        index_.emplace(items_.back(), id);
        return id;
    }

    // Returns kInvalidNode when absent.
    std::uint32_t find(std::string_view s) const {
        auto it = index_.find(s);
        return it == index_.end() ? kInvalidNode : it->second;
    }

    const std::string& name(std::uint32_t id) const { return items_[id]; }
    std::uint32_t size() const { return static_cast<std::uint32_t>(items_.size()); }

private:
    struct Hash {
        using is_transparent = void;
        std::size_t operator()(std::string_view s) const {
            return std::hash<std::string_view>{}(s);
        }
    };

    std::vector<std::string> items_;
    std::unordered_map<std::string, std::uint32_t, Hash, std::equal_to<>> index_;
};

struct AdjEntry {
    RelationId predicate;
    NodeId node;           // the other endpoint
    std::uint32_t triple;  // index into triples()
};

class KnowledgeGraph {
public:
    NodeId intern_node(std::string_view iri) { return nodes_.intern(iri); }
    RelationId intern_relation(std::string_view iri) { return relations_.intern(iri); }

    void add_triple(NodeId s, RelationId p, NodeId o) {
        triples_.push_back(Triple{s, p, o});
        finalized_ = false;
    }

    // Builds the adjacency indices; call once after the last add_triple.
    void finalize();

    std::uint32_t node_count() const { return nodes_.size(); }
    std::uint32_t relation_count() const { return relations_.size(); }
    const std::vector<Triple>& triples() const { return triples_; }

    const std::string& node_name(NodeId v) const { return nodes_.name(v); }
    const std::string& relation_name(RelationId r) const { return relations_.name(r); }
    NodeId find_node(std::string_view iri) const { return nodes_.find(iri); }

    std::span<const AdjEntry> out_edges(NodeId v) const;
    std::span<const AdjEntry> in_edges(NodeId v) const;

    // N(v): out- and in-neighbors, deduplicated, sorted by id.
    std::vector<NodeId> neighbors(NodeId v) const;

    // H(v): indices of all triples with v as subject or object; a self-loop
    // triple appears once.
    std::vector<std::uint32_t> neighborhood(NodeId v) const;

    void save(const std::filesystem::path& path,
              const std::unordered_map<NodeId, std::vector<std::string>>& raw_geometries) const;
    static std::pair<KnowledgeGraph, std::unordered_map<NodeId, std::vector<std::string>>> load(
        const std::filesystem::path& path);

private:
    StringTable nodes_;
    StringTable relations_;
    std::vector<Triple> triples_;
    std::vector<AdjEntry> out_flat_, in_flat_;
    std::vector<std::uint64_t> out_offset_, in_offset_;  // size node_count()+1
    bool finalized_ = false;
};

enum class LiteralPolicy {
    Drop,  // non-geometry literal triples are skipped (counted)
    Keep,  // literal objects become terminal tokens, interned like nodes
};

struct ParseOptions {
    std::vector<std::string> geometry_predicates;  // IRIs routing literals to the geometry map
    LiteralPolicy literal_policy = LiteralPolicy::Drop;
    bool strict = false;  // strict: abort on the first malformed line
};

struct ParseStats {
    std::uint64_t lines_total = 0;
    std::uint64_t lines_blank_or_comment = 0;
    std::uint64_t triples_parsed = 0;
    std::uint64_t geometry_literals = 0;
    std::uint64_t literals_skipped = 0;
    std::uint64_t lines_malformed = 0;
    std::vector<std::pair<std::uint64_t, std::string>> errors;  // (line number, message)
};

struct ParsedGraph {
    KnowledgeGraph graph;
    // Raw WKT literal text per subject, in input order.
    std::unordered_map<NodeId, std::vector<std::string>> raw_geometries;
    ParseStats stats;
};

// Streaming line-oriented N-Triples parser. Every non-geometry triple with an
// IRI or blank-node object becomes a graph triple; triples whose predicate is
// listed in geometry_predicates route their literal object to the raw
// geometry map. Blank nodes intern under their `_:` key; literal tokens (Keep
// policy) intern in their quoted source form.
ParsedGraph parse_ntriples(std::istream& in, const ParseOptions& options);
ParsedGraph parse_ntriples_file(const std::filesystem::path& path, const ParseOptions& options);

}  // namespace geovec
