#pragma once
// Iterative propagation of geometry sets from geographic nodes to their
// non-geographic neighbors, in layered iterations, until no assignable node
// remains.

#include <cstdint>
#include <map>
#include <optional>
#include <unordered_map>
#include <vector>

#include "geovec/geometry.hpp"
#include "geovec/kg.hpp"

namespace geovec {

using GeometryId = std::uint32_t;

// Interns geometries by exact coordinate equality (canonical WKT key), so a
// geometry inherited along many paths is stored once.
class GeometryTable {
public:
    GeometryId intern(Geometry g);
    const Geometry& at(GeometryId id) const { return geometries_[id]; }
    const std::string& wkt(GeometryId id) const { return wkts_[id]; }
    std::uint32_t size() const { return static_cast<std::uint32_t>(geometries_.size()); }

private:
    std::vector<Geometry> geometries_;
    std::vector<std::string> wkts_;
    std::unordered_map<std::string, GeometryId> index_;
};

struct NodeGeometry {
    std::uint32_t iteration = 0;        // 0 = original geometry
    std::vector<GeometryId> geometry;   // sorted, unique
    std::vector<NodeId> sources;        // geographic neighbors inherited from; empty for originals
};

struct GeometryStore {
    GeometryTable table;
    std::unordered_map<NodeId, NodeGeometry> assignments;

    bool has_geometry(NodeId v) const { return assignments.count(v) != 0; }

    void assign_original(NodeId v, Geometry g) {
        NodeGeometry& ng = assignments[v];
        ng.iteration = 0;
        GeometryId id = table.intern(std::move(g));
        auto it = std::lower_bound(ng.geometry.begin(), ng.geometry.end(), id);
        if (it == ng.geometry.end() || *it != id) ng.geometry.insert(it, id);
    }
};

struct StoreBuildStats {
    std::uint64_t parsed = 0;
    std::uint64_t failed = 0;
    std::vector<std::string> errors;
};

// Parses the raw WKT literals collected at ingest into an initial store.
// strict: any malformed or out-of-range literal aborts; otherwise bad
// literals are skipped and counted.
GeometryStore make_initial_store(
    const std::unordered_map<NodeId, std::vector<std::string>>& raw_geometries, bool strict,
    StoreBuildStats* stats = nullptr);

// Layered flooding: iteration k assigns every unassigned node with at least
// one neighbor assigned before iteration k the union of those neighbors'
// geometry sets; assignments become visible only after the iteration
// completes. Nodes in purely non-geographic components stay unassigned.
// Flooding an already-flooded store is a no-op. max_iterations = 0 means
// unlimited.
GeometryStore flood(const KnowledgeGraph& g, GeometryStore store,
                    std::uint32_t max_iterations = 0);

struct FloodingReport {
    std::map<std::uint32_t, std::uint64_t> nodes_per_iteration;  // iteration -> newly assigned
    std::map<std::size_t, std::uint64_t> set_size_histogram;     // |geometry set| -> node count
    std::uint64_t assigned_nodes = 0;
    std::uint64_t unassigned_nodes = 0;
    std::uint32_t iterations = 0;  // highest iteration index reached
};

FloodingReport flooding_report(const KnowledgeGraph& g, const GeometryStore& store);

// Tab-separated export: node IRI, iteration index, WKT; one row per assigned
// geometry, ordered by node id. Flooding sources are not part of the format.
void store_to_tsv(std::ostream& out, const KnowledgeGraph& g, const GeometryStore& store);
GeometryStore store_from_tsv(std::istream& in, const KnowledgeGraph& g);

}  // namespace geovec
