#include "geovec/flooding.hpp"

#include <algorithm>
#include <istream>
#include <ostream>

namespace geovec {

GeometryId GeometryTable::intern(Geometry g) {
    std::string key = to_wkt(g);
    auto it = index_.find(key);
    if (it != index_.end()) return it->second;
    GeometryId id = static_cast<GeometryId>(geometries_.size());
    geometries_.push_back(std::move(g));
    wkts_.push_back(key);
    index_.emplace(std::move(key), id);
    return id;
}

GeometryStore make_initial_store(
    const std::unordered_map<NodeId, std::vector<std::string>>& raw_geometries, bool strict,
    StoreBuildStats* stats) {
    GeometryStore store;
    // Deterministic interning order: by node id.
    std::vector<NodeId> keys;
    keys.reserve(raw_geometries.size());
    for (const auto& [v, _] : raw_geometries) keys.push_back(v);
    std::sort(keys.begin(), keys.end());
    for (NodeId v : keys) {
        for (const std::string& text : raw_geometries.at(v)) {
            try {
                store.assign_original(v, parse_wkt(text));
                if (stats) ++stats->parsed;
            } catch (const ParseError& e) {
                if (strict) throw;
                if (stats) {
                    ++stats->failed;
                    if (stats->errors.size() < 100) {
                        stats->errors.push_back(std::string(e.what()) + ": " + text);
                    }
                }
            }
        }
    }
    return store;
}

GeometryStore flood(const KnowledgeGraph& g, GeometryStore store, std::uint32_t max_iterations) {
    std::vector<char> assigned(g.node_count(), 0);
    std::vector<NodeId> layer;
    std::uint32_t iteration = 0;
    for (const auto& [v, ng] : store.assignments) {
        assigned[v] = 1;
        layer.push_back(v);
        iteration = std::max(iteration, ng.iteration);
    }

    struct Pending {
        NodeId node;
        std::vector<GeometryId> geometry;
        std::vector<NodeId> sources;
    };

    while (!layer.empty()) {
        ++iteration;
        if (max_iterations != 0 && iteration > max_iterations) break;

        // Frontier: unassigned neighbors of the last committed layer.
        std::vector<NodeId> frontier;
        for (NodeId u : layer) {
            for (NodeId v : g.neighbors(u)) {
                if (!assigned[v]) frontier.push_back(v);
            }
        }
        std::sort(frontier.begin(), frontier.end());
        frontier.erase(std::unique(frontier.begin(), frontier.end()), frontier.end());
        if (frontier.empty()) break;

        // Reads see only the state at iteration start; commits happen below.
        std::vector<Pending> pending;
        pending.reserve(frontier.size());
        for (NodeId v : frontier) {
            Pending p{v, {}, {}};
            for (NodeId u : g.neighbors(v)) {
                if (!assigned[u]) continue;
                p.sources.push_back(u);
                const std::vector<GeometryId>& set = store.assignments.at(u).geometry;
                p.geometry.insert(p.geometry.end(), set.begin(), set.end());
            }
            std::sort(p.geometry.begin(), p.geometry.end());
            p.geometry.erase(std::unique(p.geometry.begin(), p.geometry.end()), p.geometry.end());
            pending.push_back(std::move(p));
        }

        layer.clear();
        for (Pending& p : pending) {
            assigned[p.node] = 1;
            layer.push_back(p.node);
            store.assignments.emplace(
                p.node, NodeGeometry{iteration, std::move(p.geometry), std::move(p.sources)});
        }
    }
    return store;
}

FloodingReport flooding_report(const KnowledgeGraph& g, const GeometryStore& store) {
    FloodingReport report;
    for (const auto& [v, ng] : store.assignments) {
        ++report.nodes_per_iteration[ng.iteration];
        ++report.set_size_histogram[ng.geometry.size()];
        ++report.assigned_nodes;
        report.iterations = std::max(report.iterations, ng.iteration);
    }
    report.unassigned_nodes = g.node_count() - report.assigned_nodes;
    return report;
}

void store_to_tsv(std::ostream& out, const KnowledgeGraph& g, const GeometryStore& store) {
    std::vector<NodeId> keys;
    keys.reserve(store.assignments.size());
    for (const auto& [v, _] : store.assignments) keys.push_back(v);
    std::sort(keys.begin(), keys.end());
    for (NodeId v : keys) {
        const NodeGeometry& ng = store.assignments.at(v);
        for (GeometryId id : ng.geometry) {
            out << g.node_name(v) << '\t' << ng.iteration << '\t' << store.table.wkt(id) << '\n';
        }
    }
}

GeometryStore store_from_tsv(std::istream& in, const KnowledgeGraph& g) {
    GeometryStore store;
    std::string line;
    std::uint64_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split(line, '\t');
        if (fields.size() != 3) {
            throw ParseError("flooded store row " + std::to_string(line_no) +
                             ": expected 3 tab-separated fields");
        }
        NodeId v = g.find_node(fields[0]);
        if (v == kInvalidNode) {
            throw DataError("flooded store row " + std::to_string(line_no) +
                            ": unknown node " + std::string(fields[0]));
        }
        std::uint32_t iteration = 0;
        for (char c : fields[1]) {
            if (c < '0' || c > '9') {
                throw ParseError("flooded store row " + std::to_string(line_no) +
                                 ": bad iteration index");
            }
            iteration = iteration * 10 + static_cast<std::uint32_t>(c - '0');
        }
        GeometryId id = store.table.intern(parse_wkt(fields[2]));
        NodeGeometry& ng = store.assignments[v];
        ng.iteration = iteration;
        auto it = std::lower_bound(ng.geometry.begin(), ng.geometry.end(), id);
        if (it == ng.geometry.end() || *it != id) ng.geometry.insert(it, id);
    }
    return store;
}

}  // namespace geovec
