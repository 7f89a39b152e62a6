#include "geovec/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>

namespace geovec {

double geodesic_distance_km(const GeoPoint& a, const GeoPoint& b) {
    // acos loses ~1e-8 rad near 1, so coincident points would come out as a
    // few centimeters; the contract wants exactly 0.
    if (a == b) return 0.0;
    constexpr double deg = std::numbers::pi / 180.0;
    const double phi_a = a.lat * deg;
    const double phi_b = b.lat * deg;
    const double dlambda = (b.lon - a.lon) * deg;
    double arg = std::sin(phi_a) * std::sin(phi_b) +
                 std::cos(phi_a) * std::cos(phi_b) * std::cos(dlambda);
    arg = std::clamp(arg, -1.0, 1.0);
    return kEarthRadiusMeters * std::acos(arg) / 1000.0;
}

double exponential_weight(double d) {
    return std::exp(-d);
}

double threshold_weight(double d, double delta) {
    return d <= delta ? 1.0 : 0.0;
}

double inverse_distance_weight(double d, int alpha) {
    if (d == 0.0) {
        throw DataError("inverse-distance weight undefined at distance 0");
    }
    return std::pow(d, -alpha);
}

std::vector<double> minmax_normalize(std::span<const double> distances) {
    std::vector<double> out(distances.size(), 0.0);
    if (distances.empty()) return out;
    auto [lo_it, hi_it] = std::minmax_element(distances.begin(), distances.end());
    const double lo = *lo_it, hi = *hi_it;
    if (hi > lo) {
        for (std::size_t i = 0; i < distances.size(); ++i) {
            out[i] = (distances[i] - lo) / (hi - lo);
        }
    }
    return out;
}

std::unordered_map<NodeId, GeoPoint> node_centroids(const GeometryStore& store) {
    std::unordered_map<NodeId, GeoPoint> out;
    out.reserve(store.assignments.size());
    for (const auto& [v, ng] : store.assignments) {
        CentroidAccumulator acc;
        for (GeometryId id : ng.geometry) acc.add(store.table.at(id));
        if (!acc.empty()) out.emplace(v, acc.finalize());
    }
    return out;
}

namespace {

double apply_kernel(const WeightingOptions& options, double d, const KnowledgeGraph& g,
                    const Triple& t) {
    switch (options.kernel) {
        case WeightKernel::Exponential:
            return exponential_weight(d);
        case WeightKernel::Threshold:
            return threshold_weight(d, options.threshold);
        case WeightKernel::InverseDistance:
            try {
                return inverse_distance_weight(d, options.alpha);
            } catch (const DataError& e) {
                throw DataError(std::string(e.what()) + " for edge <" + g.node_name(t.subject) +
                                "> <" + g.relation_name(t.predicate) + "> <" +
                                g.node_name(t.object) + ">");
            }
    }
    throw DataError("unknown weight kernel");
}

}  // namespace

std::vector<WeightedEdge> assign_edge_weights(const KnowledgeGraph& g, const GeometryStore& store,
                                              const WeightingOptions& options) {
    const auto centroids = node_centroids(store);
    const auto& triples = g.triples();

    std::vector<WeightedEdge> edges(triples.size());
    for (std::uint32_t i = 0; i < triples.size(); ++i) {
        edges[i].triple = i;
        auto s = centroids.find(triples[i].subject);
        auto o = centroids.find(triples[i].object);
        if (s != centroids.end() && o != centroids.end()) {
            edges[i].distance_km = geodesic_distance_km(s->second, o->second);
        }
    }

    if (!options.normalize) {
        for (WeightedEdge& e : edges) {
            e.weight = e.distance_km ? apply_kernel(options, *e.distance_km, g, triples[e.triple])
                                     : 1.0;
        }
        return edges;
    }

    // Per-source-node range over every incident edge that has a distance.
    std::vector<double> lo(g.node_count(), std::numeric_limits<double>::infinity());
    std::vector<double> hi(g.node_count(), -std::numeric_limits<double>::infinity());
    for (const WeightedEdge& e : edges) {
        if (!e.distance_km) continue;
        const Triple& t = triples[e.triple];
        for (NodeId v : {t.subject, t.object}) {
            lo[v] = std::min(lo[v], *e.distance_km);
            hi[v] = std::max(hi[v], *e.distance_km);
        }
    }
    for (WeightedEdge& e : edges) {
        if (!e.distance_km) {
            e.weight = 1.0;
            continue;
        }
        const NodeId src = triples[e.triple].subject;
        const double range = hi[src] - lo[src];
        const double d = range > 0.0 ? (*e.distance_km - lo[src]) / range : 0.0;
        e.weight = apply_kernel(options, d, g, triples[e.triple]);
    }
    return edges;
}

void weights_to_tsv(std::ostream& out, const KnowledgeGraph& g,
                    std::span<const WeightedEdge> edges) {
    const auto& triples = g.triples();
    for (const WeightedEdge& e : edges) {
        const Triple& t = triples[e.triple];
        out << g.node_name(t.subject) << '\t' << g.relation_name(t.predicate) << '\t'
            << g.node_name(t.object) << '\t';
        if (e.distance_km) out << format_double(*e.distance_km);
        out << '\t' << format_double(e.weight) << '\n';
    }
}

std::vector<WeightedEdge> weights_from_tsv(std::istream& in, const KnowledgeGraph& g) {
    std::vector<WeightedEdge> edges;
    const auto& triples = g.triples();
    std::string line;
    std::uint64_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split(line, '\t');
        if (fields.size() != 5) {
            throw ParseError("weights row " + std::to_string(line_no) +
                             ": expected 5 tab-separated fields");
        }
        std::uint32_t i = static_cast<std::uint32_t>(edges.size());
        if (i >= triples.size()) {
            throw DataError("weights file has more rows than graph triples");
        }
        const Triple& t = triples[i];
        if (g.node_name(t.subject) != fields[0] || g.relation_name(t.predicate) != fields[1] ||
            g.node_name(t.object) != fields[2]) {
            throw DataError("weights row " + std::to_string(line_no) +
                            " does not match graph triple order");
        }
        WeightedEdge e;
        e.triple = i;
        bool ok = true;
        if (!fields[3].empty()) {
            e.distance_km = parse_double(fields[3], ok);
            if (!ok) throw ParseError("weights row " + std::to_string(line_no) + ": bad distance");
        }
        e.weight = parse_double(fields[4], ok);
        if (!ok) throw ParseError("weights row " + std::to_string(line_no) + ": bad weight");
        edges.push_back(e);
    }
    if (edges.size() != triples.size()) {
        throw DataError("weights file has " + std::to_string(edges.size()) +
                        " rows but graph has " + std::to_string(triples.size()) + " triples");
    }
    return edges;
}

}  // namespace geovec
