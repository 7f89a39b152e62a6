#pragma once
// Great-circle distances between node centroids, per-node min-max distance
// normalization, and the spatial edge-weight kernels.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "geovec/flooding.hpp"
#include "geovec/geometry.hpp"
#include "geovec/kg.hpp"

namespace geovec {

// Fixed sphere radius used for all distance computations (WGS84 equatorial).
inline constexpr double kEarthRadiusMeters = 6378137.0;

// Spherical-law-of-cosines distance in kilometers. The arccos argument is
// clamped to [-1, 1], so near-coincident and antipodal points are safe.
double geodesic_distance_km(const GeoPoint& a, const GeoPoint& b);

// exp(-d); maps distance 0 to 1 and decays towards 0.
double exponential_weight(double d);

// 1 if d <= delta, else 0.
double threshold_weight(double d, double delta);

// d^(-alpha). Throws DataError for d = 0 (weight unbounded); callers must
// special-case coincident geometries.
double inverse_distance_weight(double d, int alpha);

// Min-max rescaling to [0, 1]. A degenerate range (max = min, including a
// single value) maps everything to 0.
std::vector<double> minmax_normalize(std::span<const double> distances);

enum class WeightKernel { Exponential, Threshold, InverseDistance };

struct WeightingOptions {
    WeightKernel kernel = WeightKernel::Exponential;
    bool normalize = true;      // per-source-node min-max over the full neighborhood
    double threshold = 5.0;     // km (raw) or normalized units, matching `normalize`
    int alpha = 1;              // inverse-distance power
};

struct WeightedEdge {
    std::uint32_t triple = 0;
    std::optional<double> distance_km;  // absent when an endpoint has no geometry
    double weight = 1.0;
};

// Centroid of each node's assigned geometry set.
std::unordered_map<NodeId, GeoPoint> node_centroids(const GeometryStore& store);

// One WeightedEdge per graph triple, in triple order. Edges whose endpoints
// both have geometry get the centroid distance and a kernel weight; edges
// touching a geometry-less node get weight 1 and no distance. Normalization
// ranges over all incident edges of the source node (in and out), while the
// weight applies to the directed edge itself.
std::vector<WeightedEdge> assign_edge_weights(const KnowledgeGraph& g, const GeometryStore& store,
                                              const WeightingOptions& options);

// Tab-separated rows in triple order:
// subject IRI, predicate IRI, object IRI, distance-km (or empty), weight.
void weights_to_tsv(std::ostream& out, const KnowledgeGraph& g,
                    std::span<const WeightedEdge> edges);
std::vector<WeightedEdge> weights_from_tsv(std::istream& in, const KnowledgeGraph& g);

}  // namespace geovec
