#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "geovec/spatial.hpp"

using namespace geovec;

namespace {

constexpr double kQuarterMeridianKm = 10018.754171394621;  // R*pi/2, arbitrary precision
constexpr double kMannheimZurichKm = 235.01740148381362;   // frozen high-precision value

double truncate4(double v) {
    return std::floor(v * 1e4) / 1e4;
}

// Star graph: v -> a, v -> b, v -> c with endpoints on the equator at
// distances proportional to 1:2:3 (exact under the equatorial arc formula).
struct StarFixture {
    KnowledgeGraph g;
    GeometryStore store;

    StarFixture() {
        NodeId v = g.intern_node("v");
        RelationId p = g.intern_relation("p");
        const double lon10km = 10000.0 / kEarthRadiusMeters * 180.0 / M_PI;
        const char* names[] = {"a", "b", "c"};
        for (int i = 0; i < 3; ++i) {
            NodeId u = g.intern_node(names[i]);
            g.add_triple(v, p, u);
            store.assign_original(u, Geometry(Point{{lon10km * (i + 1), 0.0}}));
        }
        g.finalize();
        store.assign_original(v, Geometry(Point{{0.0, 0.0}}));
    }
};

}  // namespace

TEST_CASE("geodesic distance fixed values") {
    CHECK(geodesic_distance_km({8.46, 49.48}, {8.46, 49.48}) == 0.0);

    // Quarter of a great circle along the equator.
    CHECK(std::abs(geodesic_distance_km({0, 0}, {90, 0}) - kQuarterMeridianKm) < 1e-3);
    // Same angle pole-ward.
    CHECK(std::abs(geodesic_distance_km({0, 0}, {0, 90}) - kQuarterMeridianKm) < 1e-3);

    // Mannheim -> Zurich against an independent arbitrary-precision oracle.
    const GeoPoint mannheim{8.4660, 49.4875};
    const GeoPoint zurich{8.5417, 47.3769};
    CHECK(std::abs(geodesic_distance_km(mannheim, zurich) - kMannheimZurichKm) < 1e-3);
}

TEST_CASE("geodesic distance properties") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> lon(-180.0, 180.0), lat(-90.0, 90.0);
    const double max_km = kEarthRadiusMeters * M_PI / 1000.0;
    for (int i = 0; i < 2000; ++i) {
        GeoPoint a{lon(rng), lat(rng)}, b{lon(rng), lat(rng)};
        const double ab = geodesic_distance_km(a, b);
        const double ba = geodesic_distance_km(b, a);
        CHECK(std::abs(ab - ba) <= 1e-12);
        CHECK(ab >= 0.0);
        CHECK(ab <= max_km + 1e-9);
        CHECK(geodesic_distance_km(a, a) == 0.0);
    }
    // Antipodal pair: clamping keeps acos finite at the maximum.
    CHECK(geodesic_distance_km({0, 0}, {180, 0}) == doctest::Approx(max_km).epsilon(1e-12));
}

TEST_CASE("exponential kernel reproduces the worked values") {
    // Printed values are truncated to four decimals; compare at that precision.
    CHECK(std::abs(truncate4(exponential_weight(1.0)) - 0.3678) < 5e-5);
    CHECK(std::abs(truncate4(exponential_weight(5.0)) - 0.0067) < 5e-5);
    CHECK(exponential_weight(0.0) == 1.0);
    CHECK(exponential_weight(1.0) == doctest::Approx(0.36787944117144233).epsilon(1e-15));
}

TEST_CASE("exponential kernel is strictly decreasing") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> d(0.0, 50.0);
    for (int i = 0; i < 1000; ++i) {
        double d1 = d(rng), d2 = d(rng);
        if (d1 == d2) continue;
        if (d1 > d2) std::swap(d1, d2);
        CHECK(exponential_weight(d1) > exponential_weight(d2));
    }
}

TEST_CASE("threshold kernel") {
    CHECK(threshold_weight(2.0, 5.0) == 1.0);
    CHECK(threshold_weight(7.0, 5.0) == 0.0);
    CHECK(threshold_weight(5.0, 5.0) == 1.0);  // boundary included
}

TEST_CASE("inverse distance kernel") {
    CHECK(inverse_distance_weight(2.0, 1) == doctest::Approx(0.5));
    CHECK(inverse_distance_weight(2.0, 2) == doctest::Approx(0.25));
    CHECK_THROWS_AS(inverse_distance_weight(0.0, 1), DataError);
}

TEST_CASE("min-max normalization") {
    std::vector<double> d{10, 20, 30};
    CHECK(minmax_normalize(d) == std::vector<double>{0.0, 0.5, 1.0});
    std::vector<double> same{5, 5};
    CHECK(minmax_normalize(same) == std::vector<double>{0.0, 0.0});
    std::vector<double> single{42};
    CHECK(minmax_normalize(single) == std::vector<double>{0.0});
}

TEST_CASE("edge weights: identical geometries and missing geometries") {
    KnowledgeGraph g;
    NodeId a = g.intern_node("a");
    NodeId b = g.intern_node("b");
    NodeId x = g.intern_node("x");
    NodeId y = g.intern_node("y");
    RelationId p = g.intern_relation("p");
    g.add_triple(a, p, b);
    g.add_triple(x, p, y);
    g.finalize();

    GeometryStore store;
    store.assign_original(a, Geometry(Point{{8.0, 49.0}}));
    store.assign_original(b, Geometry(Point{{8.0, 49.0}}));

    for (bool normalize : {false, true}) {
        WeightingOptions options;
        options.normalize = normalize;
        auto edges = assign_edge_weights(g, store, options);
        REQUIRE(edges.size() == 2);
        REQUIRE(edges[0].distance_km.has_value());
        CHECK(*edges[0].distance_km == 0.0);
        CHECK(edges[0].weight == 1.0);
        CHECK_FALSE(edges[1].distance_km.has_value());
        CHECK(edges[1].weight == 1.0);
    }
}

TEST_CASE("edge weights: normalized exponential on a 1:2:3 star") {
    StarFixture fx;
    WeightingOptions options;  // exponential on normalized distances
    auto edges = assign_edge_weights(fx.g, fx.store, options);
    REQUIRE(edges.size() == 3);
    CHECK(edges[0].weight == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(edges[1].weight == doctest::Approx(std::exp(-0.5)).epsilon(1e-9));
    CHECK(edges[2].weight == doctest::Approx(std::exp(-1.0)).epsilon(1e-9));
    CHECK(*edges[0].distance_km == doctest::Approx(10.0).epsilon(1e-6));
    CHECK(*edges[2].distance_km == doctest::Approx(30.0).epsilon(1e-6));
}

TEST_CASE("normalization ranges over in-edges too") {
    // v -> a at 30 km and b -> v at 10 km: the out-edge normalizes against
    // the full neighborhood range {10, 30}, giving weight e^-1, not 1.
    KnowledgeGraph g;
    NodeId v = g.intern_node("v");
    NodeId a = g.intern_node("a");
    NodeId b = g.intern_node("b");
    RelationId p = g.intern_relation("p");
    g.add_triple(v, p, a);
    g.add_triple(b, p, v);
    g.finalize();

    const double lon10km = 10000.0 / kEarthRadiusMeters * 180.0 / M_PI;
    GeometryStore store;
    store.assign_original(v, Geometry(Point{{0.0, 0.0}}));
    store.assign_original(a, Geometry(Point{{3 * lon10km, 0.0}}));
    store.assign_original(b, Geometry(Point{{-lon10km, 0.0}}));

    WeightingOptions options;
    auto edges = assign_edge_weights(g, store, options);
    CHECK(edges[0].weight == doctest::Approx(std::exp(-1.0)).epsilon(1e-9));
    // b's own neighborhood has a single distance: degenerate range, weight 1.
    CHECK(edges[1].weight == doctest::Approx(1.0));
}

TEST_CASE("inverse kernel domain error names the edge") {
    KnowledgeGraph g;
    NodeId a = g.intern_node("http://ex.org/a");
    NodeId b = g.intern_node("http://ex.org/b");
    g.add_triple(a, g.intern_relation("p"), b);
    g.finalize();
    GeometryStore store;
    store.assign_original(a, Geometry(Point{{1, 1}}));
    store.assign_original(b, Geometry(Point{{1, 1}}));

    WeightingOptions options;
    options.kernel = WeightKernel::InverseDistance;
    options.normalize = false;
    try {
        assign_edge_weights(g, store, options);
        FAIL("expected domain error");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("http://ex.org/a") != std::string::npos);
    }
}

TEST_CASE("weight partition and range properties on random graphs") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> lon(5.0, 15.0), lat(45.0, 55.0), unit(0.0, 1.0);
    for (int trial = 0; trial < 30; ++trial) {
        KnowledgeGraph g;
        const int n = 5 + static_cast<int>(rng() % 40);
        for (int i = 0; i < n; ++i) g.intern_node("n" + std::to_string(i));
        RelationId p = g.intern_relation("p");
        for (int e = 0; e < 3 * n; ++e) {
            g.add_triple(static_cast<NodeId>(rng() % n), p, static_cast<NodeId>(rng() % n));
        }
        g.finalize();

        GeometryStore store;
        for (int i = 0; i < n; ++i) {
            if (unit(rng) < 0.6) {
                store.assign_original(static_cast<NodeId>(i),
                                      Geometry(Point{{lon(rng), lat(rng)}}));
            }
        }

        WeightingOptions options;  // normalized exponential
        auto edges = assign_edge_weights(g, store, options);
        REQUIRE(edges.size() == g.triples().size());
        for (const WeightedEdge& e : edges) {
            if (e.distance_km) {
                CHECK(e.weight >= std::exp(-1.0) - 1e-12);
                CHECK(e.weight <= 1.0 + 1e-12);
            } else {
                CHECK(e.weight == 1.0);
            }
        }
    }
}

TEST_CASE("normalized weights are stable under rigid translation") {
    std::mt19937_64 rng(29);
    std::uniform_real_distribution<double> lon(5.0, 6.0), lat(45.0, 46.0), unit(0.0, 1.0);
    KnowledgeGraph g;
    const int n = 30;
    for (int i = 0; i < n; ++i) g.intern_node("n" + std::to_string(i));
    RelationId p = g.intern_relation("p");
    for (int e = 0; e < 90; ++e) {
        g.add_triple(static_cast<NodeId>(rng() % n), p, static_cast<NodeId>(rng() % n));
    }
    g.finalize();

    std::vector<GeoPoint> points(n);
    for (int i = 0; i < n; ++i) points[i] = GeoPoint{lon(rng), lat(rng)};

    auto weights_for = [&](double dlon, double dlat) {
        GeometryStore store;
        for (int i = 0; i < n; ++i) {
            store.assign_original(static_cast<NodeId>(i),
                                  Geometry(Point{{points[i].lon + dlon, points[i].lat + dlat}}));
        }
        WeightingOptions options;
        return assign_edge_weights(g, store, options);
    };
    // Longitude shifts are exact sphere isometries; latitude shifts bend
    // east-west distances through cos(lat), so keep that component tiny.
    auto base = weights_for(0, 0);
    auto moved = weights_for(0.3, 1e-5);
    for (std::size_t i = 0; i < base.size(); ++i) {
        CHECK(std::abs(base[i].weight - moved[i].weight) < 1e-6);
    }
}

TEST_CASE("weights tsv round-trip") {
    StarFixture fx;
    WeightingOptions options;
    auto edges = assign_edge_weights(fx.g, fx.store, options);

    std::ostringstream out;
    weights_to_tsv(out, fx.g, edges);
    std::istringstream in(out.str());
    auto loaded = weights_from_tsv(in, fx.g);
    REQUIRE(loaded.size() == edges.size());
    for (std::size_t i = 0; i < edges.size(); ++i) {
        CHECK(loaded[i].weight == edges[i].weight);  // exact round-trip formatting
        CHECK(loaded[i].distance_km.has_value() == edges[i].distance_km.has_value());
        if (edges[i].distance_km) CHECK(*loaded[i].distance_km == *edges[i].distance_km);
    }

    std::istringstream truncated("a\tp\tb\t\t1\n");
    CHECK_THROWS_AS(weights_from_tsv(truncated, fx.g), DataError);
}
