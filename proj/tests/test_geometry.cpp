#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "geovec/geometry.hpp"

using namespace geovec;

namespace {

Polygon unit_square() {
    return Polygon{{{{0, 0}, {1, 0}, {1, 1}, {0, 1}, {0, 0}}}};
}

// Independent oracle: nonzero winding number. Matches even-odd ray casting on
// simple polygons.
double is_left(const GeoPoint& a, const GeoPoint& b, const GeoPoint& p) {
    return (b.lon - a.lon) * (p.lat - a.lat) - (p.lon - a.lon) * (b.lat - a.lat);
}

int winding_number(const GeoPoint& p, const Ring& ring) {
    int wn = 0;
    for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
        const GeoPoint& a = ring[i];
        const GeoPoint& b = ring[i + 1];
        if (a.lat <= p.lat) {
            if (b.lat > p.lat && is_left(a, b, p) > 0) ++wn;
        } else {
            if (b.lat <= p.lat && is_left(a, b, p) < 0) --wn;
        }
    }
    return wn;
}

bool winding_inside(const GeoPoint& p, const Polygon& poly) {
    if (winding_number(p, poly.rings[0]) == 0) return false;
    for (std::size_t i = 1; i < poly.rings.size(); ++i) {
        if (winding_number(p, poly.rings[i]) != 0) return false;
    }
    return true;
}

double segment_distance(const GeoPoint& p, const GeoPoint& a, const GeoPoint& b) {
    const double dx = b.lon - a.lon, dy = b.lat - a.lat;
    const double len2 = dx * dx + dy * dy;
    double t = len2 > 0 ? ((p.lon - a.lon) * dx + (p.lat - a.lat) * dy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return std::hypot(p.lon - (a.lon + t * dx), p.lat - (a.lat + t * dy));
}

double boundary_distance(const GeoPoint& p, const Polygon& poly) {
    double best = 1e30;
    for (const Ring& ring : poly.rings) {
        for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
            best = std::min(best, segment_distance(p, ring[i], ring[i + 1]));
        }
    }
    return best;
}

Polygon random_star_polygon(std::mt19937_64& rng, bool with_hole) {
    std::uniform_real_distribution<double> radius(0.5, 2.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const std::size_t n = 5 + rng() % 8;
    std::vector<double> angles(n);
    for (double& a : angles) a = unit(rng) * 2.0 * M_PI;
    std::sort(angles.begin(), angles.end());
    const double cx = unit(rng) * 10.0 - 5.0;
    const double cy = unit(rng) * 10.0 - 5.0;
    Ring ring;
    for (double a : angles) {
        const double r = radius(rng);
        ring.push_back(GeoPoint{cx + r * std::cos(a), cy + r * std::sin(a)});
    }
    ring.push_back(ring.front());
    Polygon poly{{ring}};
    if (with_hole) {
        const double h = 0.1;  // well inside the minimum radius
        poly.rings.push_back(
            Ring{{cx - h, cy - h}, {cx + h, cy - h}, {cx + h, cy + h}, {cx - h, cy + h},
                 {cx - h, cy - h}});
    }
    return poly;
}

}  // namespace

TEST_CASE("wkt point parsing") {
    Geometry g = parse_wkt("POINT (8.46 49.48)");
    const Point* p = g.get_if<Point>();
    REQUIRE(p != nullptr);
    CHECK(p->coord.lon == doctest::Approx(8.46));
    CHECK(p->coord.lat == doctest::Approx(49.48));

    // Keyword case and whitespace are free.
    CHECK(parse_wkt("point(8.46   49.48)").get_if<Point>() != nullptr);
    CHECK(parse_wkt("  PoInT ( 8.46 49.48 ) ").get_if<Point>() != nullptr);
}

TEST_CASE("wkt polygon parsing") {
    Geometry g = parse_wkt("POLYGON ((0 0, 1 0, 1 1, 0 1, 0 0))");
    const Polygon* poly = g.get_if<Polygon>();
    REQUIRE(poly != nullptr);
    REQUIRE(poly->rings.size() == 1);
    CHECK(poly->rings[0].size() == 5);
}

TEST_CASE("wkt parse errors") {
    CHECK_THROWS_AS(parse_wkt("POINT (8.46)"), ParseError);           // arity
    CHECK_THROWS_AS(parse_wkt("POINT (8.46 49.48 3)"), ParseError);   // 3D
    CHECK_THROWS_AS(parse_wkt("POINT Z (8 49 3)"), ParseError);
    CHECK_THROWS_AS(parse_wkt("POINT EMPTY"), ParseError);
    CHECK_THROWS_AS(parse_wkt("POINT (8.46 49.48"), ParseError);      // unbalanced
    CHECK_THROWS_AS(parse_wkt("POINT (a b)"), ParseError);            // non-numeric
    CHECK_THROWS_AS(parse_wkt("POINT (200 10)"), ParseError);         // out of range
    CHECK_THROWS_AS(parse_wkt("POINT (10 95)"), ParseError);
    CHECK_THROWS_AS(parse_wkt("CIRCLE (0 0)"), ParseError);           // unsupported type
    CHECK_THROWS_AS(parse_wkt("POLYGON ((0 0, 1 0, 0 0))"), ParseError);        // short ring
    CHECK_THROWS_AS(parse_wkt("POLYGON ((0 0, 1 0, 1 1, 0 1))"), ParseError);   // open ring
    CHECK_THROWS_AS(parse_wkt("LINESTRING (1 1)"), ParseError);
    CHECK_THROWS_AS(parse_wkt("POINT (1 2) junk"), ParseError);
    CHECK_THROWS_AS(parse_wkt(""), ParseError);

    try {
        parse_wkt("POINT (8.46)");
        FAIL("expected throw");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("offset") != std::string::npos);
    }
}

TEST_CASE("wkt crs prefix is skipped") {
    Geometry g = parse_wkt("<http://www.opengis.net/def/crs/OGC/1.3/CRS84> POINT (4.9 52.4)");
    REQUIRE(g.get_if<Point>() != nullptr);
    CHECK(g.get_if<Point>()->coord.lat == doctest::Approx(52.4));
}

TEST_CASE("wkt multi variants and collections") {
    CHECK(parse_wkt("MULTIPOINT (1 1, 2 2)").get_if<MultiPoint>()->coords.size() == 2);
    CHECK(parse_wkt("MULTIPOINT ((1 1), (2 2))").get_if<MultiPoint>()->coords.size() == 2);
    CHECK(parse_wkt("MULTILINESTRING ((0 0, 1 1), (2 2, 3 3, 4 4))")
              .get_if<MultiLineString>()
              ->lines.size() == 2);
    CHECK(parse_wkt("MULTIPOLYGON (((0 0, 1 0, 1 1, 0 0)), ((2 2, 3 2, 3 3, 2 2)))")
              .get_if<MultiPolygon>()
              ->polygons.size() == 2);
    const Geometry gc =
        parse_wkt("GEOMETRYCOLLECTION (POINT (1 1), LINESTRING (0 0, 1 1), "
                  "GEOMETRYCOLLECTION (POINT (2 2)))");
    REQUIRE(gc.get_if<GeometryCollection>() != nullptr);
    CHECK(gc.get_if<GeometryCollection>()->members.size() == 3);
}

TEST_CASE("wkt serialize-parse is a fixed point") {
    const char* samples[] = {
        "POINT (8.46 49.48)",
        "LINESTRING (0 0, 1 1, 2 0.5)",
        "POLYGON ((0 0, 1 0, 1 1, 0 1, 0 0), (0.25 0.25, 0.5 0.25, 0.5 0.5, 0.25 0.25))",
        "MULTIPOINT (1 1, 2 2)",
        "MULTILINESTRING ((0 0, 1 1), (2 2, 3 3))",
        "MULTIPOLYGON (((0 0, 1 0, 1 1, 0 0)))",
        "GEOMETRYCOLLECTION (POINT (1 1), POLYGON ((0 0, 1 0, 1 1, 0 0)))",
        "POINT (-179.999 -89.5)",
        "POINT (0.1000000000000001 1e-09)",
    };
    for (const char* s : samples) {
        const std::string once = to_wkt(parse_wkt(s));
        const std::string twice = to_wkt(parse_wkt(once));
        CHECK(once == twice);
        CHECK(geometry_equal(parse_wkt(s), parse_wkt(once)));
    }

    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> lon(-179.0, 179.0), lat(-89.0, 89.0);
    for (int i = 0; i < 200; ++i) {
        LineString ls;
        for (int j = 0; j < 3 + static_cast<int>(rng() % 5); ++j) {
            ls.coords.push_back(GeoPoint{lon(rng), lat(rng)});
        }
        Geometry g{Geometry::Variant{ls}};
        const std::string once = to_wkt(g);
        CHECK(to_wkt(parse_wkt(once)) == once);
    }
}

TEST_CASE("centroid of point sets") {
    std::vector<Geometry> pts{Geometry(Point{{0, 0}}), Geometry(Point{{0, 2}})};
    GeoPoint c = centroid(pts);
    CHECK(c.lon == doctest::Approx(0.0));
    CHECK(c.lat == doctest::Approx(1.0));

    // Singleton centroid is exact.
    std::vector<Geometry> one{Geometry(Point{{8.46, 49.48}})};
    GeoPoint s = centroid(one);
    CHECK(s.lon == 8.46);
    CHECK(s.lat == 49.48);
}

TEST_CASE("centroid of polygons") {
    std::vector<Geometry> square{Geometry(unit_square())};
    GeoPoint c = centroid(square);
    CHECK(c.lon == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(c.lat == doctest::Approx(0.5).epsilon(1e-12));

    // Ring orientation does not matter.
    Polygon cw{{{{0, 0}, {0, 1}, {1, 1}, {1, 0}, {0, 0}}}};
    std::vector<Geometry> cw_set{Geometry(cw)};
    CHECK(centroid(cw_set).lon == doctest::Approx(0.5));

    // Hole shifts the centroid: 2x2 square minus the unit square at origin.
    Polygon with_hole{{{{0, 0}, {2, 0}, {2, 2}, {0, 2}, {0, 0}},
                       {{0, 0}, {1, 0}, {1, 1}, {0, 1}, {0, 0}}}};
    std::vector<Geometry> hole_set{Geometry(with_hole)};
    GeoPoint h = centroid(hole_set);
    CHECK(h.lon == doctest::Approx(7.0 / 6.0).epsilon(1e-12));
    CHECK(h.lat == doctest::Approx(7.0 / 6.0).epsilon(1e-12));
}

TEST_CASE("polygon dominates a mixed collection") {
    // Area beats points: the far-away point must not move the centroid.
    std::vector<Geometry> mixed{Geometry(Point{{5, 5}}), Geometry(unit_square())};
    GeoPoint c = centroid(mixed);
    CHECK(c.lon == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(c.lat == doctest::Approx(0.5).epsilon(1e-12));

    // Lines beat points.
    std::vector<Geometry> lines_and_points{Geometry(Point{{5, 5}}),
                                           Geometry(LineString{{{0, 0}, {0, 2}}})};
    GeoPoint l = centroid(lines_and_points);
    CHECK(l.lon == doctest::Approx(0.0));
    CHECK(l.lat == doctest::Approx(1.0));
}

TEST_CASE("centroid of lines is length-weighted") {
    // Segments of length 2 and 1: midpoints (1,0) and (2.5,0).
    std::vector<Geometry> lines{Geometry(LineString{{{0, 0}, {2, 0}}}),
                                Geometry(LineString{{{2, 0}, {3, 0}}})};
    GeoPoint c = centroid(lines);
    CHECK(c.lon == doctest::Approx((2.0 * 1.0 + 1.0 * 2.5) / 3.0));
    CHECK(c.lat == doctest::Approx(0.0));
}

TEST_CASE("degenerate centroid fallbacks") {
    // Zero-area polygon behaves as its ring read as a line.
    Polygon collinear{{{{0, 0}, {2, 0}, {1, 0}, {0, 0}}}};
    std::vector<Geometry> degen{Geometry(collinear)};
    GeoPoint c = centroid(degen);
    CHECK(c.lon == doctest::Approx(1.0));
    CHECK(c.lat == doctest::Approx(0.0));

    // Everything degenerate: plain coordinate mean.
    std::vector<Geometry> dust{Geometry(LineString{{{1, 1}, {1, 1}}}), Geometry(Point{{3, 4}})};
    GeoPoint d = centroid(dust);
    CHECK(d.lon == doctest::Approx(5.0 / 3.0));
    CHECK(d.lat == doctest::Approx(2.0));

    std::vector<Geometry> empty;
    CHECK_THROWS_AS(centroid(empty), DataError);
}

TEST_CASE("centroid translation equivariance") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        Polygon poly = random_star_polygon(rng, trial % 2 == 0);
        std::vector<Geometry> set{Geometry(poly), Geometry(Point{{unit(rng), unit(rng)}})};
        GeoPoint base = centroid(set);
        const double dx = 0.01 * unit(rng), dy = 0.01 * unit(rng);
        for (Geometry& g : set) {
            if (Polygon* p = std::get_if<Polygon>(&g.value())) {
                for (Ring& r : p->rings) {
                    for (GeoPoint& pt : r) {
                        pt.lon += dx;
                        pt.lat += dy;
                    }
                }
            } else if (Point* p = std::get_if<Point>(&g.value())) {
                p->coord.lon += dx;
                p->coord.lat += dy;
            }
        }
        GeoPoint moved = centroid(set);
        CHECK(moved.lon - base.lon == doctest::Approx(dx).epsilon(1e-9));
        CHECK(moved.lat - base.lat == doctest::Approx(dy).epsilon(1e-9));
    }
}

TEST_CASE("point in polygon basics") {
    Geometry square{Geometry::Variant{unit_square()}};
    CHECK(point_in_polygon({0.5, 0.5}, square));
    CHECK_FALSE(point_in_polygon({2, 2}, square));
    // Boundary and vertices count as inside.
    CHECK(point_in_polygon({1, 0.5}, square));
    CHECK(point_in_polygon({0, 0}, square));
    CHECK(point_in_polygon({0.5, 1}, square));

    CHECK_THROWS_AS(point_in_polygon({0, 0}, Geometry(Point{{0, 0}})), DataError);
}

TEST_CASE("point in polygon with hole") {
    Polygon with_hole{{{{0, 0}, {4, 0}, {4, 4}, {0, 4}, {0, 0}},
                       {{1, 1}, {3, 1}, {3, 3}, {1, 3}, {1, 1}}}};
    Geometry g{Geometry::Variant{with_hole}};
    CHECK(point_in_polygon({0.5, 0.5}, g));
    CHECK_FALSE(point_in_polygon({2, 2}, g));       // inside the hole
    CHECK(point_in_polygon({1, 2}, g));             // hole boundary is inside
}

TEST_CASE("point in multipolygon") {
    MultiPolygon mp{{unit_square(),
                     Polygon{{{{10, 10}, {11, 10}, {11, 11}, {10, 11}, {10, 10}}}}}};
    Geometry g{Geometry::Variant{mp}};
    CHECK(point_in_polygon({10.5, 10.5}, g));
    CHECK(point_in_polygon({0.5, 0.5}, g));
    CHECK_FALSE(point_in_polygon({5, 5}, g));
}

TEST_CASE("point in polygon agrees with winding-number oracle") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> span(-8.0, 8.0);
    for (int poly_i = 0; poly_i < 20; ++poly_i) {
        Polygon poly = random_star_polygon(rng, poly_i % 3 == 0);
        Geometry g{Geometry::Variant{poly}};
        int checked = 0;
        while (checked < 1000) {
            GeoPoint p{span(rng), span(rng)};
            if (boundary_distance(p, poly) < 1e-9) continue;  // boundary is measure zero
            ++checked;
            CHECK(point_in_polygon(p, g) == winding_inside(p, poly));
        }
    }
}
