#pragma once
// WKT geometries in WGS84 lon-lat degrees: parsing, serialization, centroids
// of geometry sets, and point-in-polygon tests.
//
// Coordinates must already be WGS84; other CRS inputs are rejected by the
// lon/lat range check at parse time. Centroid math is planar on degrees.
// Antimeridian-spanning geometries are not handled specially.

#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "geovec/common.hpp"

namespace geovec {

struct GeoPoint {
    double lon = 0.0;
    double lat = 0.0;

    friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

inline bool in_wgs84_bounds(const GeoPoint& p) {
    return p.lon >= -180.0 && p.lon <= 180.0 && p.lat >= -90.0 && p.lat <= 90.0;
}

using Ring = std::vector<GeoPoint>;  // closed: front() == back(), size >= 4

class Geometry;

struct Point {
    GeoPoint coord;
};
struct LineString {
    std::vector<GeoPoint> coords;  // size >= 2
};
struct Polygon {
    std::vector<Ring> rings;  // rings[0] = exterior, rest = holes
};
struct MultiPoint {
    std::vector<GeoPoint> coords;
};
struct MultiLineString {
    std::vector<std::vector<GeoPoint>> lines;
};
struct MultiPolygon {
    std::vector<Polygon> polygons;
};
struct GeometryCollection {
    std::vector<Geometry> members;
};

class Geometry {
public:
    using Variant = std::variant<Point, LineString, Polygon, MultiPoint, MultiLineString,
                                 MultiPolygon, GeometryCollection>;

    Geometry() : value_(Point{}) {}
    Geometry(Variant v) : value_(std::move(v)) {}

    const Variant& value() const { return value_; }
    Variant& value() { return value_; }

    template <typename T>
    const T* get_if() const {
        return std::get_if<T>(&value_);
    }

private:
    Variant value_;
};

// Parses one WKT serialization. Keywords are case-insensitive, whitespace is
// free-form. An optional leading `<crs-iri>` prefix (GeoSPARQL literal style)
// is skipped. EMPTY geometries and Z/M coordinates are rejected.
// Throws ParseError with the byte offset of the problem.
Geometry parse_wkt(std::string_view text);

// Canonical WKT text. Coordinates use shortest round-trip formatting, so
// serialize-parse is exact and equal geometries serialize identically.
std::string to_wkt(const Geometry& g);

bool geometry_equal(const Geometry& a, const Geometry& b);

// Representative point of a non-empty geometry set. Only the highest
// dimension present contributes: polygons with area win over lines, lines
// over points. Polygons use the area-weighted planar (shoelace) centroid
// with holes subtracted; lines use length-weighted segment midpoints; points
// use the arithmetic mean. Zero-area polygons degrade to their rings as
// lines, zero-length lines to their vertices as points.
class CentroidAccumulator {
public:
    void add(const Geometry& g);
    void add(const GeoPoint& p);

    bool empty() const { return point_count_ == 0 && length_sum_ == 0.0 && area_sum_ == 0.0; }

    // Throws DataError when nothing was added.
    GeoPoint finalize() const;

private:
    void add_line(std::span<const GeoPoint> coords);
    void add_polygon(const Polygon& poly);

    double area_sum_ = 0.0;  // sum of |exterior| - sum |holes| per polygon
    double area_cx_ = 0.0;
    double area_cy_ = 0.0;
    double length_sum_ = 0.0;
    double length_cx_ = 0.0;
    double length_cy_ = 0.0;
    std::size_t point_count_ = 0;
    double point_cx_ = 0.0;
    double point_cy_ = 0.0;
};

GeoPoint centroid(std::span<const Geometry> geometries);

// True iff p is inside the exterior ring and outside all holes (even-odd
// ray casting in the lon-lat plane). Points on any ring boundary count as
// inside. Accepts Polygon and MultiPolygon; for a MultiPolygon, inside any
// member polygon counts.
bool point_in_polygon(const GeoPoint& p, const Geometry& polygon_like);

}  // namespace geovec
