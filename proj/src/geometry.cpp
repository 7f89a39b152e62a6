#include "geovec/geometry.hpp"

#include <cctype>
#include <charconv>
#include <cmath>

namespace geovec {

namespace {

struct WktScanner {
    std::string_view text;
    std::size_t pos = 0;

    void skip_ws() {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    }

    bool eof() {
        skip_ws();
        return pos >= text.size();
    }

    char peek() {
        skip_ws();
        return pos < text.size() ? text[pos] : '\0';
    }

    void expect(char c) {
        skip_ws();
        if (pos >= text.size() || text[pos] != c) {
            throw ParseError(std::string("expected '") + c + "' in WKT", pos);
        }
        ++pos;
    }

    bool accept(char c) {
        skip_ws();
        if (pos < text.size() && text[pos] == c) {
            ++pos;
            return true;
        }
        return false;
    }

    std::string keyword() {
        skip_ws();
        std::size_t start = pos;
        while (pos < text.size() && std::isalpha(static_cast<unsigned char>(text[pos]))) ++pos;
        std::string kw(text.substr(start, pos - start));
        for (char& c : kw) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        return kw;
    }

    double number() {
        skip_ws();
        double v = 0.0;
        auto res = std::from_chars(text.data() + pos, text.data() + text.size(), v);
        if (res.ec != std::errc()) {
            throw ParseError("expected numeric coordinate", pos);
        }
        pos = static_cast<std::size_t>(res.ptr - text.data());
        return v;
    }
};

GeoPoint parse_coord(WktScanner& s) {
    std::size_t start = s.pos;
    GeoPoint p;
    p.lon = s.number();
    s.skip_ws();
    char c = s.peek();
    if (c == ',' || c == ')') {
        throw ParseError("coordinate needs two values", start);
    }
    p.lat = s.number();
    c = s.peek();
    if (c != ',' && c != ')') {
        throw ParseError("only 2D coordinates are supported", s.pos);
    }
    if (!in_wgs84_bounds(p)) {
        throw ParseError("coordinate outside WGS84 lon-lat bounds", start);
    }
    return p;
}

std::vector<GeoPoint> parse_coord_list(WktScanner& s) {
    std::vector<GeoPoint> coords;
    s.expect('(');
    do {
        coords.push_back(parse_coord(s));
    } while (s.accept(','));
    s.expect(')');
    return coords;
}

Ring parse_ring(WktScanner& s) {
    std::size_t start = s.pos;
    Ring ring = parse_coord_list(s);
    if (ring.size() < 4) {
        throw ParseError("polygon ring needs at least 4 coordinates", start);
    }
    if (!(ring.front() == ring.back())) {
        throw ParseError("polygon ring is not closed", start);
    }
    return ring;
}

Polygon parse_polygon_body(WktScanner& s) {
    Polygon poly;
    s.expect('(');
    do {
        poly.rings.push_back(parse_ring(s));
    } while (s.accept(','));
    s.expect(')');
    return poly;
}

void reject_empty_or_zm(WktScanner& s) {
    std::size_t save = s.pos;
    std::string kw = s.keyword();
    if (kw == "EMPTY") {
        throw ParseError("EMPTY geometries are not supported", save);
    }
    if (kw == "Z" || kw == "M" || kw == "ZM") {
        throw ParseError("Z/M coordinates are not supported", save);
    }
    if (!kw.empty()) {
        throw ParseError("unexpected token '" + kw + "' in WKT", save);
    }
    s.pos = save;
}

Geometry parse_geometry(WktScanner& s) {
    std::size_t start = s.pos;
    std::string kw = s.keyword();
    if (kw.empty()) {
        throw ParseError("expected geometry keyword", start);
    }
    reject_empty_or_zm(s);

    if (kw == "POINT") {
        s.expect('(');
        GeoPoint p = parse_coord(s);
        s.expect(')');
        return Geometry(Point{p});
    }
    if (kw == "LINESTRING") {
        std::vector<GeoPoint> coords = parse_coord_list(s);
        if (coords.size() < 2) {
            throw ParseError("linestring needs at least 2 coordinates", start);
        }
        return Geometry(LineString{std::move(coords)});
    }
    if (kw == "POLYGON") {
        return Geometry(parse_polygon_body(s));
    }
    if (kw == "MULTIPOINT") {
        // Accepts both MULTIPOINT (1 2, 3 4) and MULTIPOINT ((1 2), (3 4)).
        MultiPoint mp;
        s.expect('(');
        do {
            if (s.accept('(')) {
                mp.coords.push_back(parse_coord(s));
                s.expect(')');
            } else {
                mp.coords.push_back(parse_coord(s));
            }
        } while (s.accept(','));
        s.expect(')');
        return Geometry(std::move(mp));
    }
    if (kw == "MULTILINESTRING") {
        MultiLineString mls;
        s.expect('(');
        do {
            std::vector<GeoPoint> coords = parse_coord_list(s);
            if (coords.size() < 2) {
                throw ParseError("linestring needs at least 2 coordinates", start);
            }
            mls.lines.push_back(std::move(coords));
        } while (s.accept(','));
        s.expect(')');
        return Geometry(std::move(mls));
    }
    if (kw == "MULTIPOLYGON") {
        MultiPolygon mp;
        s.expect('(');
        do {
            mp.polygons.push_back(parse_polygon_body(s));
        } while (s.accept(','));
        s.expect(')');
        return Geometry(std::move(mp));
    }
    if (kw == "GEOMETRYCOLLECTION") {
        GeometryCollection gc;
        s.expect('(');
        do {
            gc.members.push_back(parse_geometry(s));
        } while (s.accept(','));
        s.expect(')');
        return Geometry(std::move(gc));
    }
    throw ParseError("unsupported geometry type '" + kw + "'", start);
}

void write_coord(std::string& out, const GeoPoint& p) {
    out += format_double(p.lon);
    out += ' ';
    out += format_double(p.lat);
}

void write_coord_list(std::string& out, std::span<const GeoPoint> coords) {
    out += '(';
    for (std::size_t i = 0; i < coords.size(); ++i) {
        if (i) out += ", ";
        write_coord(out, coords[i]);
    }
    out += ')';
}

void write_polygon_body(std::string& out, const Polygon& poly) {
    out += '(';
    for (std::size_t i = 0; i < poly.rings.size(); ++i) {
        if (i) out += ", ";
        write_coord_list(out, poly.rings[i]);
    }
    out += ')';
}

double ring_signed_area(const Ring& ring) {
    double a = 0.0;
    for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
        a += ring[i].lon * ring[i + 1].lat - ring[i + 1].lon * ring[i].lat;
    }
    return 0.5 * a;
}

// Shoelace centroid of one ring; valid only when the signed area is nonzero.
GeoPoint ring_centroid(const Ring& ring, double signed_area) {
    double cx = 0.0, cy = 0.0;
    for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
        double cross = ring[i].lon * ring[i + 1].lat - ring[i + 1].lon * ring[i].lat;
        cx += (ring[i].lon + ring[i + 1].lon) * cross;
        cy += (ring[i].lat + ring[i + 1].lat) * cross;
    }
    return GeoPoint{cx / (6.0 * signed_area), cy / (6.0 * signed_area)};
}

bool point_on_segment(const GeoPoint& p, const GeoPoint& a, const GeoPoint& b) {
    double cross = (b.lon - a.lon) * (p.lat - a.lat) - (b.lat - a.lat) * (p.lon - a.lon);
    if (cross != 0.0) return false;
    return p.lon >= std::min(a.lon, b.lon) && p.lon <= std::max(a.lon, b.lon) &&
           p.lat >= std::min(a.lat, b.lat) && p.lat <= std::max(a.lat, b.lat);
}

bool on_ring_boundary(const GeoPoint& p, const Ring& ring) {
    for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
        if (point_on_segment(p, ring[i], ring[i + 1])) return true;
    }
    return false;
}

bool ray_cast_odd(const GeoPoint& p, const Polygon& poly) {
    bool inside = false;
    for (const Ring& ring : poly.rings) {
        for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
            const GeoPoint& a = ring[i];
            const GeoPoint& b = ring[i + 1];
            if ((a.lat > p.lat) != (b.lat > p.lat)) {
                double x = a.lon + (b.lon - a.lon) * (p.lat - a.lat) / (b.lat - a.lat);
                if (p.lon < x) inside = !inside;
            }
        }
    }
    return inside;
}

bool in_single_polygon(const GeoPoint& p, const Polygon& poly) {
    for (const Ring& ring : poly.rings) {
        if (on_ring_boundary(p, ring)) return true;
    }
    return ray_cast_odd(p, poly);
}

}  // namespace

Geometry parse_wkt(std::string_view text) {
    WktScanner s{text};
    // GeoSPARQL literals may carry a leading <crs-iri>.
    if (s.peek() == '<') {
        std::size_t close = text.find('>', s.pos);
        if (close == std::string_view::npos) {
            throw ParseError("unterminated CRS prefix", s.pos);
        }
        s.pos = close + 1;
    }
    Geometry g = parse_geometry(s);
    if (!s.eof()) {
        throw ParseError("trailing characters after WKT geometry", s.pos);
    }
    return g;
}

std::string to_wkt(const Geometry& g) {
    std::string out;
    std::visit(
        [&out](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Point>) {
                out += "POINT (";
                write_coord(out, v.coord);
                out += ')';
            } else if constexpr (std::is_same_v<T, LineString>) {
                out += "LINESTRING ";
                write_coord_list(out, v.coords);
            } else if constexpr (std::is_same_v<T, Polygon>) {
                out += "POLYGON ";
                write_polygon_body(out, v);
            } else if constexpr (std::is_same_v<T, MultiPoint>) {
                out += "MULTIPOINT ";
                write_coord_list(out, v.coords);
            } else if constexpr (std::is_same_v<T, MultiLineString>) {
                out += "MULTILINESTRING (";
                for (std::size_t i = 0; i < v.lines.size(); ++i) {
                    if (i) out += ", ";
                    write_coord_list(out, v.lines[i]);
                }
                out += ')';
            } else if constexpr (std::is_same_v<T, MultiPolygon>) {
                out += "MULTIPOLYGON (";
                for (std::size_t i = 0; i < v.polygons.size(); ++i) {
                    if (i) out += ", ";
                    write_polygon_body(out, v.polygons[i]);
                }
                out += ')';
            } else if constexpr (std::is_same_v<T, GeometryCollection>) {
                out += "GEOMETRYCOLLECTION (";
                for (std::size_t i = 0; i < v.members.size(); ++i) {
                    if (i) out += ", ";
                    out += to_wkt(v.members[i]);
                }
                out += ')';
            }
        },
        g.value());
    return out;
}

bool geometry_equal(const Geometry& a, const Geometry& b) {
    // Canonical serialization makes equal coordinate sequences compare equal.
    return to_wkt(a) == to_wkt(b);
}

void CentroidAccumulator::add(const GeoPoint& p) {
    ++point_count_;
    point_cx_ += p.lon;
    point_cy_ += p.lat;
}

void CentroidAccumulator::add_line(std::span<const GeoPoint> coords) {
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < coords.size(); ++i) {
        double dx = coords[i + 1].lon - coords[i].lon;
        double dy = coords[i + 1].lat - coords[i].lat;
        double len = std::hypot(dx, dy);
        total += len;
        length_cx_ += len * 0.5 * (coords[i].lon + coords[i + 1].lon);
        length_cy_ += len * 0.5 * (coords[i].lat + coords[i + 1].lat);
    }
    length_sum_ += total;
    if (total == 0.0) {
        // Zero-length line: vertices count as points (skip nothing, the
        // closing duplicate does not exist for plain lines).
        for (const GeoPoint& p : coords) add(p);
    }
}

void CentroidAccumulator::add_polygon(const Polygon& poly) {
    if (poly.rings.empty()) return;
    double ext_area = std::abs(ring_signed_area(poly.rings[0]));
    double net = ext_area;
    double cx = 0.0, cy = 0.0;
    if (ext_area > 0.0) {
        GeoPoint c = ring_centroid(poly.rings[0], ring_signed_area(poly.rings[0]));
        cx = c.lon * ext_area;
        cy = c.lat * ext_area;
    }
    for (std::size_t i = 1; i < poly.rings.size(); ++i) {
        double a = std::abs(ring_signed_area(poly.rings[i]));
        if (a > 0.0) {
            GeoPoint c = ring_centroid(poly.rings[i], ring_signed_area(poly.rings[i]));
            cx -= c.lon * a;
            cy -= c.lat * a;
            net -= a;
        }
    }
    if (net > 0.0) {
        area_sum_ += net;
        area_cx_ += cx;
        area_cy_ += cy;
        return;
    }
    // Degenerate polygon: treat its rings as lines (skipping the closing
    // coordinate would change nothing for length).
    for (const Ring& ring : poly.rings) {
        add_line(ring);
    }
}

void CentroidAccumulator::add(const Geometry& g) {
    std::visit(
        [this](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Point>) {
                add(v.coord);
            } else if constexpr (std::is_same_v<T, LineString>) {
                add_line(v.coords);
            } else if constexpr (std::is_same_v<T, Polygon>) {
                add_polygon(v);
            } else if constexpr (std::is_same_v<T, MultiPoint>) {
                for (const GeoPoint& p : v.coords) add(p);
            } else if constexpr (std::is_same_v<T, MultiLineString>) {
                for (const auto& line : v.lines) add_line(line);
            } else if constexpr (std::is_same_v<T, MultiPolygon>) {
                for (const Polygon& p : v.polygons) add_polygon(p);
            } else if constexpr (std::is_same_v<T, GeometryCollection>) {
                for (const Geometry& m : v.members) add(m);
            }
        },
        g.value());
}

GeoPoint CentroidAccumulator::finalize() const {
    if (area_sum_ > 0.0) {
        return GeoPoint{area_cx_ / area_sum_, area_cy_ / area_sum_};
    }
    if (length_sum_ > 0.0) {
        return GeoPoint{length_cx_ / length_sum_, length_cy_ / length_sum_};
    }
    if (point_count_ > 0) {
        return GeoPoint{point_cx_ / static_cast<double>(point_count_),
                        point_cy_ / static_cast<double>(point_count_)};
    }
    throw DataError("centroid of an empty geometry set");
}

GeoPoint centroid(std::span<const Geometry> geometries) {
    CentroidAccumulator acc;
    for (const Geometry& g : geometries) acc.add(g);
    return acc.finalize();
}

bool point_in_polygon(const GeoPoint& p, const Geometry& polygon_like) {
    if (const Polygon* poly = polygon_like.get_if<Polygon>()) {
        return in_single_polygon(p, *poly);
    }
    if (const MultiPolygon* mp = polygon_like.get_if<MultiPolygon>()) {
        for (const Polygon& poly : mp->polygons) {
            if (in_single_polygon(p, poly)) return true;
        }
        return false;
    }
    throw DataError("point_in_polygon requires a POLYGON or MULTIPOLYGON");
}

}  // namespace geovec
