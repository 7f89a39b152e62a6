#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <random>
#include <set>
#include <sstream>

#include "geovec/kg.hpp"

using namespace geovec;

namespace {

ParsedGraph parse(const std::string& text, ParseOptions options = {}) {
    std::istringstream in(text);
    return parse_ntriples(in, options);
}

ParseOptions with_geometry_predicate() {
    ParseOptions o;
    o.geometry_predicates = {"geo:geometry"};
    return o;
}

}  // namespace

TEST_CASE("minimal triple") {
    ParsedGraph pg = parse("<a> <p> <b> .\n");
    CHECK(pg.graph.node_count() == 2);
    CHECK(pg.graph.triples().size() == 1);
    CHECK(pg.stats.triples_parsed == 1);
    CHECK(pg.graph.node_name(pg.graph.triples()[0].subject) == "a");
    CHECK(pg.graph.relation_name(pg.graph.triples()[0].predicate) == "p");
}

TEST_CASE("geometry literal routing") {
    ParsedGraph pg = parse("<a> <geo:geometry> \"POINT (8.4 49.5)\" .\n",
                           with_geometry_predicate());
    CHECK(pg.graph.node_count() == 1);
    CHECK(pg.graph.triples().empty());
    CHECK(pg.stats.geometry_literals == 1);
    NodeId a = pg.graph.find_node("a");
    REQUIRE(a != kInvalidNode);
    REQUIRE(pg.raw_geometries.count(a) == 1);
    CHECK(pg.raw_geometries.at(a)[0] == "POINT (8.4 49.5)");
}

TEST_CASE("literal policy drop and keep") {
    ParsedGraph dropped = parse("<a> <p> \"plain literal\" .\n");
    CHECK(dropped.graph.node_count() == 1);
    CHECK(dropped.graph.triples().empty());
    CHECK(dropped.stats.literals_skipped == 1);

    ParseOptions keep;
    keep.literal_policy = LiteralPolicy::Keep;
    ParsedGraph kept = parse("<a> <p> \"plain literal\" .\n", keep);
    CHECK(kept.graph.node_count() == 2);
    CHECK(kept.graph.triples().size() == 1);
    CHECK(kept.stats.triples_parsed == 1);
    CHECK(kept.graph.find_node("\"plain literal\"") != kInvalidNode);
}

TEST_CASE("typed and tagged literals") {
    ParsedGraph pg = parse(
        "<a> <geo:geometry> \"POINT (1 2)\"^^<http://www.opengis.net/ont/geosparql#wktLiteral> .\n"
        "<a> <p> \"hi\"@en .\n"
        "<a> <p> \"esc \\\" quote\" .\n",
        with_geometry_predicate());
    CHECK(pg.stats.geometry_literals == 1);
    CHECK(pg.stats.literals_skipped == 2);
    NodeId a = pg.graph.find_node("a");
    CHECK(pg.raw_geometries.at(a)[0] == "POINT (1 2)");
}

TEST_CASE("unicode escapes decode") {
    ParseOptions keep;
    keep.literal_policy = LiteralPolicy::Keep;
    ParsedGraph pg = parse("<a> <p> \"\\u0041\\n\" .\n<x\\u0042> <q> <y> .\n", keep);
    CHECK(pg.graph.find_node("xB") != kInvalidNode);
    // Kept literals intern in their raw quoted form.
    CHECK(pg.graph.find_node("\"\\u0041\\n\"") != kInvalidNode);
}

TEST_CASE("blank nodes intern under their label") {
    ParsedGraph pg = parse("_:b1 <p> <x> .\n<x> <q> _:b1 .\n");
    CHECK(pg.graph.find_node("_:b1") != kInvalidNode);
    CHECK(pg.graph.triples().size() == 2);
}

TEST_CASE("multigraph keeps parallel edges") {
    ParsedGraph pg = parse("<a> <p> <b> .\n<a> <p> <b> .\n<a> <q> <b> .\n");
    CHECK(pg.graph.triples().size() == 3);
    CHECK(pg.graph.out_edges(pg.graph.find_node("a")).size() == 3);
}

TEST_CASE("malformed lines: lenient counts, strict throws") {
    const std::string text =
        "<a> <p> <b> .\n"
        "this is not a triple\n"
        "<a> <p .\n"
        "# comment\n"
        "\n"
        "<c> <p> <d> .\n";
    ParsedGraph pg = parse(text);
    CHECK(pg.stats.triples_parsed == 2);
    CHECK(pg.stats.lines_malformed == 2);
    CHECK(pg.stats.lines_blank_or_comment == 2);
    CHECK(pg.stats.lines_total == 6);
    REQUIRE(pg.stats.errors.size() == 2);
    CHECK(pg.stats.errors[0].first == 2);

    ParseOptions strict;
    strict.strict = true;
    CHECK_THROWS_AS(parse(text, strict), ParseError);
    try {
        parse(text, strict);
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
}

TEST_CASE("line accounting invariant") {
    const std::string text =
        "<a> <p> <b> .\n"
        "<a> <geo:geometry> \"POINT (1 1)\" .\n"
        "<a> <p> \"lit\" .\n"
        "junk\n"
        "# note\n"
        "<b> <p> <c> .\n";
    ParsedGraph pg = parse(text, with_geometry_predicate());
    const std::uint64_t relevant = pg.stats.lines_total - pg.stats.lines_blank_or_comment;
    CHECK(pg.stats.triples_parsed + pg.stats.geometry_literals + pg.stats.literals_skipped +
              pg.stats.lines_malformed ==
          relevant);
}

TEST_CASE("interning round-trips IRIs") {
    ParsedGraph pg = parse("<http://ex.org/a> <p> <http://ex.org/b#frag> .\n_:bn <p> <x> .\n");
    for (const char* iri : {"http://ex.org/a", "http://ex.org/b#frag", "_:bn", "x"}) {
        NodeId v = pg.graph.find_node(iri);
        REQUIRE(v != kInvalidNode);
        CHECK(pg.graph.node_name(v) == iri);
    }
}

TEST_CASE("neighbors follow both directions") {
    ParsedGraph pg = parse("<a> <p> <b> .\n<c> <q> <c> .\n<i> <p> <a> .\n");
    const KnowledgeGraph& g = pg.graph;
    NodeId a = g.find_node("a"), b = g.find_node("b"), c = g.find_node("c"), i = g.find_node("i");

    CHECK(g.neighbors(a) == std::vector<NodeId>{std::min(b, i), std::max(b, i)});
    CHECK(g.neighbors(b) == std::vector<NodeId>{a});  // incoming edge counts

    // Self-loop: c is its own neighbor, reported once.
    CHECK(g.neighbors(c) == std::vector<NodeId>{c});

    ParsedGraph iso = parse("<a> <p> <b> .\n<z> <p> <z2> .\n");
    NodeId z = iso.graph.find_node("z");
    CHECK(iso.graph.neighbors(z).size() == 1);

    // Truly isolated node (geometry-only subject): no neighbors at all.
    ParsedGraph lone = parse("<a> <p> <b> .\n<x> <geo:geometry> \"POINT (0 0)\" .\n",
                             with_geometry_predicate());
    CHECK(lone.graph.neighbors(lone.graph.find_node("x")).empty());
}

TEST_CASE("neighborhood holds incident triples once") {
    ParsedGraph pg = parse("<a> <p> <b> .\n<c> <q> <a> .\n<s> <r> <s> .\n<x> <p> <y> .\n");
    const KnowledgeGraph& g = pg.graph;
    CHECK(g.neighborhood(g.find_node("a")).size() == 2);
    CHECK(g.neighborhood(g.find_node("s")) == std::vector<std::uint32_t>{2});  // self-loop once
    // No incident edges.
    ParsedGraph pg2 = parse("<a> <p> <b> .\n<c> <geo:geometry> \"POINT (0 0)\" .\n",
                            with_geometry_predicate());
    CHECK(pg2.graph.neighborhood(pg2.graph.find_node("c")).empty());
}

TEST_CASE("neighborhood and neighbors invariants on random graphs") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        KnowledgeGraph g;
        const int n = 2 + static_cast<int>(rng() % 30);
        for (int i = 0; i < n; ++i) g.intern_node("n" + std::to_string(i));
        RelationId p = g.intern_relation("p");
        const int m = static_cast<int>(rng() % 80);
        for (int e = 0; e < m; ++e) {
            g.add_triple(static_cast<NodeId>(rng() % n), p, static_cast<NodeId>(rng() % n));
        }
        g.finalize();

        for (std::uint32_t t = 0; t < g.triples().size(); ++t) {
            const Triple& tr = g.triples()[t];
            auto hs = g.neighborhood(tr.subject);
            auto ho = g.neighborhood(tr.object);
            CHECK(std::count(hs.begin(), hs.end(), t) == 1);
            CHECK(std::count(ho.begin(), ho.end(), t) == 1);
        }
        for (NodeId v = 0; v < g.node_count(); ++v) {
            for (NodeId u : g.neighbors(v)) {
                auto nu = g.neighbors(u);
                CHECK(std::count(nu.begin(), nu.end(), v) == 1);
            }
        }
    }
}

TEST_CASE("graph snapshot round-trip") {
    ParsedGraph pg = parse(
        "<a> <p> <b> .\n"
        "<b> <q> <c> .\n"
        "<a> <geo:geometry> \"POINT (1 2)\" .\n"
        "<c> <geo:geometry> \"POINT (3 4)\" .\n"
        "<c> <geo:geometry> \"POINT (5 6)\" .\n",
        with_geometry_predicate());

    const std::filesystem::path path =
        std::filesystem::temp_directory_path() / "geovec_test_graph.bin";
    pg.graph.save(path, pg.raw_geometries);
    auto [loaded, raw] = KnowledgeGraph::load(path);
    std::filesystem::remove(path);

    CHECK(loaded.node_count() == pg.graph.node_count());
    CHECK(loaded.relation_count() == pg.graph.relation_count());
    REQUIRE(loaded.triples().size() == pg.graph.triples().size());
    for (std::size_t i = 0; i < loaded.triples().size(); ++i) {
        CHECK(loaded.triples()[i] == pg.graph.triples()[i]);
    }
    for (NodeId v = 0; v < loaded.node_count(); ++v) {
        CHECK(loaded.node_name(v) == pg.graph.node_name(v));
    }
    REQUIRE(raw.size() == 2);
    CHECK(raw.at(loaded.find_node("c")).size() == 2);
}

TEST_CASE("snapshot load rejects garbage") {
    const std::filesystem::path path =
        std::filesystem::temp_directory_path() / "geovec_test_bad.bin";
    write_file_atomic(path, "not a snapshot at all");
    CHECK_THROWS_AS(KnowledgeGraph::load(path), DataError);
    std::filesystem::remove(path);
}
