// Line-oriented N-Triples parsing into the interned graph.

#include <cctype>
#include <fstream>
#include <istream>
#include <unordered_set>

#include "geovec/kg.hpp"

namespace geovec {

namespace {

constexpr std::size_t kMaxStoredErrors = 1000;

struct Term {
    enum class Kind { Iri, Blank, Literal };
    Kind kind;
    std::string token;          // interning key: IRI text, `_:label`, or raw literal
    std::string literal_value;  // unescaped lexical form (literals only)
};

void append_utf8(std::string& out, std::uint32_t cp) {
    if (cp <= 0x7f) {
        out += static_cast<char>(cp);
    } else if (cp <= 0x7ff) {
        out += static_cast<char>(0xc0 | (cp >> 6));
        out += static_cast<char>(0x80 | (cp & 0x3f));
    } else if (cp <= 0xffff) {
        out += static_cast<char>(0xe0 | (cp >> 12));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3f));
        out += static_cast<char>(0x80 | (cp & 0x3f));
    } else {
        out += static_cast<char>(0xf0 | (cp >> 18));
        out += static_cast<char>(0x80 | ((cp >> 12) & 0x3f));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3f));
        out += static_cast<char>(0x80 | (cp & 0x3f));
    }
}

struct LineScanner {
    std::string_view line;
    std::size_t pos = 0;

    void skip_ws() {
        while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
    }

    bool eof() const { return pos >= line.size(); }

    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, pos); }

    std::uint32_t hex_escape(int digits) {
        std::uint32_t cp = 0;
        for (int i = 0; i < digits; ++i) {
            if (pos >= line.size() || !std::isxdigit(static_cast<unsigned char>(line[pos]))) {
                fail("bad \\u escape");
            }
            char c = line[pos++];
            cp = cp * 16 + static_cast<std::uint32_t>(
                               c <= '9' ? c - '0' : std::tolower(static_cast<unsigned char>(c)) - 'a' + 10);
        }
        return cp;
    }

    std::string iri() {
        // pos is at '<'
        ++pos;
        std::string out;
        while (pos < line.size()) {
            char c = line[pos];
            if (c == '>') {
                ++pos;
                return out;
            }
            if (c == ' ') fail("space inside IRI");
            if (c == '\\') {
                ++pos;
                if (pos >= line.size()) fail("dangling escape in IRI");
                char e = line[pos++];
                if (e == 'u') {
                    append_utf8(out, hex_escape(4));
                } else if (e == 'U') {
                    append_utf8(out, hex_escape(8));
                } else {
                    fail("unsupported escape in IRI");
                }
                continue;
            }
            out += c;
            ++pos;
        }
        fail("unterminated IRI");
    }

    std::string blank() {
        // pos is at '_'
        std::size_t start = pos;
        pos += 2;  // "_:"
        while (pos < line.size() && !std::isspace(static_cast<unsigned char>(line[pos])) &&
               line[pos] != '.') {
            ++pos;
        }
        if (pos - start <= 2) fail("empty blank node label");
        return std::string(line.substr(start, pos - start));
    }

    Term literal() {
        // pos is at the opening '"'
        std::size_t start = pos;
        ++pos;
        std::string value;
        while (true) {
            if (pos >= line.size()) fail("unterminated literal");
            char c = line[pos];
            if (c == '"') {
                ++pos;
                break;
            }
            if (c == '\\') {
                ++pos;
                if (pos >= line.size()) fail("dangling escape in literal");
                char e = line[pos++];
                switch (e) {
                    case 't': value += '\t'; break;
                    case 'b': value += '\b'; break;
                    case 'n': value += '\n'; break;
                    case 'r': value += '\r'; break;
                    case 'f': value += '\f'; break;
                    case '"': value += '"'; break;
                    case '\'': value += '\''; break;
                    case '\\': value += '\\'; break;
                    case 'u': append_utf8(value, hex_escape(4)); break;
                    case 'U': append_utf8(value, hex_escape(8)); break;
                    default: fail("unsupported escape in literal");
                }
                continue;
            }
            value += c;
            ++pos;
        }
        // Optional language tag or datatype IRI.
        if (pos < line.size() && line[pos] == '@') {
            ++pos;
            if (pos >= line.size() || !std::isalpha(static_cast<unsigned char>(line[pos]))) {
                fail("bad language tag");
            }
            while (pos < line.size() &&
                   (std::isalnum(static_cast<unsigned char>(line[pos])) || line[pos] == '-')) {
                ++pos;
            }
        } else if (pos + 1 < line.size() && line[pos] == '^' && line[pos + 1] == '^') {
            pos += 2;
            if (pos >= line.size() || line[pos] != '<') fail("datatype must be an IRI");
            iri();
        }
        Term t{Term::Kind::Literal, std::string(line.substr(start, pos - start)), std::move(value)};
        return t;
    }

    Term term(bool allow_literal) {
        skip_ws();
        if (eof()) fail("unexpected end of line");
        char c = line[pos];
        if (c == '<') return Term{Term::Kind::Iri, iri(), {}};
        if (c == '_' && pos + 1 < line.size() && line[pos + 1] == ':') {
            return Term{Term::Kind::Blank, blank(), {}};
        }
        if (c == '"') {
            if (!allow_literal) fail("literal not allowed here");
            return literal();
        }
        fail("expected IRI, blank node or literal");
    }
};

bool blank_or_comment(std::string_view line) {
    for (char c : line) {
        if (c == '#') return true;
        if (c != ' ' && c != '\t') return false;
    }
    return true;
}

}  // namespace

ParsedGraph parse_ntriples(std::istream& in, const ParseOptions& options) {
    ParsedGraph result;
    std::unordered_set<std::string> geometry_predicates(options.geometry_predicates.begin(),
                                                        options.geometry_predicates.end());
    std::string line;
    std::uint64_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        ++result.stats.lines_total;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (blank_or_comment(line)) {
            ++result.stats.lines_blank_or_comment;
            continue;
        }
        try {
            LineScanner scan{line};
            Term subject = scan.term(false);
            scan.skip_ws();
            if (scan.eof() || scan.line[scan.pos] != '<') scan.fail("predicate must be an IRI");
            std::string predicate = scan.iri();
            Term object = scan.term(true);
            scan.skip_ws();
            if (scan.eof() || scan.line[scan.pos] != '.') scan.fail("missing terminating '.'");
            ++scan.pos;
            scan.skip_ws();
            if (!scan.eof() && scan.line[scan.pos] != '#') scan.fail("trailing characters");

            if (object.kind == Term::Kind::Literal) {
                if (geometry_predicates.count(predicate)) {
                    NodeId s = result.graph.intern_node(subject.token);
                    result.raw_geometries[s].push_back(std::move(object.literal_value));
                    ++result.stats.geometry_literals;
                } else if (options.literal_policy == LiteralPolicy::Keep) {
                    NodeId s = result.graph.intern_node(subject.token);
                    RelationId p = result.graph.intern_relation(predicate);
                    NodeId o = result.graph.intern_node(object.token);
                    result.graph.add_triple(s, p, o);
                    ++result.stats.triples_parsed;
                } else {
                    result.graph.intern_node(subject.token);
                    ++result.stats.literals_skipped;
                }
            } else {
                NodeId s = result.graph.intern_node(subject.token);
                RelationId p = result.graph.intern_relation(predicate);
                NodeId o = result.graph.intern_node(object.token);
                result.graph.add_triple(s, p, o);
                ++result.stats.triples_parsed;
            }
        } catch (const ParseError& e) {
            if (options.strict) {
                throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
            }
            ++result.stats.lines_malformed;
            if (result.stats.errors.size() < kMaxStoredErrors) {
                result.stats.errors.emplace_back(line_no, e.what());
            }
        }
    }
    result.graph.finalize();
    return result;
}

ParsedGraph parse_ntriples_file(const std::filesystem::path& path, const ParseOptions& options) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open input: " + path.string());
    return parse_ntriples(in, options);
}

}  // namespace geovec
