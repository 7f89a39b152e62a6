#include "geovec/kg.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <istream>

namespace geovec {

void KnowledgeGraph::finalize() {
    const std::uint32_t n = node_count();
    out_offset_.assign(n + 1, 0);
    in_offset_.assign(n + 1, 0);
    for (const Triple& t : triples_) {
        ++out_offset_[t.subject + 1];
        ++in_offset_[t.object + 1];
    }
    for (std::uint32_t v = 0; v < n; ++v) {
        out_offset_[v + 1] += out_offset_[v];
        in_offset_[v + 1] += in_offset_[v];
    }
    out_flat_.resize(triples_.size());
    in_flat_.resize(triples_.size());
    std::vector<std::uint64_t> out_pos(out_offset_.begin(), out_offset_.end() - 1);
    std::vector<std::uint64_t> in_pos(in_offset_.begin(), in_offset_.end() - 1);
    for (std::uint32_t i = 0; i < triples_.size(); ++i) {
        const Triple& t = triples_[i];
        out_flat_[out_pos[t.subject]++] = AdjEntry{t.predicate, t.object, i};
        in_flat_[in_pos[t.object]++] = AdjEntry{t.predicate, t.subject, i};
    }
    finalized_ = true;
}

std::span<const AdjEntry> KnowledgeGraph::out_edges(NodeId v) const {
    return {out_flat_.data() + out_offset_[v],
            static_cast<std::size_t>(out_offset_[v + 1] - out_offset_[v])};
}

std::span<const AdjEntry> KnowledgeGraph::in_edges(NodeId v) const {
    return {in_flat_.data() + in_offset_[v],
            static_cast<std::size_t>(in_offset_[v + 1] - in_offset_[v])};
}

std::vector<NodeId> KnowledgeGraph::neighbors(NodeId v) const {
    std::vector<NodeId> out;
    for (const AdjEntry& e : out_edges(v)) out.push_back(e.node);
    for (const AdjEntry& e : in_edges(v)) out.push_back(e.node);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::vector<std::uint32_t> KnowledgeGraph::neighborhood(NodeId v) const {
    std::vector<std::uint32_t> out;
    for (const AdjEntry& e : out_edges(v)) out.push_back(e.triple);
    for (const AdjEntry& e : in_edges(v)) out.push_back(e.triple);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

namespace {

constexpr char kMagic[4] = {'G', 'V', 'K', 'G'};
constexpr std::uint32_t kFormatVersion = 1;

template <typename T>
void put(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <typename T>
T get(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!in) throw DataError("truncated graph snapshot");
    return v;
}

void put_string(std::ostream& out, const std::string& s) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& in) {
    std::uint32_t len = get<std::uint32_t>(in);
    if (len > (1u << 28)) throw DataError("corrupt graph snapshot: string too long");
    std::string s(len, '\0');
    in.read(s.data(), len);
    if (!in) throw DataError("truncated graph snapshot");
    return s;
}

}  // namespace

void KnowledgeGraph::save(
    const std::filesystem::path& path,
    const std::unordered_map<NodeId, std::vector<std::string>>& raw_geometries) const {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot open for writing: " + tmp.string());
        out.write(kMagic, 4);
        put<std::uint32_t>(out, kFormatVersion);
        put<std::uint32_t>(out, node_count());
        put<std::uint32_t>(out, relation_count());
        put<std::uint64_t>(out, triples_.size());
        put<std::uint32_t>(out, static_cast<std::uint32_t>(raw_geometries.size()));
        for (std::uint32_t v = 0; v < node_count(); ++v) put_string(out, nodes_.name(v));
        for (std::uint32_t r = 0; r < relation_count(); ++r) put_string(out, relations_.name(r));
        for (const Triple& t : triples_) {
            put<std::uint32_t>(out, t.subject);
            put<std::uint32_t>(out, t.predicate);
            put<std::uint32_t>(out, t.object);
        }
        // Deterministic order: by node id.
        std::vector<NodeId> keys;
        keys.reserve(raw_geometries.size());
        for (const auto& [v, _] : raw_geometries) keys.push_back(v);
        std::sort(keys.begin(), keys.end());
        for (NodeId v : keys) {
            const auto& texts = raw_geometries.at(v);
            put<std::uint32_t>(out, v);
            put<std::uint32_t>(out, static_cast<std::uint32_t>(texts.size()));
            for (const std::string& s : texts) put_string(out, s);
        }
        if (!out) throw DataError("short write: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::pair<KnowledgeGraph, std::unordered_map<NodeId, std::vector<std::string>>>
KnowledgeGraph::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open graph snapshot: " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0) {
        throw DataError("not a graph snapshot: " + path.string());
    }
    std::uint32_t version = get<std::uint32_t>(in);
    if (version != kFormatVersion) {
        throw DataError("unsupported graph snapshot version " + std::to_string(version));
    }
    std::uint32_t nodes = get<std::uint32_t>(in);
    std::uint32_t relations = get<std::uint32_t>(in);
    std::uint64_t triple_count = get<std::uint64_t>(in);
    std::uint32_t geom_entries = get<std::uint32_t>(in);

    KnowledgeGraph g;
    for (std::uint32_t v = 0; v < nodes; ++v) {
        if (g.intern_node(get_string(in)) != v) throw DataError("duplicate node in snapshot");
    }
    for (std::uint32_t r = 0; r < relations; ++r) {
        if (g.intern_relation(get_string(in)) != r) throw DataError("duplicate relation in snapshot");
    }
    g.triples_.reserve(triple_count);
    for (std::uint64_t i = 0; i < triple_count; ++i) {
        std::uint32_t s = get<std::uint32_t>(in);
        std::uint32_t p = get<std::uint32_t>(in);
        std::uint32_t o = get<std::uint32_t>(in);
        if (s >= nodes || o >= nodes || p >= relations) {
            throw DataError("corrupt graph snapshot: id out of range");
        }
        g.add_triple(s, p, o);
    }
    std::unordered_map<NodeId, std::vector<std::string>> geoms;
    for (std::uint32_t i = 0; i < geom_entries; ++i) {
        std::uint32_t v = get<std::uint32_t>(in);
        std::uint32_t k = get<std::uint32_t>(in);
        if (v >= nodes) throw DataError("corrupt graph snapshot: geometry node out of range");
        auto& vec = geoms[v];
        for (std::uint32_t j = 0; j < k; ++j) vec.push_back(get_string(in));
    }
    g.finalize();
    return {std::move(g), std::move(geoms)};
}

}  // namespace geovec
