#include "proxima/graph.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <deque>
#include <numeric>
#include <random>

namespace proxima {

void GraphIndex::validate() const {
    require(adj.size() == n, "graph: adjacency size mismatch");
    require(entry < n, "graph: entry point out of range");
    std::vector<vertex_t> row;
    for (size_t v = 0; v < n; v++) {
        require(adj[v].size() <= r, "graph: vertex " + std::to_string(v) + " exceeds degree bound");
        row = adj[v];
        std::sort(row.begin(), row.end());
        for (size_t i = 0; i < row.size(); i++) {
            require(row[i] < n, "graph: neighbor id out of range at vertex " + std::to_string(v));
            require(row[i] != v, "graph: self loop at vertex " + std::to_string(v));
            require(i == 0 || row[i] != row[i - 1],
                    "graph: duplicate neighbor at vertex " + std::to_string(v));
        }
    }
}

size_t GraphIndex::edge_count() const {
    size_t e = 0;
    for (const auto& row : adj) e += row.size();
    return e;
}

namespace bits {

void set_bits(std::vector<uint64_t>& buf, uint64_t pos, uint32_t width, uint64_t value) {
    if (width == 0) return;
    const uint64_t mask = width == 64 ? ~0ULL : ((1ULL << width) - 1);
    value &= mask;
    uint64_t word = pos >> 6;
    uint32_t off = static_cast<uint32_t>(pos & 63);
    buf[word] = (buf[word] & ~(mask << off)) | (value << off);
    if (off + width > 64) {
        uint32_t spill = off + width - 64;
        uint64_t hi_mask = (1ULL << spill) - 1;
        buf[word + 1] = (buf[word + 1] & ~hi_mask) | (value >> (width - spill));
    }
}

uint64_t get_bits(const std::vector<uint64_t>& buf, uint64_t pos, uint32_t width) {
    if (width == 0) return 0;
    const uint64_t mask = width == 64 ? ~0ULL : ((1ULL << width) - 1);
    uint64_t word = pos >> 6;
    uint32_t off = static_cast<uint32_t>(pos & 63);
    uint64_t v = buf[word] >> off;
    if (off + width > 64) v |= buf[word + 1] << (64 - off);
    return v & mask;
}

}  // namespace bits

namespace {

uint32_t bits_for(uint64_t v) { return std::max<uint32_t>(1, std::bit_width(v)); }

// Best-first traversal over the partially built graph, exact distances.
// Returns evaluated vertices with their distances (the prune candidate pool).
struct BuildScratch {
    std::vector<uint32_t> stamp;
    uint32_t epoch = 0;
};

void greedy_search_build(const VectorDataset& ds, const std::vector<std::vector<vertex_t>>& adj,
                         vertex_t entry, std::span<const float> q, uint32_t l_build,
                         BuildScratch& scratch,
                         std::vector<std::pair<float, vertex_t>>& evaluated_out) {
    scratch.epoch++;
    auto& stamp = scratch.stamp;
    struct Cand {
        float dist;
        vertex_t id;
        bool evaluated;
    };
    std::vector<Cand> list;
    list.reserve(l_build + 1);
    float d0 = exact_distance(q, ds.row(entry), ds.metric);
    list.push_back({d0, entry, false});
    stamp[entry] = scratch.epoch;
    evaluated_out.clear();

    while (true) {
        size_t pick = list.size();
        for (size_t i = 0; i < list.size(); i++) {
            if (!list[i].evaluated) {
                pick = i;
                break;
            }
        }
        if (pick == list.size()) break;
        list[pick].evaluated = true;
        vertex_t v = list[pick].id;
        evaluated_out.emplace_back(list[pick].dist, v);

        for (vertex_t nb : adj[v]) {
            if (stamp[nb] == scratch.epoch) continue;
            stamp[nb] = scratch.epoch;
            float dist = exact_distance(q, ds.row(nb), ds.metric);
            Cand c{dist, nb, false};
            auto it = std::lower_bound(list.begin(), list.end(), c, [](const Cand& a, const Cand& b) {
                return a.dist < b.dist || (a.dist == b.dist && a.id < b.id);
            });
            list.insert(it, c);
            if (list.size() > l_build) list.pop_back();
        }
    }
}

std::vector<vertex_t> robust_prune(const VectorDataset& ds, vertex_t p,
                                   std::vector<std::pair<float, vertex_t>> cand, float alpha,
                                   uint32_t r) {
    std::sort(cand.begin(), cand.end());
    std::vector<std::pair<float, vertex_t>> pool;
    pool.reserve(cand.size());
    std::vector<vertex_t> seen;
    for (const auto& c : cand) {
        if (c.second == p) continue;
        if (std::find(seen.begin(), seen.end(), c.second) != seen.end()) continue;
        seen.push_back(c.second);
        pool.push_back(c);
    }

    std::vector<vertex_t> result;
    std::vector<bool> dead(pool.size(), false);
    for (size_t i = 0; i < pool.size() && result.size() < r; i++) {
        if (dead[i]) continue;
        vertex_t star = pool[i].second;
        result.push_back(star);
        for (size_t j = i + 1; j < pool.size(); j++) {
            if (dead[j]) continue;
            float d_star = exact_distance(ds.row(star), ds.row(pool[j].second), ds.metric);
            if (alpha * d_star <= pool[j].first) dead[j] = true;
        }
    }
    return result;
}

vertex_t find_medoid(const VectorDataset& ds) {
    std::vector<float> mean(ds.d, 0.f);
    for (size_t i = 0; i < ds.n; i++) {
        auto row = ds.row(i);
        for (size_t j = 0; j < ds.d; j++) mean[j] += row[j];
    }
    for (auto& v : mean) v /= static_cast<float>(ds.n);
    vertex_t best = 0;
    float best_dist = std::numeric_limits<float>::max();
    for (size_t i = 0; i < ds.n; i++) {
        float dist = exact_distance({mean.data(), ds.d}, ds.row(i), ds.metric);
        if (dist < best_dist) {
            best_dist = dist;
            best = static_cast<vertex_t>(i);
        }
    }
    return best;
}

std::vector<uint8_t> bfs_reached(const GraphIndex& g) {
    std::vector<uint8_t> reached(g.n, 0);
    std::deque<vertex_t> queue{g.entry};
    reached[g.entry] = 1;
    while (!queue.empty()) {
        vertex_t v = queue.front();
        queue.pop_front();
        for (vertex_t nb : g.adj[v]) {
            if (!reached[nb]) {
                reached[nb] = 1;
                queue.push_back(nb);
            }
        }
    }
    return reached;
}

// Attach every entry-unreachable vertex below its nearest reachable one.
// Edge replacement can orphan a victim's subtree, so reachability is
// recomputed until a fixed point; spare slots are preferred since pure
// additions cannot disconnect anything.
void repair_connectivity(const VectorDataset& ds, GraphIndex& g) {
    for (int pass = 0;; pass++) {
        auto reached = bfs_reached(g);
        std::vector<vertex_t> orphans;
        for (size_t v = 0; v < g.n; v++)
            if (!reached[v]) orphans.push_back(static_cast<vertex_t>(v));
        if (orphans.empty()) return;
        require(pass < 64, "build_graph: connectivity repair did not converge");

        for (vertex_t o : orphans) {
            vertex_t best_any = g.entry, best_slack = g.entry;
            float best_any_dist = std::numeric_limits<float>::max();
            float best_slack_dist = std::numeric_limits<float>::max();
            bool have_slack = false;
            for (size_t u = 0; u < g.n; u++) {
                if (!reached[u]) continue;
                float dist = exact_distance(ds.row(u), ds.row(o), ds.metric);
                if (dist < best_any_dist) {
                    best_any_dist = dist;
                    best_any = static_cast<vertex_t>(u);
                }
                if (g.adj[u].size() < g.r && dist < best_slack_dist) {
                    best_slack_dist = dist;
                    best_slack = static_cast<vertex_t>(u);
                    have_slack = true;
                }
            }
            if (have_slack) {
                g.adj[best_slack].push_back(o);
                continue;
            }
            auto& row = g.adj[best_any];
            size_t worst = 0;
            float worst_dist = -1.f;
            for (size_t i = 0; i < row.size(); i++) {
                float dist = exact_distance(ds.row(best_any), ds.row(row[i]), ds.metric);
                if (dist > worst_dist) {
                    worst_dist = dist;
                    worst = i;
                }
            }
            row[worst] = o;
        }
    }
}

}  // namespace

GraphIndex build_graph(const VectorDataset& ds, uint32_t r, uint32_t l_build, float alpha,
                       uint64_t seed) {
    ds.validate();
    require(ds.n >= 2, "build_graph: need at least 2 points");
    require(r >= 2, "build_graph: need R >= 2");
    require(ds.n <= static_cast<size_t>(std::numeric_limits<vertex_t>::max()),
            "build_graph: dataset too large for 32-bit vertex ids");

    GraphIndex g;
    g.n = ds.n;
    g.r = r;
    g.entry = find_medoid(ds);
    g.adj.resize(ds.n);

    std::vector<vertex_t> order(ds.n);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);

    BuildScratch scratch;
    scratch.stamp.assign(ds.n, 0);
    std::vector<std::pair<float, vertex_t>> evaluated;
    std::vector<std::pair<float, vertex_t>> pool;

    for (vertex_t p : order) {
        greedy_search_build(ds, g.adj, g.entry, ds.row(p), l_build, scratch, evaluated);
        pool = evaluated;
        for (vertex_t nb : g.adj[p])
            pool.emplace_back(exact_distance(ds.row(p), ds.row(nb), ds.metric), nb);
        g.adj[p] = robust_prune(ds, p, pool, alpha, r);

        // Saturate spare slots with the nearest pruned-away candidates.
        if (g.adj[p].size() < r) {
            std::sort(pool.begin(), pool.end());
            for (const auto& [dist, id] : pool) {
                if (g.adj[p].size() >= r) break;
                if (id == p) continue;
                if (std::find(g.adj[p].begin(), g.adj[p].end(), id) != g.adj[p].end()) continue;
                g.adj[p].push_back(id);
            }
        }

        for (vertex_t nb : g.adj[p]) {
            auto& row = g.adj[nb];
            if (std::find(row.begin(), row.end(), p) != row.end()) continue;
            row.push_back(p);
            if (row.size() > r) {
                std::vector<std::pair<float, vertex_t>> rev;
                rev.reserve(row.size());
                for (vertex_t x : row)
                    rev.emplace_back(exact_distance(ds.row(nb), ds.row(x), ds.metric), x);
                g.adj[nb] = robust_prune(ds, nb, rev, alpha, r);
            }
        }
    }

    repair_connectivity(ds, g);
    g.validate();
    return g;
}

double reachable_fraction(const GraphIndex& g) {
    std::vector<uint8_t> reached(g.n, 0);
    std::deque<vertex_t> queue{g.entry};
    reached[g.entry] = 1;
    size_t count = 1;
    while (!queue.empty()) {
        vertex_t v = queue.front();
        queue.pop_front();
        for (vertex_t nb : g.adj[v]) {
            if (!reached[nb]) {
                reached[nb] = 1;
                count++;
                queue.push_back(nb);
            }
        }
    }
    return static_cast<double>(count) / static_cast<double>(g.n);
}

GapEncodedGraph gap_encode(const GraphIndex& g) {
    GapEncodedGraph e;
    e.n = g.n;
    e.r = g.r;
    e.entry = g.entry;
    e.degree_bits = bits_for(g.r);

    // Pass 1: find the widest stored value (first absolute id or any delta).
    uint64_t max_value = 0;
    std::vector<vertex_t> row;
    for (size_t v = 0; v < g.n; v++) {
        row = g.adj[v];
        std::sort(row.begin(), row.end());
        for (size_t i = 0; i < row.size(); i++) {
            uint64_t stored = i == 0 ? row[0] : row[i] - row[i - 1];
            max_value = std::max(max_value, stored);
        }
    }
    e.bit_width = bits_for(max_value);

    const uint64_t stride = e.record_bits();
    e.offsets.resize(g.n);
    e.payload.assign((stride * g.n + 63) / 64 + 1, 0);
    for (size_t v = 0; v < g.n; v++) {
        uint64_t pos = stride * v;
        e.offsets[v] = pos;
        row = g.adj[v];
        std::sort(row.begin(), row.end());
        bits::set_bits(e.payload, pos, e.degree_bits, row.size());
        pos += e.degree_bits;
        for (size_t i = 0; i < row.size(); i++) {
            uint64_t stored = i == 0 ? row[0] : row[i] - row[i - 1];
            bits::set_bits(e.payload, pos, e.bit_width, stored);
            pos += e.bit_width;
        }
        // remaining slots up to R stay zero (padding)
    }
    return e;
}

void GapEncodedGraph::decode_row(vertex_t v, std::vector<vertex_t>& out) const {
    out.clear();
    uint64_t pos = offsets[v];
    uint64_t deg = bits::get_bits(payload, pos, degree_bits);
    require(deg <= r, "gap decode: degree exceeds bound");
    pos += degree_bits;
    uint64_t prev = 0;
    for (uint64_t i = 0; i < deg; i++) {
        uint64_t stored = bits::get_bits(payload, pos, bit_width);
        pos += bit_width;
        uint64_t id = i == 0 ? stored : prev + stored;
        require(id < n, "gap decode: neighbor id out of range");
        out.push_back(static_cast<vertex_t>(id));
        prev = id;
    }
}

void GapEncodedGraph::decode_row_lenient(vertex_t v, std::vector<vertex_t>& out) const {
    out.clear();
    uint64_t pos = offsets[v];
    uint64_t deg = std::min<uint64_t>(bits::get_bits(payload, pos, degree_bits), r);
    pos += degree_bits;
    uint64_t prev = 0;
    for (uint64_t i = 0; i < deg; i++) {
        uint64_t stored = bits::get_bits(payload, pos, bit_width);
        pos += bit_width;
        uint64_t id = i == 0 ? stored : prev + stored;
        prev = std::min<uint64_t>(id, n - 1);
        if (id >= n || id == v) continue;  // corrupted id: skip
        if (std::find(out.begin(), out.end(), static_cast<vertex_t>(id)) != out.end()) continue;
        out.push_back(static_cast<vertex_t>(id));
    }
}

GraphIndex gap_decode(const GapEncodedGraph& e) {
    GraphIndex g;
    g.n = e.n;
    g.r = e.r;
    g.entry = e.entry;
    g.adj.resize(e.n);
    std::vector<vertex_t> row;
    for (size_t v = 0; v < e.n; v++) {
        e.decode_row(static_cast<vertex_t>(v), row);
        g.adj[v] = row;
    }
    return g;
}

GraphStats graph_stats(const GraphIndex& g) {
    GraphStats s;
    s.degree_histogram.assign(g.r + 1, 0);
    for (const auto& row : g.adj) s.degree_histogram[row.size()]++;
    s.raw_bits = 32ULL * g.n * g.r;
    auto e = gap_encode(g);
    s.encoded_bits = e.encoded_bits();
    s.bit_width = e.bit_width;
    s.compression = 1.0 - static_cast<double>(s.encoded_bits) / static_cast<double>(s.raw_bits);
    return s;
}

namespace {
constexpr uint32_t kGraphMagic = 0x52475850;  // "PXGR"
constexpr uint32_t kVersion = 1;
constexpr uint32_t kFlagRaw = 0;
constexpr uint32_t kFlagGap = 1;
}  // namespace

void save_graph(const std::string& path, const GraphIndex& g) {
    auto out = open_out(path);
    write_pod(out, kGraphMagic);
    write_pod(out, kVersion);
    write_pod(out, kFlagRaw);
    write_pod(out, static_cast<uint64_t>(g.n));
    write_pod(out, g.r);
    write_pod(out, g.entry);
    for (const auto& row : g.adj) {
        write_pod(out, static_cast<uint32_t>(row.size()));
        out.write(reinterpret_cast<const char*>(row.data()), 4 * row.size());
    }
    require(static_cast<bool>(out), "write failed: " + path);
}

void save_graph_encoded(const std::string& path, const GapEncodedGraph& e) {
    auto out = open_out(path);
    write_pod(out, kGraphMagic);
    write_pod(out, kVersion);
    write_pod(out, kFlagGap);
    write_pod(out, static_cast<uint64_t>(e.n));
    write_pod(out, e.r);
    write_pod(out, e.entry);
    write_pod(out, e.bit_width);
    write_pod(out, e.degree_bits);
    write_vec(out, e.offsets);
    write_vec(out, e.payload);
    require(static_cast<bool>(out), "write failed: " + path);
}

namespace {

GraphIndex load_native(const std::string& path) {
    auto in = open_in(path);
    require(read_pod<uint32_t>(in) == kGraphMagic, "not a graph file: " + path);
    require(read_pod<uint32_t>(in) == kVersion, "unsupported graph version: " + path);
    uint32_t flag = read_pod<uint32_t>(in);
    if (flag == kFlagGap) {
        in.close();
        return gap_decode(load_graph_encoded(path));
    }
    require(flag == kFlagRaw, "unknown graph encoding flag in " + path);
    GraphIndex g;
    g.n = read_pod<uint64_t>(in);
    g.r = read_pod<uint32_t>(in);
    g.entry = read_pod<vertex_t>(in);
    g.adj.resize(g.n);
    for (size_t v = 0; v < g.n; v++) {
        uint32_t deg = read_pod<uint32_t>(in);
        require(deg <= g.r, "graph file: vertex " + std::to_string(v) + " has degree " +
                                std::to_string(deg) + " > R");
        g.adj[v].resize(deg);
        in.read(reinterpret_cast<char*>(g.adj[v].data()), 4 * deg);
        require(static_cast<bool>(in), "truncated graph file: " + path);
    }
    g.validate();
    return g;
}

GraphIndex load_diskann_mem(const std::string& path) {
    auto in = open_in(path);
    in.seekg(0, std::ios::end);
    uint64_t file_size = static_cast<uint64_t>(in.tellg());
    in.seekg(0, std::ios::beg);
    uint64_t expected = read_pod<uint64_t>(in);
    require(expected == file_size, "diskann index: recorded size mismatch");
    GraphIndex g;
    g.r = read_pod<uint32_t>(in);
    g.entry = read_pod<uint32_t>(in);
    uint64_t frozen = read_pod<uint64_t>(in);
    (void)frozen;
    uint64_t pos = 8 + 4 + 4 + 8;
    while (pos < file_size) {
        uint32_t deg = read_pod<uint32_t>(in);
        require(deg <= g.r, "diskann index: over-degree row");
        std::vector<vertex_t> row(deg);
        in.read(reinterpret_cast<char*>(row.data()), 4 * deg);
        require(static_cast<bool>(in), "truncated diskann index: " + path);
        g.adj.push_back(std::move(row));
        pos += 4 + 4ULL * deg;
    }
    g.n = g.adj.size();
    g.validate();
    return g;
}

}  // namespace

GraphIndex load_graph(const std::string& path, GraphFormat format) {
    return format == GraphFormat::native ? load_native(path) : load_diskann_mem(path);
}

GapEncodedGraph load_graph_encoded(const std::string& path) {
    auto in = open_in(path);
    require(read_pod<uint32_t>(in) == kGraphMagic, "not a graph file: " + path);
    require(read_pod<uint32_t>(in) == kVersion, "unsupported graph version: " + path);
    require(read_pod<uint32_t>(in) == kFlagGap, "graph file is not gap-encoded: " + path);
    GapEncodedGraph e;
    e.n = read_pod<uint64_t>(in);
    e.r = read_pod<uint32_t>(in);
    e.entry = read_pod<vertex_t>(in);
    e.bit_width = read_pod<uint32_t>(in);
    e.degree_bits = read_pod<uint32_t>(in);
    e.offsets = read_vec<uint64_t>(in);
    e.payload = read_vec<uint64_t>(in);
    require(e.offsets.size() == e.n, "corrupt encoded graph: offsets size");
    return e;
}

}  // namespace proxima
