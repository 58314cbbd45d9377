#include <doctest.h>

#include <filesystem>
#include <random>

#include "proxima/graph.hpp"
#include "proxima/search.hpp"
#include "proxima/synth.hpp"

using namespace proxima;

namespace {

std::string tmp_path(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "proxima_tests";
    std::filesystem::create_directories(dir);
    return (dir / name).string();
}

GraphIndex random_graph(size_t n, uint32_t r, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<vertex_t> uni(0, static_cast<vertex_t>(n - 1));
    std::uniform_int_distribution<uint32_t> deg(0, r);
    GraphIndex g;
    g.n = n;
    g.r = r;
    g.entry = uni(rng);
    g.adj.resize(n);
    for (size_t v = 0; v < n; v++) {
        uint32_t d = deg(rng);
        while (g.adj[v].size() < d) {
            vertex_t nb = uni(rng);
            if (nb == v) continue;
            if (std::find(g.adj[v].begin(), g.adj[v].end(), nb) != g.adj[v].end()) continue;
            g.adj[v].push_back(nb);
        }
    }
    return g;
}

bool same_neighbor_sets(const GraphIndex& a, const GraphIndex& b) {
    if (a.n != b.n) return false;
    for (size_t v = 0; v < a.n; v++) {
        auto x = a.adj[v], y = b.adj[v];
        std::sort(x.begin(), x.end());
        std::sort(y.begin(), y.end());
        if (x != y) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("three points with R=2 build the complete graph") {
    VectorDataset ds;
    ds.n = 3;
    ds.d = 2;
    ds.data = {0, 0, 1, 0, 0, 1};
    auto g = build_graph(ds, 2, 10, 1.2f, 1);
    for (size_t v = 0; v < 3; v++) CHECK(g.adj[v].size() == 2);
}

TEST_CASE("builder output is deterministic, bounded, and reachable") {
    auto ds = make_uniform(10000, 16, 77);
    auto g = build_graph(ds, 16, 32, 1.2f, 5);
    CHECK(g.n == ds.n);
    for (const auto& row : g.adj) CHECK(row.size() <= g.r);
    CHECK(reachable_fraction(g) >= 0.999);

    auto g2 = build_graph(ds, 16, 32, 1.2f, 5);
    CHECK(same_neighbor_sets(g, g2));
    CHECK(g.entry == g2.entry);
}

TEST_CASE("degenerate all-identical dataset still yields a valid graph") {
    VectorDataset ds;
    ds.n = 20;
    ds.d = 3;
    ds.data.assign(60, 1.0f);
    auto g = build_graph(ds, 4, 8, 1.2f, 3);
    g.validate();
    CHECK(reachable_fraction(g) == 1.0);
}

TEST_CASE("greedy search on a built 10K graph reaches recall@10 >= 0.95") {
    auto ds = make_sift_like(10000, 32, 2024, 128, 18.0);
    auto g = build_graph(ds, 24, 48, 1.2f, 9);
    auto queries = make_sift_like(200, 32, 555, 128, 18.0);
    auto gt = brute_force_knn(ds, queries, 10);
    std::vector<std::vector<vertex_t>> found;
    for (size_t q = 0; q < queries.n; q++) {
        auto r = exact_best_first_search(g, ds, queries.row(q), 10, 100);
        found.push_back(r.ids);
    }
    CHECK(recall_at_k(found, gt, 10) >= 0.95);
}

TEST_CASE("native save/load round trip") {
    auto g = random_graph(500, 8, 3);
    auto path = tmp_path("graph.px");
    save_graph(path, g);
    auto back = load_graph(path, GraphFormat::native);
    CHECK(back.n == g.n);
    CHECK(back.r == g.r);
    CHECK(back.entry == g.entry);
    CHECK(same_neighbor_sets(back, g));
}

TEST_CASE("load rejects out-of-range neighbor ids") {
    auto path = tmp_path("bad_graph.px");
    {
        auto g = random_graph(10, 4, 4);
        g.adj[2] = {static_cast<vertex_t>(15)};  // id N + 5
        save_graph(path, g);
    }
    CHECK_THROWS_WITH_AS(load_graph(path), doctest::Contains("out of range"), error);
}

TEST_CASE("diskann_mem format loads") {
    auto path = tmp_path("graph.diskann");
    // layout: u64 file size, u32 max degree, u32 start, u64 frozen, then rows
    std::vector<std::vector<vertex_t>> rows = {{1, 2}, {0}, {1}};
    uint64_t size = 8 + 4 + 4 + 8;
    for (const auto& r : rows) size += 4 + 4 * r.size();
    {
        auto out = open_out(path);
        write_pod<uint64_t>(out, size);
        write_pod<uint32_t>(out, 2);
        write_pod<uint32_t>(out, 0);
        write_pod<uint64_t>(out, 0);
        for (const auto& r : rows) {
            write_pod<uint32_t>(out, static_cast<uint32_t>(r.size()));
            for (auto v : r) write_pod<vertex_t>(out, v);
        }
    }
    auto g = load_graph(path, GraphFormat::diskann_mem);
    CHECK(g.n == 3);
    CHECK(g.r == 2);
    CHECK(g.adj[0] == std::vector<vertex_t>{1, 2});
    CHECK(g.adj[2] == std::vector<vertex_t>{1});
}

TEST_CASE("gap encoding stores the worked delta example") {
    GraphIndex g;
    g.n = 10;
    g.r = 3;
    g.entry = 0;
    g.adj.resize(10);
    g.adj[0] = {9, 2, 5};  // sorted: 2 5 9 -> stored 2 3 4
    auto e = gap_encode(g);
    uint64_t pos = e.offsets[0];
    CHECK(bits::get_bits(e.payload, pos, e.degree_bits) == 3);
    pos += e.degree_bits;
    CHECK(bits::get_bits(e.payload, pos, e.bit_width) == 2);
    pos += e.bit_width;
    CHECK(bits::get_bits(e.payload, pos, e.bit_width) == 3);
    pos += e.bit_width;
    CHECK(bits::get_bits(e.payload, pos, e.bit_width) == 4);

    std::vector<vertex_t> out;
    e.decode_row(0, out);
    CHECK(out == std::vector<vertex_t>{2, 5, 9});
}

TEST_CASE("the 4-vertex 3-NN instance compresses below 384 bits") {
    GraphIndex g;
    g.n = 4;
    g.r = 3;
    g.entry = 0;
    g.adj = {{1, 2, 3}, {0, 2, 3}, {0, 1, 3}, {0, 1, 2}};
    auto e = gap_encode(g);
    CHECK(e.encoded_bits() < 384);
    CHECK(same_neighbor_sets(gap_decode(e), g));
}

TEST_CASE("gap round trip recovers neighbor sets exactly") {
    for (uint64_t seed = 0; seed < 20; seed++) {
        auto g = random_graph(200 + seed * 37, 6, seed);
        auto e = gap_encode(g);
        auto back = gap_decode(e);
        CHECK(back.n == g.n);
        CHECK(same_neighbor_sets(back, g));
    }
}

TEST_CASE("stored deltas are at least 1 after the first element") {
    auto g = random_graph(300, 8, 11);
    auto e = gap_encode(g);
    for (size_t v = 0; v < g.n; v++) {
        uint64_t pos = e.offsets[v];
        uint64_t deg = bits::get_bits(e.payload, pos, e.degree_bits);
        pos += e.degree_bits + e.bit_width;  // skip the absolute first id
        for (uint64_t i = 1; i < deg; i++) {
            CHECK(bits::get_bits(e.payload, pos, e.bit_width) >= 1);
            pos += e.bit_width;
        }
    }
}

TEST_CASE("graph_stats formulas") {
    GraphIndex g;
    g.n = 4;
    g.r = 3;
    g.entry = 0;
    g.adj = {{1, 2, 3}, {0, 2, 3}, {0, 1, 3}, {0, 1, 2}};
    auto s = graph_stats(g);
    CHECK(s.degree_histogram[3] == 4);
    CHECK(s.raw_bits == 32ull * 4 * 3);
    auto e = gap_encode(g);
    CHECK(s.encoded_bits == e.record_bits() * g.n);
    CHECK(s.bit_width == e.bit_width);

    // cross-check against the serialized payload
    auto path = tmp_path("enc.px");
    save_graph_encoded(path, e);
    auto back = load_graph_encoded(path);
    CHECK(back.payload == e.payload);
    CHECK(back.encoded_bits() == s.encoded_bits);
    CHECK(same_neighbor_sets(gap_decode(back), g));
}

TEST_CASE("encoded graphs load back through the generic loader") {
    auto g = random_graph(64, 5, 21);
    auto path = tmp_path("enc2.px");
    save_graph_encoded(path, gap_encode(g));
    auto back = load_graph(path, GraphFormat::native);
    CHECK(same_neighbor_sets(back, g));
}

TEST_CASE("bit packing handles word boundaries") {
    std::vector<uint64_t> buf(4, 0);
    for (uint32_t width : {1u, 7u, 17u, 31u, 33u, 57u}) {
        std::fill(buf.begin(), buf.end(), 0);
        uint64_t mask = (1ULL << width) - 1;
        uint64_t value = 0x5a5a5a5a5a5a5a5aULL & mask;
        for (uint64_t pos : {0ULL, 3ULL, 60ULL, 63ULL, 64ULL, 100ULL}) {
            bits::set_bits(buf, pos, width, value);
            CHECK(bits::get_bits(buf, pos, width) == value);
        }
    }
}
