#include <doctest.h>

#include <filesystem>
#include <numeric>
#include <random>
#include <set>

#include "proxima/mapping.hpp"
#include "proxima/simulator.hpp"
#include "proxima/synth.hpp"

using namespace proxima;

namespace {

std::string tmp_path(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "proxima_tests";
    std::filesystem::create_directories(dir);
    return (dir / name).string();
}

struct TestIndex {
    VectorDataset base;
    GraphIndex graph;
    PQModel model;
    PQCodes codes;
};

TestIndex make_index(size_t n, size_t d, uint64_t seed) {
    TestIndex ti;
    ti.base = make_sift_like(n, d, seed, 48, 16.0);
    ti.graph = build_graph(ti.base, 12, 32, 1.2f, seed + 1);
    ti.model = train_pq(ti.base, 4, 32, 10, seed + 2);
    ti.codes = encode(ti.model, ti.base);
    return ti;
}

SearchParams default_params() {
    SearchParams p;
    p.k = 10;
    p.L = 40;
    p.beta = 1.1f;
    return p;
}

}  // namespace

TEST_CASE("collect_trace counts visits and the entry dominates") {
    auto ti = make_index(2000, 16, 7);
    auto params = default_params();
    auto trace = collect_trace(ti.graph, ti.model, ti.codes, ti.base, 200, params, 99);
    REQUIRE(trace.counts.size() == ti.graph.n);
    CHECK(trace.counts[ti.graph.entry] ==
          *std::max_element(trace.counts.begin(), trace.counts.end()));

    // cross-check: total counts equal the sum of per-query visited counters
    std::mt19937_64 rng(99);
    std::uniform_int_distribution<size_t> uni(0, ti.graph.n - 1);
    uint64_t expected = 0;
    for (int i = 0; i < 200; i++) {
        auto res = search(ti.graph, ti.model, ti.codes, ti.base, ti.base.row(uni(rng)), params);
        expected += res.counters.vertices_visited;
    }
    CHECK(trace.total() == expected);

    CHECK_THROWS_AS(collect_trace(ti.graph, ti.model, ti.codes, ti.base, 0, params, 1), error);
}

TEST_CASE("reorder_graph with a uniform trace is the identity") {
    auto ti = make_index(300, 8, 11);
    VisitTrace uniform;
    uniform.counts.assign(ti.graph.n, 5);
    auto [g2, perm] = reorder_graph(ti.graph, uniform);
    for (size_t v = 0; v < perm.size(); v++) CHECK(perm[v] == v);
    CHECK(g2.entry == ti.graph.entry);
}

TEST_CASE("reordering is an isomorphism: search results map through the permutation") {
    // Continuous data and a fine quantizer keep PQ distances tie-free, so
    // the traversal order cannot depend on vertex labels.
    TestIndex ti;
    ti.base = make_uniform(1500, 12, 13);
    ti.graph = build_graph(ti.base, 12, 32, 1.2f, 14);
    ti.model = train_pq(ti.base, 4, 64, 10, 15);
    ti.codes = encode(ti.model, ti.base);
    auto params = default_params();
    params.exact_visited = true;  // filter behavior must not depend on labels
    auto trace = collect_trace(ti.graph, ti.model, ti.codes, ti.base, 100, params, 5);
    auto [g2, perm] = reorder_graph(ti.graph, trace);
    CHECK(g2.entry == perm[ti.graph.entry]);

    auto base2 = permute_dataset(ti.base, perm);
    auto codes2 = permute_codes(ti.codes, perm);
    auto queries = make_uniform(20, 12, 555);
    for (size_t q = 0; q < queries.n; q++) {
        auto a = search(ti.graph, ti.model, ti.codes, ti.base, queries.row(q), params);
        auto b = search(g2, ti.model, codes2, base2, queries.row(q), params);
        std::vector<vertex_t> mapped;
        for (auto id : a.ids) mapped.push_back(perm[id]);
        std::sort(mapped.begin(), mapped.end());
        auto got = b.ids;
        std::sort(got.begin(), got.end());
        CHECK(mapped == got);
    }
}

TEST_CASE("reordering shrinks gap deltas among the hottest vertices") {
    auto ti = make_index(4000, 16, 17);
    auto params = default_params();
    auto trace = collect_trace(ti.graph, ti.model, ti.codes, ti.base, 400, params, 9);
    auto [g2, perm] = reorder_graph(ti.graph, trace);

    std::vector<vertex_t> by_heat(ti.graph.n);
    std::iota(by_heat.begin(), by_heat.end(), 0);
    std::sort(by_heat.begin(), by_heat.end(), [&](vertex_t a, vertex_t b) {
        return trace.counts[a] != trace.counts[b] ? trace.counts[a] > trace.counts[b] : a < b;
    });
    size_t top = ti.graph.n / 100;
    REQUIRE(top >= 10);

    auto mean_delta = [](const GraphIndex& g, const std::vector<vertex_t>& vs) {
        double sum = 0;
        size_t cnt = 0;
        for (vertex_t v : vs) {
            auto row = g.adj[v];
            if (row.size() < 2) continue;
            std::sort(row.begin(), row.end());
            for (size_t i = 1; i < row.size(); i++) {
                sum += row[i] - row[i - 1];
                cnt++;
            }
        }
        return sum / std::max<size_t>(cnt, 1);
    };
    std::vector<vertex_t> hot_old(by_heat.begin(), by_heat.begin() + top);
    std::vector<vertex_t> hot_new;
    for (vertex_t v : hot_old) hot_new.push_back(perm[v]);
    CHECK(mean_delta(g2, hot_new) < mean_delta(ti.graph, hot_old));
}

TEST_CASE("select_hot_nodes boundary cases") {
    VisitTrace trace;
    trace.counts.assign(1000, 1);
    CHECK(select_hot_nodes(trace, 0.0) == 0);
    CHECK(select_hot_nodes(trace, 1.0) == 1000);
    CHECK(select_hot_nodes(trace, 0.03) == 30);
    CHECK_THROWS_AS(select_hot_nodes(trace, 1.5), error);
}

TEST_CASE("round-robin layout: consecutive ids on consecutive cores") {
    SimConfig cfg;
    cfg.n_tiles = 1;
    cfg.cores_per_tile = 3;
    auto plan = plan_layout(4, 2, 8, 8, 0, cfg);
    CHECK(plan.raw_cores == 1);
    CHECK(plan.pq_cores == 2);
    CHECK(translate(plan, 0, Region::regular).core == 0);
    CHECK(translate(plan, 1, Region::regular).core == 1);
    CHECK(translate(plan, 2, Region::regular).core == 0);
    CHECK(translate(plan, 3, Region::regular).core == 1);

    auto origin = translate(plan, 0, Region::regular);
    CHECK(origin.tile == 0);
    CHECK(origin.abs_page == 0);
    CHECK(origin.frame == 0);
}

TEST_CASE("frame arithmetic matches the reference configuration") {
    SimConfig cfg;  // N_BL = 36864
    auto plan = plan_layout(100000, 64, 128, 24, 0, cfg);
    CHECK(plan.record_bits[size_t(Region::regular)] == 64 * 24 + 256);  // 1792
    CHECK(plan.frames_per_page[size_t(Region::regular)] == 20);         // floor(36864/1792)
    CHECK(plan.record_bits[size_t(Region::raw)] == 32 * 128);
    CHECK(plan.frames_per_page[size_t(Region::raw)] == 9);
    CHECK(plan.record_bits[size_t(Region::hot)] == 64ull * (24 + 256) + 256);
}

TEST_CASE("translate is a bijection on the allocated range") {
    SimConfig cfg;
    auto plan = plan_layout(50000, 32, 64, 17, 1500, cfg);
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<vertex_t> uni(0, 49999);
    for (int i = 0; i < 10000; i++) {
        vertex_t id = uni(rng);
        for (Region reg : {Region::regular, Region::raw}) {
            auto addr = translate(plan, id, reg);
            CHECK(translate_back(plan, addr, reg) == id);
        }
        if (id < plan.hot_count) {
            auto addr = translate(plan, id, Region::hot);
            CHECK(translate_back(plan, addr, Region::hot) == id);
        }
    }
    CHECK_THROWS_AS(translate(plan, 49999, Region::hot), error);  // not allocated as hot
    CHECK_THROWS_AS(translate(plan, 50000, Region::regular), error);
}

TEST_CASE("hot region occupies the low pages, no frame collisions") {
    SimConfig cfg;
    auto plan = plan_layout(10000, 16, 32, 14, 500, cfg);
    CHECK(translate(plan, 0, Region::hot).abs_page == 0);
    CHECK(plan.region_base_page[size_t(Region::regular)] > 0);
    std::set<std::tuple<uint32_t, uint64_t, uint32_t>> frames;
    for (vertex_t id = 0; id < 2000; id++) {
        for (Region reg : {Region::regular, Region::raw}) {
            auto a = translate(plan, id, reg);
            CHECK(frames.insert({a.core, a.abs_page, a.frame}).second);
        }
        if (id < plan.hot_count) {
            auto a = translate(plan, id, Region::hot);
            CHECK(frames.insert({a.core, a.abs_page, a.frame}).second);
        }
    }
}

TEST_CASE("capacity checks reject oversized layouts") {
    SimConfig cfg;
    cfg.n_tiles = 1;
    cfg.cores_per_tile = 2;
    cfg.blocks_per_core = 1;
    cfg.layers = 1;
    cfg.ssl = 1;  // one page per core
    CHECK_THROWS_AS(plan_layout(100000, 32, 128, 24, 0, cfg), error);
}

TEST_CASE("layout file round trip") {
    SimConfig cfg;
    auto plan = plan_layout(5000, 16, 64, 13, 150, cfg);
    std::iota(plan.perm.rbegin(), plan.perm.rend(), 0);  // non-trivial permutation
    auto path = tmp_path("layout.px");
    save_layout(path, plan);
    auto back = load_layout(path);
    CHECK(back.n == plan.n);
    CHECK(back.hot_count == plan.hot_count);
    CHECK(back.perm == plan.perm);
    CHECK(back.record_bits[1] == plan.record_bits[1]);
    CHECK(back.frames_per_page[2] == plan.frames_per_page[2]);
    CHECK(back.region_base_page[0] == plan.region_base_page[0]);
}

TEST_CASE("remap_trace rewrites fetch targets only") {
    AccessTrace trace;
    trace.dim = 8;
    trace.m = 4;
    QueryTrace qt;
    qt.events = {{TraceOp::adt_build, 0, 0},
                 {TraceOp::hop, 2, 1},
                 {TraceOp::neighbor_fetch, 1, 0},
                 {TraceOp::sort, 0, 5},
                 {TraceOp::rerank, 0, 0}};
    trace.queries.push_back(qt);
    std::vector<vertex_t> perm = {10, 11, 12};
    auto out = remap_trace(trace, perm);
    CHECK(out.queries[0].events[1].vertex == 12);
    CHECK(out.queries[0].events[2].vertex == 11);
    CHECK(out.queries[0].events[3].vertex == 0);  // sort untouched
    CHECK(out.queries[0].events[4].vertex == 10);
}
