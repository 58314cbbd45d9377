#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "proxima/search.hpp"
#include "proxima/synth.hpp"

using namespace proxima;

namespace {

struct TestIndex {
    VectorDataset base;
    GraphIndex graph;
    PQModel model;
    PQCodes codes;
};

TestIndex make_index(size_t n, size_t d, uint64_t seed, uint32_t r = 12, uint32_t m = 4,
                     uint32_t c = 32) {
    TestIndex ti;
    ti.base = make_sift_like(n, d, seed, 48, 16.0);
    ti.graph = build_graph(ti.base, r, 32, 1.2f, seed + 1);
    ti.model = train_pq(ti.base, m, c, 12, seed + 2);
    ti.codes = encode(ti.model, ti.base);
    return ti;
}

// Straightforward reference: classic PQ best-first search with an exact
// visited set, returning the top-k by PQ distance.
std::vector<vertex_t> reference_pq_search(const GraphIndex& g, const PQModel& model,
                                          const PQCodes& codes, std::span<const float> q,
                                          uint32_t k, uint32_t l) {
    auto adt = build_adt(model, q);
    std::vector<std::pair<float, vertex_t>> list;  // (pq dist, id), sorted
    std::set<vertex_t> evaluated, seen;
    list.emplace_back(pq_distance(adt, codes.row(g.entry)), g.entry);
    seen.insert(g.entry);
    while (true) {
        size_t pick = list.size();
        for (size_t i = 0; i < list.size(); i++) {
            if (!evaluated.count(list[i].second)) {
                pick = i;
                break;
            }
        }
        if (pick == list.size()) break;
        vertex_t v = list[pick].second;
        evaluated.insert(v);
        for (vertex_t nb : g.adj[v]) {
            if (seen.count(nb)) continue;
            seen.insert(nb);
            list.emplace_back(pq_distance(adt, codes.row(nb)), nb);
        }
        std::sort(list.begin(), list.end());
        if (list.size() > l) list.resize(l);
    }
    std::vector<vertex_t> ids;
    for (uint32_t i = 0; i < k && i < list.size(); i++) ids.push_back(list[i].second);
    return ids;
}

}  // namespace

TEST_CASE("bloom filter: empty filter reports nothing") {
    BloomFilter bf(4096, 4);
    for (vertex_t id = 0; id < 2000; id++) CHECK_FALSE(bf.maybe_contains(id));
}

TEST_CASE("bloom filter: no false negatives") {
    BloomFilter bf(8192, 6, 123);
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<vertex_t> uni(0, 1u << 30);
    std::vector<vertex_t> inserted;
    for (int i = 0; i < 500; i++) {
        vertex_t id = uni(rng);
        bf.insert(id);
        inserted.push_back(id);
    }
    for (vertex_t id : inserted) CHECK(bf.maybe_contains(id));
}

TEST_CASE("bloom filter: measured FP rate tracks the formula") {
    BloomFilter bf(98304, 8);
    for (vertex_t id = 0; id < 4000; id++) bf.insert(id);
    size_t fp = 0, probes = 200000;
    for (size_t i = 0; i < probes; i++) {
        vertex_t probe = static_cast<vertex_t>(1000000 + i);
        if (bf.maybe_contains(probe)) fp++;
    }
    double measured = double(fp) / probes;
    double expected = bf.expected_fp_rate();
    CHECK(measured < expected * 3 + 1e-4);
    CHECK(measured > expected / 3 - 1e-4);
}

TEST_CASE("sort_and_truncate") {
    auto mk = [](std::initializer_list<float> ds) {
        std::vector<Candidate> v;
        vertex_t id = 0;
        for (float d : ds) v.push_back(Candidate{.dist = d, .id = id++});
        return v;
    };
    auto sorted = mk({1, 2, 3, 4, 5});
    auto copy = sorted;
    sort_and_truncate(copy, 10);
    for (size_t i = 0; i < copy.size(); i++) CHECK(copy[i].dist == sorted[i].dist);

    auto rev = mk({5, 4, 3, 2, 1});
    sort_and_truncate(rev, 10);
    for (size_t i = 1; i < rev.size(); i++) CHECK(rev[i].dist >= rev[i - 1].dist);

    // naive oracle on random lists, with truncation
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<float> uni(0.f, 10.f);
    for (int trial = 0; trial < 50; trial++) {
        std::vector<Candidate> list;
        for (vertex_t i = 0; i < 40; i++) list.push_back(Candidate{.dist = uni(rng), .id = i});
        auto naive = list;
        std::stable_sort(naive.begin(), naive.end(), [](const Candidate& a, const Candidate& b) {
            return a.dist < b.dist || (a.dist == b.dist && a.id < b.id);
        });
        naive.resize(25);
        sort_and_truncate(list, 25);
        REQUIRE(list.size() == naive.size());
        for (size_t i = 0; i < list.size(); i++) {
            CHECK(list[i].dist == naive[i].dist);
            CHECK(list[i].id == naive[i].id);
        }
    }
}

TEST_CASE("ten-point toy set: entry neighborhood contains the true NN") {
    VectorDataset base;
    base.n = 10;
    base.d = 2;
    base.data = {0, 0, 1, 0, 0, 1, 1, 1, 5, 5, 6, 5, 5, 6, 9, 9, 9, 8, 8, 9};
    GraphIndex g;
    g.n = 10;
    g.r = 9;
    g.entry = 4;  // center-ish vertex, linked to everything
    g.adj.resize(10);
    for (vertex_t v = 0; v < 10; v++)
        for (vertex_t u = 0; u < 10; u++)
            if (u != v) g.adj[v].push_back(u);

    auto model = train_pq(base, 2, 10, 20, 3);
    auto codes = encode(model, base);
    SearchParams params;
    params.k = 1;
    params.L = 10;
    params.beta = 1.5f;
    auto res = search(g, model, codes, base, std::vector<float>{0.1f, 0.1f}, params);
    CHECK(res.ids[0] == 0);  // exact NN of (0.1, 0.1)
}

TEST_CASE("classic-mode search matches a reference implementation id-for-id") {
    auto ti = make_index(1000, 16, 31);
    auto queries = make_sift_like(50, 16, 77, 48, 16.0);
    SearchParams params;
    params.k = 10;
    params.L = 40;
    params.T_init = 40;  // L = T
    params.beta = 1.0f;
    params.et_enabled = false;
    params.rerank_enabled = false;  // classic PQ best-first output
    params.exact_visited = true;
    for (size_t q = 0; q < queries.n; q++) {
        auto got = search(ti.graph, ti.model, ti.codes, ti.base, queries.row(q), params);
        auto want = reference_pq_search(ti.graph, ti.model, ti.codes, queries.row(q), 10, 40);
        CHECK(got.ids == want);
    }
}

TEST_CASE("exhaustive limit: beta -> inf, L = N, ET off reaches recall 1.0") {
    auto ti = make_index(400, 12, 41);
    auto queries = make_sift_like(20, 12, 99, 48, 16.0);
    auto gt = brute_force_knn(ti.base, queries, 10);
    SearchParams params;
    params.k = 10;
    params.L = 400;
    params.beta = 1e9f;
    params.et_enabled = false;
    params.exact_visited = true;
    std::vector<std::vector<vertex_t>> found;
    for (size_t q = 0; q < queries.n; q++)
        found.push_back(search(ti.graph, ti.model, ti.codes, ti.base, queries.row(q), params).ids);
    CHECK(recall_at_k(found, gt, 10) == 1.0);
}

TEST_CASE("final top-k is ordered by reranked distance") {
    auto ti = make_index(500, 12, 51);
    auto queries = make_sift_like(10, 12, 52, 48, 16.0);
    SearchParams params;
    params.k = 10;
    params.L = 50;
    params.beta = 1.06f;
    for (size_t q = 0; q < queries.n; q++) {
        auto res = search(ti.graph, ti.model, ti.codes, ti.base, queries.row(q), params);
        REQUIRE(res.ids.size() == params.k);
        for (size_t i = 1; i < res.dists.size(); i++) CHECK(res.dists[i] >= res.dists[i - 1]);
        for (size_t i = 0; i < res.ids.size(); i++)
            CHECK(res.dists[i] ==
                  doctest::Approx(exact_distance(queries.row(q), ti.base.row(res.ids[i]),
                                                 ti.base.metric)));
    }
}

TEST_CASE("counter invariants hold") {
    auto ti = make_index(800, 16, 61);
    auto queries = make_sift_like(20, 16, 62, 48, 16.0);
    SearchParams params;
    params.k = 5;
    params.L = 30;
    params.beta = 1.1f;
    for (size_t q = 0; q < queries.n; q++) {
        auto res = search(ti.graph, ti.model, ti.codes, ti.base, queries.row(q), params);
        const auto& c = res.counters;
        CHECK(c.pq_distance_count <= c.hops * ti.graph.r + 1);
        CHECK(c.vertices_visited == c.pq_distance_count);
        CHECK(c.exact_distance_count <= c.vertices_visited);
        CHECK(c.final_T >= params.k);
        CHECK(c.hops >= 1);
    }
}

TEST_CASE("early termination fires on stable top-k and respects r") {
    auto ti = make_index(2000, 16, 71);
    auto queries = make_sift_like(30, 16, 72, 48, 16.0);
    SearchParams et_on;
    et_on.k = 10;
    et_on.L = 150;
    et_on.r = 2;
    et_on.T_step = 4;
    et_on.beta = 1.1f;
    SearchParams et_never = et_on;
    et_never.r = 1000000;  // can never observe that many stable iterations

    uint64_t hops_on = 0, hops_off = 0;
    size_t terminated = 0;
    for (size_t q = 0; q < queries.n; q++) {
        auto a = search(ti.graph, ti.model, ti.codes, ti.base, queries.row(q), et_on);
        auto b = search(ti.graph, ti.model, ti.codes, ti.base, queries.row(q), et_never);
        hops_on += a.counters.hops;
        hops_off += b.counters.hops;
        terminated += a.counters.terminated_early ? 1 : 0;
        CHECK_FALSE(b.counters.terminated_early);
    }
    CHECK(terminated > 0);
    CHECK(hops_on < hops_off);
}

TEST_CASE("batch search is independent of parallelism") {
    auto ti = make_index(600, 12, 81);
    auto queries = make_sift_like(24, 12, 82, 48, 16.0);
    SearchParams params;
    params.k = 5;
    params.L = 40;
    params.beta = 1.05f;
    auto serial = batch_search(ti.graph, ti.model, ti.codes, ti.base, queries, params, 1);
    auto parallel = batch_search(ti.graph, ti.model, ti.codes, ti.base, queries, params, 8);
    CHECK(serial.results.size() == parallel.results.size());
    for (size_t q = 0; q < serial.results.size(); q++)
        CHECK(serial.results[q].ids == parallel.results[q].ids);
    CHECK(serial.qps > 0.0);
}

TEST_CASE("search validates parameters") {
    auto ti = make_index(100, 8, 91);
    SearchParams params;
    params.k = 20;
    params.L = 10;  // k > L
    std::vector<float> q(8, 0.f);
    CHECK_THROWS_AS(search(ti.graph, ti.model, ti.codes, ti.base, q, params), error);

    SearchParams p2;
    p2.k = 5;
    p2.L = 10;
    p2.beta = 0.5f;  // beta < 1
    CHECK_THROWS_AS(search(ti.graph, ti.model, ti.codes, ti.base, q, p2), error);
}

TEST_CASE("trace records replayable events") {
    auto ti = make_index(500, 12, 101);
    auto queries = make_sift_like(5, 12, 102, 48, 16.0);
    AccessTrace trace;
    SearchParams params;
    params.k = 5;
    params.L = 30;
    params.beta = 1.1f;
    auto batch = batch_search(ti.graph, ti.model, ti.codes, ti.base, queries, params, 1, &trace);
    REQUIRE(trace.queries.size() == queries.n);
    CHECK(trace.m == ti.model.m);
    for (size_t q = 0; q < queries.n; q++) {
        const auto& events = trace.queries[q].events;
        REQUIRE(!events.empty());
        CHECK(events[0].op == TraceOp::adt_build);
        uint64_t hops = 0, fetches = 0, reranks = 0;
        for (const auto& ev : events) {
            if (ev.op == TraceOp::hop) hops++;
            if (ev.op == TraceOp::neighbor_fetch) fetches++;
            if (ev.op == TraceOp::rerank) reranks++;
        }
        const auto& c = batch.results[q].counters;
        CHECK(hops == c.hops);
        CHECK(fetches + 1 == c.vertices_visited);  // entry is visited without a fetch
        CHECK(reranks == c.exact_distance_count);
    }
}
