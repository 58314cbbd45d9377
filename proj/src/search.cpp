#include "proxima/search.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <unordered_map>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace proxima {

BloomFilter::BloomFilter(uint32_t bits, uint32_t hashes, uint64_t seed)
    : m_(bits), h_(hashes), seed_(seed), words_((bits + 63) / 64, 0) {
    require(bits >= 64, "bloom filter: need at least 64 bits");
    require(hashes >= 1, "bloom filter: need at least one hash");
}

void BloomFilter::insert(vertex_t id) {
    uint64_t h1 = splitmix64(static_cast<uint64_t>(id) ^ seed_);
    uint64_t h2 = splitmix64(h1 ^ 0x6a09e667f3bcc909ULL) | 1;
    for (uint32_t i = 0; i < h_; i++) {
        uint64_t bit = (h1 + i * h2) % m_;
        words_[bit >> 6] |= 1ULL << (bit & 63);
    }
    inserted_++;
}

bool BloomFilter::maybe_contains(vertex_t id) const {
    uint64_t h1 = splitmix64(static_cast<uint64_t>(id) ^ seed_);
    uint64_t h2 = splitmix64(h1 ^ 0x6a09e667f3bcc909ULL) | 1;
    for (uint32_t i = 0; i < h_; i++) {
        uint64_t bit = (h1 + i * h2) % m_;
        if (!(words_[bit >> 6] & (1ULL << (bit & 63)))) return false;
    }
    return true;
}

void BloomFilter::clear() {
    std::fill(words_.begin(), words_.end(), 0);
    inserted_ = 0;
}

double BloomFilter::expected_fp_rate() const {
    double x = static_cast<double>(h_) * inserted_ / m_;
    return std::pow(1.0 - std::exp(-x), h_);
}

void SearchParams::validate() const {
    require(k >= 1, "search params: k must be >= 1");
    require(k <= L, "search params: k > L");
    require(T_init == 0 || (T_init >= k && T_init <= L),
            "search params: need k <= T_init <= L");
    require(T_step >= 1, "search params: T_step must be >= 1");
    require(r >= 1, "search params: r must be >= 1");
    require(beta >= 1.0f, "search params: beta must be >= 1");
}

void sort_and_truncate(std::vector<Candidate>& list, size_t l) {
    std::sort(list.begin(), list.end(), [](const Candidate& a, const Candidate& b) {
        return a.dist < b.dist || (a.dist == b.dist && a.id < b.id);
    });
    if (list.size() > l) list.resize(l);
}

namespace {

// Visited set with a pluggable exact backend for filter-accuracy studies.
struct VisitedSet {
    std::optional<BloomFilter> bloom;
    std::vector<uint8_t> exact;
    uint64_t inserted = 0;

    VisitedSet(const SearchParams& p, size_t n) {
        if (p.exact_visited) {
            exact.assign(n, 0);
        } else {
            bloom.emplace(p.bloom_bits, p.bloom_hashes, p.visited_seed);
        }
    }
    void insert(vertex_t id) {
        if (bloom) {
            bloom->insert(id);
        } else {
            exact[id] = 1;
        }
        inserted++;
    }
    bool contains(vertex_t id) const {
        return bloom ? bloom->maybe_contains(id) : exact[id] != 0;
    }
};

float sanitized(float dist) {
    return std::isnan(dist) ? std::numeric_limits<float>::infinity() : dist;
}

}  // namespace

SearchResult search(const NeighborSource& g, const PQModel& model, const PQCodes& codes,
                    const VectorDataset& base, std::span<const float> q,
                    const SearchParams& params, QueryTrace* trace) {
    params.validate();
    require(g.n() >= 1, "search: empty graph");
    require(g.n() == codes.n && g.n() == base.n, "search: graph/codes/dataset size mismatch");
    require(codes.m == model.m, "search: codes do not match the PQ model");
    require(params.k <= g.n(), "search: k exceeds dataset size");

    SearchResult res;
    auto& ctr = res.counters;

    DistanceTable adt = build_adt(model, q);
    if (trace) trace->events.push_back({TraceOp::adt_build, 0, 0});

    const uint32_t l_cap = params.L;
    uint32_t t = std::min(params.initial_t(), l_cap);

    std::vector<Candidate> list;
    list.reserve(l_cap + g.r() + 1);
    VisitedSet visited(params, g.n());
    std::unordered_map<vertex_t, float> exact_cache;
    std::vector<vertex_t> scratch;

    auto rerank = [&](Candidate& c) {
        auto it = exact_cache.find(c.id);
        if (it != exact_cache.end()) {
            c.reranked = it->second;
            return;
        }
        float dist = sanitized(exact_distance(q, base.row(c.id), base.metric));
        ctr.exact_distance_count++;
        if (trace) trace->events.push_back({TraceOp::rerank, c.id, 0});
        exact_cache.emplace(c.id, dist);
        c.reranked = dist;
    };

    const vertex_t entry = g.entry();
    visited.insert(entry);
    list.push_back(Candidate{.dist = pq_distance_fast(adt, codes.row(entry).data()), .id = entry});
    ctr.pq_distance_count++;

    std::vector<vertex_t> prev_topk;
    uint32_t stable_iters = 0;

    while (t <= l_cap) {
        size_t pick = list.size();
        for (size_t i = 0; i < list.size(); i++) {
            if (!list[i].evaluated) {
                pick = i;
                break;
            }
        }
        if (pick == list.size()) break;  // everything evaluated

        list[pick].evaluated = true;
        const vertex_t v = list[pick].id;
        ctr.hops++;

        uint32_t fetched = 0;
        const size_t hop_event = trace ? trace->events.size() : 0;
        if (trace) trace->events.push_back({TraceOp::hop, v, 0});
        const auto& nbrs = g.neighbors(v, scratch);
        for (vertex_t nb : nbrs) {
            if (visited.contains(nb)) continue;
            visited.insert(nb);
            float dist = pq_distance_fast(adt, codes.row(nb).data());
            ctr.pq_distance_count++;
            fetched++;
            if (trace) trace->events.push_back({TraceOp::neighbor_fetch, nb, 0});
            list.push_back(Candidate{.dist = dist, .id = nb});
        }
        if (trace) {
            trace->events[hop_event].count = fetched;
            trace->events.push_back(
                {TraceOp::sort, 0, static_cast<uint32_t>(std::min<size_t>(list.size(), l_cap))});
        }
        sort_and_truncate(list, l_cap);

        const uint32_t t_eff = static_cast<uint32_t>(std::min<size_t>(t, list.size()));
        bool top_done = true;
        for (uint32_t i = 0; i < t_eff; i++) {
            if (!list[i].evaluated) {
                top_done = false;
                break;
            }
        }
        if (!top_done) continue;

        if (params.et_enabled) {
            for (uint32_t i = 0; i < t_eff; i++) rerank(list[i]);
            if (list.size() >= params.k) {
                // Top-k by reranked distance among the top-T candidates.
                std::vector<std::pair<float, vertex_t>> ranked;
                ranked.reserve(t_eff);
                for (uint32_t i = 0; i < t_eff; i++)
                    ranked.emplace_back(sanitized(list[i].reranked), list[i].id);
                std::sort(ranked.begin(), ranked.end());
                std::vector<vertex_t> cur;
                for (uint32_t i = 0; i < params.k && i < ranked.size(); i++)
                    cur.push_back(ranked[i].second);
                std::sort(cur.begin(), cur.end());
                if (cur == prev_topk) {
                    stable_iters++;
                } else {
                    stable_iters = 0;
                }
                prev_topk = std::move(cur);
                if (stable_iters >= params.r) {
                    ctr.terminated_early = true;
                    break;
                }
            }
        }
        t += params.T_step;
    }

    ctr.final_T = t;
    ctr.vertices_visited = visited.inserted;

    require(list.size() >= params.k, "search: fewer than k reachable candidates");

    if (!params.rerank_enabled) {
        for (uint32_t i = 0; i < params.k; i++) {
            res.ids.push_back(list[i].id);
            res.dists.push_back(list[i].dist);
        }
        return res;
    }

    // Rerank every candidate within beta of the T-th best PQ distance; the
    // returned top-k must always be reranked, so the first k are included.
    const size_t t_thr = std::min<size_t>(t, list.size());
    const float tau = list[t_thr - 1].dist;
    const float widened = tau >= 0.f ? tau * params.beta : tau / params.beta;
    for (auto& c : list) {
        if (c.dist <= widened) rerank(c);
    }
    for (size_t i = 0; i < std::min<size_t>(params.k, list.size()); i++) rerank(list[i]);

    std::vector<std::pair<float, vertex_t>> ranked;
    for (const auto& c : list) {
        if (c.has_rerank()) ranked.emplace_back(sanitized(c.reranked), c.id);
    }
    std::sort(ranked.begin(), ranked.end());
    for (uint32_t i = 0; i < params.k; i++) {
        res.ids.push_back(ranked[i].second);
        res.dists.push_back(ranked[i].first);
    }
    return res;
}

std::vector<std::vector<vertex_t>> BatchResult::id_lists() const {
    std::vector<std::vector<vertex_t>> out;
    out.reserve(results.size());
    for (const auto& r : results) out.push_back(r.ids);
    return out;
}

SearchCounters BatchResult::totals() const {
    SearchCounters t;
    for (const auto& r : results) {
        t.pq_distance_count += r.counters.pq_distance_count;
        t.exact_distance_count += r.counters.exact_distance_count;
        t.hops += r.counters.hops;
        t.vertices_visited += r.counters.vertices_visited;
    }
    return t;
}

BatchResult batch_search(const NeighborSource& g, const PQModel& model, const PQCodes& codes,
                         const VectorDataset& base, const VectorDataset& queries,
                         const SearchParams& params, int parallelism, AccessTrace* trace) {
    require(queries.n >= 1, "batch_search: need at least one query");
    BatchResult batch;
    batch.results.resize(queries.n);
    if (trace) {
        trace->queries.assign(queries.n, {});
        trace->exact_traversal = false;
        trace->dim = static_cast<uint32_t>(base.d);
        trace->m = model.m;
    }

    auto t0 = std::chrono::steady_clock::now();
#ifdef _OPENMP
    int nthreads = parallelism > 0 ? parallelism : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 1) num_threads(nthreads)
#endif
    for (int64_t i = 0; i < static_cast<int64_t>(queries.n); i++) {
        QueryTrace* qt = trace ? &trace->queries[i] : nullptr;
        batch.results[i] = search(g, model, codes, base, queries.row(i), params, qt);
    }
    auto t1 = std::chrono::steady_clock::now();
    batch.wall_seconds = std::chrono::duration<double>(t1 - t0).count();
    batch.qps = batch.wall_seconds > 0 ? queries.n / batch.wall_seconds : 0.0;
    batch.mean_latency_ms = batch.wall_seconds * 1000.0 / queries.n;
    return batch;
}

SearchResult exact_best_first_search(const GraphIndex& g, const VectorDataset& base,
                                     std::span<const float> q, uint32_t k, uint32_t l,
                                     QueryTrace* trace) {
    require(k >= 1 && k <= l, "exact search: need 1 <= k <= L");
    require(g.n == base.n, "exact search: graph/dataset size mismatch");
    require(k <= g.n, "exact search: k exceeds dataset size");

    SearchResult res;
    std::vector<Candidate> list;
    std::vector<uint8_t> visited(g.n, 0);

    visited[g.entry] = 1;
    list.push_back(Candidate{.dist = exact_distance(q, base.row(g.entry), base.metric), .id = g.entry});
    res.counters.exact_distance_count++;
    res.counters.vertices_visited++;

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
        const vertex_t v = list[pick].id;
        res.counters.hops++;

        uint32_t fetched = 0;
        const size_t hop_event = trace ? trace->events.size() : 0;
        if (trace) trace->events.push_back({TraceOp::hop, v, 0});
        for (vertex_t nb : g.adj[v]) {
            if (visited[nb]) continue;
            visited[nb] = 1;
            res.counters.vertices_visited++;
            float dist = exact_distance(q, base.row(nb), base.metric);
            res.counters.exact_distance_count++;
            fetched++;
            if (trace) trace->events.push_back({TraceOp::neighbor_fetch, nb, 0});
            list.push_back(Candidate{.dist = dist, .id = nb});
        }
        if (trace) {
            trace->events[hop_event].count = fetched;
            trace->events.push_back(
                {TraceOp::sort, 0, static_cast<uint32_t>(std::min<size_t>(list.size(), l))});
        }
        sort_and_truncate(list, l);
    }

    require(list.size() >= k, "exact search: fewer than k reachable candidates");
    for (uint32_t i = 0; i < k; i++) {
        res.ids.push_back(list[i].id);
        res.dists.push_back(list[i].dist);
    }
    res.counters.final_T = l;
    return res;
}

BatchResult exact_best_first_batch(const GraphIndex& g, const VectorDataset& base,
                                   const VectorDataset& queries, uint32_t k, uint32_t l,
                                   AccessTrace* trace) {
    BatchResult batch;
    batch.results.resize(queries.n);
    if (trace) {
        trace->queries.assign(queries.n, {});
        trace->exact_traversal = true;
        trace->dim = static_cast<uint32_t>(base.d);
        trace->m = 0;
    }
    auto t0 = std::chrono::steady_clock::now();
#pragma omp parallel for schedule(dynamic, 1)
    for (int64_t i = 0; i < static_cast<int64_t>(queries.n); i++) {
        QueryTrace* qt = trace ? &trace->queries[i] : nullptr;
        batch.results[i] = exact_best_first_search(g, base, queries.row(i), k, l, qt);
    }
    auto t1 = std::chrono::steady_clock::now();
    batch.wall_seconds = std::chrono::duration<double>(t1 - t0).count();
    batch.qps = batch.wall_seconds > 0 ? queries.n / batch.wall_seconds : 0.0;
    batch.mean_latency_ms = batch.wall_seconds * 1000.0 / queries.n;
    return batch;
}

}  // namespace proxima
