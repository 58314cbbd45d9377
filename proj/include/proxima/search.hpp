#pragma once

#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "proxima/graph.hpp"
#include "proxima/pq.hpp"
#include "proxima/trace.hpp"

namespace proxima {

// Double-hashed Bloom filter for the per-query visited set.
class BloomFilter {
  public:
    BloomFilter(uint32_t bits, uint32_t hashes, uint64_t seed = 0x5eed);

    void insert(vertex_t id);
    bool maybe_contains(vertex_t id) const;
    void clear();
    uint32_t inserted() const { return inserted_; }
    // (1 - e^{-hn/m})^h with the standard negative exponent.
    double expected_fp_rate() const;

  private:
    uint32_t m_;
    uint32_t h_;
    uint64_t seed_;
    uint32_t inserted_ = 0;
    std::vector<uint64_t> words_;
};

struct SearchParams {
    uint32_t k = 10;
    uint32_t L = 100;        // candidate list capacity
    uint32_t T_init = 0;     // 0 means "start at k"
    uint32_t T_step = 4;
    uint32_t r = 3;          // stable iterations before early termination
    float beta = 1.0f;       // PQ error ratio for the rerank threshold
    bool et_enabled = true;
    bool rerank_enabled = true;
    bool exact_visited = false;  // replace the Bloom filter with an exact set
    uint32_t bloom_bits = 98304;  // 12 kB
    uint32_t bloom_hashes = 8;
    uint64_t visited_seed = 0x5eed;

    uint32_t initial_t() const { return T_init == 0 ? k : T_init; }
    void validate() const;
};

struct Candidate {
    float dist;  // PQ distance
    vertex_t id;
    bool evaluated = false;
    float reranked = std::numeric_limits<float>::quiet_NaN();

    bool has_rerank() const { return reranked == reranked; }
};

// Stable ascending sort by (distance, id), then truncate to capacity L.
void sort_and_truncate(std::vector<Candidate>& list, size_t l);

struct SearchCounters {
    uint64_t pq_distance_count = 0;
    uint64_t exact_distance_count = 0;
    uint64_t hops = 0;
    uint64_t vertices_visited = 0;
    bool terminated_early = false;
    uint32_t final_T = 0;
};

struct SearchResult {
    std::vector<vertex_t> ids;
    std::vector<float> dists;
    SearchCounters counters;
};

// Adjacency access for search: either a decoded GraphIndex or a (possibly
// corrupted) gap-encoded payload decoded on the fly.
class NeighborSource {
  public:
    explicit NeighborSource(const GraphIndex& g) : graph_(&g) {}
    explicit NeighborSource(const GapEncodedGraph& e) : encoded_(&e) {}

    size_t n() const { return graph_ ? graph_->n : encoded_->n; }
    vertex_t entry() const { return graph_ ? graph_->entry : encoded_->entry; }
    uint32_t r() const { return graph_ ? graph_->r : encoded_->r; }

    const std::vector<vertex_t>& neighbors(vertex_t v, std::vector<vertex_t>& scratch) const {
        if (graph_) return graph_->adj[v];
        encoded_->decode_row_lenient(v, scratch);
        return scratch;
    }

  private:
    const GraphIndex* graph_ = nullptr;
    const GapEncodedGraph* encoded_ = nullptr;
};

SearchResult search(const NeighborSource& g, const PQModel& model, const PQCodes& codes,
                    const VectorDataset& base, std::span<const float> q,
                    const SearchParams& params, QueryTrace* trace = nullptr);

inline SearchResult search(const GraphIndex& g, const PQModel& model, const PQCodes& codes,
                           const VectorDataset& base, std::span<const float> q,
                           const SearchParams& params, QueryTrace* trace = nullptr) {
    return search(NeighborSource(g), model, codes, base, q, params, trace);
}

struct BatchResult {
    std::vector<SearchResult> results;
    double wall_seconds = 0.0;
    double qps = 0.0;
    double mean_latency_ms = 0.0;

    std::vector<std::vector<vertex_t>> id_lists() const;
    SearchCounters totals() const;
};

// Per-query results are independent of the parallelism degree.
BatchResult batch_search(const NeighborSource& g, const PQModel& model, const PQCodes& codes,
                         const VectorDataset& base, const VectorDataset& queries,
                         const SearchParams& params, int parallelism = 0,
                         AccessTrace* trace = nullptr);

inline BatchResult batch_search(const GraphIndex& g, const PQModel& model, const PQCodes& codes,
                                const VectorDataset& base, const VectorDataset& queries,
                                const SearchParams& params, int parallelism = 0,
                                AccessTrace* trace = nullptr) {
    return batch_search(NeighborSource(g), model, codes, base, queries, params, parallelism, trace);
}

// Classic best-first traversal using exact distances for every visited
// neighbor (the all-raw-fetch baseline used for traffic comparisons).
SearchResult exact_best_first_search(const GraphIndex& g, const VectorDataset& base,
                                     std::span<const float> q, uint32_t k, uint32_t l,
                                     QueryTrace* trace = nullptr);

BatchResult exact_best_first_batch(const GraphIndex& g, const VectorDataset& base,
                                   const VectorDataset& queries, uint32_t k, uint32_t l,
                                   AccessTrace* trace = nullptr);

}  // namespace proxima
