#pragma once

#include <string>
#include <vector>

#include "proxima/search.hpp"

namespace proxima {

struct SimConfig;  // simulator.hpp

// Per-vertex visit counts accumulated from sampled-query searches.
struct VisitTrace {
    std::vector<uint64_t> counts;

    uint64_t total() const;
};

VisitTrace collect_trace(const GraphIndex& g, const PQModel& model, const PQCodes& codes,
                         const VectorDataset& base, size_t sample_count,
                         const SearchParams& params, uint64_t seed);

// Relabels vertices by descending visit count (ties by old id) and rewrites
// the adjacency through the permutation. Returns the new graph and the
// old-id -> new-id permutation.
std::pair<GraphIndex, std::vector<vertex_t>> reorder_graph(const GraphIndex& g,
                                                           const VisitTrace& trace);

// After reordering the hot set is the id prefix [0, count); returns count.
size_t select_hot_nodes(const VisitTrace& trace, double p);

// Rewrites every trace vertex through the old->new permutation, expressing a
// recorded workload in the reordered id space.
AccessTrace remap_trace(const AccessTrace& trace, const std::vector<vertex_t>& perm);

VectorDataset permute_dataset(const VectorDataset& ds, const std::vector<vertex_t>& perm);
PQCodes permute_codes(const PQCodes& codes, const std::vector<vertex_t>& perm);

// Fraction of total visit mass carried by the `count` most-visited vertices.
double top_fraction_mass(const VisitTrace& trace, size_t count);

enum class Region : uint32_t { regular = 0, hot = 1, raw = 2 };

struct PhysicalAddress {
    uint32_t tile = 0;
    uint32_t core = 0;
    uint32_t block = 0;
    uint32_t page_in_block = 0;
    uint64_t abs_page = 0;  // page index within the core
    uint32_t frame = 0;
};

// Physical layout: vertices are striped round-robin across cores so that
// consecutive ids land on consecutive cores. Raw vectors live in dedicated
// cores placed after the PQ/index cores; per PQ/index core the hot frames
// occupy the lowest pages, regular frames follow.
struct LayoutPlan {
    size_t n = 0;
    uint32_t r = 0;
    uint32_t d = 0;
    uint32_t b_index = 0;
    uint32_t b_pq = 256;
    uint32_t b_raw = 32;
    size_t hot_count = 0;

    uint32_t cores_total = 0;
    uint32_t cores_per_tile = 0;
    uint32_t pq_cores = 0;
    uint32_t raw_cores = 0;
    uint64_t n_bl = 0;
    uint64_t pages_per_core = 0;
    uint64_t pages_per_block = 0;

    uint64_t record_bits[3] = {0, 0, 0};     // regular, hot, raw
    uint32_t frames_per_page[3] = {0, 0, 0};
    uint64_t region_base_page[3] = {0, 0, 0};

    std::vector<vertex_t> perm;  // old id -> new id (identity when unused)

    bool is_hot(vertex_t new_id) const { return static_cast<size_t>(new_id) < hot_count; }
    uint64_t used_bits() const;
};

LayoutPlan plan_layout(size_t n, uint32_t r, uint32_t d, uint32_t b_index, size_t hot_count,
                       const SimConfig& cfg);

PhysicalAddress translate(const LayoutPlan& plan, vertex_t id, Region region);
vertex_t translate_back(const LayoutPlan& plan, const PhysicalAddress& addr, Region region);

void save_layout(const std::string& path, const LayoutPlan& plan);
LayoutPlan load_layout(const std::string& path);

}  // namespace proxima
