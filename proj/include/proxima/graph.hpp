#pragma once

#include <string>
#include <vector>

#include "proxima/dataset.hpp"

namespace proxima {

enum class GraphFormat { native, diskann_mem };

// Degree-bounded proximity graph. Adjacency lists hold unique neighbor ids,
// never the vertex itself.
struct GraphIndex {
    size_t n = 0;
    uint32_t r = 0;  // maximum out-degree
    vertex_t entry = 0;
    std::vector<std::vector<vertex_t>> adj;

    void validate() const;
    size_t edge_count() const;
};

// Bit-packed adjacency: per vertex a degree field, the smallest neighbor id
// stored absolute, then ascending deltas. One global bit width; rows with
// degree < R are zero-padded so every record has the same stride.
struct GapEncodedGraph {
    size_t n = 0;
    uint32_t r = 0;
    vertex_t entry = 0;
    uint32_t bit_width = 1;
    uint32_t degree_bits = 1;
    std::vector<uint64_t> offsets;  // per-vertex bit offset into payload
    std::vector<uint64_t> payload;

    uint64_t record_bits() const {
        return degree_bits + static_cast<uint64_t>(r) * bit_width;
    }
    uint64_t encoded_bits() const { return record_bits() * n; }

    // Exact decode; neighbor sets come back ascending.
    void decode_row(vertex_t v, std::vector<vertex_t>& out) const;
    // Decode tolerating corrupted bits: out-of-range ids and duplicates are
    // dropped instead of rejected.
    void decode_row_lenient(vertex_t v, std::vector<vertex_t>& out) const;
};

struct GraphStats {
    std::vector<size_t> degree_histogram;  // index = degree, 0..R
    uint64_t raw_bits = 0;                 // 32 * N * R by definition
    uint64_t encoded_bits = 0;
    uint32_t bit_width = 0;
    double compression = 0.0;  // 1 - encoded/raw
};

// Greedy-insert builder with alpha pruning; entry point is the dataset
// medoid. Deterministic for a fixed seed. A repair pass guarantees every
// vertex is reachable from the entry point.
GraphIndex build_graph(const VectorDataset& ds, uint32_t r, uint32_t l_build = 150,
                       float alpha = 1.2f, uint64_t seed = 1);

GapEncodedGraph gap_encode(const GraphIndex& g);
GraphIndex gap_decode(const GapEncodedGraph& e);

GraphStats graph_stats(const GraphIndex& g);

void save_graph(const std::string& path, const GraphIndex& g);
void save_graph_encoded(const std::string& path, const GapEncodedGraph& e);
GraphIndex load_graph(const std::string& path, GraphFormat format = GraphFormat::native);
GapEncodedGraph load_graph_encoded(const std::string& path);

// Fraction of vertices reachable from the entry point.
double reachable_fraction(const GraphIndex& g);

// Bit-level payload corruption support for the error model (simulator).
namespace bits {
void set_bits(std::vector<uint64_t>& buf, uint64_t pos, uint32_t width, uint64_t value);
uint64_t get_bits(const std::vector<uint64_t>& buf, uint64_t pos, uint32_t width);
}  // namespace bits

}  // namespace proxima
