#pragma once

#include <map>
#include <string>
#include <vector>

#include "proxima/mapping.hpp"
#include "proxima/trace.hpp"

namespace proxima {

// Parametric model of the near-storage accelerator. Defaults reproduce the
// reference configuration: 16 tiles x 32 cores, 96-layer/4-SSL/64-block
// cores with 36864 bitlines (432 Gb total), 128 B read granularity, < 300 ns
// page reads, a 1 GHz engine with 256 search queues and one shared
// 256-point bitonic sorter.
struct SimConfig {
    uint32_t n_tiles = 16;
    uint32_t cores_per_tile = 32;
    uint32_t layers = 96;
    uint32_t ssl = 4;
    uint32_t blocks_per_core = 64;
    uint64_t n_bl = 36864;
    uint32_t read_granularity_bytes = 128;
    double read_latency_ns = 300.0;
    double core_hop_ns = 2.0;
    double tile_hop_ns = 5.0;
    double clock_ghz = 1.0;
    uint32_t n_queues = 256;
    uint32_t sorter_width = 256;
    uint32_t adt_cycles_angular_per_dim = 8;
    uint32_t adt_cycles_euclidean_per_dim = 24;
    uint32_t b_pq = 256;
    uint32_t b_raw = 32;

    // Per-event dynamic energy (pJ) and engine static power (mW).
    double e_nand_read_pj = 4442.0;
    double e_core_bus_pj = 21.4;
    double e_tile_bus_pj = 198.6;
    double e_mac_pj = 0.6;
    double e_sort_pj = 7.8;
    double e_lookup_pj = 0.05;
    double static_power_mw = 2141.752;

    uint32_t total_cores() const { return n_tiles * cores_per_tile; }
    uint64_t pages_per_block() const { return static_cast<uint64_t>(layers) * ssl; }
    uint64_t pages_per_core() const { return pages_per_block() * blocks_per_core; }
    uint64_t total_capacity_bits() const { return total_cores() * pages_per_core() * n_bl; }
    double cycle_ns() const { return 1.0 / clock_ghz; }
    // Fixed H-tree depth: log2 hops at each level.
    double bus_latency_ns() const;
    double sort_latency_ns() const;
    uint32_t adt_cycles(Metric metric, uint32_t dim) const;

    void validate() const;
};

void save_sim_config(const std::string& path, const SimConfig& cfg);
SimConfig load_sim_config(const std::string& path);

struct TrafficBytes {
    double raw = 0;
    double pq = 0;
    double index = 0;
    double total() const { return raw + pq + index; }
};

struct SimReport {
    double makespan_ns = 0;
    double qps = 0;
    double mean_latency_ns = 0;
    double p50_latency_ns = 0;
    double p99_latency_ns = 0;
    double energy_per_query_nj = 0;
    double core_utilization_pct = 0;
    // Per-query service time split; components sum to the total service time.
    std::map<std::string, double> latency_breakdown_ns;
    TrafficBytes traffic;
    uint64_t nand_reads = 0;
    uint64_t sorts = 0;
    uint64_t queries = 0;

    std::string to_json() const;
    static std::string csv_header();
    std::string csv_row(const std::string& label) const;
};

SimReport simulate(const AccessTrace& trace, const LayoutPlan& plan, const SimConfig& cfg);

// Pure byte accounting: index fetch = R * b_index bits, PQ fetch = b_pq bits,
// raw fetch = b_raw * D bits. Hot hops fetch the combined record instead.
TrafficBytes traffic_breakdown(const AccessTrace& trace, const LayoutPlan& plan);

// Bit-error injection (each stored bit flips independently with rate rber).
struct ErrorModel {
    double rber = 0.0;
    uint64_t seed = 1;
    bool pq = true;
    bool index = true;
    bool raw = true;
};

void corrupt_bits(void* data, size_t n_bits, double rber, uint64_t seed);
// Corrupted code bytes stay valid centroid indices when C = 256; for
// narrower codebooks pass clamp_c to wrap flipped bytes back into range.
PQCodes inject_errors(const PQCodes& codes, const ErrorModel& model, uint32_t clamp_c = 0);
GapEncodedGraph inject_errors(const GapEncodedGraph& graph, const ErrorModel& model);
VectorDataset inject_errors(const VectorDataset& ds, const ErrorModel& model);

std::vector<std::pair<double, SimReport>> hot_node_sweep(const AccessTrace& trace, size_t n,
                                                         uint32_t r, uint32_t d, uint32_t b_index,
                                                         const std::vector<double>& percentages,
                                                         const SimConfig& cfg);

}  // namespace proxima
