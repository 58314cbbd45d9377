#pragma once

#include <string>
#include <vector>

#include "proxima/common.hpp"

namespace proxima {

// Replayable access trace emitted by the search layer and consumed by the
// simulator. A hop event is the index-record fetch for the evaluated vertex;
// it is followed by one neighbor_fetch event per previously unvisited
// neighbor (PQ code fetch, or raw vector fetch for exact traversals).
enum class TraceOp : uint8_t {
    adt_build = 0,
    hop = 1,
    neighbor_fetch = 2,
    rerank = 3,
    sort = 4,
};

struct TraceEvent {
    TraceOp op;
    vertex_t vertex = 0;  // hop / neighbor_fetch / rerank target
    uint32_t count = 0;   // hop: number of neighbor fetches; sort: list length
};

struct QueryTrace {
    std::vector<TraceEvent> events;
};

struct AccessTrace {
    // When true the traversal fetched raw vectors instead of PQ codes for
    // every distance (HNSW-style baseline).
    bool exact_traversal = false;
    uint32_t dim = 0;
    uint32_t m = 0;  // PQ code length in bytes (0 for exact traversals)
    std::vector<QueryTrace> queries;

    size_t total_events() const {
        size_t t = 0;
        for (const auto& q : queries) t += q.events.size();
        return t;
    }
};

void save_trace(const std::string& path, const AccessTrace& trace);
AccessTrace load_trace(const std::string& path);

}  // namespace proxima
