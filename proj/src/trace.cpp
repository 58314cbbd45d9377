#include "proxima/trace.hpp"

namespace proxima {

namespace {
constexpr uint32_t kTraceMagic = 0x52545850;  // "PXTR"
constexpr uint32_t kVersion = 1;
}  // namespace

void save_trace(const std::string& path, const AccessTrace& trace) {
    auto out = open_out(path);
    write_pod(out, kTraceMagic);
    write_pod(out, kVersion);
    write_pod(out, static_cast<uint32_t>(trace.exact_traversal ? 1 : 0));
    write_pod(out, trace.dim);
    write_pod(out, trace.m);
    write_pod(out, static_cast<uint64_t>(trace.queries.size()));
    for (const auto& q : trace.queries) {
        write_pod(out, static_cast<uint64_t>(q.events.size()));
        for (const auto& ev : q.events) {
            write_pod(out, static_cast<uint8_t>(ev.op));
            write_pod(out, ev.vertex);
            write_pod(out, ev.count);
        }
    }
    require(static_cast<bool>(out), "write failed: " + path);
}

AccessTrace load_trace(const std::string& path) {
    auto in = open_in(path);
    require(read_pod<uint32_t>(in) == kTraceMagic, "not a trace file: " + path);
    require(read_pod<uint32_t>(in) == kVersion, "unsupported trace version: " + path);
    AccessTrace trace;
    trace.exact_traversal = read_pod<uint32_t>(in) != 0;
    trace.dim = read_pod<uint32_t>(in);
    trace.m = read_pod<uint32_t>(in);
    uint64_t nq = read_pod<uint64_t>(in);
    trace.queries.resize(nq);
    for (auto& q : trace.queries) {
        uint64_t ne = read_pod<uint64_t>(in);
        q.events.resize(ne);
        for (auto& ev : q.events) {
            ev.op = static_cast<TraceOp>(read_pod<uint8_t>(in));
            ev.vertex = read_pod<vertex_t>(in);
            ev.count = read_pod<uint32_t>(in);
        }
    }
    return trace;
}

}  // namespace proxima
