#include "proxima/mapping.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "proxima/simulator.hpp"

namespace proxima {

uint64_t VisitTrace::total() const {
    uint64_t t = 0;
    for (auto c : counts) t += c;
    return t;
}

VisitTrace collect_trace(const GraphIndex& g, const PQModel& model, const PQCodes& codes,
                         const VectorDataset& base, size_t sample_count,
                         const SearchParams& params, uint64_t seed) {
    require(sample_count >= 1, "collect_trace: need sample_count >= 1");
    VisitTrace trace;
    trace.counts.assign(g.n, 0);

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<size_t> uni(0, g.n - 1);
    std::vector<size_t> samples(sample_count);
    for (auto& s : samples) s = uni(rng);

    NeighborSource src(g);
    QueryTrace qt;
#pragma omp parallel for schedule(dynamic, 4) firstprivate(qt)
    for (int64_t i = 0; i < static_cast<int64_t>(samples.size()); i++) {
        qt.events.clear();
        search(src, model, codes, base, base.row(samples[i]), params, &qt);
        for (const auto& ev : qt.events) {
            if (ev.op == TraceOp::neighbor_fetch) {
#pragma omp atomic
                trace.counts[ev.vertex]++;
            }
        }
#pragma omp atomic
        trace.counts[g.entry]++;  // the entry point is visited by every search
    }
    return trace;
}

std::pair<GraphIndex, std::vector<vertex_t>> reorder_graph(const GraphIndex& g,
                                                           const VisitTrace& trace) {
    require(trace.counts.size() == g.n, "reorder_graph: trace does not cover the graph");

    std::vector<vertex_t> by_heat(g.n);
    std::iota(by_heat.begin(), by_heat.end(), 0);
    std::sort(by_heat.begin(), by_heat.end(), [&](vertex_t a, vertex_t b) {
        if (trace.counts[a] != trace.counts[b]) return trace.counts[a] > trace.counts[b];
        return a < b;
    });

    std::vector<vertex_t> perm(g.n);  // old -> new
    for (size_t new_id = 0; new_id < g.n; new_id++) perm[by_heat[new_id]] = static_cast<vertex_t>(new_id);

    GraphIndex out;
    out.n = g.n;
    out.r = g.r;
    out.entry = perm[g.entry];
    out.adj.resize(g.n);
    for (size_t old_id = 0; old_id < g.n; old_id++) {
        auto& row = out.adj[perm[old_id]];
        row.reserve(g.adj[old_id].size());
        for (vertex_t nb : g.adj[old_id]) row.push_back(perm[nb]);
    }
    return {std::move(out), std::move(perm)};
}

size_t select_hot_nodes(const VisitTrace& trace, double p) {
    require(p >= 0.0 && p <= 1.0, "select_hot_nodes: p must be in [0,1]");
    return static_cast<size_t>(std::ceil(p * static_cast<double>(trace.counts.size())));
}

AccessTrace remap_trace(const AccessTrace& trace, const std::vector<vertex_t>& perm) {
    AccessTrace out = trace;
    for (auto& q : out.queries) {
        for (auto& ev : q.events) {
            if (ev.op == TraceOp::hop || ev.op == TraceOp::neighbor_fetch ||
                ev.op == TraceOp::rerank) {
                require(ev.vertex < perm.size(), "remap_trace: vertex outside permutation");
                ev.vertex = perm[ev.vertex];
            }
        }
    }
    return out;
}

VectorDataset permute_dataset(const VectorDataset& ds, const std::vector<vertex_t>& perm) {
    require(perm.size() == ds.n, "permute_dataset: permutation size mismatch");
    VectorDataset out;
    out.n = ds.n;
    out.d = ds.d;
    out.metric = ds.metric;
    out.data.resize(ds.data.size());
    for (size_t i = 0; i < ds.n; i++)
        std::copy_n(ds.data.data() + i * ds.d, ds.d, out.data.data() + perm[i] * ds.d);
    return out;
}

PQCodes permute_codes(const PQCodes& codes, const std::vector<vertex_t>& perm) {
    require(perm.size() == codes.n, "permute_codes: permutation size mismatch");
    PQCodes out;
    out.n = codes.n;
    out.m = codes.m;
    out.codes.resize(codes.codes.size());
    for (size_t i = 0; i < codes.n; i++)
        std::copy_n(codes.codes.data() + i * codes.m, codes.m,
                    out.codes.data() + static_cast<size_t>(perm[i]) * codes.m);
    return out;
}

double top_fraction_mass(const VisitTrace& trace, size_t count) {
    std::vector<uint64_t> sorted = trace.counts;
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    uint64_t total = trace.total();
    if (total == 0) return 0.0;
    uint64_t top = 0;
    for (size_t i = 0; i < std::min(count, sorted.size()); i++) top += sorted[i];
    return static_cast<double>(top) / static_cast<double>(total);
}

uint64_t LayoutPlan::used_bits() const {
    uint64_t bits = static_cast<uint64_t>(n) * (record_bits[0] + record_bits[2]);
    bits += static_cast<uint64_t>(hot_count) * record_bits[1];
    return bits;
}

LayoutPlan plan_layout(size_t n, uint32_t r, uint32_t d, uint32_t b_index, size_t hot_count,
                       const SimConfig& cfg) {
    require(n >= 1, "plan_layout: empty graph");
    require(hot_count <= n, "plan_layout: hot_count exceeds N");
    LayoutPlan plan;
    plan.n = n;
    plan.r = r;
    plan.d = d;
    plan.b_index = b_index;
    plan.b_pq = cfg.b_pq;
    plan.b_raw = cfg.b_raw;
    plan.hot_count = hot_count;
    plan.cores_total = cfg.total_cores();
    plan.cores_per_tile = cfg.cores_per_tile;
    plan.n_bl = cfg.n_bl;
    plan.pages_per_core = cfg.pages_per_core();
    plan.pages_per_block = cfg.pages_per_block();
    plan.perm.resize(n);
    std::iota(plan.perm.begin(), plan.perm.end(), 0);

    plan.record_bits[size_t(Region::regular)] = static_cast<uint64_t>(r) * b_index + cfg.b_pq;
    plan.record_bits[size_t(Region::hot)] =
        static_cast<uint64_t>(r) * (b_index + cfg.b_pq) + cfg.b_pq;
    plan.record_bits[size_t(Region::raw)] = static_cast<uint64_t>(cfg.b_raw) * d;

    for (int reg = 0; reg < 3; reg++) {
        require(plan.record_bits[reg] <= cfg.n_bl, "plan_layout: record wider than a page");
        plan.frames_per_page[reg] = static_cast<uint32_t>(cfg.n_bl / plan.record_bits[reg]);
    }

    // Raw vectors get dedicated cores at the tail, enough to hold N frames.
    const uint64_t raw_slots_per_core =
        plan.pages_per_core * plan.frames_per_page[size_t(Region::raw)];
    plan.raw_cores = static_cast<uint32_t>((n + raw_slots_per_core - 1) / raw_slots_per_core);
    require(plan.raw_cores < plan.cores_total, "plan_layout: raw data alone exceeds capacity");
    plan.pq_cores = plan.cores_total - plan.raw_cores;

    auto pages_needed = [&](size_t items, uint32_t cores, Region reg) -> uint64_t {
        if (items == 0) return 0;
        uint64_t per_core = (items + cores - 1) / cores;
        uint32_t fpp = plan.frames_per_page[size_t(reg)];
        return (per_core + fpp - 1) / fpp;
    };
    const uint64_t hot_pages = pages_needed(hot_count, plan.pq_cores, Region::hot);
    const uint64_t regular_pages = pages_needed(n, plan.pq_cores, Region::regular);
    plan.region_base_page[size_t(Region::hot)] = 0;
    plan.region_base_page[size_t(Region::regular)] = hot_pages;
    plan.region_base_page[size_t(Region::raw)] = 0;

    require(hot_pages + regular_pages <= plan.pages_per_core,
            "plan_layout: capacity exceeded on PQ/index cores");
    return plan;
}

PhysicalAddress translate(const LayoutPlan& plan, vertex_t id, Region region) {
    require(id < plan.n, "translate: id out of range");
    if (region == Region::hot)
        require(plan.is_hot(id), "translate: id not allocated in the hot region");

    const uint32_t cores = region == Region::raw ? plan.raw_cores : plan.pq_cores;
    const uint32_t core_base = region == Region::raw ? plan.pq_cores : 0;
    const uint32_t fpp = plan.frames_per_page[size_t(region)];

    PhysicalAddress addr;
    addr.core = core_base + id % cores;
    const uint64_t slot = id / cores;
    addr.abs_page = plan.region_base_page[size_t(region)] + slot / fpp;
    addr.frame = static_cast<uint32_t>(slot % fpp);
    addr.tile = addr.core / plan.cores_per_tile;
    addr.block = static_cast<uint32_t>(addr.abs_page / plan.pages_per_block);
    addr.page_in_block = static_cast<uint32_t>(addr.abs_page % plan.pages_per_block);
    return addr;
}

vertex_t translate_back(const LayoutPlan& plan, const PhysicalAddress& addr, Region region) {
    const uint32_t cores = region == Region::raw ? plan.raw_cores : plan.pq_cores;
    const uint32_t core_base = region == Region::raw ? plan.pq_cores : 0;
    const uint32_t fpp = plan.frames_per_page[size_t(region)];
    require(addr.core >= core_base && addr.core < core_base + cores,
            "translate_back: core outside region");
    const uint64_t page_off = addr.abs_page - plan.region_base_page[size_t(region)];
    const uint64_t slot = page_off * fpp + addr.frame;
    const uint64_t id = slot * cores + (addr.core - core_base);
    require(id < plan.n, "translate_back: address beyond allocated range");
    if (region == Region::hot)
        require(id < plan.hot_count, "translate_back: address beyond hot region");
    return static_cast<vertex_t>(id);
}

namespace {
constexpr uint32_t kLayoutMagic = 0x594c5850;  // "PXLY"
constexpr uint32_t kVersion = 1;
}  // namespace

void save_layout(const std::string& path, const LayoutPlan& plan) {
    auto out = open_out(path);
    write_pod(out, kLayoutMagic);
    write_pod(out, kVersion);
    write_pod(out, static_cast<uint64_t>(plan.n));
    write_pod(out, plan.r);
    write_pod(out, plan.d);
    write_pod(out, plan.b_index);
    write_pod(out, plan.b_pq);
    write_pod(out, plan.b_raw);
    write_pod(out, static_cast<uint64_t>(plan.hot_count));
    write_pod(out, plan.cores_total);
    write_pod(out, plan.cores_per_tile);
    write_pod(out, plan.pq_cores);
    write_pod(out, plan.raw_cores);
    write_pod(out, plan.n_bl);
    write_pod(out, plan.pages_per_core);
    write_pod(out, plan.pages_per_block);
    for (int i = 0; i < 3; i++) write_pod(out, plan.record_bits[i]);
    for (int i = 0; i < 3; i++) write_pod(out, plan.frames_per_page[i]);
    for (int i = 0; i < 3; i++) write_pod(out, plan.region_base_page[i]);
    write_vec(out, plan.perm);
}

LayoutPlan load_layout(const std::string& path) {
    auto in = open_in(path);
    require(read_pod<uint32_t>(in) == kLayoutMagic, "not a layout file: " + path);
    require(read_pod<uint32_t>(in) == kVersion, "unsupported layout version: " + path);
    LayoutPlan plan;
    plan.n = read_pod<uint64_t>(in);
    plan.r = read_pod<uint32_t>(in);
    plan.d = read_pod<uint32_t>(in);
    plan.b_index = read_pod<uint32_t>(in);
    plan.b_pq = read_pod<uint32_t>(in);
    plan.b_raw = read_pod<uint32_t>(in);
    plan.hot_count = read_pod<uint64_t>(in);
    plan.cores_total = read_pod<uint32_t>(in);
    plan.cores_per_tile = read_pod<uint32_t>(in);
    plan.pq_cores = read_pod<uint32_t>(in);
    plan.raw_cores = read_pod<uint32_t>(in);
    plan.n_bl = read_pod<uint64_t>(in);
    plan.pages_per_core = read_pod<uint64_t>(in);
    plan.pages_per_block = read_pod<uint64_t>(in);
    for (int i = 0; i < 3; i++) plan.record_bits[i] = read_pod<uint64_t>(in);
    for (int i = 0; i < 3; i++) plan.frames_per_page[i] = read_pod<uint32_t>(in);
    for (int i = 0; i < 3; i++) plan.region_base_page[i] = read_pod<uint64_t>(in);
    plan.perm = read_vec<vertex_t>(in);
    return plan;
}

}  // namespace proxima
