#include "proxima/simulator.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <functional>
#include <queue>
#include <random>
#include <sstream>

namespace proxima {

double SimConfig::bus_latency_ns() const {
    auto hops = [](uint32_t fanout) {
        return fanout <= 1 ? 1u : std::bit_width(fanout - 1);
    };
    return hops(cores_per_tile) * core_hop_ns + hops(n_tiles) * tile_hop_ns;
}

double SimConfig::sort_latency_ns() const {
    uint32_t stages = sorter_width <= 1 ? 1u : std::bit_width(sorter_width - 1);
    return 2.0 * stages * cycle_ns();
}

uint32_t SimConfig::adt_cycles(Metric metric, uint32_t dim) const {
    return (metric == Metric::euclidean ? adt_cycles_euclidean_per_dim
                                        : adt_cycles_angular_per_dim) *
           dim;
}

void SimConfig::validate() const {
    require(n_tiles >= 1 && cores_per_tile >= 1 && layers >= 1 && ssl >= 1 &&
                blocks_per_core >= 1 && n_bl >= 1 && n_queues >= 1 && sorter_width >= 2,
            "sim config: all counts must be >= 1");
    require(read_granularity_bytes >= 1 && read_granularity_bytes <= n_bl / 8,
            "sim config: read granularity must be <= N_BL/8 bytes");
    require(read_latency_ns > 0 && clock_ghz > 0, "sim config: latencies must be positive");
}

namespace {

struct ConfigField {
    const char* name;
    std::function<double(const SimConfig&)> get;
    std::function<void(SimConfig&, double)> set;
};

const std::vector<ConfigField>& config_fields() {
#define PX_FIELD(member)                                              \
    ConfigField {                                                     \
        #member, [](const SimConfig& c) { return double(c.member); }, \
            [](SimConfig& c, double v) {                              \
                c.member = static_cast<decltype(c.member)>(v);        \
            }                                                         \
    }
    static const std::vector<ConfigField> fields = {
        PX_FIELD(n_tiles),
        PX_FIELD(cores_per_tile),
        PX_FIELD(layers),
        PX_FIELD(ssl),
        PX_FIELD(blocks_per_core),
        PX_FIELD(n_bl),
        PX_FIELD(read_granularity_bytes),
        PX_FIELD(read_latency_ns),
        PX_FIELD(core_hop_ns),
        PX_FIELD(tile_hop_ns),
        PX_FIELD(clock_ghz),
        PX_FIELD(n_queues),
        PX_FIELD(sorter_width),
        PX_FIELD(adt_cycles_angular_per_dim),
        PX_FIELD(adt_cycles_euclidean_per_dim),
        PX_FIELD(b_pq),
        PX_FIELD(b_raw),
        PX_FIELD(e_nand_read_pj),
        PX_FIELD(e_core_bus_pj),
        PX_FIELD(e_tile_bus_pj),
        PX_FIELD(e_mac_pj),
        PX_FIELD(e_sort_pj),
        PX_FIELD(e_lookup_pj),
        PX_FIELD(static_power_mw),
    };
#undef PX_FIELD
    return fields;
}

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

}  // namespace

void save_sim_config(const std::string& path, const SimConfig& cfg) {
    auto out = open_out(path);
    out << "# accelerator model configuration (key = value)\n";
    for (const auto& f : config_fields()) {
        double v = f.get(cfg);
        if (v == std::floor(v) && std::abs(v) < 1e15)
            out << f.name << " = " << static_cast<long long>(v) << "\n";
        else
            out << f.name << " = " << v << "\n";
    }
}

SimConfig load_sim_config(const std::string& path) {
    auto in = open_in(path);
    SimConfig cfg;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        lineno++;
        std::string s = trim(line);
        if (s.empty() || s[0] == '#') continue;
        auto eq = s.find('=');
        require(eq != std::string::npos,
                path + ":" + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(s.substr(0, eq));
        std::string val = trim(s.substr(eq + 1));
        bool found = false;
        for (const auto& f : config_fields()) {
            if (key == f.name) {
                f.set(cfg, std::stod(val));
                found = true;
                break;
            }
        }
        require(found, path + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
    cfg.validate();
    return cfg;
}

namespace {

struct QueueState {
    std::vector<uint32_t> backlog;
    size_t backlog_pos = 0;
    size_t event_pos = 0;
    uint32_t covered = 0;  // neighbor fetches satisfied by a hot-record read
    double clock = 0;
    double service_start = 0;
};

struct Breakdown {
    double stall = 0, nand = 0, bus = 0, compute = 0, sort = 0;
    double total() const { return stall + nand + bus + compute + sort; }
};

}  // namespace

SimReport simulate(const AccessTrace& trace, const LayoutPlan& plan, const SimConfig& cfg) {
    cfg.validate();
    require(!trace.queries.empty(), "simulate: empty trace");
    require(!(trace.exact_traversal && plan.hot_count > 0),
            "simulate: hot-node layout is undefined for exact traversals");

    const double read_ns = cfg.read_latency_ns;
    const double bus_ns = cfg.bus_latency_ns();
    const double sort_ns = cfg.sort_latency_ns();
    const double cyc = cfg.cycle_ns();
    const uint32_t mac_cycles_per_code = trace.m > 0 ? trace.m : trace.dim;
    // The trace does not carry the metric; ADT setup cost is bounded by the
    // euclidean case and identical across compared configurations.
    const double adt_ns = cfg.adt_cycles(Metric::euclidean, trace.dim) * cyc;

    const uint32_t n_queues = cfg.n_queues;
    std::vector<QueueState> queues(n_queues);
    for (uint32_t q = 0; q < trace.queries.size(); q++)
        queues[q % n_queues].backlog.push_back(q);

    std::vector<double> core_free(plan.cores_total, 0.0);
    std::vector<double> core_busy(plan.cores_total, 0.0);
    double sorter_free = 0.0;
    double pq_module_free = 0.0;

    std::vector<double> query_latency(trace.queries.size(), 0.0);
    Breakdown global;
    uint64_t nand_reads = 0, sorts = 0, mac_cycles = 0, lookups = 0, bus_transfers = 0;

    // Min-heap of (time, seq, queue); seq makes tie order deterministic.
    using Item = std::tuple<double, uint64_t, uint32_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<Item>> ready;
    uint64_t seq = 0;
    for (uint32_t qi = 0; qi < n_queues; qi++) {
        if (!queues[qi].backlog.empty()) ready.emplace(0.0, seq++, qi);
    }

    auto do_fetch = [&](QueueState& qs, const PhysicalAddress& addr) {
        double start = std::max(qs.clock, core_free[addr.core]);
        global.stall += start - qs.clock;
        core_free[addr.core] = start + read_ns;
        core_busy[addr.core] += read_ns;
        global.nand += read_ns;
        global.bus += bus_ns;
        qs.clock = start + read_ns + bus_ns;
        nand_reads++;
        bus_transfers++;
    };
    auto do_compute = [&](QueueState& qs, uint64_t cycles) {
        qs.clock += cycles * cyc;
        global.compute += cycles * cyc;
        mac_cycles += cycles;
    };

    while (!ready.empty()) {
        auto [t, s, qi] = ready.top();
        ready.pop();
        QueueState& qs = queues[qi];
        qs.clock = std::max(qs.clock, t);

        const uint32_t query_id = qs.backlog[qs.backlog_pos];
        const auto& events = trace.queries[query_id].events;
        if (qs.event_pos == 0) qs.service_start = qs.clock;

        if (qs.event_pos < events.size()) {
            const TraceEvent& ev = events[qs.event_pos++];
            switch (ev.op) {
                case TraceOp::adt_build: {
                    double start = std::max(qs.clock, pq_module_free);
                    global.stall += start - qs.clock;
                    pq_module_free = start + adt_ns;
                    global.compute += adt_ns;
                    mac_cycles += static_cast<uint64_t>(adt_ns / cyc);
                    qs.clock = start + adt_ns;
                    break;
                }
                case TraceOp::hop: {
                    require(ev.vertex < plan.n, "simulate: trace vertex outside layout");
                    if (plan.is_hot(ev.vertex)) {
                        do_fetch(qs, translate(plan, ev.vertex, Region::hot));
                        qs.covered = ev.count;
                    } else {
                        do_fetch(qs, translate(plan, ev.vertex, Region::regular));
                        qs.covered = 0;
                    }
                    break;
                }
                case TraceOp::neighbor_fetch: {
                    require(ev.vertex < plan.n, "simulate: trace vertex outside layout");
                    if (qs.covered > 0) {
                        qs.covered--;
                    } else if (trace.exact_traversal) {
                        do_fetch(qs, translate(plan, ev.vertex, Region::raw));
                        do_compute(qs, trace.dim);
                        break;
                    } else {
                        do_fetch(qs, translate(plan, ev.vertex, Region::regular));
                    }
                    do_compute(qs, mac_cycles_per_code);
                    lookups += trace.m;
                    break;
                }
                case TraceOp::rerank: {
                    require(ev.vertex < plan.n, "simulate: trace vertex outside layout");
                    do_fetch(qs, translate(plan, ev.vertex, Region::raw));
                    do_compute(qs, trace.dim);
                    break;
                }
                case TraceOp::sort: {
                    double start = std::max(qs.clock, sorter_free);
                    global.stall += start - qs.clock;
                    sorter_free = start + sort_ns;
                    global.sort += sort_ns;
                    qs.clock = start + sort_ns;
                    sorts++;
                    break;
                }
            }
            ready.emplace(qs.clock, seq++, qi);
            continue;
        }

        // Query finished; start the next one in this queue's backlog.
        query_latency[query_id] = qs.clock - qs.service_start;
        qs.backlog_pos++;
        qs.event_pos = 0;
        qs.covered = 0;
        if (qs.backlog_pos < qs.backlog.size()) ready.emplace(qs.clock, seq++, qi);
    }

    double makespan = 0;
    for (const auto& qs : queues) makespan = std::max(makespan, qs.clock);

    SimReport rep;
    rep.queries = trace.queries.size();
    rep.makespan_ns = makespan;
    rep.qps = makespan > 0 ? rep.queries / (makespan * 1e-9) : 0.0;

    std::vector<double> lat = query_latency;
    std::sort(lat.begin(), lat.end());
    double sum = 0;
    for (double v : lat) sum += v;
    rep.mean_latency_ns = sum / lat.size();
    rep.p50_latency_ns = lat[lat.size() / 2];
    rep.p99_latency_ns = lat[std::min(lat.size() - 1, lat.size() * 99 / 100)];

    double busy_total = 0;
    for (double b : core_busy) busy_total += b;
    rep.core_utilization_pct =
        makespan > 0 ? 100.0 * busy_total / (makespan * plan.cores_total) : 0.0;

    rep.latency_breakdown_ns = {
        {"stall", global.stall}, {"nand", global.nand},   {"bus", global.bus},
        {"compute", global.compute}, {"sort", global.sort},
    };
    rep.nand_reads = nand_reads;
    rep.sorts = sorts;

    double dyn_pj = nand_reads * cfg.e_nand_read_pj +
                    bus_transfers * (cfg.e_core_bus_pj + cfg.e_tile_bus_pj) +
                    mac_cycles * cfg.e_mac_pj + sorts * cfg.e_sort_pj + lookups * cfg.e_lookup_pj;
    double static_pj = cfg.static_power_mw * 1e-3 * makespan;  // mW * ns = 1e-12 J = pJ
    rep.energy_per_query_nj = (dyn_pj + static_pj) * 1e-3 / rep.queries;

    rep.traffic = traffic_breakdown(trace, plan);
    return rep;
}

TrafficBytes traffic_breakdown(const AccessTrace& trace, const LayoutPlan& plan) {
    TrafficBytes tb;
    const double index_bits = static_cast<double>(plan.r) * plan.b_index;
    const double hot_extra_pq_bits = static_cast<double>(plan.r + 1) * plan.b_pq;
    const double raw_bits = static_cast<double>(plan.b_raw) * plan.d;
    for (const auto& q : trace.queries) {
        uint32_t covered = 0;
        for (const auto& ev : q.events) {
            switch (ev.op) {
                case TraceOp::hop:
                    tb.index += index_bits;
                    if (plan.is_hot(ev.vertex)) {
                        tb.pq += hot_extra_pq_bits;
                        covered = ev.count;
                    } else {
                        covered = 0;
                    }
                    break;
                case TraceOp::neighbor_fetch:
                    if (covered > 0) {
                        covered--;
                    } else if (trace.exact_traversal) {
                        tb.raw += raw_bits;
                    } else {
                        tb.pq += plan.b_pq;
                    }
                    break;
                case TraceOp::rerank:
                    tb.raw += raw_bits;
                    break;
                default:
                    break;
            }
        }
    }
    tb.raw /= 8.0;
    tb.pq /= 8.0;
    tb.index /= 8.0;
    return tb;
}

void corrupt_bits(void* data, size_t n_bits, double rber, uint64_t seed) {
    if (rber <= 0.0 || n_bits == 0) return;
    require(rber <= 1.0, "corrupt_bits: rber must be in [0,1]");
    auto* bytes = static_cast<unsigned char*>(data);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(std::numeric_limits<double>::min(), 1.0);
    const double denom = std::log1p(-rber);
    double pos = 0;
    while (true) {
        // geometric gap between flipped bits
        double gap = std::floor(std::log(uni(rng)) / denom);
        pos += gap + 1;
        if (pos > static_cast<double>(n_bits)) break;
        size_t bit = static_cast<size_t>(pos) - 1;
        bytes[bit >> 3] ^= static_cast<unsigned char>(1u << (bit & 7));
    }
}

PQCodes inject_errors(const PQCodes& codes, const ErrorModel& model, uint32_t clamp_c) {
    PQCodes out = codes;
    if (model.pq) {
        corrupt_bits(out.codes.data(), out.codes.size() * 8, model.rber,
                     splitmix64(model.seed ^ 0xA11CE));
        if (clamp_c > 0 && clamp_c < 256) {
            for (auto& b : out.codes)
                if (b >= clamp_c) b = static_cast<uint8_t>(b % clamp_c);
        }
    }
    return out;
}

GapEncodedGraph inject_errors(const GapEncodedGraph& graph, const ErrorModel& model) {
    GapEncodedGraph out = graph;
    if (model.index)
        corrupt_bits(out.payload.data(), out.record_bits() * out.n, model.rber,
                     splitmix64(model.seed ^ 0xB0B));
    return out;
}

VectorDataset inject_errors(const VectorDataset& ds, const ErrorModel& model) {
    VectorDataset out = ds;
    if (model.raw)
        corrupt_bits(out.data.data(), out.data.size() * 32, model.rber,
                     splitmix64(model.seed ^ 0xCAFE));
    return out;
}

std::vector<std::pair<double, SimReport>> hot_node_sweep(const AccessTrace& trace, size_t n,
                                                         uint32_t r, uint32_t d, uint32_t b_index,
                                                         const std::vector<double>& percentages,
                                                         const SimConfig& cfg) {
    std::vector<std::pair<double, SimReport>> out;
    for (double pct : percentages) {
        size_t hot = static_cast<size_t>(std::ceil(pct / 100.0 * static_cast<double>(n)));
        LayoutPlan plan = plan_layout(n, r, d, b_index, hot, cfg);
        out.emplace_back(pct, simulate(trace, plan, cfg));
    }
    return out;
}

std::string SimReport::to_json() const {
    std::ostringstream os;
    os.precision(10);
    os << "{\"queries\":" << queries << ",\"makespan_ns\":" << makespan_ns
       << ",\"qps\":" << qps << ",\"mean_latency_ns\":" << mean_latency_ns
       << ",\"p50_latency_ns\":" << p50_latency_ns << ",\"p99_latency_ns\":" << p99_latency_ns
       << ",\"energy_per_query_nj\":" << energy_per_query_nj
       << ",\"core_utilization_pct\":" << core_utilization_pct << ",\"nand_reads\":" << nand_reads
       << ",\"sorts\":" << sorts << ",\"latency_breakdown_ns\":{";
    bool first = true;
    for (const auto& [k, v] : latency_breakdown_ns) {
        if (!first) os << ",";
        first = false;
        os << "\"" << k << "\":" << v;
    }
    os << "},\"traffic_bytes\":{\"raw\":" << traffic.raw << ",\"pq\":" << traffic.pq
       << ",\"index\":" << traffic.index << ",\"total\":" << traffic.total() << "}}";
    return os.str();
}

std::string SimReport::csv_header() {
    return "label,queries,qps,mean_latency_ns,p50_latency_ns,p99_latency_ns,"
           "energy_per_query_nj,core_utilization_pct,nand_reads,sorts,"
           "stall_ns,nand_ns,bus_ns,compute_ns,sort_ns,"
           "traffic_raw_bytes,traffic_pq_bytes,traffic_index_bytes,traffic_total_bytes";
}

std::string SimReport::csv_row(const std::string& label) const {
    auto get = [&](const char* k) {
        auto it = latency_breakdown_ns.find(k);
        return it == latency_breakdown_ns.end() ? 0.0 : it->second;
    };
    char buf[640];
    std::snprintf(buf, sizeof(buf),
                  "%s,%llu,%.4f,%.4f,%.4f,%.4f,%.6f,%.4f,%llu,%llu,%.2f,%.2f,%.2f,%.2f,%.2f,"
                  "%.1f,%.1f,%.1f,%.1f",
                  label.c_str(), static_cast<unsigned long long>(queries), qps, mean_latency_ns,
                  p50_latency_ns, p99_latency_ns, energy_per_query_nj, core_utilization_pct,
                  static_cast<unsigned long long>(nand_reads),
                  static_cast<unsigned long long>(sorts), get("stall"), get("nand"), get("bus"),
                  get("compute"), get("sort"), traffic.raw, traffic.pq, traffic.index,
                  traffic.total());
    return buf;
}

}  // namespace proxima
