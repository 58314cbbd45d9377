// Command line front end: gen / build / encode / search / map / simulate /
// eval / sweep. Stages read an experiment config, write versioned artifacts
// into the output directory, and skip work when the manifest says their
// inputs and outputs are unchanged.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>

#include "proxima/experiment.hpp"
#include "proxima/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace proxima;

namespace {

struct Paths {
    std::string graph, model, codes, beta, layout, reordered;
    explicit Paths(const std::string& out) {
        graph = out + "/graph.px";
        model = out + "/pq.model";
        codes = out + "/pq.codes";
        beta = out + "/beta.json";
        layout = out + "/layout.px";
        reordered = out + "/graph_reordered.px";
    }
};

uint64_t hash_str(const std::string& s, uint64_t h = 0xcbf29ce484222325ULL) {
    return fnv1a64(s.data(), s.size(), h);
}

VectorDataset load_base(const ExperimentConfig& cfg) {
    return load_vectors(cfg.base_path, cfg.format, cfg.metric);
}

VectorDataset load_queries(const ExperimentConfig& cfg) {
    require(!cfg.query_path.empty(), "config: dataset.queries is required for this stage");
    return load_vectors(cfg.query_path, cfg.format, cfg.metric);
}

SimConfig sim_config_for(const ExperimentConfig& cfg) {
    return cfg.sim_config_path.empty() ? SimConfig{} : load_sim_config(cfg.sim_config_path);
}

float load_calibrated_beta(const Paths& paths) {
    auto in = open_in(paths.beta);
    json j;
    in >> j;
    return j.at("beta").get<float>();
}

int run_gen(const std::string& kind, size_t n, size_t d, size_t n_queries, uint64_t seed,
            const std::string& out_base, const std::string& out_queries,
            const std::string& format_name) {
    VecFormat format = format_name == "bvecs" ? VecFormat::bvecs : VecFormat::fvecs;
    size_t d_eff = d;
    if (d == 0) d_eff = kind == "glove" ? 100 : 128;
    VectorDataset all;
    if (kind == "sift") {
        all = make_sift_like(n + n_queries, d_eff, seed);
    } else if (kind == "glove") {
        all = make_glove_like(n + n_queries, d_eff, seed);
    } else if (kind == "uniform") {
        all = make_uniform(n + n_queries, d_eff, seed);
    } else {
        fail("gen: unknown kind '" + kind + "' (expected sift, glove, or uniform)");
    }
    VectorDataset base, queries;
    base.n = n;
    base.d = d_eff;
    base.metric = all.metric;
    base.data.assign(all.data.begin(), all.data.begin() + n * d_eff);
    queries.n = n_queries;
    queries.d = d_eff;
    queries.metric = all.metric;
    queries.data.assign(all.data.begin() + n * d_eff, all.data.end());
    write_vectors(out_base, format, base);
    if (n_queries > 0) write_vectors(out_queries, format, queries);
    std::printf("gen: wrote %zu base + %zu query vectors (d=%zu, %s)\n", n, n_queries, d_eff,
                metric_name(all.metric));
    return 0;
}

int run_build(const ExperimentConfig& cfg) {
    fs::create_directories(cfg.out_dir);
    Paths paths(cfg.out_dir);
    auto manifest = Manifest::load(cfg.out_dir);

    char params[128];
    std::snprintf(params, sizeof(params), "build|r=%u|l=%u|a=%.4f|seed=%llu|metric=%d",
                  cfg.graph_r, cfg.graph_l_build, cfg.graph_alpha,
                  static_cast<unsigned long long>(cfg.graph_seed), int(cfg.metric));
    uint64_t input = hash_str(params, hash_file(cfg.base_path));
    if (manifest.up_to_date("build", input)) {
        std::printf("build: up to date, skipping\n");
        return 0;
    }

    auto base = load_base(cfg);
    auto graph = build_graph(base, cfg.graph_r, cfg.graph_l_build, cfg.graph_alpha,
                             cfg.graph_seed);
    save_graph(paths.graph, graph);
    auto stats = graph_stats(graph);
    std::printf("build: N=%zu R=%u reachable=%.4f bit_width=%u compression=%.1f%%\n", graph.n,
                graph.r, reachable_fraction(graph), stats.bit_width, 100.0 * stats.compression);

    manifest.record("build", input, {paths.graph});
    manifest.save(cfg.out_dir);
    return 0;
}

int run_encode(const ExperimentConfig& cfg) {
    fs::create_directories(cfg.out_dir);
    Paths paths(cfg.out_dir);
    auto manifest = Manifest::load(cfg.out_dir);

    char params[160];
    std::snprintf(params, sizeof(params),
                  "encode|m=%u|c=%u|it=%u|seed=%llu|ts=%zu|bs=%zu|bp=%.4f|bseed=%llu|metric=%d",
                  cfg.pq_m, cfg.pq_c, cfg.pq_iters,
                  static_cast<unsigned long long>(cfg.pq_seed), cfg.pq_train_sample,
                  cfg.beta_sample_size, cfg.beta_percentile,
                  static_cast<unsigned long long>(cfg.beta_seed), int(cfg.metric));
    uint64_t input = hash_str(params, hash_file(cfg.base_path));
    if (manifest.up_to_date("encode", input)) {
        std::printf("encode: up to date, skipping\n");
        return 0;
    }

    auto base = load_base(cfg);
    auto model = train_pq(base, cfg.pq_m, cfg.pq_c, cfg.pq_iters, cfg.pq_seed,
                          cfg.pq_train_sample);
    auto codes = encode(model, base);
    auto cal = calibrate_beta(model, base, std::min(cfg.beta_sample_size, base.n),
                              cfg.beta_percentile, cfg.beta_seed);
    save_pq(paths.model, model);
    save_codes(paths.codes, codes);
    {
        auto out = open_out(paths.beta);
        json j = {{"beta", cal.beta},
                  {"percentile", cal.percentile},
                  {"sample_size", cal.sample_size},
                  {"used_pairs", cal.used_pairs}};
        out << j.dump(2) << "\n";
    }
    std::printf("encode: M=%u C=%u beta=%.4f (%zu pairs)\n", model.m, model.c, cal.beta,
                cal.used_pairs);

    manifest.record("encode", input, {paths.model, paths.codes, paths.beta});
    manifest.save(cfg.out_dir);
    return 0;
}

int run_search(const ExperimentConfig& cfg, bool emit_trace) {
    fs::create_directories(cfg.out_dir);
    Paths paths(cfg.out_dir);
    auto manifest = Manifest::load(cfg.out_dir);

    std::string grid;
    for (auto l : cfg.search_l_grid) grid += std::to_string(l) + ",";
    char params[200];
    std::snprintf(params, sizeof(params),
                  "search|k=%u|ts=%u|r=%u|b=%.4f|et=%d|rr=%d|trace=%d|L=%s", cfg.search_k,
                  cfg.search_t_step, cfg.search_r, cfg.search_beta, int(cfg.search_et),
                  int(cfg.search_rerank), int(emit_trace), grid.c_str());
    uint64_t input = hash_str(params, hash_file(cfg.base_path));
    for (const auto& dep : {paths.graph, paths.model, paths.codes})
        input = splitmix64(input ^ hash_file(dep));
    input = splitmix64(input ^ hash_file(cfg.query_path));
    if (manifest.up_to_date("search", input)) {
        std::printf("search: up to date, skipping\n");
        return 0;
    }

    auto base = load_base(cfg);
    auto queries = load_queries(cfg);
    auto graph = load_graph(paths.graph);
    auto model = load_pq(paths.model);
    auto codes = load_codes(paths.codes);
    float beta = cfg.search_beta > 0 ? cfg.search_beta : load_calibrated_beta(paths);
    auto gt = ground_truth_cached(base, queries, cfg.search_k, cfg.out_dir + "/gt_cache");

    std::vector<std::string> outputs;
    std::vector<std::string> rows;
    for (uint32_t l : cfg.search_l_grid) {
        auto params_l = cfg.search_params(l, beta);
        AccessTrace trace;
        auto batch = batch_search(graph, model, codes, base, queries, params_l, cfg.parallelism,
                                  emit_trace ? &trace : nullptr);
        double recall = recall_at_k(batch.id_lists(), gt, cfg.search_k);
        auto totals = batch.totals();

        std::string results_path = cfg.out_dir + "/results_L" + std::to_string(l) + ".jsonl";
        write_results(results_path, batch, recall, input);
        outputs.push_back(results_path);
        if (emit_trace) {
            std::string trace_path = cfg.out_dir + "/trace_L" + std::to_string(l) + ".px";
            save_trace(trace_path, trace);
            outputs.push_back(trace_path);
        }
        char row[256];
        std::snprintf(row, sizeof(row), "%u,%.6f,%.2f,%llu,%llu", l, recall, batch.qps,
                      static_cast<unsigned long long>(totals.pq_distance_count),
                      static_cast<unsigned long long>(totals.exact_distance_count));
        rows.push_back(row);
        std::printf("search: L=%u recall@%u=%.4f qps=%.1f\n", l, cfg.search_k, recall, batch.qps);
    }
    std::string csv = cfg.out_dir + "/search_summary.csv";
    write_csv(csv, input, "L,recall,qps,pq_distance_count,exact_distance_count", rows);
    outputs.push_back(csv);

    manifest.record("search", input, outputs);
    manifest.save(cfg.out_dir);
    return 0;
}

int run_map(const ExperimentConfig& cfg) {
    fs::create_directories(cfg.out_dir);
    Paths paths(cfg.out_dir);
    auto manifest = Manifest::load(cfg.out_dir);

    char params[160];
    std::snprintf(params, sizeof(params), "map|hot=%.3f|samples=%zu|seed=%llu", cfg.hot_pct,
                  cfg.trace_samples, static_cast<unsigned long long>(cfg.mapping_seed));
    uint64_t input = hash_str(params);
    for (const auto& dep : {paths.graph, paths.model, paths.codes})
        input = splitmix64(input ^ hash_file(dep));
    if (manifest.up_to_date("map", input)) {
        std::printf("map: up to date, skipping\n");
        return 0;
    }

    auto base = load_base(cfg);
    auto graph = load_graph(paths.graph);
    auto model = load_pq(paths.model);
    auto codes = load_codes(paths.codes);
    float beta = cfg.search_beta > 0 ? cfg.search_beta : load_calibrated_beta(paths);

    auto params_t = cfg.search_params(cfg.search_l_grid.front(), beta);
    auto vtrace = collect_trace(graph, model, codes, base, cfg.trace_samples, params_t,
                                cfg.mapping_seed);
    auto [reordered, perm] = reorder_graph(graph, vtrace);
    size_t hot = select_hot_nodes(vtrace, cfg.hot_pct / 100.0);
    auto encoded = gap_encode(reordered);
    auto sim_cfg = sim_config_for(cfg);
    auto plan = plan_layout(graph.n, graph.r, static_cast<uint32_t>(base.d), encoded.bit_width,
                            hot, sim_cfg);
    plan.perm = perm;

    save_graph_encoded(paths.reordered, encoded);
    save_layout(paths.layout, plan);
    std::printf("map: hot=%zu (%.1f%%) b_index=%u pq_cores=%u raw_cores=%u mass(top1%%)=%.3f\n",
                hot, cfg.hot_pct, encoded.bit_width, plan.pq_cores, plan.raw_cores,
                top_fraction_mass(vtrace, graph.n / 100));

    manifest.record("map", input, {paths.reordered, paths.layout});
    manifest.save(cfg.out_dir);
    return 0;
}

int run_simulate(const ExperimentConfig& cfg, std::string trace_path, uint32_t queue_override) {
    fs::create_directories(cfg.out_dir);
    Paths paths(cfg.out_dir);
    auto manifest = Manifest::load(cfg.out_dir);

    if (trace_path.empty())
        trace_path = cfg.out_dir + "/trace_L" + std::to_string(cfg.search_l_grid.front()) + ".px";
    require(fs::exists(trace_path),
            "simulate: missing trace file " + trace_path + " (run `search` with --emit-trace)");

    auto sim_cfg = sim_config_for(cfg);
    if (queue_override > 0) sim_cfg.n_queues = queue_override;

    char params[96];
    std::snprintf(params, sizeof(params), "simulate|nq=%u", sim_cfg.n_queues);
    uint64_t input = hash_str(params);
    for (const auto& dep : {paths.layout, trace_path})
        input = splitmix64(input ^ hash_file(dep));
    if (manifest.up_to_date("simulate", input)) {
        std::printf("simulate: up to date, skipping\n");
        return 0;
    }

    auto plan = load_layout(paths.layout);
    auto trace = load_trace(trace_path);
    auto remapped = remap_trace(trace, plan.perm);
    auto report = simulate(remapped, plan, sim_cfg);

    std::string json_path = cfg.out_dir + "/sim_report.json";
    std::string csv_path = cfg.out_dir + "/sim_report.csv";
    {
        auto out = open_out(json_path);
        out << report.to_json() << "\n";
    }
    write_csv(csv_path, input, SimReport::csv_header(), {report.csv_row("proxima")});
    std::printf("simulate: qps=%.0f mean_latency=%.0fns util=%.1f%% energy/q=%.1fnJ\n",
                report.qps, report.mean_latency_ns, report.core_utilization_pct,
                report.energy_per_query_nj);

    manifest.record("simulate", input, {json_path, csv_path});
    manifest.save(cfg.out_dir);
    return 0;
}

std::vector<std::vector<vertex_t>> read_found(const std::string& path, size_t k) {
    std::vector<std::vector<vertex_t>> found;
    if (path.size() > 6 && path.substr(path.size() - 6) == ".jsonl") {
        auto in = open_in(path);
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            auto j = json::parse(line);
            if (!j.contains("ids")) continue;  // aggregate record
            found.push_back(j["ids"].get<std::vector<vertex_t>>());
        }
    } else {
        auto ds = load_vectors(path, VecFormat::ivecs);
        for (size_t i = 0; i < ds.n; i++) {
            std::vector<vertex_t> row;
            for (size_t j = 0; j < ds.d; j++)
                row.push_back(static_cast<vertex_t>(ds.data[i * ds.d + j]));
            found.push_back(std::move(row));
        }
    }
    require(!found.empty(), "eval: no result records in " + path);
    for (const auto& row : found)
        require(row.size() >= k, "eval: found lists shorter than k");
    return found;
}

int run_eval(const std::string& found_path, const std::string& truth_path, size_t k,
             const std::string& out_csv) {
    auto found = read_found(found_path, k);
    auto truth_ds = load_vectors(truth_path, VecFormat::ivecs);
    require(truth_ds.d >= k, "eval: ground truth has fewer than k columns");
    GroundTruth gt;
    gt.k = truth_ds.d;
    gt.num_queries = truth_ds.n;
    gt.ids.resize(truth_ds.n * truth_ds.d);
    for (size_t i = 0; i < gt.ids.size(); i++)
        gt.ids[i] = static_cast<vertex_t>(truth_ds.data[i]);
    gt.dists.assign(gt.ids.size(), 0.f);

    double recall = recall_at_k(found, gt, k);
    char row[96];
    std::snprintf(row, sizeof(row), "%zu,%zu,%.6f", found.size(), k, recall);
    write_csv(out_csv, hash_file(found_path), "queries,k,recall", {row});
    std::printf("eval: recall@%zu = %.6f (%zu queries)\n", k, recall, found.size());
    return 0;
}

int run_sweep(const ExperimentConfig& cfg, const std::string& kind, const std::string& out_csv) {
    fs::create_directories(cfg.out_dir);
    Paths paths(cfg.out_dir);
    auto base = load_base(cfg);
    auto graph = load_graph(paths.graph);
    auto model = load_pq(paths.model);
    auto codes = load_codes(paths.codes);
    float beta = cfg.search_beta > 0 ? cfg.search_beta : load_calibrated_beta(paths);
    uint64_t ref = hash_str(kind, hash_file(paths.graph));

    if (kind == "recall_qps") {
        auto queries = load_queries(cfg);
        auto gt = ground_truth_cached(base, queries, cfg.search_k, cfg.out_dir + "/gt_cache");
        std::vector<std::string> rows;
        for (uint32_t l : cfg.search_l_grid) {
            auto p = cfg.search_params(l, beta);
            auto batch = batch_search(graph, model, codes, base, queries, p, cfg.parallelism);
            auto totals = batch.totals();
            char row[192];
            std::snprintf(row, sizeof(row), "%u,%.6f,%.2f,%llu,%llu", l,
                          recall_at_k(batch.id_lists(), gt, cfg.search_k), batch.qps,
                          static_cast<unsigned long long>(totals.pq_distance_count),
                          static_cast<unsigned long long>(totals.exact_distance_count));
            rows.push_back(row);
        }
        write_csv(out_csv, ref, "L,recall,qps,pq_distance_count,exact_distance_count", rows);
    } else if (kind == "queue_size") {
        auto queries = load_queries(cfg);
        auto p = cfg.search_params(cfg.search_l_grid.front(), beta);
        AccessTrace trace;
        batch_search(graph, model, codes, base, queries, p, cfg.parallelism, &trace);
        auto plan = load_layout(paths.layout);
        auto remapped = remap_trace(trace, plan.perm);
        auto sim_cfg = sim_config_for(cfg);
        std::vector<std::string> rows;
        for (uint32_t nq : {32u, 64u, 128u, 256u}) {
            sim_cfg.n_queues = nq;
            auto rep = simulate(remapped, plan, sim_cfg);
            char row[160];
            std::snprintf(row, sizeof(row), "%u,%.2f,%.3f,%.4f", nq, rep.qps,
                          rep.core_utilization_pct, rep.energy_per_query_nj);
            rows.push_back(row);
        }
        write_csv(out_csv, ref, "n_queues,modeled_qps,core_utilization_pct,energy_per_query_nj",
                  rows);
    } else if (kind == "hot_nodes") {
        auto queries = load_queries(cfg);
        auto p = cfg.search_params(cfg.search_l_grid.front(), beta);
        AccessTrace trace;
        batch_search(graph, model, codes, base, queries, p, cfg.parallelism, &trace);
        auto plan = load_layout(paths.layout);
        auto remapped = remap_trace(trace, plan.perm);
        auto sim_cfg = sim_config_for(cfg);
        std::vector<std::string> rows;
        for (double pct : {0.0, 1.0, 2.0, 3.0, 5.0, 7.0}) {
            auto sweep = hot_node_sweep(remapped, plan.n, plan.r, plan.d, plan.b_index, {pct},
                                        sim_cfg);
            const auto& rep = sweep[0].second;
            double data_access =
                rep.latency_breakdown_ns.at("nand") + rep.latency_breakdown_ns.at("bus");
            double total = 0;
            for (const auto& [key, v] : rep.latency_breakdown_ns) total += v;
            char row[192];
            std::snprintf(row, sizeof(row), "%.1f,%.1f,%.2f,%.4f", pct, rep.mean_latency_ns,
                          rep.qps, total > 0 ? data_access / total : 0.0);
            rows.push_back(row);
        }
        write_csv(out_csv, ref, "hot_pct,mean_latency_ns,modeled_qps,data_access_share", rows);
    } else if (kind == "bit_error") {
        auto queries = load_queries(cfg);
        auto gt = ground_truth_cached(base, queries, cfg.search_k, cfg.out_dir + "/gt_cache");
        auto p = cfg.search_params(cfg.search_l_grid.front(), beta);
        auto encoded = gap_encode(graph);
        std::vector<std::string> rows;
        for (double rber : {0.0, 1e-5, 1e-4, 1e-3}) {
            ErrorModel em;
            em.rber = rber;
            em.seed = cfg.seed;
            auto bad_codes = inject_errors(codes, em, model.c);
            auto bad_graph = inject_errors(encoded, em);
            auto bad_base = inject_errors(base, em);
            auto batch = batch_search(NeighborSource(bad_graph), model, bad_codes, bad_base,
                                      queries, p, cfg.parallelism);
            char row[96];
            std::snprintf(row, sizeof(row), "%.0e,%.6f", rber,
                          recall_at_k(batch.id_lists(), gt, cfg.search_k));
            rows.push_back(row);
        }
        write_csv(out_csv, ref, "rber,recall", rows);
    } else if (kind == "traffic") {
        auto queries = load_queries(cfg);
        auto sim_cfg = sim_config_for(cfg);
        auto p = cfg.search_params(cfg.search_l_grid.front(), beta);
        AccessTrace prox_trace;
        batch_search(graph, model, codes, base, queries, p, cfg.parallelism, &prox_trace);
        AccessTrace hnsw_trace;
        exact_best_first_batch(graph, base, queries, cfg.search_k, cfg.search_l_grid.front(),
                               &hnsw_trace);
        auto b_gap = gap_encode(graph).bit_width;
        auto plan_gap = plan_layout(graph.n, graph.r, static_cast<uint32_t>(base.d), b_gap, 0,
                                    sim_cfg);
        auto plan_32 = plan_layout(graph.n, graph.r, static_cast<uint32_t>(base.d), 32, 0,
                                   sim_cfg);
        auto t_prox = traffic_breakdown(prox_trace, plan_gap);
        auto t_hnsw = traffic_breakdown(hnsw_trace, plan_32);
        std::vector<std::string> rows;
        char row[224];
        std::snprintf(row, sizeof(row), "proxima,%.0f,%.0f,%.0f,%.0f,%.3f", t_prox.raw, t_prox.pq,
                      t_prox.index, t_prox.total(), 1.0);
        rows.push_back(row);
        std::snprintf(row, sizeof(row), "hnsw_exact,%.0f,%.0f,%.0f,%.0f,%.3f", t_hnsw.raw,
                      t_hnsw.pq, t_hnsw.index, t_hnsw.total(),
                      t_hnsw.total() / std::max(1.0, t_prox.total()));
        rows.push_back(row);
        write_csv(out_csv, ref, "algo,raw_bytes,pq_bytes,index_bytes,total_bytes,ratio_vs_proxima",
                  rows);
    } else {
        fail("sweep: unknown kind '" + kind + "'");
    }
    std::printf("sweep %s: wrote %s\n", kind.c_str(), out_csv.c_str());
    return 0;
}

int dispatch(int argc, char** argv) {
    CLI::App app{"proxima: PQ-based graph ANN search with a near-storage accelerator model"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path, out_override;
    uint64_t seed_override = 0;
    app.add_option("--config", config_path, "experiment config (JSON)");
    app.add_option("--out", out_override, "override the config output directory");
    app.add_option("--seed", seed_override, "override the config base seed");

    auto load_cfg = [&]() {
        require(!config_path.empty(), "--config is required for this command");
        auto cfg = ExperimentConfig::load(config_path);
        if (!out_override.empty()) cfg.out_dir = out_override;
        if (seed_override != 0) cfg.seed = seed_override;
        return cfg;
    };

    auto* gen = app.add_subcommand("gen", "generate a deterministic synthetic dataset");
    std::string kind = "sift", out_base = "base.fvecs", out_queries = "queries.fvecs";
    std::string format_name = "fvecs";
    size_t n = 1000, d = 0, n_queries = 100;
    uint64_t gen_seed = 1;
    gen->add_option("--kind", kind, "sift | glove | uniform");
    gen->add_option("--n", n, "base vector count");
    gen->add_option("--d", d, "dimension (0 = kind default)");
    gen->add_option("--queries", n_queries, "query vector count");
    gen->add_option("--gen-seed", gen_seed, "generator seed");
    gen->add_option("--out-base", out_base);
    gen->add_option("--out-queries", out_queries);
    gen->add_option("--format", format_name, "fvecs | bvecs");

    auto* build = app.add_subcommand("build", "build the proximity graph");
    auto* enc = app.add_subcommand("encode", "train PQ, encode vectors, calibrate beta");
    auto* srch = app.add_subcommand("search", "run the search grid against the index");
    bool emit_trace = false;
    srch->add_flag("--emit-trace", emit_trace, "record access traces for the simulator");
    auto* mp = app.add_subcommand("map", "reorder the graph and plan the physical layout");
    auto* sim = app.add_subcommand("simulate", "replay a trace through the accelerator model");
    std::string trace_path;
    uint32_t queue_override = 0;
    sim->add_option("--trace", trace_path, "trace file (default: search stage output)");
    sim->add_option("--queues", queue_override, "override the queue count");

    auto* ev = app.add_subcommand("eval", "compute recall from result files");
    std::string found_path, truth_path, eval_csv = "eval.csv";
    size_t eval_k = 10;
    ev->add_option("--found", found_path, "results (.jsonl or .ivecs)")->required();
    ev->add_option("--truth", truth_path, "ground truth ids (.ivecs)")->required();
    ev->add_option("--k", eval_k);
    ev->add_option("--out-csv", eval_csv);

    auto* sw = app.add_subcommand("sweep", "run a parameter sweep and emit CSV");
    std::string sweep_kind, sweep_csv;
    sw->add_option("--kind", sweep_kind,
                   "recall_qps | queue_size | hot_nodes | bit_error | traffic")
        ->required();
    sw->add_option("--out-csv", sweep_csv, "output CSV (default <out>/sweep_<kind>.csv)");

    CLI11_PARSE(app, argc, argv);

    if (gen->parsed())
        return run_gen(kind, n, d, n_queries, gen_seed, out_base, out_queries, format_name);
    if (build->parsed()) return run_build(load_cfg());
    if (enc->parsed()) return run_encode(load_cfg());
    if (srch->parsed()) return run_search(load_cfg(), emit_trace);
    if (mp->parsed()) return run_map(load_cfg());
    if (sim->parsed()) return run_simulate(load_cfg(), trace_path, queue_override);
    if (ev->parsed()) return run_eval(found_path, truth_path, eval_k, eval_csv);
    if (sw->parsed()) {
        auto cfg = load_cfg();
        if (sweep_csv.empty()) sweep_csv = cfg.out_dir + "/sweep_" + sweep_kind + ".csv";
        return run_sweep(cfg, sweep_kind, sweep_csv);
    }
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return dispatch(argc, argv);
    } catch (const std::exception& e) {
        json err = {{"error", e.what()}};
        std::cerr << err.dump() << "\n";
        return 1;
    }
}
