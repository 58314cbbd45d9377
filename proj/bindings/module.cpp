// Python bindings for the core operations: dataset IO and ground truth,
// PQ training/encoding, graph building and gap encoding, Proxima search,
// layout planning, and the accelerator timing model.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "proxima/experiment.hpp"
#include "proxima/synth.hpp"

namespace py = pybind11;
using namespace proxima;

namespace {

VectorDataset dataset_from_array(py::array_t<float, py::array::c_style | py::array::forcecast> arr,
                                 const std::string& metric) {
    require(arr.ndim() == 2, "expected a 2-D float array");
    VectorDataset ds;
    ds.n = static_cast<size_t>(arr.shape(0));
    ds.d = static_cast<size_t>(arr.shape(1));
    ds.metric = metric_from_name(metric);
    ds.data.assign(arr.data(), arr.data() + ds.n * ds.d);
    ds.validate();
    return ds;
}

py::array_t<float> dataset_to_array(const VectorDataset& ds) {
    py::array_t<float> arr({ds.n, ds.d});
    std::copy(ds.data.begin(), ds.data.end(), arr.mutable_data());
    return arr;
}

SearchParams params_from_kwargs(uint32_t k, uint32_t l, float beta, bool et, bool rerank,
                                uint32_t t_step, uint32_t r, bool exact_visited) {
    SearchParams p;
    p.k = k;
    p.L = l;
    p.beta = beta;
    p.et_enabled = et;
    p.rerank_enabled = rerank;
    p.T_step = t_step;
    p.r = r;
    p.exact_visited = exact_visited;
    return p;
}

py::dict counters_dict(const SearchCounters& c) {
    py::dict d;
    d["pq_distance_count"] = c.pq_distance_count;
    d["exact_distance_count"] = c.exact_distance_count;
    d["hops"] = c.hops;
    d["vertices_visited"] = c.vertices_visited;
    d["terminated_early"] = c.terminated_early;
    d["final_T"] = c.final_T;
    return d;
}

py::dict report_dict(const SimReport& r) {
    py::dict d;
    d["queries"] = r.queries;
    d["qps"] = r.qps;
    d["makespan_ns"] = r.makespan_ns;
    d["mean_latency_ns"] = r.mean_latency_ns;
    d["p50_latency_ns"] = r.p50_latency_ns;
    d["p99_latency_ns"] = r.p99_latency_ns;
    d["energy_per_query_nj"] = r.energy_per_query_nj;
    d["core_utilization_pct"] = r.core_utilization_pct;
    d["nand_reads"] = r.nand_reads;
    d["latency_breakdown_ns"] = r.latency_breakdown_ns;
    py::dict t;
    t["raw"] = r.traffic.raw;
    t["pq"] = r.traffic.pq;
    t["index"] = r.traffic.index;
    d["traffic_bytes"] = t;
    return d;
}

}  // namespace

PYBIND11_MODULE(_proxima, m) {
    m.doc() = "Graph ANN search with PQ traversal, gap-encoded indices, and a "
              "near-storage accelerator model";

    py::register_exception<error>(m, "ProximaError");

    py::class_<VectorDataset>(m, "Dataset")
        .def(py::init([](py::array_t<float, py::array::c_style | py::array::forcecast> arr,
                         const std::string& metric) {
                 return dataset_from_array(arr, metric);
             }),
             py::arg("vectors"), py::arg("metric") = "euclidean")
        .def_property_readonly("n", [](const VectorDataset& ds) { return ds.n; })
        .def_property_readonly("d", [](const VectorDataset& ds) { return ds.d; })
        .def_property_readonly("metric",
                               [](const VectorDataset& ds) { return metric_name(ds.metric); })
        .def("to_numpy", &dataset_to_array);

    m.def(
        "load_vectors",
        [](const std::string& path, const std::string& format, const std::string& metric) {
            VecFormat f = format == "bvecs"   ? VecFormat::bvecs
                          : format == "ivecs" ? VecFormat::ivecs
                                              : VecFormat::fvecs;
            return load_vectors(path, f, metric_from_name(metric));
        },
        py::arg("path"), py::arg("format") = "fvecs", py::arg("metric") = "euclidean");
    m.def(
        "write_vectors",
        [](const std::string& path, const VectorDataset& ds, const std::string& format) {
            VecFormat f = format == "bvecs"   ? VecFormat::bvecs
                          : format == "ivecs" ? VecFormat::ivecs
                                              : VecFormat::fvecs;
            write_vectors(path, f, ds);
        },
        py::arg("path"), py::arg("dataset"), py::arg("format") = "fvecs");

    m.def("make_sift_like", &make_sift_like, py::arg("n"), py::arg("d") = 128, py::arg("seed") = 1,
          py::arg("clusters") = 512, py::arg("sigma") = 18.0);
    m.def("make_glove_like", &make_glove_like, py::arg("n"), py::arg("d") = 100,
          py::arg("seed") = 1, py::arg("clusters") = 256, py::arg("sigma") = 0.35);

    m.def(
        "exact_distance",
        [](py::array_t<float, py::array::c_style | py::array::forcecast> q,
           py::array_t<float, py::array::c_style | py::array::forcecast> x,
           const std::string& metric) {
            return exact_distance({q.data(), static_cast<size_t>(q.size())},
                                  {x.data(), static_cast<size_t>(x.size())},
                                  metric_from_name(metric));
        },
        py::arg("q"), py::arg("x"), py::arg("metric") = "euclidean");

    m.def(
        "brute_force_knn",
        [](const VectorDataset& base, const VectorDataset& queries, size_t k) {
            auto gt = brute_force_knn(base, queries, k);
            py::array_t<vertex_t> ids({gt.num_queries, gt.k});
            py::array_t<float> dists({gt.num_queries, gt.k});
            std::copy(gt.ids.begin(), gt.ids.end(), ids.mutable_data());
            std::copy(gt.dists.begin(), gt.dists.end(), dists.mutable_data());
            return py::make_tuple(ids, dists);
        },
        py::arg("base"), py::arg("queries"), py::arg("k"));

    m.def(
        "recall_at_k",
        [](const std::vector<std::vector<vertex_t>>& found,
           py::array_t<vertex_t, py::array::c_style | py::array::forcecast> truth, size_t k) {
            require(truth.ndim() == 2, "truth must be a 2-D id array");
            GroundTruth gt;
            gt.num_queries = static_cast<size_t>(truth.shape(0));
            gt.k = static_cast<size_t>(truth.shape(1));
            gt.ids.assign(truth.data(), truth.data() + gt.num_queries * gt.k);
            gt.dists.assign(gt.ids.size(), 0.f);
            return recall_at_k(found, gt, k);
        },
        py::arg("found"), py::arg("truth"), py::arg("k"));

    py::class_<PQModel>(m, "PQModel")
        .def_property_readonly("m", [](const PQModel& p) { return p.m; })
        .def_property_readonly("c", [](const PQModel& p) { return p.c; })
        .def_property_readonly("d", [](const PQModel& p) { return p.d; })
        .def("save", [](const PQModel& p, const std::string& path) { save_pq(path, p); });
    m.def("load_pq", &load_pq, py::arg("path"));
    m.def("train_pq", &train_pq, py::arg("dataset"), py::arg("m"), py::arg("c"),
          py::arg("iters") = 25, py::arg("seed") = 1, py::arg("train_sample") = 100000);

    py::class_<PQCodes>(m, "PQCodes")
        .def_property_readonly("n", [](const PQCodes& c) { return c.n; })
        .def_property_readonly("m", [](const PQCodes& c) { return c.m; })
        .def("to_numpy",
             [](const PQCodes& c) {
                 py::array_t<uint8_t> arr({c.n, static_cast<size_t>(c.m)});
                 std::copy(c.codes.begin(), c.codes.end(), arr.mutable_data());
                 return arr;
             })
        .def("save", [](const PQCodes& c, const std::string& path) { save_codes(path, c); });
    m.def("load_codes", &load_codes, py::arg("path"));
    m.def("encode", &encode, py::arg("model"), py::arg("dataset"));
    m.def(
        "calibrate_beta",
        [](const PQModel& model, const VectorDataset& ds, size_t sample_size, float percentile,
           uint64_t seed) {
            auto cal = calibrate_beta(model, ds, sample_size, percentile, seed);
            py::dict d;
            d["beta"] = cal.beta;
            d["percentile"] = cal.percentile;
            d["sample_size"] = cal.sample_size;
            d["used_pairs"] = cal.used_pairs;
            return d;
        },
        py::arg("model"), py::arg("dataset"), py::arg("sample_size") = 20000,
        py::arg("percentile") = 0.99f, py::arg("seed") = 7);

    py::class_<GraphIndex>(m, "GraphIndex")
        .def_property_readonly("n", [](const GraphIndex& g) { return g.n; })
        .def_property_readonly("r", [](const GraphIndex& g) { return g.r; })
        .def_property_readonly("entry", [](const GraphIndex& g) { return g.entry; })
        .def("neighbors", [](const GraphIndex& g, vertex_t v) { return g.adj.at(v); })
        .def("save", [](const GraphIndex& g, const std::string& path) { save_graph(path, g); });
    m.def("build_graph", &build_graph, py::arg("dataset"), py::arg("r"),
          py::arg("l_build") = 150, py::arg("alpha") = 1.2f, py::arg("seed") = 1);
    m.def(
        "load_graph",
        [](const std::string& path, const std::string& format) {
            return load_graph(path, format == "diskann_mem" ? GraphFormat::diskann_mem
                                                            : GraphFormat::native);
        },
        py::arg("path"), py::arg("format") = "native");
    m.def(
        "graph_stats",
        [](const GraphIndex& g) {
            auto s = graph_stats(g);
            py::dict d;
            d["degree_histogram"] = s.degree_histogram;
            d["raw_bits"] = s.raw_bits;
            d["encoded_bits"] = s.encoded_bits;
            d["bit_width"] = s.bit_width;
            d["compression"] = s.compression;
            return d;
        },
        py::arg("graph"));

    m.def(
        "search",
        [](const GraphIndex& g, const PQModel& model, const PQCodes& codes,
           const VectorDataset& base,
           py::array_t<float, py::array::c_style | py::array::forcecast> q, uint32_t k,
           uint32_t l, float beta, bool et, bool rerank, uint32_t t_step, uint32_t r,
           bool exact_visited) {
            auto p = params_from_kwargs(k, l, beta, et, rerank, t_step, r, exact_visited);
            auto res =
                search(g, model, codes, base, {q.data(), static_cast<size_t>(q.size())}, p);
            py::dict d;
            d["ids"] = res.ids;
            d["dists"] = res.dists;
            d["counters"] = counters_dict(res.counters);
            return d;
        },
        py::arg("graph"), py::arg("model"), py::arg("codes"), py::arg("base"), py::arg("q"),
        py::arg("k") = 10, py::arg("l") = 100, py::arg("beta") = 1.0f, py::arg("et") = true,
        py::arg("rerank") = true, py::arg("t_step") = 4, py::arg("r") = 3,
        py::arg("exact_visited") = false);

    m.def(
        "batch_search",
        [](const GraphIndex& g, const PQModel& model, const PQCodes& codes,
           const VectorDataset& base, const VectorDataset& queries, uint32_t k, uint32_t l,
           float beta, bool et, bool rerank, uint32_t t_step, uint32_t r, bool exact_visited,
           int parallelism) {
            auto p = params_from_kwargs(k, l, beta, et, rerank, t_step, r, exact_visited);
            auto batch = batch_search(g, model, codes, base, queries, p, parallelism);
            py::list ids, counters;
            for (const auto& res : batch.results) {
                ids.append(res.ids);
                counters.append(counters_dict(res.counters));
            }
            py::dict d;
            d["ids"] = ids;
            d["counters"] = counters;
            d["qps"] = batch.qps;
            d["mean_latency_ms"] = batch.mean_latency_ms;
            return d;
        },
        py::arg("graph"), py::arg("model"), py::arg("codes"), py::arg("base"),
        py::arg("queries"), py::arg("k") = 10, py::arg("l") = 100, py::arg("beta") = 1.0f,
        py::arg("et") = true, py::arg("rerank") = true, py::arg("t_step") = 4, py::arg("r") = 3,
        py::arg("exact_visited") = false, py::arg("parallelism") = 0);

    // Quick path through the hardware model: trace a workload, reorder by
    // heat, plan the layout, and replay the workload through the simulator.
    m.def(
        "run_accelerator_model",
        [](const GraphIndex& g, const PQModel& model, const PQCodes& codes,
           const VectorDataset& base, const VectorDataset& queries, uint32_t k, uint32_t l,
           float beta, double hot_pct, size_t trace_samples, uint32_t n_queues, uint64_t seed) {
            SearchParams p;
            p.k = k;
            p.L = l;
            p.beta = beta;
            auto vtrace = collect_trace(g, model, codes, base, trace_samples, p, seed);
            auto [reordered, perm] = reorder_graph(g, vtrace);
            auto encoded = gap_encode(reordered);
            SimConfig cfg;
            cfg.n_queues = n_queues;
            auto plan = plan_layout(g.n, g.r, static_cast<uint32_t>(base.d), encoded.bit_width,
                                    select_hot_nodes(vtrace, hot_pct / 100.0), cfg);
            AccessTrace trace;
            batch_search(g, model, codes, base, queries, p, 0, &trace);
            auto report = simulate(remap_trace(trace, perm), plan, cfg);
            return report_dict(report);
        },
        py::arg("graph"), py::arg("model"), py::arg("codes"), py::arg("base"),
        py::arg("queries"), py::arg("k") = 10, py::arg("l") = 50, py::arg("beta") = 1.06f,
        py::arg("hot_pct") = 3.0, py::arg("trace_samples") = 1000, py::arg("n_queues") = 256,
        py::arg("seed") = 13);
}
