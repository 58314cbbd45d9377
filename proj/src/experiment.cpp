#include "proxima/experiment.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

namespace proxima {

using nlohmann::json;

namespace {

VecFormat format_from_name(const std::string& name) {
    if (name == "fvecs") return VecFormat::fvecs;
    if (name == "bvecs") return VecFormat::bvecs;
    if (name == "ivecs") return VecFormat::ivecs;
    fail("unknown vector format: " + name);
}

}  // namespace

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    auto in = open_in(path);
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        fail("config parse error in " + path + ": " + e.what());
    }

    ExperimentConfig cfg;
    if (j.contains("dataset")) {
        const auto& d = j["dataset"];
        cfg.base_path = d.value("base", cfg.base_path);
        cfg.query_path = d.value("queries", cfg.query_path);
        if (d.contains("format")) cfg.format = format_from_name(d["format"]);
        if (d.contains("metric")) cfg.metric = metric_from_name(d["metric"]);
    }
    if (j.contains("pq")) {
        const auto& p = j["pq"];
        cfg.pq_m = p.value("m", cfg.pq_m);
        cfg.pq_c = p.value("c", cfg.pq_c);
        cfg.pq_iters = p.value("iters", cfg.pq_iters);
        cfg.pq_seed = p.value("seed", cfg.pq_seed);
        cfg.pq_train_sample = p.value("train_sample", cfg.pq_train_sample);
    }
    if (j.contains("beta")) {
        const auto& b = j["beta"];
        cfg.beta_sample_size = b.value("sample_size", cfg.beta_sample_size);
        cfg.beta_percentile = b.value("percentile", cfg.beta_percentile);
        cfg.beta_seed = b.value("seed", cfg.beta_seed);
    }
    if (j.contains("graph")) {
        const auto& g = j["graph"];
        cfg.graph_r = g.value("r", cfg.graph_r);
        cfg.graph_l_build = g.value("l_build", cfg.graph_l_build);
        cfg.graph_alpha = g.value("alpha", cfg.graph_alpha);
        cfg.graph_seed = g.value("seed", cfg.graph_seed);
    }
    if (j.contains("search")) {
        const auto& s = j["search"];
        cfg.search_k = s.value("k", cfg.search_k);
        if (s.contains("l_grid")) cfg.search_l_grid = s["l_grid"].get<std::vector<uint32_t>>();
        cfg.search_t_step = s.value("t_step", cfg.search_t_step);
        cfg.search_r = s.value("r", cfg.search_r);
        cfg.search_beta = s.value("beta", cfg.search_beta);
        cfg.search_et = s.value("et", cfg.search_et);
        cfg.search_rerank = s.value("rerank", cfg.search_rerank);
        cfg.parallelism = s.value("parallelism", cfg.parallelism);
    }
    if (j.contains("mapping")) {
        const auto& m = j["mapping"];
        cfg.hot_pct = m.value("hot_pct", cfg.hot_pct);
        cfg.trace_samples = m.value("trace_samples", cfg.trace_samples);
        cfg.mapping_seed = m.value("seed", cfg.mapping_seed);
    }
    cfg.sim_config_path = j.value("sim_config", cfg.sim_config_path);
    cfg.out_dir = j.value("out", cfg.out_dir);
    cfg.seed = j.value("seed", cfg.seed);

    require(!cfg.base_path.empty(), "config: dataset.base is required");
    require(!cfg.search_l_grid.empty(), "config: search.l_grid must be non-empty");
    return cfg;
}

SearchParams ExperimentConfig::search_params(uint32_t l, float calibrated_beta) const {
    SearchParams p;
    p.k = search_k;
    p.L = l;
    p.T_step = search_t_step;
    p.r = search_r;
    p.beta = search_beta > 0.f ? search_beta : std::max(1.0f, calibrated_beta);
    p.et_enabled = search_et;
    p.rerank_enabled = search_rerank;
    return p;
}

namespace {
std::string manifest_path(const std::string& dir) { return dir + "/manifest.json"; }
}  // namespace

Manifest Manifest::load(const std::string& dir) {
    Manifest m;
    std::ifstream in(manifest_path(dir));
    if (!in) return m;
    json j;
    try {
        in >> j;
    } catch (const std::exception&) {
        return m;  // unreadable manifest: rebuild everything
    }
    for (auto& [name, st] : j.items()) {
        Stage stage;
        stage.input_hash = std::stoull(st.value("input_hash", std::string("0")), nullptr, 16);
        for (auto& out : st["outputs"]) {
            stage.outputs.emplace_back(out["path"].get<std::string>(),
                                       std::stoull(out["hash"].get<std::string>(), nullptr, 16));
        }
        m.stages[name] = std::move(stage);
    }
    return m;
}

void Manifest::save(const std::string& dir) const {
    std::filesystem::create_directories(dir);
    json j = json::object();
    char hex[32];
    for (const auto& [name, stage] : stages) {
        json outputs = json::array();
        for (const auto& [path, hash] : stage.outputs) {
            std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(hash));
            outputs.push_back({{"path", path}, {"hash", hex}});
        }
        std::snprintf(hex, sizeof(hex), "%016llx",
                      static_cast<unsigned long long>(stage.input_hash));
        j[name] = {{"input_hash", hex}, {"outputs", outputs}};
    }
    auto out = open_out(manifest_path(dir));
    out << j.dump(2) << "\n";
}

bool Manifest::up_to_date(const std::string& stage, uint64_t input_hash) const {
    auto it = stages.find(stage);
    if (it == stages.end() || it->second.input_hash != input_hash) return false;
    for (const auto& [path, hash] : it->second.outputs) {
        if (!std::filesystem::exists(path)) return false;
        if (hash_file(path) != hash) return false;
    }
    return true;
}

void Manifest::record(const std::string& stage, uint64_t input_hash,
                      const std::vector<std::string>& outputs) {
    Stage st;
    st.input_hash = input_hash;
    for (const auto& path : outputs) st.outputs.emplace_back(path, hash_file(path));
    stages[stage] = std::move(st);
}

uint64_t Manifest::stage_hash(const std::string& stage) const {
    auto it = stages.find(stage);
    return it == stages.end() ? 0 : it->second.input_hash;
}

void write_csv(const std::string& path, uint64_t manifest_ref, const std::string& header,
               const std::vector<std::string>& rows) {
    auto out = open_out(path);
    char hex[32];
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(manifest_ref));
    out << "# manifest=" << hex << "\n" << header << "\n";
    for (const auto& row : rows) out << row << "\n";
    require(static_cast<bool>(out), "write failed: " + path);
}

void write_results(const std::string& path, const BatchResult& batch, double recall,
                   uint64_t manifest_ref) {
    auto out = open_out(path);
    for (size_t q = 0; q < batch.results.size(); q++) {
        const auto& r = batch.results[q];
        json rec = {
            {"query", q},
            {"ids", r.ids},
            {"dists", r.dists},
            {"counters",
             {{"pq_distance_count", r.counters.pq_distance_count},
              {"exact_distance_count", r.counters.exact_distance_count},
              {"hops", r.counters.hops},
              {"vertices_visited", r.counters.vertices_visited},
              {"terminated_early", r.counters.terminated_early},
              {"final_T", r.counters.final_T}}},
        };
        out << rec.dump() << "\n";
    }
    auto totals = batch.totals();
    char hex[32];
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(manifest_ref));
    json agg = {
        {"aggregate",
         {{"queries", batch.results.size()},
          {"qps", batch.qps},
          {"mean_latency_ms", batch.mean_latency_ms},
          {"recall", recall},
          {"manifest", hex},
          {"pq_distance_count", totals.pq_distance_count},
          {"exact_distance_count", totals.exact_distance_count},
          {"hops", totals.hops},
          {"vertices_visited", totals.vertices_visited}}},
    };
    out << agg.dump() << "\n";
    require(static_cast<bool>(out), "write failed: " + path);
}

}  // namespace proxima
