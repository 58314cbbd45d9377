#pragma once

#include <map>
#include <string>
#include <vector>

#include "proxima/search.hpp"
#include "proxima/simulator.hpp"

namespace proxima {

// End-to-end experiment description loaded from a JSON config file. Every
// random choice is seeded explicitly; nothing is seeded from the clock.
struct ExperimentConfig {
    std::string base_path;
    std::string query_path;
    VecFormat format = VecFormat::fvecs;
    Metric metric = Metric::euclidean;

    uint32_t pq_m = 32;
    uint32_t pq_c = 256;
    uint32_t pq_iters = 25;
    uint64_t pq_seed = 42;
    size_t pq_train_sample = 100000;

    size_t beta_sample_size = 20000;
    float beta_percentile = 0.99f;
    uint64_t beta_seed = 7;

    uint32_t graph_r = 64;
    uint32_t graph_l_build = 150;
    float graph_alpha = 1.2f;
    uint64_t graph_seed = 11;

    uint32_t search_k = 10;
    std::vector<uint32_t> search_l_grid = {100};
    uint32_t search_t_step = 4;
    uint32_t search_r = 3;
    float search_beta = 0.f;  // 0 = use the calibrated value
    bool search_et = true;
    bool search_rerank = true;
    int parallelism = 0;

    double hot_pct = 3.0;
    size_t trace_samples = 10000;
    uint64_t mapping_seed = 13;

    std::string sim_config_path;  // empty = built-in defaults
    std::string out_dir = "out";
    uint64_t seed = 1;

    static ExperimentConfig load(const std::string& path);
    SearchParams search_params(uint32_t l, float calibrated_beta) const;
};

// Stage log with input/output hashes; lets pipeline stages skip work when
// their inputs and artifacts are unchanged.
struct Manifest {
    struct Stage {
        uint64_t input_hash = 0;
        std::vector<std::pair<std::string, uint64_t>> outputs;  // path, hash
    };
    std::map<std::string, Stage> stages;

    static Manifest load(const std::string& dir);
    void save(const std::string& dir) const;
    bool up_to_date(const std::string& stage, uint64_t input_hash) const;
    void record(const std::string& stage, uint64_t input_hash,
                const std::vector<std::string>& outputs);
    uint64_t stage_hash(const std::string& stage) const;
};

// CSV with a manifest-reference comment line followed by a header row.
void write_csv(const std::string& path, uint64_t manifest_ref, const std::string& header,
               const std::vector<std::string>& rows);

// Line-delimited results: one JSON record per query plus an aggregate record.
void write_results(const std::string& path, const BatchResult& batch, double recall,
                   uint64_t manifest_ref);

}  // namespace proxima
