#pragma once

#include <span>
#include <string>
#include <vector>

#include "proxima/common.hpp"

namespace proxima {

enum class Metric { euclidean, angular, inner_product };

const char* metric_name(Metric m);
Metric metric_from_name(const std::string& name);

enum class VecFormat { fvecs, bvecs, ivecs };

// Dense row-major matrix of float vectors plus the distance metric the
// dataset is meant to be searched under. Read-only after load.
struct VectorDataset {
    size_t n = 0;
    size_t d = 0;
    Metric metric = Metric::euclidean;
    std::vector<float> data;  // n * d

    std::span<const float> row(size_t i) const { return {data.data() + i * d, d}; }
    float* row_mut(size_t i) { return data.data() + i * d; }

    void validate() const;
};

VectorDataset load_vectors(const std::string& path, VecFormat format,
                           Metric metric = Metric::euclidean);
void write_vectors(const std::string& path, VecFormat format, const VectorDataset& ds);

// Exact distance in minimization form: euclidean -> squared L2,
// angular -> 1 - cosine, inner_product -> negated dot product.
float exact_distance(std::span<const float> q, std::span<const float> x, Metric metric);

struct GroundTruth {
    size_t k = 0;
    size_t num_queries = 0;
    std::vector<vertex_t> ids;  // num_queries * k
    std::vector<float> dists;   // num_queries * k, non-decreasing per query

    std::span<const vertex_t> query_ids(size_t q) const { return {ids.data() + q * k, k}; }
};

GroundTruth brute_force_knn(const VectorDataset& base, const VectorDataset& queries, size_t k);

// Disk-cached ground truth keyed by (dataset hash, query hash, metric, k);
// stored as an ivecs id file plus an fvecs distance file under cache_dir.
GroundTruth ground_truth_cached(const VectorDataset& base, const VectorDataset& queries,
                                size_t k, const std::string& cache_dir);

// Mean over queries of |found ∩ truth| / k, using the first k entries of each.
double recall_at_k(const std::vector<std::vector<vertex_t>>& found, const GroundTruth& truth,
                   size_t k);

uint64_t dataset_hash(const VectorDataset& ds);

}  // namespace proxima
