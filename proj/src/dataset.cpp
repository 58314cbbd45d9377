#include "proxima/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace proxima {

const char* metric_name(Metric m) {
    switch (m) {
        case Metric::euclidean: return "euclidean";
        case Metric::angular: return "angular";
        case Metric::inner_product: return "inner_product";
    }
    return "?";
}

Metric metric_from_name(const std::string& name) {
    if (name == "euclidean" || name == "l2") return Metric::euclidean;
    if (name == "angular" || name == "cosine") return Metric::angular;
    if (name == "inner_product" || name == "ip") return Metric::inner_product;
    fail("unknown metric: " + name);
}

void VectorDataset::validate() const {
    require(n >= 1 && d >= 1, "dataset must have n >= 1 and d >= 1");
    require(data.size() == n * d, "dataset buffer size mismatch");
    for (float v : data)
        if (!std::isfinite(v)) fail("dataset contains non-finite value");
}

namespace {

size_t element_size(VecFormat f) { return f == VecFormat::bvecs ? 1 : 4; }

}  // namespace

VectorDataset load_vectors(const std::string& path, VecFormat format, Metric metric) {
    auto in = open_in(path);
    in.seekg(0, std::ios::end);
    const uint64_t file_size = static_cast<uint64_t>(in.tellg());
    in.seekg(0, std::ios::beg);
    require(file_size > 0, "empty vector file: " + path);

    int32_t d0 = read_pod<int32_t>(in);
    require(d0 >= 1, "invalid leading dimension in " + path);
    const size_t d = static_cast<size_t>(d0);
    const size_t record = 4 + d * element_size(format);
    require(file_size % record == 0,
            "malformed " + path + ": size " + std::to_string(file_size) +
                " is not a multiple of the record size " + std::to_string(record));
    const size_t n = file_size / record;

    VectorDataset ds;
    ds.n = n;
    ds.d = d;
    ds.metric = metric;
    ds.data.resize(n * d);

    in.seekg(0, std::ios::beg);
    std::vector<unsigned char> bytes(d);
    std::vector<int32_t> ints(d);
    for (size_t i = 0; i < n; i++) {
        int32_t di = read_pod<int32_t>(in);
        require(di == d0, "inconsistent dimension at record " + std::to_string(i) + " in " + path);
        float* row = ds.row_mut(i);
        switch (format) {
            case VecFormat::fvecs:
                in.read(reinterpret_cast<char*>(row), 4 * d);
                break;
            case VecFormat::bvecs:
                in.read(reinterpret_cast<char*>(bytes.data()), d);
                for (size_t j = 0; j < d; j++) row[j] = static_cast<float>(bytes[j]);
                break;
            case VecFormat::ivecs:
                in.read(reinterpret_cast<char*>(ints.data()), 4 * d);
                for (size_t j = 0; j < d; j++) row[j] = static_cast<float>(ints[j]);
                break;
        }
        require(static_cast<bool>(in), "truncated record in " + path);
    }
    ds.validate();
    return ds;
}

void write_vectors(const std::string& path, VecFormat format, const VectorDataset& ds) {
    auto out = open_out(path);
    const int32_t d = static_cast<int32_t>(ds.d);
    std::vector<unsigned char> bytes(ds.d);
    std::vector<int32_t> ints(ds.d);
    for (size_t i = 0; i < ds.n; i++) {
        write_pod(out, d);
        const float* row = ds.data.data() + i * ds.d;
        switch (format) {
            case VecFormat::fvecs:
                out.write(reinterpret_cast<const char*>(row), 4 * ds.d);
                break;
            case VecFormat::bvecs:
                for (size_t j = 0; j < ds.d; j++) {
                    float v = row[j];
                    require(v >= 0.f && v <= 255.f && v == std::floor(v),
                            "bvecs requires integer values in [0,255]");
                    bytes[j] = static_cast<unsigned char>(v);
                }
                out.write(reinterpret_cast<const char*>(bytes.data()), ds.d);
                break;
            case VecFormat::ivecs:
                for (size_t j = 0; j < ds.d; j++) ints[j] = static_cast<int32_t>(row[j]);
                out.write(reinterpret_cast<const char*>(ints.data()), 4 * ds.d);
                break;
        }
    }
    require(static_cast<bool>(out), "write failed: " + path);
}

float exact_distance(std::span<const float> q, std::span<const float> x, Metric metric) {
    require(q.size() == x.size(), "exact_distance: dimension mismatch");
    const size_t d = q.size();
    switch (metric) {
        case Metric::euclidean:
            return l2_sq(q.data(), x.data(), d);
        case Metric::angular: {
            float nq = norm2(q.data(), d);
            float nx = norm2(x.data(), d);
            if (nq == 0.f || nx == 0.f) return 1.0f;  // zero vector: treat as orthogonal
            return 1.0f - dot(q.data(), x.data(), d) / std::sqrt(nq * nx);
        }
        case Metric::inner_product:
            return -dot(q.data(), x.data(), d);
    }
    fail("bad metric");
}

GroundTruth brute_force_knn(const VectorDataset& base, const VectorDataset& queries, size_t k) {
    require(k >= 1 && k <= base.n, "brute_force_knn: k must be in [1, N]");
    require(base.d == queries.d, "brute_force_knn: dimension mismatch");
    GroundTruth gt;
    gt.k = k;
    gt.num_queries = queries.n;
    gt.ids.resize(queries.n * k);
    gt.dists.resize(queries.n * k);

#pragma omp parallel for schedule(dynamic, 8)
    for (int64_t q = 0; q < static_cast<int64_t>(queries.n); q++) {
        auto qv = queries.row(q);
        // (distance, id) max-heap of size k; ties broken by smaller id.
        std::vector<std::pair<float, vertex_t>> heap;
        heap.reserve(k + 1);
        auto worse = [](const std::pair<float, vertex_t>& a, const std::pair<float, vertex_t>& b) {
            return a < b;  // max-heap on (dist, id)
        };
        for (size_t i = 0; i < base.n; i++) {
            float dist = exact_distance(qv, base.row(i), base.metric);
            std::pair<float, vertex_t> cand{dist, static_cast<vertex_t>(i)};
            if (heap.size() < k) {
                heap.push_back(cand);
                std::push_heap(heap.begin(), heap.end(), worse);
            } else if (cand < heap.front()) {
                std::pop_heap(heap.begin(), heap.end(), worse);
                heap.back() = cand;
                std::push_heap(heap.begin(), heap.end(), worse);
            }
        }
        std::sort_heap(heap.begin(), heap.end(), worse);
        for (size_t j = 0; j < k; j++) {
            gt.ids[q * k + j] = heap[j].second;
            gt.dists[q * k + j] = heap[j].first;
        }
    }
    return gt;
}

GroundTruth ground_truth_cached(const VectorDataset& base, const VectorDataset& queries,
                                size_t k, const std::string& cache_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(cache_dir);
    uint64_t key = dataset_hash(base);
    key = fnv1a64(queries.data.data(), queries.data.size() * 4, key);
    key = splitmix64(key ^ (static_cast<uint64_t>(base.metric) << 32) ^ k);
    char name[64];
    std::snprintf(name, sizeof(name), "gt_%016llx_k%zu", static_cast<unsigned long long>(key), k);
    const std::string id_path = cache_dir + "/" + name + ".ivecs";
    const std::string dist_path = cache_dir + "/" + name + ".fvecs";

    if (fs::exists(id_path) && fs::exists(dist_path)) {
        auto id_ds = load_vectors(id_path, VecFormat::ivecs);
        auto dist_ds = load_vectors(dist_path, VecFormat::fvecs);
        if (id_ds.n == queries.n && id_ds.d == k && dist_ds.n == queries.n && dist_ds.d == k) {
            GroundTruth gt;
            gt.k = k;
            gt.num_queries = queries.n;
            gt.ids.resize(queries.n * k);
            gt.dists = dist_ds.data;
            for (size_t i = 0; i < gt.ids.size(); i++)
                gt.ids[i] = static_cast<vertex_t>(id_ds.data[i]);
            return gt;
        }
    }

    GroundTruth gt = brute_force_knn(base, queries, k);
    VectorDataset id_ds, dist_ds;
    id_ds.n = dist_ds.n = queries.n;
    id_ds.d = dist_ds.d = k;
    id_ds.data.assign(gt.ids.begin(), gt.ids.end());
    dist_ds.data = gt.dists;
    write_vectors(id_path, VecFormat::ivecs, id_ds);
    write_vectors(dist_path, VecFormat::fvecs, dist_ds);
    return gt;
}

double recall_at_k(const std::vector<std::vector<vertex_t>>& found, const GroundTruth& truth,
                   size_t k) {
    require(found.size() == truth.num_queries, "recall_at_k: query count mismatch");
    require(truth.k >= k, "recall_at_k: ground truth has fewer than k entries");
    double total = 0.0;
    for (size_t q = 0; q < found.size(); q++) {
        require(found[q].size() >= k, "recall_at_k: result list shorter than k");
        auto truth_ids = truth.query_ids(q);
        std::vector<vertex_t> t(truth_ids.begin(), truth_ids.begin() + k);
        std::sort(t.begin(), t.end());
        size_t hits = 0;
        for (size_t j = 0; j < k; j++)
            hits += std::binary_search(t.begin(), t.end(), found[q][j]) ? 1 : 0;
        total += static_cast<double>(hits) / static_cast<double>(k);
    }
    return total / static_cast<double>(found.size());
}

uint64_t dataset_hash(const VectorDataset& ds) {
    uint64_t h = fnv1a64(ds.data.data(), ds.data.size() * 4);
    h = fnv1a64(&ds.n, sizeof(ds.n), h);
    h = fnv1a64(&ds.d, sizeof(ds.d), h);
    return h;
}

}  // namespace proxima
