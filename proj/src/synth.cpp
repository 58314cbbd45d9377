#include "proxima/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace proxima {

VectorDataset make_sift_like(size_t n, size_t d, uint64_t seed, size_t clusters, double sigma) {
    require(n >= 1 && d >= 1 && clusters >= 1, "make_sift_like: bad shape");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> center_dist(0.0, 200.0);
    std::normal_distribution<double> noise(0.0, sigma);

    std::vector<double> centers(clusters * d);
    for (auto& v : centers) v = center_dist(rng);

    VectorDataset ds;
    ds.n = n;
    ds.d = d;
    ds.metric = Metric::euclidean;
    ds.data.resize(n * d);
    std::uniform_int_distribution<size_t> pick(0, clusters - 1);
    for (size_t i = 0; i < n; i++) {
        const double* c = centers.data() + pick(rng) * d;
        float* row = ds.row_mut(i);
        for (size_t j = 0; j < d; j++) {
            double v = std::round(c[j] + noise(rng));
            row[j] = static_cast<float>(std::clamp(v, 0.0, 255.0));
        }
    }
    return ds;
}

VectorDataset make_glove_like(size_t n, size_t d, uint64_t seed, size_t clusters, double sigma) {
    require(n >= 1 && d >= 1 && clusters >= 1, "make_glove_like: bad shape");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::normal_distribution<double> noise(0.0, sigma);
    std::lognormal_distribution<double> scale(1.1, 0.35);  // varying norms, like word vectors

    std::vector<double> centers(clusters * d);
    for (size_t c = 0; c < clusters; c++) {
        double* center = centers.data() + c * d;
        double norm = 0;
        for (size_t j = 0; j < d; j++) {
            center[j] = gauss(rng);
            norm += center[j] * center[j];
        }
        norm = std::sqrt(norm);
        for (size_t j = 0; j < d; j++) center[j] /= norm;
    }

    VectorDataset ds;
    ds.n = n;
    ds.d = d;
    ds.metric = Metric::angular;
    ds.data.resize(n * d);
    std::uniform_int_distribution<size_t> pick(0, clusters - 1);
    for (size_t i = 0; i < n; i++) {
        const double* c = centers.data() + pick(rng) * d;
        double s = scale(rng);
        float* row = ds.row_mut(i);
        for (size_t j = 0; j < d; j++)
            row[j] = static_cast<float>(s * (c[j] + noise(rng)));
    }
    return ds;
}

VectorDataset make_uniform(size_t n, size_t d, uint64_t seed, float lo, float hi, Metric metric) {
    require(n >= 1 && d >= 1 && lo < hi, "make_uniform: bad shape");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> uni(lo, hi);
    VectorDataset ds;
    ds.n = n;
    ds.d = d;
    ds.metric = metric;
    ds.data.resize(n * d);
    for (auto& v : ds.data) v = uni(rng);
    return ds;
}

GraphIndex make_scale_test_graph(size_t n, uint32_t r, uint64_t seed, double local_fraction) {
    require(n >= 2 && r >= 2, "make_scale_test_graph: bad shape");
    GraphIndex g;
    g.n = n;
    g.r = r;
    g.entry = 0;
    g.adj.resize(n);

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<vertex_t> any(0, static_cast<vertex_t>(n - 1));
    std::geometric_distribution<int64_t> near(1.0 / 1024.0);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::vector<vertex_t> row;
    for (size_t v = 0; v < n; v++) {
        row.clear();
        while (row.size() < r) {
            vertex_t nb;
            if (coin(rng) < local_fraction) {
                int64_t off = near(rng) + 1;
                if (coin(rng) < 0.5) off = -off;
                int64_t t = static_cast<int64_t>(v) + off;
                if (t < 0 || t >= static_cast<int64_t>(n)) continue;
                nb = static_cast<vertex_t>(t);
            } else {
                nb = any(rng);
            }
            if (nb == v) continue;
            if (std::find(row.begin(), row.end(), nb) != row.end()) continue;
            row.push_back(nb);
        }
        // chain edge keeps the graph connected from the entry point
        vertex_t next = static_cast<vertex_t>((v + 1) % n);
        if (next != v && std::find(row.begin(), row.end(), next) == row.end()) row[0] = next;
        g.adj[v] = row;
    }
    return g;
}

}  // namespace proxima
