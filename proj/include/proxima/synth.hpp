#pragma once

#include "proxima/dataset.hpp"
#include "proxima/graph.hpp"

namespace proxima {

// Deterministic synthetic datasets for desk-scale experiments. sift_like
// produces clustered integer-valued vectors in [0, 255] (euclidean,
// D = 128 by default); glove_like produces clustered embedding-style
// vectors with varying norms (angular, D = 100 by default).
VectorDataset make_sift_like(size_t n, size_t d, uint64_t seed, size_t clusters = 512,
                             double sigma = 18.0);
VectorDataset make_glove_like(size_t n, size_t d, uint64_t seed, size_t clusters = 256,
                              double sigma = 0.35);
VectorDataset make_uniform(size_t n, size_t d, uint64_t seed, float lo = 0.f, float hi = 1.f,
                           Metric metric = Metric::euclidean);

// A degree-bounded random graph with ANN-like locality skew, used to study
// index compression at scales where building a real graph is impractical.
GraphIndex make_scale_test_graph(size_t n, uint32_t r, uint64_t seed, double local_fraction = 0.5);

}  // namespace proxima
