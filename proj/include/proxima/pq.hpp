#pragma once

#include <span>
#include <string>
#include <vector>

#include "proxima/dataset.hpp"

namespace proxima {

// Product quantizer: M subquantizers with C centroids each, trained per
// subspace with k-means. For angular datasets the quantizer operates on
// unit-normalized vectors so the table decomposition stays additive.
struct PQModel {
    uint32_t m = 0;
    uint32_t c = 0;
    uint32_t d = 0;
    Metric metric = Metric::euclidean;
    std::vector<uint32_t> sub_dim;     // m entries, sums to d
    std::vector<uint32_t> sub_offset;  // m entries, prefix sums
    std::vector<float> codebooks;      // concatenated m blocks of c * sub_dim[i]

    const float* centroid(uint32_t sub, uint32_t idx) const;
    size_t codebook_offset(uint32_t sub) const;

    // Copies x (normalized first for angular) into out, which must hold d floats.
    void prepare(std::span<const float> x, float* out) const;
    void encode_one(std::span<const float> x, uint8_t* code_out) const;
    std::vector<float> reconstruct(std::span<const uint8_t> code) const;
};

struct PQCodes {
    size_t n = 0;
    uint32_t m = 0;
    std::vector<uint8_t> codes;  // n * m

    std::span<const uint8_t> row(size_t i) const { return {codes.data() + i * m, m}; }
};

// Per-query table of partial distances: m rows of c entries.
struct DistanceTable {
    uint32_t m = 0;
    uint32_t c = 0;
    std::vector<float> values;  // m * c

    const float* row(uint32_t i) const { return values.data() + i * c; }
};

struct BetaCalibration {
    float beta = 1.0f;
    float percentile = 0.99f;
    size_t sample_size = 0;
    size_t used_pairs = 0;
};

PQModel train_pq(const VectorDataset& ds, uint32_t m, uint32_t c, uint32_t iters, uint64_t seed,
                 size_t train_sample = 100000);

PQCodes encode(const PQModel& model, const VectorDataset& ds);

DistanceTable build_adt(const PQModel& model, std::span<const float> q);

inline float pq_distance(const DistanceTable& adt, std::span<const uint8_t> code) {
    require(code.size() == adt.m, "pq_distance: code length mismatch");
    float acc = 0.f;
    for (uint32_t i = 0; i < adt.m; i++) {
        require(code[i] < adt.c, "pq_distance: code entry out of range");
        acc += adt.values[static_cast<size_t>(i) * adt.c + code[i]];
    }
    return acc;
}

// Unchecked variant for the search inner loop (codes are validated on load).
inline float pq_distance_fast(const DistanceTable& adt, const uint8_t* code) {
    float acc = 0.f;
    const float* v = adt.values.data();
    const size_t c = adt.c;
    for (uint32_t i = 0; i < adt.m; i++) acc += v[i * c + code[i]];
    return acc;
}

// Exact distance in the additive space the quantizer approximates:
// squared L2 (euclidean), squared L2 on normalized vectors (angular),
// negated dot product (inner_product). Used for beta calibration.
float pq_space_distance(const PQModel& model, std::span<const float> q, std::span<const float> x);

// Samples base vectors as queries against random base vectors and returns the
// requested percentile of pq/exact distance ratios, clamped to >= 1.
BetaCalibration calibrate_beta(const PQModel& model, const VectorDataset& ds, size_t sample_size,
                               float percentile, uint64_t seed);

// Mean squared quantization error in the quantizer's working space.
double quantization_error(const PQModel& model, const VectorDataset& ds, size_t sample = 0);

void save_pq(const std::string& path, const PQModel& model);
PQModel load_pq(const std::string& path);
void save_codes(const std::string& path, const PQCodes& codes);
PQCodes load_codes(const std::string& path);

}  // namespace proxima
