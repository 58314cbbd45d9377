#include "proxima/pq.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace proxima {

const float* PQModel::centroid(uint32_t sub, uint32_t idx) const {
    return codebooks.data() + codebook_offset(sub) + static_cast<size_t>(idx) * sub_dim[sub];
}

size_t PQModel::codebook_offset(uint32_t sub) const {
    size_t off = 0;
    for (uint32_t i = 0; i < sub; i++) off += static_cast<size_t>(c) * sub_dim[i];
    return off;
}

void PQModel::prepare(std::span<const float> x, float* out) const {
    require(x.size() == d, "PQModel: dimension mismatch");
    if (metric == Metric::angular) {
        float n = std::sqrt(norm2(x.data(), d));
        if (n == 0.f) n = 1.f;
        for (uint32_t i = 0; i < d; i++) out[i] = x[i] / n;
    } else {
        std::copy(x.begin(), x.end(), out);
    }
}

void PQModel::encode_one(std::span<const float> x, uint8_t* code_out) const {
    std::vector<float> prep(d);
    prepare(x, prep.data());
    for (uint32_t s = 0; s < m; s++) {
        const float* sub = prep.data() + sub_offset[s];
        const uint32_t sd = sub_dim[s];
        float best = std::numeric_limits<float>::max();
        uint32_t best_idx = 0;
        for (uint32_t j = 0; j < c; j++) {
            float dist = l2_sq(sub, centroid(s, j), sd);
            if (dist < best) {
                best = dist;
                best_idx = j;
            }
        }
        code_out[s] = static_cast<uint8_t>(best_idx);
    }
}

std::vector<float> PQModel::reconstruct(std::span<const uint8_t> code) const {
    require(code.size() == m, "reconstruct: code length mismatch");
    std::vector<float> out(d);
    for (uint32_t s = 0; s < m; s++) {
        require(code[s] < c, "reconstruct: code entry out of range");
        const float* cen = centroid(s, code[s]);
        std::copy(cen, cen + sub_dim[s], out.data() + sub_offset[s]);
    }
    return out;
}

namespace {

// k-means++ seeding over one subspace. rows: n_train * sd column block.
void kmeanspp_init(const std::vector<float>& block, size_t n, uint32_t sd, uint32_t c,
                   std::mt19937_64& rng, float* centroids) {
    std::uniform_int_distribution<size_t> uni(0, n - 1);
    size_t first = uni(rng);
    std::copy_n(block.data() + first * sd, sd, centroids);

    std::vector<float> min_dist(n);
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < static_cast<int64_t>(n); i++)
        min_dist[i] = l2_sq(block.data() + i * sd, centroids, sd);

    std::vector<double> cumsum(n);
    for (uint32_t j = 1; j < c; j++) {
        double total = 0.0;
        for (size_t i = 0; i < n; i++) {
            total += min_dist[i];
            cumsum[i] = total;
        }
        size_t pick;
        if (total <= 0.0) {
            pick = uni(rng);  // all points coincide with a centroid
        } else {
            std::uniform_real_distribution<double> ur(0.0, total);
            double target = ur(rng);
            pick = std::lower_bound(cumsum.begin(), cumsum.end(), target) - cumsum.begin();
            if (pick >= n) pick = n - 1;
        }
        float* cj = centroids + static_cast<size_t>(j) * sd;
        std::copy_n(block.data() + pick * sd, sd, cj);
#pragma omp parallel for schedule(static)
        for (int64_t i = 0; i < static_cast<int64_t>(n); i++) {
            float dist = l2_sq(block.data() + i * sd, cj, sd);
            if (dist < min_dist[i]) min_dist[i] = dist;
        }
    }
}

// Lloyd iterations with deterministic updates: assignment is a pure parallel
// map, the centroid update accumulates serially in point order.
void kmeans_run(const std::vector<float>& block, size_t n, uint32_t sd, uint32_t c,
                uint32_t iters, std::mt19937_64& rng, float* centroids) {
    kmeanspp_init(block, n, sd, c, rng, centroids);
    std::vector<uint32_t> assign(n);
    std::vector<double> sums(static_cast<size_t>(c) * sd);
    std::vector<size_t> counts(c);

    for (uint32_t it = 0; it < iters; it++) {
#pragma omp parallel for schedule(static)
        for (int64_t i = 0; i < static_cast<int64_t>(n); i++) {
            const float* x = block.data() + i * sd;
            float best = std::numeric_limits<float>::max();
            uint32_t best_idx = 0;
            for (uint32_t j = 0; j < c; j++) {
                float dist = l2_sq(x, centroids + static_cast<size_t>(j) * sd, sd);
                if (dist < best) {
                    best = dist;
                    best_idx = j;
                }
            }
            assign[i] = best_idx;
        }

        std::fill(sums.begin(), sums.end(), 0.0);
        std::fill(counts.begin(), counts.end(), 0);
        for (size_t i = 0; i < n; i++) {
            const float* x = block.data() + i * sd;
            double* s = sums.data() + static_cast<size_t>(assign[i]) * sd;
            for (uint32_t t = 0; t < sd; t++) s[t] += x[t];
            counts[assign[i]]++;
        }

        for (uint32_t j = 0; j < c; j++) {
            if (counts[j] == 0) {
                // Re-seed from the farthest point of the largest cluster.
                uint32_t largest = static_cast<uint32_t>(
                    std::max_element(counts.begin(), counts.end()) - counts.begin());
                size_t far_i = 0;
                float far_dist = -1.f;
                for (size_t i = 0; i < n; i++) {
                    if (assign[i] != largest) continue;
                    float dist = l2_sq(block.data() + i * sd,
                                       centroids + static_cast<size_t>(largest) * sd, sd);
                    if (dist > far_dist) {
                        far_dist = dist;
                        far_i = i;
                    }
                }
                std::copy_n(block.data() + far_i * sd, sd,
                            centroids + static_cast<size_t>(j) * sd);
                // Move that point's mass out of the donor cluster.
                double* donor = sums.data() + static_cast<size_t>(largest) * sd;
                const float* x = block.data() + far_i * sd;
                for (uint32_t t = 0; t < sd; t++) donor[t] -= x[t];
                counts[largest]--;
                counts[j] = 1;
                double* s = sums.data() + static_cast<size_t>(j) * sd;
                for (uint32_t t = 0; t < sd; t++) s[t] = x[t];
                assign[far_i] = j;
            }
        }
        for (uint32_t j = 0; j < c; j++) {
            if (counts[j] == 0) continue;
            float* cj = centroids + static_cast<size_t>(j) * sd;
            const double* s = sums.data() + static_cast<size_t>(j) * sd;
            for (uint32_t t = 0; t < sd; t++)
                cj[t] = static_cast<float>(s[t] / static_cast<double>(counts[j]));
        }
    }
}

}  // namespace

PQModel train_pq(const VectorDataset& ds, uint32_t m, uint32_t c, uint32_t iters, uint64_t seed,
                 size_t train_sample) {
    ds.validate();
    require(m >= 1 && m <= ds.d, "train_pq: need 1 <= M <= D");
    require(c >= 1 && c <= 256, "train_pq: need 1 <= C <= 256 (one byte per component)");
    require(ds.n >= c, "train_pq: need N >= C training vectors");

    PQModel model;
    model.m = m;
    model.c = c;
    model.d = static_cast<uint32_t>(ds.d);
    model.metric = ds.metric;
    const uint32_t base = static_cast<uint32_t>(ds.d) / m;
    const uint32_t extra = static_cast<uint32_t>(ds.d) % m;
    uint32_t off = 0;
    for (uint32_t s = 0; s < m; s++) {
        uint32_t sd = base + (s < extra ? 1 : 0);
        model.sub_dim.push_back(sd);
        model.sub_offset.push_back(off);
        off += sd;
    }

    std::mt19937_64 rng(seed);
    size_t n_train = std::min(ds.n, std::max(train_sample, static_cast<size_t>(c)));
    std::vector<size_t> sample(ds.n);
    std::iota(sample.begin(), sample.end(), 0);
    if (n_train < ds.n) {
        std::shuffle(sample.begin(), sample.end(), rng);
        sample.resize(n_train);
        std::sort(sample.begin(), sample.end());
    }

    std::vector<float> prepared(n_train * ds.d);
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < static_cast<int64_t>(n_train); i++)
        model.prepare(ds.row(sample[i]), prepared.data() + i * ds.d);

    size_t total = 0;
    for (uint32_t s = 0; s < m; s++) total += static_cast<size_t>(c) * model.sub_dim[s];
    model.codebooks.resize(total);

    std::vector<float> block;
    for (uint32_t s = 0; s < m; s++) {
        const uint32_t sd = model.sub_dim[s];
        block.resize(n_train * sd);
        for (size_t i = 0; i < n_train; i++)
            std::copy_n(prepared.data() + i * ds.d + model.sub_offset[s], sd,
                        block.data() + i * sd);
        std::mt19937_64 sub_rng(splitmix64(seed ^ (0x9e3779b97f4a7c15ULL * (s + 1))));
        kmeans_run(block, n_train, sd, c, iters, sub_rng,
                   model.codebooks.data() + model.codebook_offset(s));
    }
    return model;
}

PQCodes encode(const PQModel& model, const VectorDataset& ds) {
    require(model.d == ds.d, "encode: dimension mismatch");
    PQCodes codes;
    codes.n = ds.n;
    codes.m = model.m;
    codes.codes.resize(ds.n * model.m);
#pragma omp parallel for schedule(dynamic, 256)
    for (int64_t i = 0; i < static_cast<int64_t>(ds.n); i++)
        model.encode_one(ds.row(i), codes.codes.data() + i * model.m);
    return codes;
}

DistanceTable build_adt(const PQModel& model, std::span<const float> q) {
    require(q.size() == model.d, "build_adt: dimension mismatch");
    DistanceTable adt;
    adt.m = model.m;
    adt.c = model.c;
    adt.values.resize(static_cast<size_t>(model.m) * model.c);
    std::vector<float> prep(model.d);
    model.prepare(q, prep.data());
    for (uint32_t s = 0; s < model.m; s++) {
        const float* sub = prep.data() + model.sub_offset[s];
        const uint32_t sd = model.sub_dim[s];
        float* row = adt.values.data() + static_cast<size_t>(s) * model.c;
        for (uint32_t j = 0; j < model.c; j++) {
            const float* cen = model.centroid(s, j);
            row[j] = model.metric == Metric::inner_product ? -dot(sub, cen, sd)
                                                           : l2_sq(sub, cen, sd);
        }
    }
    return adt;
}

float pq_space_distance(const PQModel& model, std::span<const float> q, std::span<const float> x) {
    require(q.size() == model.d && x.size() == model.d, "pq_space_distance: dimension mismatch");
    std::vector<float> pq(model.d), px(model.d);
    model.prepare(q, pq.data());
    model.prepare(x, px.data());
    if (model.metric == Metric::inner_product) return -dot(pq.data(), px.data(), model.d);
    return l2_sq(pq.data(), px.data(), model.d);
}

BetaCalibration calibrate_beta(const PQModel& model, const VectorDataset& ds, size_t sample_size,
                               float percentile, uint64_t seed) {
    require(sample_size >= 1 && sample_size <= ds.n, "calibrate_beta: sample_size must be in [1, N]");
    require(percentile > 0.f && percentile < 1.f, "calibrate_beta: percentile must be in (0,1)");
    require(model.d == ds.d, "calibrate_beta: dimension mismatch");

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<size_t> uni(0, ds.n - 1);
    std::vector<float> ratios;
    ratios.reserve(sample_size);
    std::vector<uint8_t> code(model.m);
    for (size_t s = 0; s < sample_size; s++) {
        size_t qi = uni(rng);
        size_t xi = uni(rng);
        auto adt = build_adt(model, ds.row(qi));
        model.encode_one(ds.row(xi), code.data());
        float approx = pq_distance(adt, code);
        float exact = pq_space_distance(model, ds.row(qi), ds.row(xi));
        if (approx <= 0.f || exact <= 0.f) continue;  // degenerate pair
        ratios.push_back(approx / exact);
    }
    if (ratios.empty()) fail("calibrate_beta: all sampled ratios degenerate");

    std::sort(ratios.begin(), ratios.end());
    size_t idx = static_cast<size_t>(std::ceil(percentile * ratios.size()));
    idx = idx == 0 ? 0 : idx - 1;
    if (idx >= ratios.size()) idx = ratios.size() - 1;

    BetaCalibration cal;
    cal.beta = std::max(1.0f, ratios[idx]);
    cal.percentile = percentile;
    cal.sample_size = sample_size;
    cal.used_pairs = ratios.size();
    return cal;
}

double quantization_error(const PQModel& model, const VectorDataset& ds, size_t sample) {
    require(model.d == ds.d, "quantization_error: dimension mismatch");
    size_t n = sample == 0 ? ds.n : std::min(ds.n, sample);
    double total = 0.0;
    std::vector<uint8_t> code(model.m);
    std::vector<float> prep(model.d);
    for (size_t i = 0; i < n; i++) {
        model.encode_one(ds.row(i), code.data());
        auto rec = model.reconstruct(code);
        model.prepare(ds.row(i), prep.data());
        total += l2_sq(prep.data(), rec.data(), model.d);
    }
    return total / static_cast<double>(n);
}

namespace {
constexpr uint32_t kPqMagic = 0x50515850;    // "PXPQ"
constexpr uint32_t kCodesMagic = 0x44435850;  // "PXCD"
constexpr uint32_t kVersion = 1;
}  // namespace

void save_pq(const std::string& path, const PQModel& model) {
    auto out = open_out(path);
    write_pod(out, kPqMagic);
    write_pod(out, kVersion);
    write_pod(out, model.m);
    write_pod(out, model.c);
    write_pod(out, model.d);
    write_pod(out, static_cast<uint32_t>(model.metric));
    write_vec(out, model.sub_dim);
    write_vec(out, model.codebooks);
}

PQModel load_pq(const std::string& path) {
    auto in = open_in(path);
    require(read_pod<uint32_t>(in) == kPqMagic, "not a PQ model file: " + path);
    require(read_pod<uint32_t>(in) == kVersion, "unsupported PQ model version in " + path);
    PQModel model;
    model.m = read_pod<uint32_t>(in);
    model.c = read_pod<uint32_t>(in);
    model.d = read_pod<uint32_t>(in);
    model.metric = static_cast<Metric>(read_pod<uint32_t>(in));
    model.sub_dim = read_vec<uint32_t>(in);
    model.codebooks = read_vec<float>(in);
    require(model.sub_dim.size() == model.m, "corrupt PQ model: sub_dim size");
    uint32_t off = 0;
    size_t total = 0;
    for (uint32_t s = 0; s < model.m; s++) {
        model.sub_offset.push_back(off);
        off += model.sub_dim[s];
        total += static_cast<size_t>(model.c) * model.sub_dim[s];
    }
    require(off == model.d, "corrupt PQ model: sub_dim sum != D");
    require(model.codebooks.size() == total, "corrupt PQ model: codebook size");
    for (float v : model.codebooks)
        require(std::isfinite(v), "corrupt PQ model: non-finite codebook entry");
    return model;
}

void save_codes(const std::string& path, const PQCodes& codes) {
    auto out = open_out(path);
    write_pod(out, kCodesMagic);
    write_pod(out, kVersion);
    write_pod(out, static_cast<uint64_t>(codes.n));
    write_pod(out, codes.m);
    out.write(reinterpret_cast<const char*>(codes.codes.data()), codes.codes.size());
    require(static_cast<bool>(out), "write failed: " + path);
}

PQCodes load_codes(const std::string& path) {
    auto in = open_in(path);
    require(read_pod<uint32_t>(in) == kCodesMagic, "not a PQ codes file: " + path);
    require(read_pod<uint32_t>(in) == kVersion, "unsupported PQ codes version in " + path);
    PQCodes codes;
    codes.n = read_pod<uint64_t>(in);
    codes.m = read_pod<uint32_t>(in);
    codes.codes.resize(codes.n * codes.m);
    in.read(reinterpret_cast<char*>(codes.codes.data()), codes.codes.size());
    require(static_cast<bool>(in), "truncated PQ codes file: " + path);
    return codes;
}

}  // namespace proxima
