#include <doctest.h>

#include <filesystem>
#include <random>

#include "proxima/pq.hpp"
#include "proxima/synth.hpp"

using namespace proxima;

namespace {

std::string tmp_path(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "proxima_tests";
    std::filesystem::create_directories(dir);
    return (dir / name).string();
}

// C distinct values per subspace so a perfect codebook exists
VectorDataset grid_dataset(uint32_t c, uint32_t d) {
    VectorDataset ds;
    ds.n = c;
    ds.d = d;
    ds.data.resize(size_t(c) * d);
    for (uint32_t i = 0; i < c; i++)
        for (uint32_t j = 0; j < d; j++) ds.data[size_t(i) * d + j] = float(i * 10 + j);
    return ds;
}

}  // namespace

TEST_CASE("perfect codebook reproduces a C-point dataset with zero error") {
    auto ds = grid_dataset(8, 4);
    auto model = train_pq(ds, 2, 8, 15, 1);
    CHECK(quantization_error(model, ds) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("training is deterministic for a fixed seed") {
    auto ds = make_sift_like(600, 16, 42, 32, 12.0);
    auto a = train_pq(ds, 4, 16, 10, 5);
    auto b = train_pq(ds, 4, 16, 10, 5);
    CHECK(a.codebooks == b.codebooks);  // bit identical
    auto c = train_pq(ds, 4, 16, 10, 6);
    CHECK(a.codebooks != c.codebooks);
}

TEST_CASE("mean quantization error is non-increasing over k-means iterations") {
    auto ds = make_sift_like(10000, 32, 7, 64, 15.0);
    double prev = std::numeric_limits<double>::max();
    for (uint32_t iters : {1u, 5u, 15u, 25u}) {
        auto model = train_pq(ds, 8, 32, iters, 3);
        double err = quantization_error(model, ds, 2000);
        CHECK(err <= prev * (1.0 + 1e-9));
        prev = err;
    }
}

TEST_CASE("train_pq validates inputs") {
    auto ds = make_uniform(10, 8, 1);
    CHECK_THROWS_AS(train_pq(ds, 2, 16, 5, 1), error);  // N < C
    CHECK_THROWS_AS(train_pq(ds, 9, 4, 5, 1), error);   // M > D
}

TEST_CASE("encode maps centroid reconstructions to their own index") {
    auto ds = make_sift_like(500, 12, 9, 24, 10.0);
    auto model = train_pq(ds, 3, 16, 12, 2);
    // build a vector from centroid j of every subspace
    for (uint32_t j : {0u, 5u, 15u}) {
        std::vector<float> v(model.d);
        for (uint32_t s = 0; s < model.m; s++) {
            const float* cen = model.centroid(s, j);
            std::copy(cen, cen + model.sub_dim[s], v.data() + model.sub_offset[s]);
        }
        std::vector<uint8_t> code(model.m);
        model.encode_one(v, code.data());
        for (uint32_t s = 0; s < model.m; s++) CHECK(code[s] == j);
    }
}

TEST_CASE("encode output is in range and matches a naive scan") {
    auto ds = make_sift_like(1000, 16, 11, 32, 14.0);
    auto model = train_pq(ds, 4, 32, 10, 4);
    auto codes = encode(model, ds);
    std::vector<float> prep(model.d);
    for (size_t i = 0; i < ds.n; i++) {
        auto code = codes.row(i);
        model.prepare(ds.row(i), prep.data());
        for (uint32_t s = 0; s < model.m; s++) {
            CHECK(code[s] < model.c);
            // naive argmin over all C centroids
            float best = std::numeric_limits<float>::max();
            uint32_t best_j = 0;
            for (uint32_t j = 0; j < model.c; j++) {
                const float* cen = model.centroid(s, j);
                float dist = 0;
                for (uint32_t t = 0; t < model.sub_dim[s]; t++) {
                    float diff = prep[model.sub_offset[s] + t] - cen[t];
                    dist += diff * diff;
                }
                if (dist < best) {
                    best = dist;
                    best_j = j;
                }
            }
            CHECK(code[s] == best_j);
        }
    }
}

TEST_CASE("quantizer is a projection: encode(reconstruct(encode(x))) == encode(x)") {
    auto ds = make_sift_like(300, 12, 13, 16, 20.0);
    auto model = train_pq(ds, 3, 16, 10, 7);
    std::vector<uint8_t> code(model.m), code2(model.m);
    for (size_t i = 0; i < 50; i++) {
        model.encode_one(ds.row(i), code.data());
        auto rec = model.reconstruct(code);
        model.encode_one(rec, code2.data());
        CHECK(code == code2);
    }
}

TEST_CASE("ADT shape and zero at own centroid") {
    auto ds = grid_dataset(8, 6);
    auto model = train_pq(ds, 2, 8, 15, 1);
    // query assembled from centroid 3 of each subspace
    std::vector<float> q(model.d);
    for (uint32_t s = 0; s < model.m; s++) {
        const float* cen = model.centroid(s, 3);
        std::copy(cen, cen + model.sub_dim[s], q.data() + model.sub_offset[s]);
    }
    auto adt = build_adt(model, q);
    CHECK(adt.m == model.m);
    CHECK(adt.c == model.c);
    CHECK(adt.values.size() == size_t(model.m) * model.c);
    for (uint32_t s = 0; s < model.m; s++) CHECK(adt.row(s)[3] == doctest::Approx(0.0));
}

TEST_CASE("pq_distance is the exact sum of table lookups") {
    DistanceTable adt;
    adt.m = 2;
    adt.c = 4;
    adt.values = {1.5f, 9, 9, 9, 9, 9, 2.5f, 9};
    std::vector<uint8_t> code = {0, 2};
    CHECK(pq_distance(adt, code) == 4.0f);

    DistanceTable zeros;
    zeros.m = 3;
    zeros.c = 2;
    zeros.values.assign(6, 0.f);
    std::vector<uint8_t> zcode = {0, 1, 0};
    CHECK(pq_distance(zeros, zcode) == 0.0f);

    std::vector<uint8_t> bad = {0, 4};
    CHECK_THROWS_AS(pq_distance(adt, bad), error);
}

TEST_CASE("pq_distance equals exact distance to the reconstruction") {
    for (Metric metric : {Metric::euclidean, Metric::inner_product, Metric::angular}) {
        auto ds = make_sift_like(800, 16, 15, 32, 12.0);
        ds.metric = metric;
        auto model = train_pq(ds, 4, 32, 12, 8);
        std::mt19937_64 rng(99);
        std::uniform_int_distribution<size_t> uni(0, ds.n - 1);
        std::vector<uint8_t> code(model.m);
        for (int trial = 0; trial < 100; trial++) {
            size_t qi = uni(rng), xi = uni(rng);
            auto adt = build_adt(model, ds.row(qi));
            model.encode_one(ds.row(xi), code.data());
            float approx = pq_distance(adt, code);
            auto rec = model.reconstruct(code);
            // the decomposition target: exact distance in the quantizer's space
            float want;
            if (metric == Metric::inner_product) {
                want = exact_distance(ds.row(qi), rec, Metric::inner_product);
            } else if (metric == Metric::euclidean) {
                want = exact_distance(ds.row(qi), rec, Metric::euclidean);
            } else {
                std::vector<float> pq_(model.d);
                model.prepare(ds.row(qi), pq_.data());
                want = l2_sq(pq_.data(), rec.data(), model.d);
            }
            CHECK(approx == doctest::Approx(want).epsilon(2e-4));
        }
        // independent recomputation of the summation
        auto adt = build_adt(model, ds.row(0));
        model.encode_one(ds.row(1), code.data());
        float manual = 0;
        for (uint32_t s = 0; s < model.m; s++) manual += adt.row(s)[code[s]];
        CHECK(pq_distance(adt, code) == manual);
    }
}

TEST_CASE("pq distances are non-negative for euclidean") {
    auto ds = make_sift_like(400, 8, 17, 16, 25.0);
    auto model = train_pq(ds, 2, 16, 8, 9);
    auto codes = encode(model, ds);
    auto adt = build_adt(model, ds.row(0));
    for (size_t i = 0; i < ds.n; i++) CHECK(pq_distance(adt, codes.row(i)) >= 0.f);
}

TEST_CASE("calibrate_beta: zero quantization error gives beta = 1") {
    auto ds = grid_dataset(16, 4);
    auto model = train_pq(ds, 2, 16, 20, 1);
    REQUIRE(quantization_error(model, ds) == doctest::Approx(0.0));
    auto cal = calibrate_beta(model, ds, 16, 0.99f, 3);
    CHECK(cal.beta == 1.0f);
}

TEST_CASE("calibrate_beta percentile is monotone over the sample") {
    auto ds = make_sift_like(2000, 16, 19, 8, 30.0);
    auto model = train_pq(ds, 4, 16, 8, 10);
    auto hi = calibrate_beta(model, ds, 500, 0.99f, 5);
    auto mid = calibrate_beta(model, ds, 500, 0.50f, 5);
    CHECK(hi.beta >= mid.beta);
    CHECK(hi.beta >= 1.0f);
}

TEST_CASE("pq model and codes round trip through files") {
    auto ds = make_sift_like(300, 10, 23, 16, 16.0);
    auto model = train_pq(ds, 5, 16, 6, 12);
    auto codes = encode(model, ds);
    auto mpath = tmp_path("model.pq");
    auto cpath = tmp_path("codes.pqc");
    save_pq(mpath, model);
    save_codes(cpath, codes);
    auto model2 = load_pq(mpath);
    auto codes2 = load_codes(cpath);
    CHECK(model2.codebooks == model.codebooks);
    CHECK(model2.sub_dim == model.sub_dim);
    CHECK(model2.metric == model.metric);
    CHECK(codes2.codes == codes.codes);
}

TEST_CASE("uneven dimensions are split front-loaded") {
    auto ds = make_uniform(64, 10, 25);
    auto model = train_pq(ds, 3, 8, 4, 1);
    CHECK(model.sub_dim == std::vector<uint32_t>{4, 3, 3});
}
