#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace proxima {

using vertex_t = uint32_t;

class error : public std::runtime_error {
  public:
    explicit error(const std::string& msg) : std::runtime_error(msg) {}
};

[[noreturn]] inline void fail(const std::string& msg) { throw error(msg); }

inline void require(bool ok, const std::string& msg) {
    if (!ok) fail(msg);
}

// FNV-1a, used for artifact/manifest hashing and dataset cache keys.
inline uint64_t fnv1a64(const void* data, size_t len, uint64_t h = 0xcbf29ce484222325ULL) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < len; i++) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Little-endian POD stream helpers. All file formats in this project are
// little-endian; x86 hosts write through directly.
template <typename T>
void write_pod(std::ostream& out, const T& v) {
    static_assert(std::is_trivially_copyable_v<T>);
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
    static_assert(std::is_trivially_copyable_v<T>);
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) fail("unexpected end of file");
    return v;
}

template <typename T>
void write_vec(std::ostream& out, const std::vector<T>& v) {
    static_assert(std::is_trivially_copyable_v<T>);
    write_pod<uint64_t>(out, v.size());
    out.write(reinterpret_cast<const char*>(v.data()), sizeof(T) * v.size());
}

template <typename T>
std::vector<T> read_vec(std::istream& in) {
    static_assert(std::is_trivially_copyable_v<T>);
    auto n = read_pod<uint64_t>(in);
    std::vector<T> v(n);
    in.read(reinterpret_cast<char*>(v.data()), sizeof(T) * n);
    if (!in) fail("unexpected end of file");
    return v;
}

inline std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail("cannot open for writing: " + path);
    return out;
}

inline std::ifstream open_in(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("cannot open for reading: " + path);
    return in;
}

inline uint64_t hash_file(const std::string& path) {
    auto in = open_in(path);
    uint64_t h = 0xcbf29ce484222325ULL;
    std::vector<char> buf(1 << 20);
    while (in) {
        in.read(buf.data(), buf.size());
        h = fnv1a64(buf.data(), static_cast<size_t>(in.gcount()), h);
    }
    return h;
}

// Distance kernels. d is small (< 1024); plain loops vectorize under -O3.
inline float l2_sq(const float* a, const float* b, size_t d) {
    float acc = 0.f;
#pragma omp simd reduction(+ : acc)
    for (size_t i = 0; i < d; i++) {
        float t = a[i] - b[i];
        acc += t * t;
    }
    return acc;
}

inline float dot(const float* a, const float* b, size_t d) {
    float acc = 0.f;
#pragma omp simd reduction(+ : acc)
    for (size_t i = 0; i < d; i++) acc += a[i] * b[i];
    return acc;
}

inline float norm2(const float* a, size_t d) { return dot(a, a, d); }

}  // namespace proxima
