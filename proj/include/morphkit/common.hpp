#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace morphkit {

// ---------------------------------------------------------------- errors

struct mk_error : std::runtime_error {
    explicit mk_error(const std::string& msg) : std::runtime_error(msg) {}
};
struct file_error : mk_error {
    explicit file_error(const std::string& msg) : mk_error(msg) {}
};
struct parse_error : mk_error {
    explicit parse_error(const std::string& msg) : mk_error(msg) {}
};
struct config_error : mk_error {
    explicit config_error(const std::string& msg) : mk_error(msg) {}
};
struct numeric_error : mk_error {
    explicit numeric_error(const std::string& msg) : mk_error(msg) {}
};

namespace detail {
inline void cat_one(std::ostringstream&) {}
template <typename T, typename... R>
void cat_one(std::ostringstream& os, const T& t, const R&... r) {
    os << t;
    cat_one(os, r...);
}
}  // namespace detail

template <typename... A>
std::string cat(const A&... a) {
    std::ostringstream os;
    os.precision(17);
    detail::cat_one(os, a...);
    return os.str();
}

inline void warn(const std::string& msg) { std::cerr << "[morphkit] warning: " << msg << "\n"; }

// ---------------------------------------------------------------- vec3

struct Vec3 {
    double x = 0, y = 0, z = 0;

    double& operator[](int i) { return (&x)[i]; }
    double operator[](int i) const { return (&x)[i]; }

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    Vec3 operator-() const { return {-x, -y, -z}; }
    Vec3& operator+=(const Vec3& o) {
        x += o.x;
        y += o.y;
        z += o.z;
        return *this;
    }
    Vec3& operator-=(const Vec3& o) {
        x -= o.x;
        y -= o.y;
        z -= o.z;
        return *this;
    }
    Vec3& operator*=(double s) {
        x *= s;
        y *= s;
        z *= s;
        return *this;
    }
    bool operator==(const Vec3& o) const { return x == o.x && y == o.y && z == o.z; }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }
inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm2(const Vec3& v) { return dot(v, v); }
inline double norm(const Vec3& v) { return std::sqrt(norm2(v)); }
inline Vec3 normalized(const Vec3& v) {
    double n = norm(v);
    return n > 0 ? v / n : Vec3{0, 0, 0};
}

// ---------------------------------------------------------------- rng
//
// SplitMix64 (Steele/Lea/Flood 2014). One 64-bit word of state, advanced by a
// fixed odd increment and finalized by a bijective mixer. Chosen because the
// full generator state is a single integer, which checkpoints serialize so
// replays resume mid-stream bit-exactly.

struct Rng {
    uint64_t state = 0;

    explicit Rng(uint64_t seed = 0) : state(seed) {}

    uint64_t next() {
        state += 0x9E3779B97F4A7C15ULL;
        uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
    // uniform in [0,1), 53 random bits
    double uniform() { return double(next() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    uint64_t below(uint64_t n) { return next() % n; }
};

// ---------------------------------------------------------------- hashing

inline uint64_t fnv1a64(const void* data, size_t len, uint64_t h = 0xcbf29ce484222325ULL) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline uint64_t hash_doubles(const std::vector<double>& v, uint64_t h = 0xcbf29ce484222325ULL) {
    return v.empty() ? h : fnv1a64(v.data(), v.size() * sizeof(double), h);
}

inline std::string hex64(uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// ---------------------------------------------------------------- little-endian io

inline void put_u32(std::string& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
}
inline void put_u64(std::string& out, uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
}
inline void put_f64(std::string& out, double d) {
    uint64_t v;
    std::memcpy(&v, &d, 8);
    put_u64(out, v);
}
inline void put_f32(std::string& out, float f) {
    uint32_t v;
    std::memcpy(&v, &f, 4);
    put_u32(out, v);
}

// Cursor over a byte buffer; read failures report the byte offset.
struct ByteReader {
    const std::string& buf;
    size_t pos = 0;
    std::string what;  // used in error messages

    ByteReader(const std::string& b, std::string w) : buf(b), what(std::move(w)) {}

    void need(size_t n) const {
        if (pos + n > buf.size())
            throw parse_error(cat(what, ": truncated at byte offset ", pos));
    }
    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= uint32_t(uint8_t(buf[pos + i])) << (8 * i);
        pos += 4;
        return v;
    }
    uint64_t u64() {
        need(8);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= uint64_t(uint8_t(buf[pos + i])) << (8 * i);
        pos += 8;
        return v;
    }
    double f64() {
        uint64_t v = u64();
        double d;
        std::memcpy(&d, &v, 8);
        return d;
    }
    float f32() {
        uint32_t v = u32();
        float f;
        std::memcpy(&f, &v, 4);
        return f;
    }
    std::string bytes(size_t n) {
        need(n);
        std::string s = buf.substr(pos, n);
        pos += n;
        return s;
    }
};

inline std::string read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw file_error(cat("cannot open file: ", path));
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file_bytes(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw file_error(cat("cannot write file: ", path));
    out.write(bytes.data(), std::streamsize(bytes.size()));
    if (!out) throw file_error(cat("write failed: ", path));
}

// ---------------------------------------------------------------- parallel_for

inline int resolve_thread_count(int requested = 0) {
    if (requested <= 0) {
        if (const char* env = std::getenv("MORPHKIT_THREADS")) {
            requested = std::atoi(env);
        }
    }
    if (requested <= 0) requested = int(std::thread::hardware_concurrency());
    return std::max(1, requested);
}

// Static contiguous split. Each index is handled exactly once and workers
// only write to their own slots, so results are thread-count independent.
template <typename Fn>
void parallel_for(size_t n, Fn&& fn, int threads = 0) {
    threads = resolve_thread_count(threads);
    if (threads == 1 || n < 2) {
        for (size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    size_t nt = std::min<size_t>(size_t(threads), n);
    std::vector<std::thread> pool;
    pool.reserve(nt);
    for (size_t w = 0; w < nt; ++w) {
        size_t lo = n * w / nt, hi = n * (w + 1) / nt;
        pool.emplace_back([lo, hi, &fn] {
            for (size_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace morphkit
