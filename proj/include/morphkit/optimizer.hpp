#pragma once

#include <map>

#include "morphkit/tensor.hpp"

namespace morphkit {

/// Named parameter tensors with Adam moment buffers. Entry order is creation
/// order and is part of the determinism contract (initialization draws and
/// update sweeps follow it).
struct ParamStore {
    struct Entry {
        std::string name;
        Matrix value;
        Matrix grad;
        Matrix m;  // first moment
        Matrix v;  // second moment
    };

    std::vector<Entry> entries;
    std::map<std::string, int> index;
    int64_t step = 0;

    Entry& add(const std::string& name, Matrix init) {
        if (index.count(name)) throw numeric_error(cat("parameter '", name, "' already exists"));
        Entry e;
        e.name = name;
        e.grad = Matrix(init.rows, init.cols);
        e.m = Matrix(init.rows, init.cols);
        e.v = Matrix(init.rows, init.cols);
        e.value = std::move(init);
        index[name] = int(entries.size());
        entries.push_back(std::move(e));
        return entries.back();
    }

    Entry& at(const std::string& name) {
        auto it = index.find(name);
        if (it == index.end()) throw numeric_error(cat("unknown parameter '", name, "'"));
        return entries[size_t(it->second)];
    }
    const Entry& at(const std::string& name) const {
        auto it = index.find(name);
        if (it == index.end()) throw numeric_error(cat("unknown parameter '", name, "'"));
        return entries[size_t(it->second)];
    }

    void zero_grads() {
        for (auto& e : entries) std::fill(e.grad.data.begin(), e.grad.data.end(), 0.0);
    }

    /// Copy parameter values into a tape as tracked leaves.
    Tape::Var feed(Tape& tape, const std::string& name) const { return tapeify(tape, at(name)); }

    /// Accumulate tape gradients back into the store after backward().
    void collect_grads(const Tape& tape) {
        tape.for_each_parameter([this](const Tape::Node& nd) {
            if (nd.grad.size() == 0) return;  // parameter did not reach the loss
            Entry& e = at(nd.param_name);
            for (size_t i = 0; i < e.grad.data.size(); ++i) e.grad.data[i] += nd.grad.data[i];
        });
    }

    /// Standard bias-corrected Adam update; gradients are cleared afterwards.
    void adam_step(double lr, double beta1, double beta2, double eps) {
        ++step;
        double bc1 = 1.0 - std::pow(beta1, double(step));
        double bc2 = 1.0 - std::pow(beta2, double(step));
        for (auto& e : entries) {
            for (size_t i = 0; i < e.value.data.size(); ++i) {
                double g = e.grad.data[i];
                e.m.data[i] = beta1 * e.m.data[i] + (1.0 - beta1) * g;
                e.v.data[i] = beta2 * e.v.data[i] + (1.0 - beta2) * g * g;
                double mhat = e.m.data[i] / bc1;
                double vhat = e.v.data[i] / bc2;
                e.value.data[i] -= lr * mhat / (std::sqrt(vhat) + eps);
            }
        }
        zero_grads();
    }

private:
    static Tape::Var tapeify(Tape& tape, const Entry& e) { return tape.parameter(e.value, e.name); }
};

// ------------------------------------------------------------ tensor files
//
// Container layout (all little-endian):
//   magic[8] | u32 count | count * ( u32 name_len | name | u32 ndim |
//                                    ndim * u64 dim | f64 payload )
// Checkpoints and exported matrices share this format under different magics.

constexpr char kTensorMagic[9] = "MKTENS01";
constexpr char kCheckpointMagic[9] = "MKCKPT01";

inline std::string serialize_tensors(const std::vector<std::pair<std::string, Matrix>>& tensors,
                                     const char* magic = kTensorMagic) {
    std::string out(magic, 8);
    put_u32(out, uint32_t(tensors.size()));
    for (const auto& [name, m] : tensors) {
        put_u32(out, uint32_t(name.size()));
        out += name;
        put_u32(out, 2);
        put_u64(out, uint64_t(m.rows));
        put_u64(out, uint64_t(m.cols));
        for (double d : m.data) put_f64(out, d);
    }
    return out;
}

inline std::vector<std::pair<std::string, Matrix>> deserialize_tensors(const std::string& bytes,
                                                                       const std::string& what,
                                                                       const char* magic = kTensorMagic) {
    ByteReader r(bytes, what);
    std::string got = r.bytes(8);
    if (got != std::string(magic, 8))
        throw config_error(cat(what, ": bad magic '", got, "', expected '", std::string(magic, 8),
                               "' (version mismatch or wrong file)"));
    uint32_t count = r.u32();
    std::vector<std::pair<std::string, Matrix>> out;
    out.reserve(count);
    for (uint32_t i = 0; i < count; ++i) {
        uint32_t name_len = r.u32();
        if (name_len > 4096) throw parse_error(cat(what, ": implausible name length at byte offset ", r.pos - 4));
        std::string name = r.bytes(name_len);
        uint32_t ndim = r.u32();
        if (ndim == 0 || ndim > 2) throw parse_error(cat(what, ": bad rank ", ndim, " at byte offset ", r.pos - 4));
        uint64_t rows = r.u64();
        uint64_t cols = ndim == 2 ? r.u64() : 1;
        if (rows * cols > (1ull << 32)) throw parse_error(cat(what, ": implausible shape at byte offset ", r.pos));
        Matrix m(int(rows), int(cols));
        for (size_t j = 0; j < m.data.size(); ++j) m.data[j] = r.f64();
        out.emplace_back(std::move(name), std::move(m));
    }
    return out;
}

inline void save_tensors(const std::string& path, const std::vector<std::pair<std::string, Matrix>>& tensors,
                         const char* magic = kTensorMagic) {
    write_file_bytes(path, serialize_tensors(tensors, magic));
}

inline std::vector<std::pair<std::string, Matrix>> load_tensors(const std::string& path,
                                                                const char* magic = kTensorMagic) {
    return deserialize_tensors(read_file_bytes(path), path, magic);
}

// ------------------------------------------------------------ init

/// He-uniform fan-in initialization: U(-b, b) with b = sqrt(6 / fan_in),
/// drawn row-major from the given stream. Biases are zeroed by the callers.
inline Matrix kaiming_uniform(int fan_in, int fan_out, Rng& rng) {
    Matrix w(fan_in, fan_out);
    double bound = std::sqrt(6.0 / double(fan_in));
    for (double& v : w.data) v = rng.uniform(-bound, bound);
    return w;
}

}  // namespace morphkit
