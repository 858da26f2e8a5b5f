#pragma once

#include "morphkit/common.hpp"

namespace morphkit {

/// Dense row-major matrix of 64-bit floats. Scalars are 1x1, row vectors 1xN.
struct Matrix {
    int rows = 0, cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(int r, int c, double fill = 0.0) : rows(r), cols(c), data(size_t(r) * size_t(c), fill) {}

    double& at(int r, int c) { return data[size_t(r) * size_t(cols) + size_t(c)]; }
    double at(int r, int c) const { return data[size_t(r) * size_t(cols) + size_t(c)]; }
    size_t size() const { return data.size(); }
    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
    std::string shape_str() const { return cat(rows, "x", cols); }

    static Matrix scalar(double v) {
        Matrix m(1, 1);
        m.data[0] = v;
        return m;
    }
};

namespace detail {
// C += A * B, ikj order for cache friendliness
inline void matmul_acc(const double* a, const double* b, double* c, int n, int k, int m) {
    for (int i = 0; i < n; ++i) {
        const double* arow = a + size_t(i) * size_t(k);
        double* crow = c + size_t(i) * size_t(m);
        for (int p = 0; p < k; ++p) {
            double av = arow[p];
            if (av == 0.0) continue;
            const double* brow = b + size_t(p) * size_t(m);
            for (int j = 0; j < m; ++j) crow[j] += av * brow[j];
        }
    }
}
}  // namespace detail

/// Reverse-mode tape over matrix ops. A tape is built fresh per forward pass;
/// nodes refer to earlier nodes only, so backward is a single reverse sweep
/// in construction order (deterministic by design). Parameters are copied in
/// from a store when the graph is built and their gradients are collected
/// back out after backward().
class Tape {
public:
    using Var = int;

    enum class Op {
        leaf,
        matmul,
        transpose,
        add,       // same shape, or b broadcast as a 1 x cols bias row
        sub,
        mul,       // elementwise
        scale,     // by host constant
        leaky_relu,
        softmax_rows,
        l2_normalize_rows,
        gather_rows,
        scatter_mean_rows,
        concat_cols,
        rotate_rows,  // per-row constant 3x3 matrix apply
        frobenius_sq,
        sum,
        mean,
    };

    struct Node {
        Op op = Op::leaf;
        int a = -1, b = -1;
        Matrix val;
        Matrix grad;             // allocated lazily in backward
        bool needs_grad = false;
        double scalar = 0.0;     // slope / sigma / scale factor
        std::vector<int> index;  // gather/scatter indices
        int scatter_rows = 0;
        std::vector<double> row_mats;   // rotate_rows: 9 doubles per row
        std::vector<int> scatter_hits;  // rows per bucket, cached forward
        std::string param_name;
    };

    const Matrix& value(Var v) const { return nodes_[size_t(v)].val; }
    const Matrix& grad(Var v) const { return nodes_[size_t(v)].grad; }
    size_t node_count() const { return nodes_.size(); }

    Var constant(Matrix m) { return push(Op::leaf, -1, -1, std::move(m), false); }

    Var parameter(Matrix m, std::string name = {}) {
        Var v = push(Op::leaf, -1, -1, std::move(m), true);
        nodes_[size_t(v)].param_name = std::move(name);
        return v;
    }

    Var matmul(Var a, Var b) {
        const Matrix& A = value(a);
        const Matrix& B = value(b);
        if (A.cols != B.rows)
            throw numeric_error(cat("matmul: shape mismatch ", A.shape_str(), " vs ", B.shape_str()));
        Matrix out(A.rows, B.cols);
        detail::matmul_acc(A.data.data(), B.data.data(), out.data.data(), A.rows, A.cols, B.cols);
        return push(Op::matmul, a, b, std::move(out));
    }

    Var transpose(Var a) {
        const Matrix& A = value(a);
        Matrix out(A.cols, A.rows);
        for (int r = 0; r < A.rows; ++r)
            for (int c = 0; c < A.cols; ++c) out.at(c, r) = A.at(r, c);
        return push(Op::transpose, a, -1, std::move(out));
    }

    Var add(Var a, Var b) {
        const Matrix& A = value(a);
        const Matrix& B = value(b);
        Matrix out = A;
        if (A.same_shape(B)) {
            for (size_t i = 0; i < out.size(); ++i) out.data[i] += B.data[i];
        } else if (B.rows == 1 && B.cols == A.cols) {
            for (int r = 0; r < A.rows; ++r)
                for (int c = 0; c < A.cols; ++c) out.at(r, c) += B.at(0, c);
        } else {
            throw numeric_error(cat("add: shape mismatch ", A.shape_str(), " vs ", B.shape_str()));
        }
        return push(Op::add, a, b, std::move(out));
    }

    Var sub(Var a, Var b) {
        const Matrix& A = value(a);
        const Matrix& B = value(b);
        if (!A.same_shape(B))
            throw numeric_error(cat("sub: shape mismatch ", A.shape_str(), " vs ", B.shape_str()));
        Matrix out = A;
        for (size_t i = 0; i < out.size(); ++i) out.data[i] -= B.data[i];
        return push(Op::sub, a, b, std::move(out));
    }

    Var mul(Var a, Var b) {
        const Matrix& A = value(a);
        const Matrix& B = value(b);
        if (!A.same_shape(B))
            throw numeric_error(cat("mul: shape mismatch ", A.shape_str(), " vs ", B.shape_str()));
        Matrix out = A;
        for (size_t i = 0; i < out.size(); ++i) out.data[i] *= B.data[i];
        return push(Op::mul, a, b, std::move(out));
    }

    Var scale(Var a, double c) {
        Matrix out = value(a);
        for (double& v : out.data) v *= c;
        Var r = push(Op::scale, a, -1, std::move(out));
        nodes_[size_t(r)].scalar = c;
        return r;
    }

    Var leaky_relu(Var a, double slope) {
        Matrix out = value(a);
        for (double& v : out.data)
            if (v < 0) v *= slope;
        Var r = push(Op::leaky_relu, a, -1, std::move(out));
        nodes_[size_t(r)].scalar = slope;
        return r;
    }

    /// Row-wise softmax of sigma * x with row-max subtraction.
    Var softmax_rows(Var a, double sigma) {
        const Matrix& A = value(a);
        Matrix out(A.rows, A.cols);
        for (int r = 0; r < A.rows; ++r) {
            double mx = -std::numeric_limits<double>::infinity();
            for (int c = 0; c < A.cols; ++c) mx = std::max(mx, sigma * A.at(r, c));
            double z = 0;
            for (int c = 0; c < A.cols; ++c) {
                double e = std::exp(sigma * A.at(r, c) - mx);
                out.at(r, c) = e;
                z += e;
            }
            for (int c = 0; c < A.cols; ++c) out.at(r, c) /= z;
        }
        Var r = push(Op::softmax_rows, a, -1, std::move(out));
        nodes_[size_t(r)].scalar = sigma;
        return r;
    }

    /// Rows scaled to unit L2 norm. Exactly-zero rows pass through unchanged
    /// (and receive zero gradient) instead of dividing by an epsilon.
    Var l2_normalize_rows(Var a) {
        const Matrix& A = value(a);
        Matrix out = A;
        for (int r = 0; r < A.rows; ++r) {
            double n2 = 0;
            for (int c = 0; c < A.cols; ++c) n2 += A.at(r, c) * A.at(r, c);
            if (n2 > 0) {
                double inv = 1.0 / std::sqrt(n2);
                for (int c = 0; c < A.cols; ++c) out.at(r, c) *= inv;
            }
        }
        return push(Op::l2_normalize_rows, a, -1, std::move(out));
    }

    Var gather_rows(Var a, std::vector<int> idx) {
        const Matrix& A = value(a);
        for (int i : idx)
            if (i < 0 || i >= A.rows) throw numeric_error(cat("gather_rows: index ", i, " out of range"));
        Matrix out(int(idx.size()), A.cols);
        for (size_t r = 0; r < idx.size(); ++r)
            std::copy_n(&A.data[size_t(idx[r]) * size_t(A.cols)], A.cols, &out.data[r * size_t(A.cols)]);
        Var v = push(Op::gather_rows, a, -1, std::move(out));
        nodes_[size_t(v)].index = std::move(idx);
        return v;
    }

    /// out[r] = mean of input rows i with idx[i] == r; empty buckets stay zero.
    Var scatter_mean_rows(Var a, std::vector<int> idx, int out_rows) {
        const Matrix& A = value(a);
        if (int(idx.size()) != A.rows)
            throw numeric_error(cat("scatter_mean_rows: ", idx.size(), " indices for ", A.rows, " rows"));
        std::vector<int> hits(size_t(out_rows), 0);
        for (int i : idx) {
            if (i < 0 || i >= out_rows) throw numeric_error(cat("scatter_mean_rows: index ", i, " out of range"));
            ++hits[size_t(i)];
        }
        Matrix out(out_rows, A.cols);
        for (int r = 0; r < A.rows; ++r) {
            double* dst = &out.data[size_t(idx[size_t(r)]) * size_t(A.cols)];
            const double* src = &A.data[size_t(r) * size_t(A.cols)];
            for (int c = 0; c < A.cols; ++c) dst[c] += src[c];
        }
        for (int r = 0; r < out_rows; ++r)
            if (hits[size_t(r)] > 1) {
                double inv = 1.0 / hits[size_t(r)];
                for (int c = 0; c < A.cols; ++c) out.at(r, c) *= inv;
            }
        Var v = push(Op::scatter_mean_rows, a, -1, std::move(out));
        nodes_[size_t(v)].index = std::move(idx);
        nodes_[size_t(v)].scatter_rows = out_rows;
        nodes_[size_t(v)].scatter_hits = std::move(hits);
        return v;
    }

    Var concat_cols(Var a, Var b) {
        const Matrix& A = value(a);
        const Matrix& B = value(b);
        if (A.rows != B.rows)
            throw numeric_error(cat("concat_cols: row mismatch ", A.shape_str(), " vs ", B.shape_str()));
        Matrix out(A.rows, A.cols + B.cols);
        for (int r = 0; r < A.rows; ++r) {
            std::copy_n(&A.data[size_t(r) * size_t(A.cols)], A.cols, &out.data[size_t(r) * size_t(out.cols)]);
            std::copy_n(&B.data[size_t(r) * size_t(B.cols)], B.cols,
                        &out.data[size_t(r) * size_t(out.cols) + size_t(A.cols)]);
        }
        return push(Op::concat_cols, a, b, std::move(out));
    }

    /// out row i = M_i * x_i with M_i a constant 3x3 (row-major, 9 per row).
    Var rotate_rows(Var a, std::vector<double> mats) {
        const Matrix& A = value(a);
        if (A.cols != 3) throw numeric_error(cat("rotate_rows: needs 3 columns, got ", A.cols));
        if (mats.size() != size_t(A.rows) * 9)
            throw numeric_error(cat("rotate_rows: ", mats.size() / 9, " matrices for ", A.rows, " rows"));
        Matrix out(A.rows, 3);
        for (int r = 0; r < A.rows; ++r) {
            const double* M = &mats[size_t(r) * 9];
            const double* x = &A.data[size_t(r) * 3];
            double* y = &out.data[size_t(r) * 3];
            for (int i = 0; i < 3; ++i) y[i] = M[i * 3] * x[0] + M[i * 3 + 1] * x[1] + M[i * 3 + 2] * x[2];
        }
        Var v = push(Op::rotate_rows, a, -1, std::move(out));
        nodes_[size_t(v)].row_mats = std::move(mats);
        return v;
    }

    Var frobenius_sq(Var a) {
        double s = 0;
        for (double v : value(a).data) s += v * v;
        return push(Op::frobenius_sq, a, -1, Matrix::scalar(s));
    }

    Var sum(Var a) {
        double s = 0;
        for (double v : value(a).data) s += v;
        return push(Op::sum, a, -1, Matrix::scalar(s));
    }

    Var mean(Var a) {
        double s = 0;
        for (double v : value(a).data) s += v;
        return push(Op::mean, a, -1, Matrix::scalar(s / double(value(a).size())));
    }

    /// Reverse accumulation from a scalar loss into every tracked node.
    /// Single sweep in reverse construction order; calling it a second time
    /// on the same tape is an error (values would be stale).
    void backward(Var loss) {
        if (backward_done_) throw numeric_error("backward: already called on this tape; rebuild the graph");
        backward_done_ = true;
        Node& top = nodes_[size_t(loss)];
        if (top.val.size() != 1) throw numeric_error(cat("backward: loss must be scalar, got ", top.val.shape_str()));
        ensure_grad(loss);
        top.grad.data[0] = 1.0;

        for (int id = loss; id >= 0; --id) {
            Node& nd = nodes_[size_t(id)];
            if (!nd.needs_grad || nd.grad.size() == 0 || nd.op == Op::leaf) continue;
            const Matrix& g = nd.grad;
            switch (nd.op) {
                case Op::matmul: {
                    const Matrix& A = value(nd.a);
                    const Matrix& B = value(nd.b);
                    if (wants(nd.a)) {  // dA += G * B^T
                        Matrix bt(B.cols, B.rows);
                        for (int r = 0; r < B.rows; ++r)
                            for (int c = 0; c < B.cols; ++c) bt.at(c, r) = B.at(r, c);
                        ensure_grad(nd.a);
                        detail::matmul_acc(g.data.data(), bt.data.data(), nodes_[size_t(nd.a)].grad.data.data(),
                                           g.rows, g.cols, bt.cols);
                    }
                    if (wants(nd.b)) {  // dB += A^T * G
                        Matrix at(A.cols, A.rows);
                        for (int r = 0; r < A.rows; ++r)
                            for (int c = 0; c < A.cols; ++c) at.at(c, r) = A.at(r, c);
                        ensure_grad(nd.b);
                        detail::matmul_acc(at.data.data(), g.data.data(), nodes_[size_t(nd.b)].grad.data.data(),
                                           at.rows, at.cols, g.cols);
                    }
                    break;
                }
                case Op::transpose:
                    if (wants(nd.a)) {
                        ensure_grad(nd.a);
                        Matrix& ga = nodes_[size_t(nd.a)].grad;
                        for (int r = 0; r < g.rows; ++r)
                            for (int c = 0; c < g.cols; ++c) ga.at(c, r) += g.at(r, c);
                    }
                    break;
                case Op::add: {
                    if (wants(nd.a)) {
                        ensure_grad(nd.a);
                        Matrix& ga = nodes_[size_t(nd.a)].grad;
                        for (size_t i = 0; i < g.size(); ++i) ga.data[i] += g.data[i];
                    }
                    if (wants(nd.b)) {
                        ensure_grad(nd.b);
                        Matrix& gb = nodes_[size_t(nd.b)].grad;
                        if (gb.same_shape(g)) {
                            for (size_t i = 0; i < g.size(); ++i) gb.data[i] += g.data[i];
                        } else {  // bias row: sum over rows
                            for (int r = 0; r < g.rows; ++r)
                                for (int c = 0; c < g.cols; ++c) gb.at(0, c) += g.at(r, c);
                        }
                    }
                    break;
                }
                case Op::sub:
                    if (wants(nd.a)) {
                        ensure_grad(nd.a);
                        Matrix& ga = nodes_[size_t(nd.a)].grad;
                        for (size_t i = 0; i < g.size(); ++i) ga.data[i] += g.data[i];
                    }
                    if (wants(nd.b)) {
                        ensure_grad(nd.b);
                        Matrix& gb = nodes_[size_t(nd.b)].grad;
                        for (size_t i = 0; i < g.size(); ++i) gb.data[i] -= g.data[i];
                    }
                    break;
                case Op::mul:
                    if (wants(nd.a)) {
                        ensure_grad(nd.a);
                        Matrix& ga = nodes_[size_t(nd.a)].grad;
                        const Matrix& B = value(nd.b);
                        for (size_t i = 0; i < g.size(); ++i) ga.data[i] += g.data[i] * B.data[i];
                    }
                    if (wants(nd.b)) {
                        ensure_grad(nd.b);
                        Matrix& gb = nodes_[size_t(nd.b)].grad;
                        const Matrix& A = value(nd.a);
                        for (size_t i = 0; i < g.size(); ++i) gb.data[i] += g.data[i] * A.data[i];
                    }
                    break;
                case Op::scale:
                    if (wants(nd.a)) {
                        ensure_grad(nd.a);
                        Matrix& ga = nodes_[size_t(nd.a)].grad;
                        for (size_t i = 0; i < g.size(); ++i) ga.data[i] += g.data[i] * nd.scalar;
                    }
                    break;
                case Op::leaky_relu:
                    if (wants(nd.a)) {
                        ensure_grad(nd.a);
                        Matrix& ga = nodes_[size_t(nd.a)].grad;
                        const Matrix& A = value(nd.a);
                        for (size_t i = 0; i < g.size(); ++i)
                            ga.data[i] += g.data[i] * (A.data[i] >= 0 ? 1.0 : nd.scalar);
                    }
                    break;
                case Op::softmax_rows:
                    if (wants(nd.a)) {
                        ensure_grad(nd.a);
                        Matrix& ga = nodes_[size_t(nd.a)].grad;
                        const Matrix& Y = nd.val;
                        for (int r = 0; r < Y.rows; ++r) {
                            double dotgy = 0;
                            for (int c = 0; c < Y.cols; ++c) dotgy += g.at(r, c) * Y.at(r, c);
                            for (int c = 0; c < Y.cols; ++c)
                                ga.at(r, c) += nd.scalar * Y.at(r, c) * (g.at(r, c) - dotgy);
                        }
                    }
                    break;
                case Op::l2_normalize_rows:
                    if (wants(nd.a)) {
                        ensure_grad(nd.a);
                        Matrix& ga = nodes_[size_t(nd.a)].grad;
                        const Matrix& A = value(nd.a);
                        const Matrix& Y = nd.val;
                        for (int r = 0; r < A.rows; ++r) {
                            double n2 = 0;
                            for (int c = 0; c < A.cols; ++c) n2 += A.at(r, c) * A.at(r, c);
                            if (n2 == 0) continue;  // zero row: zero gradient by the guard
                            double inv = 1.0 / std::sqrt(n2);
                            double gy = 0;
                            for (int c = 0; c < A.cols; ++c) gy += g.at(r, c) * Y.at(r, c);
                            for (int c = 0; c < A.cols; ++c)
                                ga.at(r, c) += (g.at(r, c) - Y.at(r, c) * gy) * inv;
                        }
                    }
                    break;
                case Op::gather_rows:
                    if (wants(nd.a)) {
                        ensure_grad(nd.a);
                        Matrix& ga = nodes_[size_t(nd.a)].grad;
                        for (size_t r = 0; r < nd.index.size(); ++r) {
                            double* dst = &ga.data[size_t(nd.index[r]) * size_t(ga.cols)];
                            const double* src = &g.data[r * size_t(g.cols)];
                            for (int c = 0; c < g.cols; ++c) dst[c] += src[c];
                        }
                    }
                    break;
                case Op::scatter_mean_rows:
                    if (wants(nd.a)) {
                        ensure_grad(nd.a);
                        Matrix& ga = nodes_[size_t(nd.a)].grad;
                        for (int r = 0; r < ga.rows; ++r) {
                            int bucket = nd.index[size_t(r)];
                            double inv = 1.0 / nd.scatter_hits[size_t(bucket)];
                            const double* src = &g.data[size_t(bucket) * size_t(g.cols)];
                            double* dst = &ga.data[size_t(r) * size_t(ga.cols)];
                            for (int c = 0; c < g.cols; ++c) dst[c] += src[c] * inv;
                        }
                    }
                    break;
                case Op::concat_cols: {
                    const Matrix& A = value(nd.a);
                    if (wants(nd.a)) {
                        ensure_grad(nd.a);
                        Matrix& ga = nodes_[size_t(nd.a)].grad;
                        for (int r = 0; r < ga.rows; ++r)
                            for (int c = 0; c < ga.cols; ++c) ga.at(r, c) += g.at(r, c);
                    }
                    if (wants(nd.b)) {
                        ensure_grad(nd.b);
                        Matrix& gb = nodes_[size_t(nd.b)].grad;
                        for (int r = 0; r < gb.rows; ++r)
                            for (int c = 0; c < gb.cols; ++c) gb.at(r, c) += g.at(r, A.cols + c);
                    }
                    break;
                }
                case Op::rotate_rows:
                    if (wants(nd.a)) {
                        ensure_grad(nd.a);
                        Matrix& ga = nodes_[size_t(nd.a)].grad;
                        for (int r = 0; r < ga.rows; ++r) {
                            const double* M = &nd.row_mats[size_t(r) * 9];
                            const double* gr = &g.data[size_t(r) * 3];
                            double* dst = &ga.data[size_t(r) * 3];
                            for (int c = 0; c < 3; ++c)
                                dst[c] += M[c] * gr[0] + M[3 + c] * gr[1] + M[6 + c] * gr[2];
                        }
                    }
                    break;
                case Op::frobenius_sq:
                    if (wants(nd.a)) {
                        ensure_grad(nd.a);
                        Matrix& ga = nodes_[size_t(nd.a)].grad;
                        const Matrix& A = value(nd.a);
                        double g0 = g.data[0];
                        for (size_t i = 0; i < ga.size(); ++i) ga.data[i] += 2.0 * A.data[i] * g0;
                    }
                    break;
                case Op::sum:
                    if (wants(nd.a)) {
                        ensure_grad(nd.a);
                        Matrix& ga = nodes_[size_t(nd.a)].grad;
                        double g0 = g.data[0];
                        for (size_t i = 0; i < ga.size(); ++i) ga.data[i] += g0;
                    }
                    break;
                case Op::mean:
                    if (wants(nd.a)) {
                        ensure_grad(nd.a);
                        Matrix& ga = nodes_[size_t(nd.a)].grad;
                        double g0 = g.data[0] / double(ga.size());
                        for (size_t i = 0; i < ga.size(); ++i) ga.data[i] += g0;
                    }
                    break;
                case Op::leaf:
                    break;
            }
        }
    }

    /// Runs fn over every tracked leaf created via parameter().
    template <typename Fn>
    void for_each_parameter(Fn&& fn) const {
        for (const Node& nd : nodes_)
            if (nd.op == Op::leaf && nd.needs_grad && !nd.param_name.empty()) fn(nd);
    }

private:
    std::vector<Node> nodes_;
    bool backward_done_ = false;

    bool wants(int id) const { return id >= 0 && nodes_[size_t(id)].needs_grad; }

    void ensure_grad(int id) {
        Node& nd = nodes_[size_t(id)];
        if (nd.grad.size() == 0) nd.grad = Matrix(nd.val.rows, nd.val.cols);
    }

    Var push(Op op, int a, int b, Matrix val, bool needs = false) {
        Node nd;
        nd.op = op;
        nd.a = a;
        nd.b = b;
        nd.needs_grad = needs || wants(a) || wants(b);
        nd.val = std::move(val);
        nodes_.push_back(std::move(nd));
        return int(nodes_.size()) - 1;
    }
};

}  // namespace morphkit
