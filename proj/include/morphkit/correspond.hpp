#pragma once

#include "morphkit/geodesic.hpp"
#include "morphkit/optimizer.hpp"

namespace morphkit {

// --------------------------------------------------------- matrix adapters

inline Matrix to_matrix(const std::vector<Vec3>& rows) {
    Matrix m(int(rows.size()), 3);
    for (size_t i = 0; i < rows.size(); ++i) {
        m.data[i * 3] = rows[i].x;
        m.data[i * 3 + 1] = rows[i].y;
        m.data[i * 3 + 2] = rows[i].z;
    }
    return m;
}

inline std::vector<Vec3> to_vec3_rows(const Matrix& m) {
    if (m.cols != 3) throw numeric_error(cat("to_vec3_rows: expected 3 columns, got ", m.cols));
    std::vector<Vec3> out(size_t(m.rows));
    for (int i = 0; i < m.rows; ++i) out[size_t(i)] = {m.at(i, 0), m.at(i, 1), m.at(i, 2)};
    return out;
}

// --------------------------------------------------------- feature network

/// Five graph-conv layers over the mesh adjacency graph. Each layer
/// mean-aggregates over {self} + 1-ring, applies a linear map, and a leaky
/// ReLU (slope 0.01) everywhere except the last layer; output rows are
/// L2-normalized so cosine similarity reduces to a dot product.
struct FeatureNetConfig {
    int hidden = 128;
    int out = 64;
    double sigma = 10.0;  // softmax temperature for the assignment
    static constexpr int layers = 5;
    static constexpr double leaky_slope = 0.01;
    static constexpr int input_dim = 6;  // position + normal
};

inline void init_feature_net(ParamStore& store, const FeatureNetConfig& cfg, Rng& rng) {
    for (int l = 0; l < FeatureNetConfig::layers; ++l) {
        int in = l == 0 ? FeatureNetConfig::input_dim : cfg.hidden;
        int out = l == FeatureNetConfig::layers - 1 ? cfg.out : cfg.hidden;
        store.add(cat("feat.w", l), kaiming_uniform(in, out, rng));
        store.add(cat("feat.b", l), Matrix(1, out));
    }
}

/// Flattened {self} + neighbors incidence used by scatter-mean aggregation.
/// An isolated vertex aggregates over itself only.
struct MeshAggregation {
    int n = 0;
    std::vector<int> src, dst;

    static MeshAggregation build(const Mesh& mesh) {
        MeshAggregation agg;
        agg.n = int(mesh.vertices.size());
        auto rings = vertex_adjacency(mesh);
        for (int i = 0; i < agg.n; ++i) {
            agg.src.push_back(i);
            agg.dst.push_back(i);
            for (int j : rings[size_t(i)]) {
                agg.src.push_back(j);
                agg.dst.push_back(i);
            }
        }
        return agg;
    }
};

inline Matrix feature_inputs(const Mesh& mesh) {
    Matrix x(int(mesh.vertices.size()), FeatureNetConfig::input_dim);
    for (size_t i = 0; i < mesh.vertices.size(); ++i) {
        for (int c = 0; c < 3; ++c) x.at(int(i), c) = mesh.vertices[i][c];
        for (int c = 0; c < 3; ++c) x.at(int(i), 3 + c) = mesh.normals[i][c];
    }
    return x;
}

inline Tape::Var vertex_features(Tape& tape, ParamStore& store, const Mesh& mesh,
                                 const MeshAggregation& agg, const FeatureNetConfig& cfg) {
    Tape::Var x = tape.constant(feature_inputs(mesh));
    for (int l = 0; l < FeatureNetConfig::layers; ++l) {
        Tape::Var pooled = tape.scatter_mean_rows(tape.gather_rows(x, agg.src), agg.dst, agg.n);
        Tape::Var w = store.feed(tape, cat("feat.w", l));
        Tape::Var b = store.feed(tape, cat("feat.b", l));
        x = tape.add(tape.matmul(pooled, w), b);
        if (l + 1 < FeatureNetConfig::layers) x = tape.leaky_relu(x, FeatureNetConfig::leaky_slope);
    }
    return tape.l2_normalize_rows(x);
}

// --------------------------------------------------------- soft assignment

/// Row-stochastic assignment from cosine similarities:
/// pi_ij = exp(sigma * <f_i, g_j>) / sum_k exp(sigma * <f_i, g_k>).
inline Tape::Var build_pi(Tape& tape, Tape::Var feat_src, Tape::Var feat_tgt, double sigma) {
    return tape.softmax_rows(tape.matmul(feat_src, tape.transpose(feat_tgt)), sigma);
}

/// Same assignment restricted to sampled rows/columns. Renormalizing a
/// softmax over a column subset equals the softmax of the sub-similarities,
/// so this is the row-renormalized restriction of the full matrix.
inline Tape::Var build_pi_sampled(Tape& tape, Tape::Var feat_src, Tape::Var feat_tgt,
                                  const std::vector<int>& src_samples, const std::vector<int>& tgt_samples,
                                  double sigma) {
    Tape::Var fs = tape.gather_rows(feat_src, src_samples);
    Tape::Var ft = tape.gather_rows(feat_tgt, tgt_samples);
    return tape.softmax_rows(tape.matmul(fs, tape.transpose(ft)), sigma);
}

/// Mean geodesic error of the argmax assignment against a ground-truth index
/// map, measured in the target table over the sampled sets. Argmax ties pick
/// the lowest column index.
inline double correspondence_accuracy(const Matrix& pi, const std::vector<int>& src_samples,
                                      const std::vector<int>& tgt_samples, const std::vector<int>& gt_map,
                                      const GeodesicTable& d_tgt) {
    std::vector<int> col_of(size_t(*std::max_element(tgt_samples.begin(), tgt_samples.end())) + 1, -1);
    for (size_t c = 0; c < tgt_samples.size(); ++c) col_of[size_t(tgt_samples[c])] = int(c);

    double total = 0;
    for (size_t r = 0; r < src_samples.size(); ++r) {
        int s = src_samples[r];
        int best_col = 0;
        double best = -std::numeric_limits<double>::infinity();
        for (size_t c = 0; c < tgt_samples.size(); ++c) {
            double v = pi.at(int(r), int(c));
            if (v > best) {
                best = v;
                best_col = int(c);
            }
        }
        int gt = gt_map[size_t(s)];
        if (gt < 0 || gt >= int(col_of.size()) || col_of[size_t(gt)] < 0)
            throw numeric_error(cat("correspondence_accuracy: ground truth ", gt, " is not a sampled vertex"));
        total += d_tgt.at(col_of[size_t(gt)], best_col);
    }
    return total / double(src_samples.size());
}

}  // namespace morphkit
