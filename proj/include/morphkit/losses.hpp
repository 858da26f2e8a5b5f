#pragma once

#include <Eigen/Dense>

#include "morphkit/correspond.hpp"

namespace morphkit {

struct LossWeights {
    double geo = 1.0;
    double arap = 1.0;
    double smooth = 0.1;
    double align = 10.0;

    void validate() const {
        for (double v : {geo, arap, smooth, align})
            if (!(std::isfinite(v) && v >= 0)) throw config_error("loss weights must be finite and >= 0");
    }
};

struct LossTerms {
    double geo = 0, arap = 0, smooth = 0, align = 0, total = 0;
};

// ------------------------------------------------------ geodesic distortion

/// Constant inputs of the geodesic distortion term. Unreachable (+inf)
/// entries of the source table are masked out of the residual and excluded
/// from the mean; unreachable target entries contribute zero inside the
/// conjugation product.
struct GeodesicLossData {
    Matrix d_src;   // S_s x S_s, masked entries zeroed
    Matrix d_tgt;   // S_t x S_t, inf zeroed
    Matrix mask;    // S_s x S_s 0/1
    double inv_count = 0;

    static GeodesicLossData build(const GeodesicTable& src, const GeodesicTable& tgt) {
        GeodesicLossData d;
        int ss = src.size(), st = tgt.size();
        d.d_src = Matrix(ss, ss);
        d.mask = Matrix(ss, ss);
        size_t masked = 0;
        for (size_t i = 0; i < d.d_src.data.size(); ++i) {
            double v = src.dist[i];
            if (std::isfinite(v)) {
                d.d_src.data[i] = v;
                d.mask.data[i] = 1.0;
            } else {
                ++masked;
            }
        }
        d.d_tgt = Matrix(st, st);
        size_t tgt_inf = 0;
        for (size_t i = 0; i < d.d_tgt.data.size(); ++i) {
            double v = tgt.dist[i];
            if (std::isfinite(v)) d.d_tgt.data[i] = v;
            else ++tgt_inf;
        }
        if (masked + tgt_inf > 0)
            warn(cat("geodesic loss: masking ", masked, " source and ", tgt_inf, " target unreachable pairs"));
        size_t count = d.d_src.data.size() - masked;
        if (count == 0) throw numeric_error("geodesic loss: every source pair is unreachable");
        d.inv_count = 1.0 / double(count);
        return d;
    }
};

/// || mask . (Pi_s D_tgt Pi_s^T - D_src) ||_F^2 / #unmasked
inline Tape::Var geodesic_distortion_loss(Tape& tape, Tape::Var pi_sampled, const GeodesicLossData& data) {
    Tape::Var dt = tape.constant(data.d_tgt);
    Tape::Var conj = tape.matmul(tape.matmul(pi_sampled, dt), tape.transpose(pi_sampled));
    Tape::Var res = tape.sub(conj, tape.constant(data.d_src));
    res = tape.mul(res, tape.constant(data.mask));
    return tape.scale(tape.frobenius_sq(res), data.inv_count);
}

// ----------------------------------------------------------------- arap

/// Directed 1-ring edge lists of the mesh adjacency graph: term e couples
/// vertex tail[e] with its neighbor head[e].
struct ArapTopology {
    std::vector<int> tail, head;
    std::vector<std::vector<int>> rings;
    double inv_edges = 0;

    static ArapTopology build(const Mesh& mesh) {
        ArapTopology t;
        t.rings = vertex_adjacency(mesh);
        for (size_t i = 0; i < t.rings.size(); ++i)
            for (int j : t.rings[i]) {
                t.tail.push_back(int(i));
                t.head.push_back(j);
            }
        if (t.tail.empty()) throw numeric_error("arap: mesh has no edges");
        t.inv_edges = 1.0 / double(t.tail.size());
        return t;
    }
};

/// Best-fit rotation per vertex (Kabsch over the 1-ring, uniform weights,
/// reflections excluded by flipping the smallest singular direction).
/// Degenerate rings fall back to the identity. Returns 9 doubles per vertex.
inline std::vector<double> fit_ring_rotations(const ArapTopology& topo, const std::vector<Vec3>& va,
                                              const std::vector<Vec3>& vb) {
    const size_t n = topo.rings.size();
    std::vector<double> rot(n * 9);
    for (size_t i = 0; i < n; ++i) {
        Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
        for (int j : topo.rings[i]) {
            Vec3 p = va[i] - va[size_t(j)];
            Vec3 q = vb[i] - vb[size_t(j)];
            h += Eigen::Vector3d(p.x, p.y, p.z) * Eigen::RowVector3d(q.x, q.y, q.z);
        }
        Eigen::Matrix3d r;
        if (h.norm() < 1e-300) {
            r = Eigen::Matrix3d::Identity();
        } else {
            Eigen::JacobiSVD<Eigen::Matrix3d> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
            Eigen::Matrix3d u = svd.matrixU(), v = svd.matrixV();
            r = v * u.transpose();
            if (r.determinant() < 0) {
                v.col(2) *= -1.0;
                r = v * u.transpose();
            }
        }
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) rot[i * 9 + size_t(a * 3 + b)] = r(a, b);
    }
    return rot;
}

/// sum_i sum_{j in N(i)} || (vb_i - vb_j) - R_i (va_i - va_j) ||^2 / #terms.
/// The rotations are fitted outside the tape and enter as constants
/// (local/global alternation), so the gradient treats them as fixed.
inline Tape::Var arap_energy(Tape& tape, Tape::Var va, Tape::Var vb, const ArapTopology& topo,
                             const std::vector<double>& rotations) {
    Tape::Var da = tape.sub(tape.gather_rows(va, topo.tail), tape.gather_rows(va, topo.head));
    Tape::Var db = tape.sub(tape.gather_rows(vb, topo.tail), tape.gather_rows(vb, topo.head));
    std::vector<double> edge_mats(topo.tail.size() * 9);
    for (size_t e = 0; e < topo.tail.size(); ++e)
        std::copy_n(&rotations[size_t(topo.tail[e]) * 9], 9, &edge_mats[e * 9]);
    Tape::Var rotated = tape.rotate_rows(da, std::move(edge_mats));
    return tape.scale(tape.frobenius_sq(tape.sub(db, rotated)), topo.inv_edges);
}

/// Value-level ARAP energy for two explicit poses (fits rotations itself).
inline double arap_energy_value(const Mesh& mesh, const std::vector<Vec3>& va, const std::vector<Vec3>& vb) {
    auto topo = ArapTopology::build(mesh);
    auto rot = fit_ring_rotations(topo, va, vb);
    Tape tape;
    Tape::Var a = tape.constant(to_matrix(va));
    Tape::Var b = tape.constant(to_matrix(vb));
    return tape.value(arap_energy(tape, a, b, topo, rot)).data[0];
}

// ----------------------------------------------------------------- smooth

/// Adjacency edges with inverse rest-geodesic weights. For face-adjacent
/// vertices the geodesic distance is the hybrid-graph edge length, i.e. the
/// Euclidean rest length.
struct SmoothTopology {
    std::vector<int> tail, head;
    Matrix inv_weight;  // E x 3, rows tiled with 1/(len+eps)
    double inv_edges = 0;

    static SmoothTopology build(const Mesh& mesh, double eps = 1e-4) {
        SmoothTopology t;
        auto edges = adjacency_edges(mesh);
        if (edges.empty()) throw numeric_error("smoothness loss: mesh has no edges");
        t.inv_weight = Matrix(int(edges.size()), 3);
        for (size_t e = 0; e < edges.size(); ++e) {
            t.tail.push_back(edges[e].first);
            t.head.push_back(edges[e].second);
            double len = norm(mesh.vertices[size_t(edges[e].first)] - mesh.vertices[size_t(edges[e].second)]);
            double w = 1.0 / (len + eps);
            for (int c = 0; c < 3; ++c) t.inv_weight.at(int(e), c) = w;
        }
        t.inv_edges = 1.0 / double(edges.size());
        return t;
    }
};

/// sum_{(i,j) in E_adj} ||C_i - C_j||^2 / (d_ij + eps) / |E_adj|
inline Tape::Var color_smoothness_loss(Tape& tape, Tape::Var colors, const SmoothTopology& topo) {
    Tape::Var d = tape.sub(tape.gather_rows(colors, topo.tail), tape.gather_rows(colors, topo.head));
    Tape::Var weighted = tape.mul(tape.mul(d, d), tape.constant(topo.inv_weight));
    return tape.scale(tape.sum(weighted), topo.inv_edges);
}

// ----------------------------------------------------------------- align

/// || V(1) - Pi V_tgt ||_F^2 / n — the boundary condition driving the
/// deformation onto its semantic destination.
inline Tape::Var alignment_loss(Tape& tape, Tape::Var v_at_one, Tape::Var pi, Tape::Var v_tgt) {
    int n = tape.value(v_at_one).rows;
    return tape.scale(tape.frobenius_sq(tape.sub(v_at_one, tape.matmul(pi, v_tgt))), 1.0 / double(n));
}

// ----------------------------------------------------------------- total

inline void check_finite_term(double v, const char* name) {
    if (!std::isfinite(v)) throw numeric_error(cat("loss term '", name, "' is not finite (", v, ")"));
}

inline Tape::Var weighted_total(Tape& tape, Tape::Var geo, Tape::Var arap, Tape::Var smooth, Tape::Var align,
                                const LossWeights& w) {
    check_finite_term(tape.value(geo).data[0], "geo");
    check_finite_term(tape.value(arap).data[0], "arap");
    check_finite_term(tape.value(smooth).data[0], "smooth");
    check_finite_term(tape.value(align).data[0], "align");
    Tape::Var a = tape.add(tape.scale(geo, w.geo), tape.scale(arap, w.arap));
    Tape::Var b = tape.add(tape.scale(smooth, w.smooth), tape.scale(align, w.align));
    return tape.add(a, b);
}

}  // namespace morphkit
