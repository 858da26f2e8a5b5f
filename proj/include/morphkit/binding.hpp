#pragma once

#include "morphkit/gaussian.hpp"
#include "morphkit/geodesic.hpp"

namespace morphkit {

// --------------------------------------------------- closest point queries

/// Closest point on triangle (a,b,c) to p with its barycentric coordinates,
/// clamped to the triangle. Ericson's region walk.
inline Vec3 closest_point_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c,
                                   std::array<double, 3>& bary) {
    Vec3 ab = b - a, ac = c - a, ap = p - a;
    double d1 = dot(ab, ap), d2 = dot(ac, ap);
    if (d1 <= 0 && d2 <= 0) {
        bary = {1, 0, 0};
        return a;
    }
    Vec3 bp = p - b;
    double d3 = dot(ab, bp), d4 = dot(ac, bp);
    if (d3 >= 0 && d4 <= d3) {
        bary = {0, 1, 0};
        return b;
    }
    double vc = d1 * d4 - d3 * d2;
    if (vc <= 0 && d1 >= 0 && d3 <= 0) {
        double v = d1 / (d1 - d3);
        bary = {1 - v, v, 0};
        return a + ab * v;
    }
    Vec3 cp = p - c;
    double d5 = dot(ab, cp), d6 = dot(ac, cp);
    if (d6 >= 0 && d5 <= d6) {
        bary = {0, 0, 1};
        return c;
    }
    double vb = d5 * d2 - d1 * d6;
    if (vb <= 0 && d2 >= 0 && d6 <= 0) {
        double w = d2 / (d2 - d6);
        bary = {1 - w, 0, w};
        return a + ac * w;
    }
    double va = d3 * d6 - d5 * d4;
    if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0) {
        double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        bary = {0, 1 - w, w};
        return b + (c - b) * w;
    }
    double denom = 1.0 / (va + vb + vc);
    double v = vb * denom, w = vc * denom;
    bary = {1 - v - w, v, w};
    return a + ab * v + ac * w;
}

namespace detail {

struct FaceHit {
    double dist2 = std::numeric_limits<double>::max();
    int face = -1;
    std::array<double, 3> bary{};
    Vec3 point{};
};

inline void consider_face(const Mesh& mesh, int f, const Vec3& p, FaceHit& best) {
    const auto& t = mesh.faces[size_t(f)];
    std::array<double, 3> bary;
    Vec3 cp = closest_point_triangle(p, mesh.vertices[size_t(t[0])], mesh.vertices[size_t(t[1])],
                                     mesh.vertices[size_t(t[2])], bary);
    double d2 = norm2(p - cp);
    if (d2 < best.dist2 || (d2 == best.dist2 && f < best.face)) {
        best = {d2, f, bary, cp};
    }
}

/// Uniform grid over face bounding boxes for closest-face queries on large
/// meshes. Shell expansion with a conservative lower bound keeps results
/// identical to the brute-force scan (same comparison, same tie rule).
struct FaceGrid {
    Vec3 lo{}, hi{};
    int nx = 1, ny = 1, nz = 1;
    Vec3 cell{};
    std::vector<std::vector<int>> cells;

    explicit FaceGrid(const Mesh& mesh) {
        lo = hi = mesh.vertices.at(0);
        for (const auto& v : mesh.vertices)
            for (int k = 0; k < 3; ++k) {
                lo[k] = std::min(lo[k], v[k]);
                hi[k] = std::max(hi[k], v[k]);
            }
        double target = std::cbrt(double(mesh.faces.size()) / 4.0);
        Vec3 ext = hi - lo;
        double m = std::max({ext.x, ext.y, ext.z, 1e-12});
        nx = std::max(1, int(target * ext.x / m));
        ny = std::max(1, int(target * ext.y / m));
        nz = std::max(1, int(target * ext.z / m));
        cell = {ext.x / nx > 0 ? ext.x / nx : 1.0, ext.y / ny > 0 ? ext.y / ny : 1.0,
                ext.z / nz > 0 ? ext.z / nz : 1.0};
        cells.resize(size_t(nx) * size_t(ny) * size_t(nz));
        for (size_t f = 0; f < mesh.faces.size(); ++f) {
            const auto& t = mesh.faces[f];
            Vec3 flo = mesh.vertices[size_t(t[0])], fhi = flo;
            for (int k = 1; k < 3; ++k) {
                const Vec3& v = mesh.vertices[size_t(t[size_t(k)])];
                for (int c = 0; c < 3; ++c) {
                    flo[c] = std::min(flo[c], v[c]);
                    fhi[c] = std::max(fhi[c], v[c]);
                }
            }
            int c0[3], c1[3];
            clamp_cell(flo, c0);
            clamp_cell(fhi, c1);
            for (int x = c0[0]; x <= c1[0]; ++x)
                for (int y = c0[1]; y <= c1[1]; ++y)
                    for (int z = c0[2]; z <= c1[2]; ++z)
                        cells[idx(x, y, z)].push_back(int(f));
        }
    }

    size_t idx(int x, int y, int z) const { return (size_t(z) * size_t(ny) + size_t(y)) * size_t(nx) + size_t(x); }

    void clamp_cell(const Vec3& p, int out[3]) const {
        out[0] = std::clamp(int((p.x - lo.x) / cell.x), 0, nx - 1);
        out[1] = std::clamp(int((p.y - lo.y) / cell.y), 0, ny - 1);
        out[2] = std::clamp(int((p.z - lo.z) / cell.z), 0, nz - 1);
    }

    FaceHit query(const Mesh& mesh, const Vec3& p) const {
        FaceHit best;
        int c[3];
        clamp_cell(p, c);
        double min_edge = std::min({cell.x, cell.y, cell.z});
        int max_r = std::max({nx, ny, nz});
        for (int r = 0; r <= max_r; ++r) {
            // every cell at Chebyshev radius r is at least (r-1)*min_edge away
            if (best.face >= 0 && r >= 2) {
                double bound = double(r - 1) * min_edge;
                if (best.dist2 <= bound * bound) break;
            }
            for (int x = std::max(0, c[0] - r); x <= std::min(nx - 1, c[0] + r); ++x)
                for (int y = std::max(0, c[1] - r); y <= std::min(ny - 1, c[1] + r); ++y)
                    for (int z = std::max(0, c[2] - r); z <= std::min(nz - 1, c[2] + r); ++z) {
                        if (std::max({std::abs(x - c[0]), std::abs(y - c[1]), std::abs(z - c[2])}) != r)
                            continue;
                        for (int f : cells[idx(x, y, z)]) consider_face(mesh, f, p, best);
                    }
        }
        return best;
    }
};

}  // namespace detail

constexpr int kBindBruteForceLimit = 50000;

/// Anchors every Gaussian to its closest mesh face: barycentric coordinates
/// of the clamped closest point plus the signed offset along the face normal.
/// Positions are taken through `tf` so binding happens in the normalized
/// mesh frame. Ties on distance pick the lowest face id. Meshes above
/// `brute_force_limit` faces go through the uniform grid.
inline void bind_gaussians(GaussianSet& gs, const Mesh& mesh, const NormalizeTransform& tf,
                           int brute_force_limit = kBindBruteForceLimit) {
    if (mesh.faces.empty()) throw numeric_error("bind_gaussians: empty mesh");
    gs.bindings.assign(size_t(gs.count), Binding{});

    std::unique_ptr<detail::FaceGrid> grid;
    if (int(mesh.faces.size()) > brute_force_limit) grid = std::make_unique<detail::FaceGrid>(mesh);

    parallel_for(size_t(gs.count), [&](size_t i) {
        Vec3 p = tf.apply(gs.position(int(i)));
        detail::FaceHit hit;
        if (grid) {
            hit = grid->query(mesh, p);
        } else {
            for (size_t f = 0; f < mesh.faces.size(); ++f) detail::consider_face(mesh, int(f), p, hit);
        }
        Binding& b = gs.bindings[i];
        b.face_id = hit.face;
        b.bary = hit.bary;
        b.offset = dot(p - hit.point, face_normal(mesh, hit.face));
    });
}

/// Reconstruct anchored positions from (possibly deformed) vertices:
/// mu = sum_i w_i * V_i + offset * n_face. The offset rides on the deformed
/// face normal so off-surface points track the surface under deformation.
inline std::vector<Vec3> update_gaussian_positions(const GaussianSet& gs, const Mesh& mesh,
                                                   const std::vector<Vec3>& vertices) {
    if (!gs.bound()) throw numeric_error("update_gaussian_positions: set is not bound");
    if (vertices.size() != mesh.vertices.size())
        throw numeric_error(cat("update_gaussian_positions: ", vertices.size(), " positions for ",
                                mesh.vertices.size(), " vertices"));
    std::vector<Vec3> out(size_t(gs.count));
    for (int i = 0; i < gs.count; ++i) {
        const Binding& b = gs.bindings[size_t(i)];
        const auto& t = mesh.faces[size_t(b.face_id)];
        const Vec3 &v0 = vertices[size_t(t[0])], &v1 = vertices[size_t(t[1])], &v2 = vertices[size_t(t[2])];
        Vec3 n = normalized(cross(v1 - v0, v2 - v0));
        out[size_t(i)] = v0 * b.bary[0] + v1 * b.bary[1] + v2 * b.bary[2] + n * b.offset;
    }
    return out;
}

/// Vertex colors from bound Gaussians: opacity-weighted mean of the SH color
/// (canonical view direction) over Gaussians bound to faces incident to the
/// vertex. Vertices with no weighted color take the nearest colored vertex's
/// color along the hybrid graph. Summation is index-ordered, so results do
/// not depend on scheduling.
inline void init_vertex_colors(Mesh& mesh, const GaussianSet& gs, const Vec3& view_dir,
                               const HybridGraph& graph) {
    if (!gs.bound() || gs.count == 0) throw numeric_error("init_vertex_colors: no color source");
    const size_t n = mesh.vertices.size();

    std::vector<std::vector<int>> face_gaussians(mesh.faces.size());
    for (int i = 0; i < gs.count; ++i) face_gaussians[size_t(gs.bindings[size_t(i)].face_id)].push_back(i);

    auto incidence = vertex_face_incidence(mesh);
    mesh.colors.assign(n, Vec3{});
    std::vector<char> colored(n, 0);
    size_t colored_count = 0;
    for (size_t v = 0; v < n; ++v) {
        Vec3 acc{};
        double wsum = 0;
        for (int f : incidence[v])
            for (int gi : face_gaussians[size_t(f)]) {
                double w = gs.opacity(gi);
                acc += eval_sh_color(gs, gi, view_dir) * w;
                wsum += w;
            }
        if (wsum > 0) {
            mesh.colors[v] = acc / wsum;
            colored[v] = 1;
            ++colored_count;
        }
    }
    if (colored_count == 0) throw numeric_error("init_vertex_colors: no color source");
    if (colored_count == n) return;

    // multi-source Dijkstra from the colored set; ties prefer the lower origin
    std::vector<double> dist(n, kUnreachable);
    std::vector<int> origin(n, -1);
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<Item>> heap;
    for (size_t v = 0; v < n; ++v)
        if (colored[v]) {
            dist[v] = 0;
            origin[v] = int(v);
            heap.push({0.0, int(v)});
        }
    while (!heap.empty()) {
        auto [d, u] = heap.top();
        heap.pop();
        if (d > dist[size_t(u)]) continue;
        for (int e = graph.adj_offset[size_t(u)]; e < graph.adj_offset[size_t(u) + 1]; ++e) {
            auto [v, w] = graph.adj[size_t(e)];
            double nd = d + w;
            if (nd < dist[size_t(v)] || (nd == dist[size_t(v)] && origin[size_t(u)] < origin[size_t(v)])) {
                dist[size_t(v)] = nd;
                origin[size_t(v)] = origin[size_t(u)];
                heap.push({nd, v});
            }
        }
    }
    size_t unreached = 0;
    for (size_t v = 0; v < n; ++v)
        if (!colored[v]) {
            if (origin[v] >= 0)
                mesh.colors[v] = mesh.colors[size_t(origin[v])];
            else
                ++unreached;  // disconnected from every colored vertex: stays black
        }
    if (unreached > 0) warn(cat("init_vertex_colors: ", unreached, " vertices unreachable from any colored vertex"));
}

}  // namespace morphkit
