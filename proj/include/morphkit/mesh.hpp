#pragma once

#include <set>

#include "morphkit/common.hpp"

namespace morphkit {

/// Indexed triangle mesh. Faces are triples of vertex indices; normals are
/// derived per vertex (area-weighted); colors are RGB in [0,1] and may be
/// empty until initialized. Connectivity only, no manifold requirement.
struct Mesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> faces;
    std::vector<Vec3> normals;
    std::vector<Vec3> colors;  // empty until assigned

    size_t vertex_count() const { return vertices.size(); }
    size_t face_count() const { return faces.size(); }
    bool has_colors() const { return colors.size() == vertices.size(); }
};

inline void validate_mesh(const Mesh& m) {
    const int n = int(m.vertices.size());
    for (size_t f = 0; f < m.faces.size(); ++f) {
        const auto& t = m.faces[f];
        for (int k = 0; k < 3; ++k)
            if (t[k] < 0 || t[k] >= n)
                throw parse_error(cat("face ", f, ": vertex index ", t[k], " out of range [0,", n, ")"));
        if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2])
            throw parse_error(cat("face ", f, ": degenerate (repeated vertex index)"));
    }
}

inline Vec3 face_normal(const Mesh& m, int f) {
    const auto& t = m.faces[f];
    return normalized(cross(m.vertices[t[1]] - m.vertices[t[0]], m.vertices[t[2]] - m.vertices[t[0]]));
}

/// Area-weighted averaging of face normals: the unnormalized cross product of
/// two edges has magnitude 2*area, so summing it per incident vertex weights
/// by area for free. Vertices with no well-defined normal get +z.
inline void compute_vertex_normals(Mesh& m) {
    m.normals.assign(m.vertices.size(), Vec3{});
    for (const auto& t : m.faces) {
        Vec3 c = cross(m.vertices[t[1]] - m.vertices[t[0]], m.vertices[t[2]] - m.vertices[t[0]]);
        for (int k = 0; k < 3; ++k) m.normals[t[k]] += c;
    }
    for (auto& nrm : m.normals) {
        double len = norm(nrm);
        nrm = len > 0 ? nrm / len : Vec3{0, 0, 1};
    }
}

/// Similarity transform recorded by normalize_mesh so exported geometry can be
/// mapped back to the input frame: normalized = (p - center) * scale.
struct NormalizeTransform {
    double scale = 1.0;
    Vec3 center{};

    Vec3 apply(const Vec3& p) const { return (p - center) * scale; }
    Vec3 invert(const Vec3& p) const { return p / scale + center; }
};

/// Moves the vertex centroid to the origin and scales the longest bounding-box
/// edge to length 1. Throws on zero extent (all vertices coincident).
inline NormalizeTransform normalize_mesh(Mesh& m) {
    if (m.vertices.empty()) throw numeric_error("normalize_mesh: empty mesh");
    Vec3 centroid{};
    for (const auto& v : m.vertices) centroid += v;
    centroid = centroid / double(m.vertices.size());

    Vec3 lo = m.vertices[0], hi = m.vertices[0];
    for (const auto& v : m.vertices)
        for (int k = 0; k < 3; ++k) {
            lo[k] = std::min(lo[k], v[k]);
            hi[k] = std::max(hi[k], v[k]);
        }
    double extent = std::max({hi.x - lo.x, hi.y - lo.y, hi.z - lo.z});
    if (extent <= 0) throw numeric_error("normalize_mesh: zero extent");

    NormalizeTransform tf{1.0 / extent, centroid};
    for (auto& v : m.vertices) v = tf.apply(v);
    if (!m.normals.empty()) compute_vertex_normals(m);
    return tf;
}

/// Sorted unique 1-ring neighbor lists over the face-sharing graph.
inline std::vector<std::vector<int>> vertex_adjacency(const Mesh& m) {
    std::vector<std::set<int>> nb(m.vertices.size());
    for (const auto& t : m.faces)
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b)
                if (a != b) nb[t[a]].insert(t[b]);
    std::vector<std::vector<int>> out(m.vertices.size());
    for (size_t i = 0; i < nb.size(); ++i) out[i].assign(nb[i].begin(), nb[i].end());
    return out;
}

/// Unique undirected face-sharing edges, each stored once with u < v.
inline std::vector<std::pair<int, int>> adjacency_edges(const Mesh& m) {
    std::set<std::pair<int, int>> e;
    for (const auto& t : m.faces)
        for (int a = 0; a < 3; ++a)
            for (int b = a + 1; b < 3; ++b)
                e.insert({std::min(t[a], t[b]), std::max(t[a], t[b])});
    return {e.begin(), e.end()};
}

/// Faces incident to each vertex, ascending face ids.
inline std::vector<std::vector<int>> vertex_face_incidence(const Mesh& m) {
    std::vector<std::vector<int>> inc(m.vertices.size());
    for (size_t f = 0; f < m.faces.size(); ++f)
        for (int k = 0; k < 3; ++k) inc[m.faces[f][k]].push_back(int(f));
    return inc;
}

inline uint64_t mesh_content_hash(const Mesh& m) {
    uint64_t h = 0xcbf29ce484222325ULL;
    if (!m.vertices.empty()) h = fnv1a64(m.vertices.data(), m.vertices.size() * sizeof(Vec3), h);
    if (!m.faces.empty()) h = fnv1a64(m.faces.data(), m.faces.size() * sizeof(std::array<int, 3>), h);
    if (m.has_colors()) h = fnv1a64(m.colors.data(), m.colors.size() * sizeof(Vec3), h);
    return h;
}

}  // namespace morphkit
