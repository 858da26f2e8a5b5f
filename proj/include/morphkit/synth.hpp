#pragma once

#include <filesystem>
#include <map>

#include "morphkit/mesh_io.hpp"

namespace morphkit {

/// Icosahedron subdivided `subdivisions` times, vertices projected onto the
/// sphere of the given radius. Vertex and face order are fixed functions of
/// the parameters, so generated meshes are byte-stable.
inline Mesh make_icosphere(int subdivisions, double radius = 0.5) {
    if (subdivisions < 0 || subdivisions > 6)
        throw config_error(cat("make_icosphere: subdivisions must be in [0,6], got ", subdivisions));
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    Mesh m;
    m.vertices = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                  {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
    m.faces = {{0, 11, 5}, {0, 5, 1}, {0, 1, 7}, {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
               {11, 10, 2}, {10, 7, 6}, {7, 1, 8}, {3, 9, 4}, {3, 4, 2}, {3, 2, 6}, {3, 6, 8},
               {3, 8, 9}, {4, 9, 5}, {2, 4, 11}, {6, 2, 10}, {8, 6, 7}, {9, 8, 1}};

    for (int s = 0; s < subdivisions; ++s) {
        std::map<std::pair<int, int>, int> midpoint;
        auto mid = [&](int a, int b) {
            auto key = std::minmax(a, b);
            auto it = midpoint.find(key);
            if (it != midpoint.end()) return it->second;
            m.vertices.push_back((m.vertices[size_t(a)] + m.vertices[size_t(b)]) * 0.5);
            int idx = int(m.vertices.size()) - 1;
            midpoint[key] = idx;
            return idx;
        };
        std::vector<std::array<int, 3>> next;
        next.reserve(m.faces.size() * 4);
        for (const auto& f : m.faces) {
            int ab = mid(f[0], f[1]), bc = mid(f[1], f[2]), ca = mid(f[2], f[0]);
            next.push_back({f[0], ab, ca});
            next.push_back({f[1], bc, ab});
            next.push_back({f[2], ca, bc});
            next.push_back({ab, bc, ca});
        }
        m.faces = std::move(next);
    }
    for (auto& v : m.vertices) v = normalized(v) * radius;
    compute_vertex_normals(m);
    return m;
}

/// Solid color per coordinate octant; sharp boundaries that stress the
/// color-smoothness weighting and the color metrics. None of the palette is
/// background white.
inline void paint_octant_colors(Mesh& m) {
    static const Vec3 palette[8] = {{0.85, 0.15, 0.15}, {0.15, 0.55, 0.85}, {0.15, 0.75, 0.25},
                                    {0.95, 0.8, 0.15},  {0.65, 0.25, 0.8},  {0.95, 0.5, 0.15},
                                    {0.2, 0.85, 0.75},  {0.5, 0.35, 0.15}};
    m.colors.resize(m.vertices.size());
    for (size_t i = 0; i < m.vertices.size(); ++i) {
        const Vec3& v = m.vertices[i];
        int oct = (v.x >= 0 ? 4 : 0) | (v.y >= 0 ? 2 : 0) | (v.z >= 0 ? 1 : 0);
        m.colors[i] = palette[oct];
    }
}

/// Source/target pair with analytic ground-truth correspondence (the target
/// is a deformed copy, so the map is the identity on vertex indices).
struct SynthPair {
    Mesh source;
    Mesh target;
    std::vector<int> gt_map;
    std::string tag;
};

inline Vec3 rotate_z(const Vec3& p, double radians) {
    double c = std::cos(radians), s = std::sin(radians);
    return {c * p.x - s * p.y, s * p.x + c * p.y, p.z};
}
inline Vec3 rotate_y(const Vec3& p, double radians) {
    double c = std::cos(radians), s = std::sin(radians);
    return {c * p.x + s * p.z, p.y, -s * p.x + c * p.z};
}

/// Deformation kinds and their magnitude semantics:
///   translate       offset of `magnitude` along +x
///   rotate          `magnitude` degrees about z
///   ellipsoid-scale z scaled by `magnitude`
///   bend            rotation about y ramping 0..magnitude degrees across x
///   twist           rotation about z ramping 0..magnitude degrees across z
inline SynthPair deform_pair(const Mesh& base, const std::string& kind, double magnitude) {
    SynthPair pair;
    pair.source = base;
    paint_octant_colors(pair.source);
    pair.target = pair.source;  // colors ride along per vertex
    pair.tag = cat(kind, ":", magnitude);

    const double rad = magnitude * 3.14159265358979323846 / 180.0;
    double zmin = 0, zmax = 0, xmin = 0, xmax = 0;
    for (const auto& v : base.vertices) {
        zmin = std::min(zmin, v.z);
        zmax = std::max(zmax, v.z);
        xmin = std::min(xmin, v.x);
        xmax = std::max(xmax, v.x);
    }

    for (auto& v : pair.target.vertices) {
        if (kind == "translate") {
            v = v + Vec3{magnitude, 0, 0};
        } else if (kind == "rotate") {
            v = rotate_z(v, rad);
        } else if (kind == "ellipsoid-scale") {
            v = {v.x, v.y, v.z * magnitude};
        } else if (kind == "bend") {
            double s = xmax > xmin ? (v.x - xmin) / (xmax - xmin) : 0.0;
            v = rotate_y(v, rad * s);
        } else if (kind == "twist") {
            double s = zmax > zmin ? (v.z - zmin) / (zmax - zmin) : 0.0;
            v = rotate_z(v, rad * s);
        } else {
            throw config_error(cat("deform_pair: unknown kind '", kind, "'"));
        }
    }
    compute_vertex_normals(pair.target);

    pair.gt_map.resize(base.vertices.size());
    for (size_t i = 0; i < pair.gt_map.size(); ++i) pair.gt_map[i] = int(i);
    return pair;
}

inline void write_pair(const SynthPair& pair, const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    save_obj(dir + "/source.obj", pair.source);
    save_obj(dir + "/target.obj", pair.target);
    std::ofstream gt(dir + "/gt_map.txt", std::ios::trunc);
    if (!gt) throw file_error(cat("cannot write ", dir, "/gt_map.txt"));
    for (int i : pair.gt_map) gt << i << "\n";
}

inline std::vector<int> load_gt_map(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw file_error(cat("cannot open file: ", path));
    std::vector<int> map;
    int v;
    while (in >> v) map.push_back(v);
    return map;
}

}  // namespace morphkit
