#pragma once

#include <charconv>
#include <cstdio>

#include "morphkit/mesh.hpp"

namespace morphkit {

// Triangle-mesh file IO. OBJ (v/f records, optional per-vertex color
// extension `v x y z r g b`) and PLY (ascii / binary_little_endian, vertex
// x/y/z with optional red/green/blue, face vertex_indices). Polygons are
// fan-triangulated around their first vertex.

namespace detail {

inline std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream is(s);
    std::string tok;
    while (is >> tok) out.push_back(tok);
    return out;
}

inline double parse_double(const std::string& tok, size_t line_no, const char* what) {
    try {
        size_t used = 0;
        double v = std::stod(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        throw parse_error(cat("line ", line_no, ": bad ", what, " value '", tok, "'"));
    }
}

inline long parse_long(const std::string& tok, size_t line_no, const char* what) {
    try {
        size_t used = 0;
        long v = std::stol(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        throw parse_error(cat("line ", line_no, ": bad ", what, " value '", tok, "'"));
    }
}

inline void fan_triangulate(std::vector<int>& poly, std::vector<std::array<int, 3>>& faces) {
    for (size_t k = 1; k + 1 < poly.size(); ++k)
        faces.push_back({poly[0], poly[int(k)], poly[int(k) + 1]});
}

}  // namespace detail

inline Mesh load_obj(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw file_error(cat("cannot open file: ", path));
    Mesh mesh;
    std::string line;
    size_t line_no = 0;
    bool any_color = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        auto toks = detail::split_ws(line);
        if (toks.empty() || toks[0][0] == '#') continue;
        if (toks[0] == "v") {
            if (toks.size() < 4)
                throw parse_error(cat(path, ": line ", line_no, ": vertex needs 3 coordinates"));
            Vec3 p{detail::parse_double(toks[1], line_no, "vertex"),
                   detail::parse_double(toks[2], line_no, "vertex"),
                   detail::parse_double(toks[3], line_no, "vertex")};
            mesh.vertices.push_back(p);
            if (toks.size() >= 7) {
                mesh.colors.resize(mesh.vertices.size(), Vec3{});
                mesh.colors.back() = {detail::parse_double(toks[4], line_no, "color"),
                                      detail::parse_double(toks[5], line_no, "color"),
                                      detail::parse_double(toks[6], line_no, "color")};
                any_color = true;
            } else if (any_color) {
                throw parse_error(cat(path, ": line ", line_no, ": mixed colored/uncolored vertices"));
            }
        } else if (toks[0] == "f") {
            if (toks.size() < 4)
                throw parse_error(cat(path, ": line ", line_no, ": face needs at least 3 indices"));
            std::vector<int> poly;
            for (size_t k = 1; k < toks.size(); ++k) {
                std::string head = toks[k].substr(0, toks[k].find('/'));
                long idx = detail::parse_long(head, line_no, "face index");
                // OBJ indices are 1-based; negative indices count from the end
                long v = idx > 0 ? idx - 1 : long(mesh.vertices.size()) + idx;
                if (v < 0 || v >= long(mesh.vertices.size()))
                    throw parse_error(cat(path, ": line ", line_no, ": face index ", idx, " out of range"));
                poly.push_back(int(v));
            }
            detail::fan_triangulate(poly, mesh.faces);
        }
        // vn/vt/usemtl/o/g/s/mtllib are ignored; normals are recomputed below
    }
    if (any_color) mesh.colors.resize(mesh.vertices.size(), Vec3{});
    validate_mesh(mesh);
    compute_vertex_normals(mesh);
    return mesh;
}

namespace detail {

struct PlyProp {
    std::string name;
    std::string type;        // scalar type, or list element type
    std::string count_type;  // nonempty for list properties
    bool is_list = false;
};

inline size_t ply_type_size(const std::string& t, size_t line_no) {
    if (t == "char" || t == "int8" || t == "uchar" || t == "uint8") return 1;
    if (t == "short" || t == "int16" || t == "ushort" || t == "uint16") return 2;
    if (t == "int" || t == "int32" || t == "uint" || t == "uint32" || t == "float" || t == "float32") return 4;
    if (t == "double" || t == "float64") return 8;
    throw parse_error(cat("line ", line_no, ": unknown ply type '", t, "'"));
}

inline double ply_read_scalar(ByteReader& r, const std::string& t) {
    if (t == "char" || t == "int8") return double(int8_t(r.bytes(1)[0]));
    if (t == "uchar" || t == "uint8") return double(uint8_t(r.bytes(1)[0]));
    if (t == "short" || t == "int16") {
        uint32_t lo = uint8_t(r.bytes(1)[0]);
        uint32_t hi = uint8_t(r.bytes(1)[0]);
        return double(int16_t(lo | (hi << 8)));
    }
    if (t == "ushort" || t == "uint16") {
        uint32_t lo = uint8_t(r.bytes(1)[0]);
        uint32_t hi = uint8_t(r.bytes(1)[0]);
        return double(uint16_t(lo | (hi << 8)));
    }
    if (t == "int" || t == "int32") return double(int32_t(r.u32()));
    if (t == "uint" || t == "uint32") return double(r.u32());
    if (t == "float" || t == "float32") return double(r.f32());
    return r.f64();  // double / float64
}

}  // namespace detail

inline Mesh load_ply(const std::string& path) {
    std::string bytes = read_file_bytes(path);
    // header is ascii lines terminated by end_header
    size_t pos = 0, line_no = 0;
    auto next_line = [&]() -> std::string {
        size_t e = bytes.find('\n', pos);
        if (e == std::string::npos) throw parse_error(cat(path, ": unterminated ply header at byte ", pos));
        std::string l = bytes.substr(pos, e - pos);
        if (!l.empty() && l.back() == '\r') l.pop_back();
        pos = e + 1;
        ++line_no;
        return l;
    };

    if (next_line() != "ply") throw parse_error(cat(path, ": not a ply file (missing 'ply' magic)"));
    bool binary = false, format_seen = false;

    struct Element {
        std::string name;
        size_t count = 0;
        std::vector<detail::PlyProp> props;
    };
    std::vector<Element> elements;

    for (;;) {
        std::string l = next_line();
        auto toks = detail::split_ws(l);
        if (toks.empty()) continue;
        if (toks[0] == "comment" || toks[0] == "obj_info") continue;
        if (toks[0] == "format") {
            if (toks.size() < 2) throw parse_error(cat(path, ": line ", line_no, ": bad format line"));
            if (toks[1] == "ascii")
                binary = false;
            else if (toks[1] == "binary_little_endian")
                binary = true;
            else
                throw parse_error(cat(path, ": line ", line_no, ": unsupported format '", toks[1], "'"));
            format_seen = true;
        } else if (toks[0] == "element") {
            if (toks.size() != 3) throw parse_error(cat(path, ": line ", line_no, ": bad element line"));
            elements.push_back({toks[1], size_t(detail::parse_long(toks[2], line_no, "element count")), {}});
        } else if (toks[0] == "property") {
            if (elements.empty()) throw parse_error(cat(path, ": line ", line_no, ": property before element"));
            detail::PlyProp p;
            if (toks.size() >= 5 && toks[1] == "list") {
                p.is_list = true;
                p.count_type = toks[2];
                p.type = toks[3];
                p.name = toks[4];
            } else if (toks.size() >= 3) {
                p.type = toks[1];
                p.name = toks[2];
            } else {
                throw parse_error(cat(path, ": line ", line_no, ": bad property line"));
            }
            elements.back().props.push_back(p);
        } else if (toks[0] == "end_header") {
            break;
        } else {
            throw parse_error(cat(path, ": line ", line_no, ": unknown header keyword '", toks[0], "'"));
        }
    }
    if (!format_seen) throw parse_error(cat(path, ": missing ply format line"));

    Mesh mesh;
    ByteReader reader(bytes, path);
    reader.pos = pos;

    auto ascii_tokens = [&]() -> std::vector<std::string> {
        size_t e = bytes.find('\n', pos);
        if (e == std::string::npos) e = bytes.size();
        std::string l = bytes.substr(pos, e - pos);
        pos = e < bytes.size() ? e + 1 : e;
        ++line_no;
        return detail::split_ws(l);
    };

    for (const auto& el : elements) {
        if (el.name == "vertex") {
            int ix = -1, iy = -1, iz = -1, ir = -1, ig = -1, ib = -1;
            for (size_t k = 0; k < el.props.size(); ++k) {
                const auto& nm = el.props[k].name;
                if (nm == "x") ix = int(k);
                if (nm == "y") iy = int(k);
                if (nm == "z") iz = int(k);
                if (nm == "red") ir = int(k);
                if (nm == "green") ig = int(k);
                if (nm == "blue") ib = int(k);
            }
            if (ix < 0 || iy < 0 || iz < 0)
                throw parse_error(cat(path, ": vertex element lacks x/y/z properties"));
            bool has_rgb = ir >= 0 && ig >= 0 && ib >= 0;
            mesh.vertices.reserve(el.count);
            if (has_rgb) mesh.colors.reserve(el.count);
            for (size_t i = 0; i < el.count; ++i) {
                std::vector<double> vals(el.props.size(), 0.0);
                if (binary) {
                    for (size_t k = 0; k < el.props.size(); ++k) {
                        if (el.props[k].is_list)
                            throw parse_error(cat(path, ": list property on vertex element unsupported"));
                        vals[k] = detail::ply_read_scalar(reader, el.props[k].type);
                    }
                } else {
                    auto toks = ascii_tokens();
                    if (toks.size() < el.props.size())
                        throw parse_error(cat(path, ": line ", line_no, ": expected ", el.props.size(), " vertex values"));
                    for (size_t k = 0; k < el.props.size(); ++k)
                        vals[k] = detail::parse_double(toks[k], line_no, "vertex");
                }
                mesh.vertices.push_back({vals[ix], vals[iy], vals[iz]});
                if (has_rgb) {
                    double s = el.props[ir].type == "uchar" || el.props[ir].type == "uint8" ? 1.0 / 255.0 : 1.0;
                    mesh.colors.push_back({vals[ir] * s, vals[ig] * s, vals[ib] * s});
                }
            }
        } else if (el.name == "face") {
            int il = -1;
            for (size_t k = 0; k < el.props.size(); ++k)
                if (el.props[k].name == "vertex_indices" || el.props[k].name == "vertex_index") il = int(k);
            if (il < 0) throw parse_error(cat(path, ": face element lacks vertex_indices"));
            for (size_t i = 0; i < el.count; ++i) {
                std::vector<int> poly;
                if (binary) {
                    for (size_t k = 0; k < el.props.size(); ++k) {
                        const auto& p = el.props[k];
                        if (p.is_list) {
                            size_t cnt = size_t(detail::ply_read_scalar(reader, p.count_type));
                            for (size_t j = 0; j < cnt; ++j) {
                                double v = detail::ply_read_scalar(reader, p.type);
                                if (int(k) == il) poly.push_back(int(v));
                            }
                        } else {
                            detail::ply_read_scalar(reader, p.type);
                        }
                    }
                } else {
                    auto toks = ascii_tokens();
                    size_t t = 0;
                    for (size_t k = 0; k < el.props.size(); ++k) {
                        const auto& p = el.props[k];
                        if (p.is_list) {
                            if (t >= toks.size()) throw parse_error(cat(path, ": line ", line_no, ": truncated face"));
                            size_t cnt = size_t(detail::parse_long(toks[t++], line_no, "face count"));
                            for (size_t j = 0; j < cnt; ++j) {
                                if (t >= toks.size())
                                    throw parse_error(cat(path, ": line ", line_no, ": truncated face"));
                                long v = detail::parse_long(toks[t++], line_no, "face index");
                                if (int(k) == il) poly.push_back(int(v));
                            }
                        } else {
                            ++t;
                        }
                    }
                }
                if (poly.size() < 3) {
                    if (binary)
                        throw parse_error(cat(path, ": face ", i, " has ", poly.size(), " indices (byte offset ", reader.pos, ")"));
                    throw parse_error(cat(path, ": line ", line_no, ": face has ", poly.size(), " indices"));
                }
                detail::fan_triangulate(poly, mesh.faces);
            }
        } else {
            // skip unknown elements
            for (size_t i = 0; i < el.count; ++i) {
                if (binary) {
                    for (const auto& p : el.props) {
                        if (p.is_list) {
                            size_t cnt = size_t(detail::ply_read_scalar(reader, p.count_type));
                            for (size_t j = 0; j < cnt; ++j) detail::ply_read_scalar(reader, p.type);
                        } else {
                            detail::ply_read_scalar(reader, p.type);
                        }
                    }
                } else {
                    ascii_tokens();
                }
            }
        }
        if (!binary) reader.pos = pos;
        else pos = reader.pos;
    }

    validate_mesh(mesh);
    compute_vertex_normals(mesh);
    return mesh;
}

/// Loads OBJ or PLY; the format is sniffed from the leading bytes.
inline Mesh load_mesh(const std::string& path) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw file_error(cat("cannot open file: ", path));
    char magic[3] = {};
    probe.read(magic, 3);
    probe.close();
    if (std::strncmp(magic, "ply", 3) == 0) return load_ply(path);
    return load_obj(path);
}

/// Writes OBJ; emits the `v x y z r g b` color extension when colors exist.
/// %.17g keeps double round trips exact so re-reads are bit-faithful.
inline void save_obj(const std::string& path, const Mesh& mesh) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw file_error(cat("cannot write file: ", path));
    char buf[256];
    bool colored = mesh.has_colors();
    for (size_t i = 0; i < mesh.vertices.size(); ++i) {
        const Vec3& v = mesh.vertices[i];
        if (colored) {
            const Vec3& c = mesh.colors[i];
            std::snprintf(buf, sizeof buf, "v %.17g %.17g %.17g %.17g %.17g %.17g\n", v.x, v.y, v.z, c.x, c.y, c.z);
        } else {
            std::snprintf(buf, sizeof buf, "v %.17g %.17g %.17g\n", v.x, v.y, v.z);
        }
        out << buf;
    }
    for (const auto& f : mesh.faces) out << "f " << f[0] + 1 << " " << f[1] + 1 << " " << f[2] + 1 << "\n";
    if (!out) throw file_error(cat("write failed: ", path));
}

}  // namespace morphkit
