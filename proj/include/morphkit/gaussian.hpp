#pragma once

#include "morphkit/mesh_io.hpp"

namespace morphkit {

/// Anchor of one Gaussian to a mesh face: barycentric weights of the closest
/// surface point plus a signed offset along the face normal.
struct Binding {
    int face_id = -1;
    std::array<double, 3> bary{};
    double offset = 0.0;
};

/// 3D Gaussian primitives in the standard splat PLY layout. Raw float fields
/// are kept exactly as stored on disk (opacity as a pre-sigmoid logit,
/// scales in log space, quaternions unnormalized) so that load/save round
/// trips are bit-exact; accessors expose the activated values.
///
/// Spherical harmonics: `sh_coeffs` is 1 (DC only), 4, 9 or 16 per channel.
/// f_rest is channel-major as written by 3DGS exporters: coefficient k of
/// channel c lives at f_rest[c * (sh_coeffs - 1) + (k - 1)].
struct GaussianSet {
    int count = 0;
    int sh_coeffs = 1;
    bool has_normals = false;

    std::vector<float> pos;            // 3 per point
    std::vector<float> normal;         // 3 per point when has_normals
    std::vector<float> f_dc;           // 3 per point
    std::vector<float> f_rest;         // 3*(sh_coeffs-1) per point
    std::vector<float> opacity_logit;  // 1 per point
    std::vector<float> log_scale;      // 3 per point
    std::vector<float> rot;            // 4 per point (w,x,y,z), raw

    std::vector<Binding> bindings;  // parallel to points once bound

    bool bound() const { return bindings.size() == size_t(count); }

    Vec3 position(int i) const { return {pos[size_t(i) * 3], pos[size_t(i) * 3 + 1], pos[size_t(i) * 3 + 2]}; }
    double opacity(int i) const { return 1.0 / (1.0 + std::exp(-double(opacity_logit[size_t(i)]))); }
    Vec3 scale(int i) const {
        return {std::exp(double(log_scale[size_t(i) * 3])), std::exp(double(log_scale[size_t(i) * 3 + 1])),
                std::exp(double(log_scale[size_t(i) * 3 + 2]))};
    }
    std::array<double, 4> rotation(int i) const {
        std::array<double, 4> q{double(rot[size_t(i) * 4]), double(rot[size_t(i) * 4 + 1]),
                                double(rot[size_t(i) * 4 + 2]), double(rot[size_t(i) * 4 + 3])};
        double n = std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
        if (n > 0)
            for (double& v : q) v /= n;
        else
            q = {1, 0, 0, 0};
        return q;
    }
    double sh(int i, int coeff, int channel) const {
        if (coeff == 0) return double(f_dc[size_t(i) * 3 + size_t(channel)]);
        size_t stride = size_t(sh_coeffs - 1);
        return double(f_rest[size_t(i) * 3 * stride + size_t(channel) * stride + size_t(coeff - 1)]);
    }

    /// Covariance = R diag(s^2) R^T from the activated scale and rotation;
    /// symmetric positive definite whenever scales are finite.
    std::array<double, 9> covariance(int i) const {
        auto q = rotation(i);
        Vec3 s = scale(i);
        double w = q[0], x = q[1], y = q[2], z = q[3];
        double R[9] = {1 - 2 * (y * y + z * z), 2 * (x * y - w * z),     2 * (x * z + w * y),
                       2 * (x * y + w * z),     1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
                       2 * (x * z - w * y),     2 * (y * z + w * x),     1 - 2 * (x * x + y * y)};
        double s2[3] = {s.x * s.x, s.y * s.y, s.z * s.z};
        std::array<double, 9> cov{};
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c)
                for (int k = 0; k < 3; ++k) cov[size_t(r * 3 + c)] += R[r * 3 + k] * s2[k] * R[c * 3 + k];
        return cov;
    }
};

// --------------------------------------------------------------- sh eval

namespace detail {
constexpr double kSH0 = 0.28209479177387814;
constexpr double kSH1 = 0.4886025119029199;
constexpr double kSH2[5] = {1.0925484305920792, -1.0925484305920792, 0.31539156525252005,
                            -1.0925484305920792, 0.5462742152960396};
constexpr double kSH3[7] = {-0.5900435899266435, 2.890611442640554, -0.4570457994644658, 0.3731763325901154,
                            -0.4570457994644658, 1.445305721320277, -0.5900435899266435};
}  // namespace detail

/// Real SH basis contracted with the point's coefficients, 3DGS sign
/// convention, plus the 0.5 DC offset; the result is clamped to [0,1].
inline Vec3 eval_sh_color(const GaussianSet& gs, int i, const Vec3& view_dir) {
    using namespace detail;
    double x = view_dir.x, y = view_dir.y, z = view_dir.z;
    Vec3 c{};
    for (int ch = 0; ch < 3; ++ch) {
        double v = kSH0 * gs.sh(i, 0, ch);
        if (gs.sh_coeffs >= 4) {
            v += -kSH1 * y * gs.sh(i, 1, ch);
            v += kSH1 * z * gs.sh(i, 2, ch);
            v += -kSH1 * x * gs.sh(i, 3, ch);
        }
        if (gs.sh_coeffs >= 9) {
            double xx = x * x, yy = y * y, zz = z * z;
            v += kSH2[0] * x * y * gs.sh(i, 4, ch);
            v += kSH2[1] * y * z * gs.sh(i, 5, ch);
            v += kSH2[2] * (2 * zz - xx - yy) * gs.sh(i, 6, ch);
            v += kSH2[3] * x * z * gs.sh(i, 7, ch);
            v += kSH2[4] * (xx - yy) * gs.sh(i, 8, ch);
        }
        if (gs.sh_coeffs >= 16) {
            double xx = x * x, yy = y * y, zz = z * z;
            v += kSH3[0] * y * (3 * xx - yy) * gs.sh(i, 9, ch);
            v += kSH3[1] * x * y * z * gs.sh(i, 10, ch);
            v += kSH3[2] * y * (4 * zz - xx - yy) * gs.sh(i, 11, ch);
            v += kSH3[3] * z * (2 * zz - 3 * xx - 3 * yy) * gs.sh(i, 12, ch);
            v += kSH3[4] * x * (4 * zz - xx - yy) * gs.sh(i, 13, ch);
            v += kSH3[5] * z * (xx - yy) * gs.sh(i, 14, ch);
            v += kSH3[6] * x * (xx - yy - 3 * zz) * gs.sh(i, 15, ch);
        }
        c[ch] = std::clamp(v + 0.5, 0.0, 1.0);
    }
    return c;
}

// --------------------------------------------------------------- ply io

namespace detail {

inline int sh_coeffs_from_rest(int rest_props) {
    switch (rest_props) {
        case 0: return 1;
        case 9: return 4;
        case 24: return 9;
        case 45: return 16;
        default:
            throw parse_error(cat("unsupported f_rest property count ", rest_props,
                                  " (expected 0, 9, 24 or 45)"));
    }
}

}  // namespace detail

/// Loads a standard 3DGS splat PLY (binary little-endian). Required
/// properties: x,y,z, f_dc_0..2, opacity, scale_0..2, rot_0..3; nx,ny,nz and
/// f_rest_* are optional. Binding properties written by save_gaussians
/// (bind_face, bind_bary_0..2, bind_offset) are picked up when present;
/// anything else is skipped.
inline GaussianSet load_gaussians(const std::string& path) {
    std::string bytes = read_file_bytes(path);
    size_t pos = 0;
    auto next_line = [&]() -> std::string {
        size_t e = bytes.find('\n', pos);
        if (e == std::string::npos) throw parse_error(cat(path, ": unterminated ply header at byte ", pos));
        std::string l = bytes.substr(pos, e - pos);
        if (!l.empty() && l.back() == '\r') l.pop_back();
        pos = e + 1;
        return l;
    };

    if (next_line() != "ply") throw parse_error(cat(path, ": not a ply file"));
    size_t count = 0;
    std::vector<std::pair<std::string, std::string>> props;  // (name, type) in file order
    bool in_vertex = false, binary_le = false;
    for (;;) {
        std::string l = next_line();
        auto toks = detail::split_ws(l);
        if (toks.empty() || toks[0] == "comment" || toks[0] == "obj_info") continue;
        if (toks[0] == "format") {
            binary_le = toks.size() > 1 && toks[1] == "binary_little_endian";
            if (!binary_le) throw parse_error(cat(path, ": 3DGS ply must be binary_little_endian"));
        } else if (toks[0] == "element") {
            in_vertex = toks.size() > 1 && toks[1] == "vertex";
            if (in_vertex) count = size_t(std::stoul(toks[2]));
            else if (count == 0) throw parse_error(cat(path, ": first element must be vertex"));
        } else if (toks[0] == "property") {
            if (!in_vertex) continue;
            if (toks[1] == "list") throw parse_error(cat(path, ": list property unsupported in splat ply"));
            props.emplace_back(toks[2], toks[1]);
        } else if (toks[0] == "end_header") {
            break;
        }
    }

    auto find_prop = [&](const std::string& name) -> int {
        for (size_t i = 0; i < props.size(); ++i)
            if (props[i].first == name) return int(i);
        return -1;
    };
    auto require_prop = [&](const std::string& name) -> int {
        int i = find_prop(name);
        if (i < 0) throw parse_error(cat(path, ": missing property ", name));
        return i;
    };

    GaussianSet gs;
    gs.count = int(count);
    int ix = require_prop("x"), iy = require_prop("y"), iz = require_prop("z");
    int iop = require_prop("opacity");
    int idc[3] = {require_prop("f_dc_0"), require_prop("f_dc_1"), require_prop("f_dc_2")};
    int isc[3] = {require_prop("scale_0"), require_prop("scale_1"), require_prop("scale_2")};
    int irt[4] = {require_prop("rot_0"), require_prop("rot_1"), require_prop("rot_2"), require_prop("rot_3")};
    int inx = find_prop("nx"), iny = find_prop("ny"), inz = find_prop("nz");
    gs.has_normals = inx >= 0 && iny >= 0 && inz >= 0;

    int rest_props = 0;
    while (find_prop(cat("f_rest_", rest_props)) >= 0) ++rest_props;
    gs.sh_coeffs = detail::sh_coeffs_from_rest(rest_props);
    std::vector<int> irest(size_t(rest_props));
    for (int k = 0; k < rest_props; ++k) irest[size_t(k)] = find_prop(cat("f_rest_", k));

    int ibf = find_prop("bind_face");
    int ibb[3] = {find_prop("bind_bary_0"), find_prop("bind_bary_1"), find_prop("bind_bary_2")};
    int ibo = find_prop("bind_offset");
    bool has_binding = ibf >= 0 && ibb[0] >= 0 && ibb[1] >= 0 && ibb[2] >= 0 && ibo >= 0;

    gs.pos.resize(count * 3);
    if (gs.has_normals) gs.normal.resize(count * 3);
    gs.f_dc.resize(count * 3);
    gs.f_rest.resize(count * size_t(rest_props));
    gs.opacity_logit.resize(count);
    gs.log_scale.resize(count * 3);
    gs.rot.resize(count * 4);
    if (has_binding) gs.bindings.resize(count);

    ByteReader r(bytes, path);
    r.pos = pos;
    std::vector<double> row(props.size());
    for (size_t i = 0; i < count; ++i) {
        for (size_t p = 0; p < props.size(); ++p) row[p] = detail::ply_read_scalar(r, props[p].second);
        gs.pos[i * 3] = float(row[size_t(ix)]);
        gs.pos[i * 3 + 1] = float(row[size_t(iy)]);
        gs.pos[i * 3 + 2] = float(row[size_t(iz)]);
        if (gs.has_normals) {
            gs.normal[i * 3] = float(row[size_t(inx)]);
            gs.normal[i * 3 + 1] = float(row[size_t(iny)]);
            gs.normal[i * 3 + 2] = float(row[size_t(inz)]);
        }
        for (int c = 0; c < 3; ++c) gs.f_dc[i * 3 + size_t(c)] = float(row[size_t(idc[c])]);
        for (int k = 0; k < rest_props; ++k) gs.f_rest[i * size_t(rest_props) + size_t(k)] = float(row[size_t(irest[size_t(k)])]);
        gs.opacity_logit[i] = float(row[size_t(iop)]);
        for (int c = 0; c < 3; ++c) gs.log_scale[i * 3 + size_t(c)] = float(row[size_t(isc[c])]);
        for (int c = 0; c < 4; ++c) gs.rot[i * 4 + size_t(c)] = float(row[size_t(irt[c])]);
        if (has_binding) {
            Binding& b = gs.bindings[i];
            b.face_id = int(row[size_t(ibf)]);
            for (int c = 0; c < 3; ++c) b.bary[size_t(c)] = row[size_t(ibb[c])];
            b.offset = row[size_t(ibo)];
        }
    }
    return gs;
}

/// Writes the canonical 3DGS property order (x y z [nx ny nz] f_dc f_rest
/// opacity scale rot), appending binding properties when the set is bound.
/// `override_pos`, when given, replaces positions (used for morph frames).
inline void save_gaussians(const std::string& path, const GaussianSet& gs,
                           const std::vector<Vec3>* override_pos = nullptr) {
    if (override_pos && int(override_pos->size()) != gs.count)
        throw numeric_error("save_gaussians: override position count mismatch");
    std::string out;
    int rest_props = 3 * (gs.sh_coeffs - 1);
    out += "ply\nformat binary_little_endian 1.0\n";
    out += cat("element vertex ", gs.count, "\n");
    auto prop = [&](const char* t, const std::string& n) { out += cat("property ", t, " ", n, "\n"); };
    prop("float", "x");
    prop("float", "y");
    prop("float", "z");
    if (gs.has_normals) {
        prop("float", "nx");
        prop("float", "ny");
        prop("float", "nz");
    }
    for (int c = 0; c < 3; ++c) prop("float", cat("f_dc_", c));
    for (int k = 0; k < rest_props; ++k) prop("float", cat("f_rest_", k));
    prop("float", "opacity");
    for (int c = 0; c < 3; ++c) prop("float", cat("scale_", c));
    for (int c = 0; c < 4; ++c) prop("float", cat("rot_", c));
    if (gs.bound()) {
        prop("int", "bind_face");
        for (int c = 0; c < 3; ++c) prop("float", cat("bind_bary_", c));
        prop("float", "bind_offset");
    }
    out += "end_header\n";

    for (int i = 0; i < gs.count; ++i) {
        size_t ii = size_t(i);
        if (override_pos) {
            const Vec3& p = (*override_pos)[ii];
            put_f32(out, float(p.x));
            put_f32(out, float(p.y));
            put_f32(out, float(p.z));
        } else {
            for (int c = 0; c < 3; ++c) put_f32(out, gs.pos[ii * 3 + size_t(c)]);
        }
        if (gs.has_normals)
            for (int c = 0; c < 3; ++c) put_f32(out, gs.normal[ii * 3 + size_t(c)]);
        for (int c = 0; c < 3; ++c) put_f32(out, gs.f_dc[ii * 3 + size_t(c)]);
        for (int k = 0; k < rest_props; ++k) put_f32(out, gs.f_rest[ii * size_t(rest_props) + size_t(k)]);
        put_f32(out, gs.opacity_logit[ii]);
        for (int c = 0; c < 3; ++c) put_f32(out, gs.log_scale[ii * 3 + size_t(c)]);
        for (int c = 0; c < 4; ++c) put_f32(out, gs.rot[ii * 4 + size_t(c)]);
        if (gs.bound()) {
            const Binding& b = gs.bindings[ii];
            put_u32(out, uint32_t(int32_t(b.face_id)));
            for (int c = 0; c < 3; ++c) put_f32(out, float(b.bary[size_t(c)]));
            put_f32(out, float(b.offset));
        }
    }
    write_file_bytes(path, out);
}

inline uint64_t gaussians_content_hash(const GaussianSet& gs) {
    uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&](const auto& v) {
        if (!v.empty()) h = fnv1a64(v.data(), v.size() * sizeof(v[0]), h);
    };
    mix(gs.pos);
    mix(gs.f_dc);
    mix(gs.f_rest);
    mix(gs.opacity_logit);
    mix(gs.log_scale);
    mix(gs.rot);
    return h;
}

}  // namespace morphkit
