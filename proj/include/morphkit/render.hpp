#pragma once

#include "morphkit/mesh.hpp"

namespace morphkit {

/// 8-bit RGB image, row-major, top-left origin.
struct Image {
    int width = 0, height = 0;
    std::vector<uint8_t> pixels;  // 3 per pixel

    Image() = default;
    Image(int w, int h, uint8_t fill = 255) : width(w), height(h), pixels(size_t(w) * size_t(h) * 3, fill) {}

    uint8_t* px(int x, int y) { return &pixels[(size_t(y) * size_t(width) + size_t(x)) * 3]; }
    const uint8_t* px(int x, int y) const { return &pixels[(size_t(y) * size_t(width) + size_t(x)) * 3]; }
};

/// Orthographic camera looking along `view` with the frame centered on the
/// origin. `half_extent` is half the visible square in normalized units.
struct Camera {
    Vec3 view{0, 0, -1};
    Vec3 up{0, 1, 0};
    double half_extent = 0.65;
    int width = 256;
    int height = 256;

    void validate() const {
        if (width < 1 || height < 1) throw config_error("camera: image size must be positive");
        if (norm(cross(view, up)) < 1e-12) throw config_error("camera: view and up are parallel");
    }
};

/// Deterministic software rasterizer: z-buffer hidden surfaces, no culling,
/// flat barycentric color interpolation, white background. Pixels sample at
/// their centers with a top-left fill rule; depth ties keep the earlier face.
inline Image rasterize(const std::vector<Vec3>& positions, const std::vector<std::array<int, 3>>& faces,
                       const std::vector<Vec3>& colors, const Camera& cam) {
    cam.validate();
    if (colors.size() != positions.size())
        throw numeric_error(cat("rasterize: ", colors.size(), " colors for ", positions.size(), " vertices"));
    Image img(cam.width, cam.height, 255);
    std::vector<double> zbuf(size_t(cam.width) * size_t(cam.height), std::numeric_limits<double>::max());

    Vec3 fwd = normalized(cam.view);
    Vec3 right = normalized(cross(fwd, cam.up));
    Vec3 true_up = cross(right, fwd);

    // screen-space vertex positions: x right, y up, depth increasing along view
    struct SV {
        double x, y, depth;
    };
    std::vector<SV> sv(positions.size());
    for (size_t i = 0; i < positions.size(); ++i)
        sv[i] = {dot(positions[i], right), dot(positions[i], true_up), dot(positions[i], fwd)};

    const double sx = cam.width / (2.0 * cam.half_extent);
    const double sy = cam.height / (2.0 * cam.half_extent);
    auto to_px = [&](const SV& v) -> std::pair<double, double> {
        return {(v.x + cam.half_extent) * sx, (cam.half_extent - v.y) * sy};
    };

    for (const auto& f : faces) {
        int i0 = f[0], i1 = f[1], i2 = f[2];
        auto [x0, y0] = to_px(sv[size_t(i0)]);
        auto [x1, y1] = to_px(sv[size_t(i1)]);
        auto [x2, y2] = to_px(sv[size_t(i2)]);
        double area = (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0);
        if (area == 0) continue;
        // orient counter-clockwise in pixel space so edge functions are >= 0 inside
        if (area < 0) {
            std::swap(x1, x2);
            std::swap(y1, y2);
            std::swap(i1, i2);
            area = -area;
        }
        int lo_x = std::max(0, int(std::floor(std::min({x0, x1, x2}))));
        int hi_x = std::min(cam.width - 1, int(std::ceil(std::max({x0, x1, x2}))));
        int lo_y = std::max(0, int(std::floor(std::min({y0, y1, y2}))));
        int hi_y = std::min(cam.height - 1, int(std::ceil(std::max({y0, y1, y2}))));
        if (lo_x > hi_x || lo_y > hi_y) continue;

        // top-left rule: edges that are "top" or "left" own their boundary pixels
        auto edge_bias = [](double ax, double ay, double bx, double by) {
            bool top_left = (ay == by && bx < ax) || (by < ay);
            return top_left ? 0.0 : -1e-12;
        };
        double b01 = edge_bias(x0, y0, x1, y1);
        double b12 = edge_bias(x1, y1, x2, y2);
        double b20 = edge_bias(x2, y2, x0, y0);

        double inv = 1.0 / area;
        for (int py = lo_y; py <= hi_y; ++py) {
            double cy = py + 0.5;
            for (int px = lo_x; px <= hi_x; ++px) {
                double cx = px + 0.5;
                double w2 = (x1 - x0) * (cy - y0) - (cx - x0) * (y1 - y0);
                double w0 = (x2 - x1) * (cy - y1) - (cx - x1) * (y2 - y1);
                double w1 = (x0 - x2) * (cy - y2) - (cx - x2) * (y0 - y2);
                if (w0 < b12 || w1 < b20 || w2 < b01) continue;
                double u = w0 * inv, v = w1 * inv, w = w2 * inv;
                double depth = u * sv[size_t(i0)].depth + v * sv[size_t(i1)].depth + w * sv[size_t(i2)].depth;
                size_t pix = size_t(py) * size_t(cam.width) + size_t(px);
                if (depth < zbuf[pix]) {
                    zbuf[pix] = depth;
                    Vec3 c = colors[size_t(i0)] * u + colors[size_t(i1)] * v + colors[size_t(i2)] * w;
                    uint8_t* p = img.px(px, py);
                    p[0] = uint8_t(std::clamp(int(std::lround(c.x * 255.0)), 0, 255));
                    p[1] = uint8_t(std::clamp(int(std::lround(c.y * 255.0)), 0, 255));
                    p[2] = uint8_t(std::clamp(int(std::lround(c.z * 255.0)), 0, 255));
                }
            }
        }
    }
    return img;
}

// ------------------------------------------------------------------- ppm

/// Binary PPM: header `P6\n<w> <h>\n255\n` then raw RGB rows.
inline void write_image(const Image& img, const std::string& path) {
    if (img.width < 1 || img.height < 1) throw numeric_error("write_image: zero-size image");
    std::string out = cat("P6\n", img.width, " ", img.height, "\n255\n");
    out.append(reinterpret_cast<const char*>(img.pixels.data()), img.pixels.size());
    write_file_bytes(path, out);
}

inline Image read_image(const std::string& path) {
    std::string bytes = read_file_bytes(path);
    if (bytes.rfind("P6", 0) != 0) throw parse_error(cat(path, ": not a binary ppm (P6)"));
    size_t pos = 2;
    auto next_int = [&]() -> int {
        while (pos < bytes.size() && std::isspace(uint8_t(bytes[pos]))) ++pos;
        if (pos < bytes.size() && bytes[pos] == '#') {  // comment line
            while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            while (pos < bytes.size() && std::isspace(uint8_t(bytes[pos]))) ++pos;
        }
        size_t start = pos;
        while (pos < bytes.size() && std::isdigit(uint8_t(bytes[pos]))) ++pos;
        if (start == pos) throw parse_error(cat(path, ": bad ppm header at byte ", pos));
        return std::stoi(bytes.substr(start, pos - start));
    };
    int w = next_int(), h = next_int(), maxval = next_int();
    if (maxval != 255) throw parse_error(cat(path, ": unsupported maxval ", maxval));
    ++pos;  // single whitespace after maxval
    if (bytes.size() - pos < size_t(w) * size_t(h) * 3)
        throw parse_error(cat(path, ": truncated pixel data at byte ", pos));
    Image img(w, h);
    std::memcpy(img.pixels.data(), bytes.data() + pos, size_t(w) * size_t(h) * 3);
    return img;
}

// --------------------------------------------------------------- grayscale

/// Rec.601 luma, rounded half-up to the nearest integer, still stored as
/// double for the metric pipelines.
inline std::vector<double> to_grayscale(const Image& img) {
    std::vector<double> out(size_t(img.width) * size_t(img.height));
    for (size_t i = 0; i < out.size(); ++i) {
        const uint8_t* p = &img.pixels[i * 3];
        out[i] = std::floor(0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2] + 0.5);
    }
    return out;
}

}  // namespace morphkit
