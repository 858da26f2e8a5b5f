#pragma once

#include <deque>

#include "morphkit/render.hpp"

namespace morphkit {

// ------------------------------------------------------------------- ssim

namespace detail {

/// Valid-mode 2-D convolution with a separable Gaussian window.
struct GaussianWindow {
    int radius;
    std::vector<double> k;

    explicit GaussianWindow(int size, double sigma) : radius(size / 2), k(size_t(size)) {
        double sum = 0;
        for (int i = 0; i < size; ++i) {
            double d = i - radius;
            k[size_t(i)] = std::exp(-d * d / (2 * sigma * sigma));
            sum += k[size_t(i)];
        }
        for (double& v : k) v /= sum;
    }

    // output is (h - 2r) x (w - 2r)
    std::vector<double> filter(const std::vector<double>& img, int w, int h) const {
        int ow = w - 2 * radius, oh = h - 2 * radius;
        std::vector<double> tmp(size_t(ow) * size_t(h)), out(size_t(ow) * size_t(oh));
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < ow; ++x) {
                double s = 0;
                for (int i = 0; i < int(k.size()); ++i) s += k[size_t(i)] * img[size_t(y) * size_t(w) + size_t(x + i)];
                tmp[size_t(y) * size_t(ow) + size_t(x)] = s;
            }
        for (int y = 0; y < oh; ++y)
            for (int x = 0; x < ow; ++x) {
                double s = 0;
                for (int i = 0; i < int(k.size()); ++i) s += k[size_t(i)] * tmp[size_t(y + i) * size_t(ow) + size_t(x)];
                out[size_t(y) * size_t(ow) + size_t(x)] = s;
            }
        return out;
    }
};

}  // namespace detail

/// Windowed SSIM on grayscale images (values 0..255): 11x11 Gaussian window
/// sigma 1.5, C1=(0.01*255)^2, C2=(0.03*255)^2, mean over valid windows.
inline double ssim(const std::vector<double>& a, const std::vector<double>& b, int w, int h) {
    if (a.size() != size_t(w) * size_t(h) || b.size() != a.size())
        throw numeric_error(cat("ssim: dimension mismatch (", a.size(), " vs ", b.size(), " for ", w, "x", h, ")"));
    if (w < 11 || h < 11) throw numeric_error(cat("ssim: image ", w, "x", h, " smaller than the 11x11 window"));
    static const detail::GaussianWindow win(11, 1.5);
    const double c1 = (0.01 * 255) * (0.01 * 255);
    const double c2 = (0.03 * 255) * (0.03 * 255);

    size_t n = a.size();
    std::vector<double> aa(n), bb(n), ab(n);
    for (size_t i = 0; i < n; ++i) {
        aa[i] = a[i] * a[i];
        bb[i] = b[i] * b[i];
        ab[i] = a[i] * b[i];
    }
    auto mu_a = win.filter(a, w, h);
    auto mu_b = win.filter(b, w, h);
    auto m_aa = win.filter(aa, w, h);
    auto m_bb = win.filter(bb, w, h);
    auto m_ab = win.filter(ab, w, h);

    double total = 0;
    for (size_t i = 0; i < mu_a.size(); ++i) {
        double va = m_aa[i] - mu_a[i] * mu_a[i];
        double vb = m_bb[i] - mu_b[i] * mu_b[i];
        double cov = m_ab[i] - mu_a[i] * mu_b[i];
        total += ((2 * mu_a[i] * mu_b[i] + c1) * (2 * cov + c2)) /
                 ((mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1) * (va + vb + c2));
    }
    return total / double(mu_a.size());
}

inline double ssim(const Image& a, const Image& b) {
    if (a.width != b.width || a.height != b.height)
        throw numeric_error(cat("ssim: dimension mismatch ", a.width, "x", a.height, " vs ", b.width, "x", b.height));
    return ssim(to_grayscale(a), to_grayscale(b), a.width, a.height);
}

/// Mean squared deviation of the SSIM trajectory from the ideal linear curve
/// (similarity to the first frame should fall as 1-t, to the last rise as t),
/// averaged over the interior frames.
inline double mse_ssim_trajectory(const std::vector<Image>& frames, const std::vector<double>& timesteps) {
    if (frames.size() != timesteps.size())
        throw numeric_error("mse_ssim_trajectory: frame/timestep count mismatch");
    if (frames.size() < 3) throw numeric_error(cat("mse_ssim_trajectory: need at least 3 frames, got ", frames.size()));
    const Image& a = frames.front();
    const Image& b = frames.back();
    double total = 0;
    size_t n = 0;
    for (size_t i = 1; i + 1 < frames.size(); ++i) {
        double t = timesteps[i];
        double sa = ssim(a, frames[i]);
        double sb = ssim(frames[i], b);
        total += (1.0 - t - sa) * (1.0 - t - sa) + (t - sb) * (t - sb);
        ++n;
    }
    return total / double(n);
}

// ------------------------------------------------------------------ cielab

/// sRGB (8-bit) to CIELAB under D65: linearize, the IEC sRGB matrix to XYZ,
/// then the cube-root transfer with delta = 6/29.
inline std::array<double, 3> rgb_to_lab(uint8_t r8, uint8_t g8, uint8_t b8) {
    auto lin = [](double c) { return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4); };
    double r = lin(r8 / 255.0), g = lin(g8 / 255.0), b = lin(b8 / 255.0);
    double x = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
    double y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
    double z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;
    const double xn = 0.95047, yn = 1.0, zn = 1.08883;
    const double d = 6.0 / 29.0, d3 = d * d * d;
    auto f = [&](double t) { return t > d3 ? std::cbrt(t) : t / (3 * d * d) + 4.0 / 29.0; };
    double fx = f(x / xn), fy = f(y / yn), fz = f(z / zn);
    return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

inline double delta_e(const std::array<double, 3>& l1, const std::array<double, 3>& l2) {
    double dl = l1[0] - l2[0], da = l1[1] - l2[1], db = l1[2] - l2[2];
    return std::sqrt(dl * dl + da * da + db * db);
}

// ------------------------------------------------------------ delta-e suite

struct DeltaEBreakdown {
    std::vector<double> vs_source;  // per frame; 0 when undefined/excluded
    std::vector<double> vs_target;
    std::vector<double> vs_prev;    // frame 0 entry is 0
    double average = 0;             // (mean_src + mean_tgt + mean_prev) / 3
};

namespace detail {

struct LabFrame {
    std::vector<std::array<double, 3>> lab;
    std::vector<char> fg;  // non-background (not pure white)

    explicit LabFrame(const Image& img) {
        size_t n = size_t(img.width) * size_t(img.height);
        lab.resize(n);
        fg.resize(n);
        for (size_t i = 0; i < n; ++i) {
            const uint8_t* p = &img.pixels[i * 3];
            fg[i] = !(p[0] == 255 && p[1] == 255 && p[2] == 255);
            lab[i] = rgb_to_lab(p[0], p[1], p[2]);
        }
    }
};

/// Mean color difference over pixels that are foreground in both frames;
/// returns false when the intersection is empty.
inline bool mean_delta_e(const LabFrame& a, const LabFrame& b, double& out) {
    double sum = 0;
    size_t n = 0;
    for (size_t i = 0; i < a.lab.size(); ++i)
        if (a.fg[i] && b.fg[i]) {
            sum += delta_e(a.lab[i], b.lab[i]);
            ++n;
        }
    if (n == 0) return false;
    out = sum / double(n);
    return true;
}

}  // namespace detail

/// Per-frame mean CIELAB difference against the source frame, target frame
/// and previous frame, each averaged over frames, and the three means
/// averaged. Background (pure white) pixels never contribute; a frame pair
/// with no shared foreground is excluded with a warning.
inline DeltaEBreakdown delta_e_suite(const std::vector<Image>& frames) {
    if (frames.size() < 2) throw numeric_error(cat("delta_e_suite: need at least 2 frames, got ", frames.size()));
    std::vector<detail::LabFrame> lf;
    lf.reserve(frames.size());
    for (const auto& f : frames) lf.emplace_back(f);

    DeltaEBreakdown out;
    size_t n = frames.size();
    out.vs_source.assign(n, 0.0);
    out.vs_target.assign(n, 0.0);
    out.vs_prev.assign(n, 0.0);

    double sum_src = 0, sum_tgt = 0, sum_prev = 0;
    size_t n_src = 0, n_tgt = 0, n_prev = 0;
    for (size_t i = 0; i < n; ++i) {
        double v;
        if (detail::mean_delta_e(lf[i], lf[0], v)) {
            out.vs_source[i] = v;
            sum_src += v;
            ++n_src;
        } else {
            warn(cat("delta_e_suite: frame ", i, " shares no foreground with the source frame, excluded"));
        }
        if (detail::mean_delta_e(lf[i], lf[n - 1], v)) {
            out.vs_target[i] = v;
            sum_tgt += v;
            ++n_tgt;
        } else {
            warn(cat("delta_e_suite: frame ", i, " shares no foreground with the target frame, excluded"));
        }
        if (i > 0) {
            if (detail::mean_delta_e(lf[i], lf[i - 1], v)) {
                out.vs_prev[i] = v;
                sum_prev += v;
                ++n_prev;
            } else {
                warn(cat("delta_e_suite: frame ", i, " shares no foreground with its predecessor, excluded"));
            }
        }
    }
    double m_src = n_src ? sum_src / double(n_src) : 0;
    double m_tgt = n_tgt ? sum_tgt / double(n_tgt) : 0;
    double m_prev = n_prev ? sum_prev / double(n_prev) : 0;
    out.average = (m_src + m_tgt + m_prev) / 3.0;
    return out;
}

// ------------------------------------------------------------------- canny

/// Canny edge map: 5x5 Gaussian blur (sigma 1.4), Sobel gradients, 4-way
/// non-maximum suppression, double-threshold hysteresis with 8-connected
/// weak-to-strong linking. Magnitude is clamped to the 8-bit range before
/// thresholding. Returns one byte per pixel, 0 or 1.
inline std::vector<uint8_t> canny(const std::vector<double>& gray, int w, int h, double t_low, double t_high) {
    if (!(t_low < t_high)) throw numeric_error(cat("canny: thresholds must satisfy low < high (", t_low, ", ", t_high, ")"));
    if (gray.size() != size_t(w) * size_t(h)) throw numeric_error("canny: buffer/dimension mismatch");
    auto clampi = [&](int v, int hi) { return std::clamp(v, 0, hi - 1); };
    auto at = [&](const std::vector<double>& img, int x, int y) {
        return img[size_t(clampi(y, h)) * size_t(w) + size_t(clampi(x, w))];
    };

    // 5x5 gaussian, sigma 1.4, replicate border
    double kern[5];
    double ksum = 0;
    for (int i = 0; i < 5; ++i) {
        double d = i - 2;
        kern[i] = std::exp(-d * d / (2 * 1.4 * 1.4));
        ksum += kern[i];
    }
    for (double& v : kern) v /= ksum;
    std::vector<double> tmp(gray.size()), blur(gray.size());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double s = 0;
            for (int i = -2; i <= 2; ++i) s += kern[i + 2] * at(gray, x + i, y);
            tmp[size_t(y) * size_t(w) + size_t(x)] = s;
        }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double s = 0;
            for (int i = -2; i <= 2; ++i) s += kern[i + 2] * at(tmp, x, y + i);
            blur[size_t(y) * size_t(w) + size_t(x)] = s;
        }

    std::vector<double> mag(gray.size());
    std::vector<uint8_t> dir(gray.size());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double gx = -at(blur, x - 1, y - 1) + at(blur, x + 1, y - 1) - 2 * at(blur, x - 1, y) +
                        2 * at(blur, x + 1, y) - at(blur, x - 1, y + 1) + at(blur, x + 1, y + 1);
            double gy = -at(blur, x - 1, y - 1) - 2 * at(blur, x, y - 1) - at(blur, x + 1, y - 1) +
                        at(blur, x - 1, y + 1) + 2 * at(blur, x, y + 1) + at(blur, x + 1, y + 1);
            double m = std::min(255.0, std::hypot(gx, gy));
            mag[size_t(y) * size_t(w) + size_t(x)] = m;
            double ang = std::atan2(gy, gx) * 180.0 / 3.14159265358979323846;
            if (ang < 0) ang += 180.0;
            uint8_t d;
            if (ang < 22.5 || ang >= 157.5) d = 0;        // horizontal gradient
            else if (ang < 67.5) d = 1;                   // diagonal /
            else if (ang < 112.5) d = 2;                  // vertical gradient
            else d = 3;                                   // diagonal backslash
            dir[size_t(y) * size_t(w) + size_t(x)] = d;
        }

    // non-maximum suppression along the gradient direction; the asymmetric
    // comparison (> before, >= after) keeps exactly one pixel on symmetric
    // ridges
    static const int off[4][2] = {{1, 0}, {1, -1}, {0, 1}, {1, 1}};
    std::vector<double> thin(gray.size(), 0.0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            size_t i = size_t(y) * size_t(w) + size_t(x);
            int dx = off[dir[i]][0], dy = off[dir[i]][1];
            double m = mag[i];
            double before = at(mag, x - dx, y - dy);
            double after = at(mag, x + dx, y + dy);
            if (m > before && m >= after) thin[i] = m;
        }

    // hysteresis
    std::vector<uint8_t> out(gray.size(), 0);
    std::deque<std::pair<int, int>> queue;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            size_t i = size_t(y) * size_t(w) + size_t(x);
            if (thin[i] >= t_high && !out[i]) {
                out[i] = 1;
                queue.push_back({x, y});
                while (!queue.empty()) {
                    auto [cx, cy] = queue.front();
                    queue.pop_front();
                    for (int ny = cy - 1; ny <= cy + 1; ++ny)
                        for (int nx = cx - 1; nx <= cx + 1; ++nx) {
                            if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                            size_t j = size_t(ny) * size_t(w) + size_t(nx);
                            if (!out[j] && thin[j] >= t_low) {
                                out[j] = 1;
                                queue.push_back({nx, ny});
                            }
                        }
                }
            }
        }
    return out;
}

/// Number of 8-connected components of a binary map.
inline int count_components(const std::vector<uint8_t>& map, int w, int h) {
    std::vector<uint8_t> seen(map.size(), 0);
    std::deque<std::pair<int, int>> queue;
    int components = 0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            size_t i = size_t(y) * size_t(w) + size_t(x);
            if (!map[i] || seen[i]) continue;
            ++components;
            seen[i] = 1;
            queue.push_back({x, y});
            while (!queue.empty()) {
                auto [cx, cy] = queue.front();
                queue.pop_front();
                for (int ny = cy - 1; ny <= cy + 1; ++ny)
                    for (int nx = cx - 1; nx <= cx + 1; ++nx) {
                        if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                        size_t j = size_t(ny) * size_t(w) + size_t(nx);
                        if (map[j] && !seen[j]) {
                            seen[j] = 1;
                            queue.push_back({nx, ny});
                        }
                    }
            }
        }
    return components;
}

/// Edge integrity: connected edge components minus one, clamped at zero so
/// an edge-free frame scores 0 rather than -1.
inline int edge_integrity(const Image& img, double t_low, double t_high) {
    auto edges = canny(to_grayscale(img), img.width, img.height, t_low, t_high);
    return std::max(count_components(edges, img.width, img.height) - 1, 0);
}

// ------------------------------------------------------------------ report

struct MetricReport {
    double mse_ssim = 0;
    double delta_e_avg = 0;
    double ei_mean = 0;
    std::vector<double> ssim_to_source;  // per frame
    std::vector<double> ssim_to_target;
    DeltaEBreakdown delta_e;
    std::vector<int> ei;  // per frame
};

inline MetricReport evaluate_sequence(const std::vector<Image>& frames, const std::vector<double>& timesteps,
                                      double canny_low, double canny_high) {
    if (frames.size() != timesteps.size())
        throw numeric_error("evaluate_sequence: frame/timestep count mismatch");
    if (frames.size() < 3)
        throw numeric_error(cat("evaluate_sequence: need at least 3 frames, got ", frames.size()));
    for (const auto& f : frames)
        if (f.width != frames[0].width || f.height != frames[0].height)
            throw numeric_error("evaluate_sequence: inconsistent frame sizes");

    MetricReport rep;
    rep.mse_ssim = mse_ssim_trajectory(frames, timesteps);
    rep.delta_e = delta_e_suite(frames);
    rep.delta_e_avg = rep.delta_e.average;
    for (const auto& f : frames) {
        rep.ssim_to_source.push_back(ssim(frames.front(), f));
        rep.ssim_to_target.push_back(ssim(f, frames.back()));
        rep.ei.push_back(edge_integrity(f, canny_low, canny_high));
    }
    double s = 0;
    for (int e : rep.ei) s += e;
    rep.ei_mean = s / double(rep.ei.size());
    return rep;
}

/// CSV rows `frame,t,ssim_A,ssim_B,deltaE_src,deltaE_tgt,deltaE_prev,EI` plus
/// a key=value summary block.
inline void write_metric_report(const std::string& csv_path, const std::string& summary_path,
                                const MetricReport& rep, const std::vector<double>& timesteps) {
    std::ofstream csv(csv_path, std::ios::trunc);
    if (!csv) throw file_error(cat("cannot write ", csv_path));
    csv << "frame,t,ssim_A,ssim_B,deltaE_src,deltaE_tgt,deltaE_prev,EI\n";
    char buf[320];
    for (size_t i = 0; i < timesteps.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d\n", i, timesteps[i],
                      rep.ssim_to_source[i], rep.ssim_to_target[i], rep.delta_e.vs_source[i],
                      rep.delta_e.vs_target[i], rep.delta_e.vs_prev[i], rep.ei[i]);
        csv << buf;
    }
    std::ofstream sum(summary_path, std::ios::trunc);
    if (!sum) throw file_error(cat("cannot write ", summary_path));
    std::snprintf(buf, sizeof buf, "mse_ssim = %.17g\ndelta_e_avg = %.17g\nei_mean = %.17g\n", rep.mse_ssim,
                  rep.delta_e_avg, rep.ei_mean);
    sum << buf;
}

}  // namespace morphkit
