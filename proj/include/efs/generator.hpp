#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "efs/fft.hpp"
#include "efs/grid.hpp"
#include "efs/lightfield.hpp"

namespace efs {

// Opacity mask attached to a layer; evaluated in layer-local texture
// coordinates so it shifts with the layer's disparity.
struct OpacityMask {
    enum class Kind { Full, HalfPlane, Stripes, Disk } kind = Kind::Full;
    double edge = 0.55;     // HalfPlane: opaque for x < edge*width
    double feather = 0.0;   // transition width in pixels
    double period = 32.0;   // Stripes
    double duty = 0.5;
    double cx = 0.5, cy = 0.5, radius = 0.25;  // Disk (fractions of canvas)

    double value(double x, double y, int canvas_w, int canvas_h) const {
        switch (kind) {
            case Kind::Full:
                return 1.0;
            case Kind::HalfPlane: {
                double e = edge * canvas_w;
                if (feather <= 0.0) return x < e ? 1.0 : 0.0;
                return std::clamp((e - x) / feather + 0.5, 0.0, 1.0);
            }
            case Kind::Stripes: {
                double ph = std::fmod(x, period);
                if (ph < 0) ph += period;
                double on = duty * period;
                if (feather <= 0.0) return ph < on ? 1.0 : 0.0;
                double rise = std::clamp(ph / feather, 0.0, 1.0);
                double fall = std::clamp((on - ph) / feather + 1.0, 0.0, 1.0);
                return std::min(rise, fall);
            }
            case Kind::Disk: {
                double dx = x - cx * canvas_w;
                double dy = y - cy * canvas_h;
                double r = std::sqrt(dx * dx + dy * dy);
                double R = radius * std::min(canvas_w, canvas_h);
                if (feather <= 0.0) return r < R ? 1.0 : 0.0;
                return std::clamp((R - r) / feather + 0.5, 0.0, 1.0);
            }
        }
        return 1.0;
    }
};

struct SceneLayer {
    double depth = 10.0;       // Z, length units
    uint64_t texture_seed = 0;
    OpacityMask opacity;
};

// Scene description for the procedural oracle generator. S_factor is the
// opaque scene-distribution scalar of the layer-count bound; it is supplied,
// never inferred.
struct SceneGeometry {
    double z_min = 1.0;
    double z_max = 1.0;
    std::vector<SceneLayer> layers;
    double s_factor = 1.0;
    double texture_cutoff = 0.25;  // fraction of Nyquist kept by the low-pass

    void validate() const {
        if (!(z_min > 0.0) || !(z_min <= z_max)) throw std::domain_error("SceneGeometry: need 0 < z_min <= z_max");
        if (s_factor < 1.0) throw std::domain_error("SceneGeometry: s_factor must be >= 1");
        if (layers.empty()) throw std::invalid_argument("SceneGeometry: no layers");
        for (const auto& l : layers)
            if (!(l.depth > 0.0)) throw std::domain_error("SceneGeometry: non-positive layer depth");
    }

    static SceneGeometry from_depths(std::vector<double> depths, uint64_t seed_base = 1) {
        SceneGeometry g;
        g.z_min = depths.front();
        g.z_max = depths.front();
        for (size_t i = 0; i < depths.size(); ++i) {
            SceneLayer l;
            l.depth = depths[i];
            l.texture_seed = seed_base * 131 + i;
            g.layers.push_back(l);
            g.z_min = std::min(g.z_min, depths[i]);
            g.z_max = std::max(g.z_max, depths[i]);
        }
        return g;
    }
};

namespace detail {

// splitmix64; fixed sequence independent of the standard library.
inline uint64_t mix64(uint64_t& s) {
    s += 0x9e3779b97f4a7c15ull;
    uint64_t z = s;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline double uniform01(uint64_t& s) { return (mix64(s) >> 11) * 0x1.0p-53; }

// Band-limited value-noise texture, normalized to [0.1, 0.9].
inline Image noise_texture(int rows, int cols, uint64_t seed, double cutoff) {
    Image n(rows, cols);
    uint64_t s = seed * 0x9e3779b97f4a7c15ull + 0x2545f4914f6cdd1dull;
    for (auto& v : n.data) {
        double u1 = uniform01(s), u2 = uniform01(s);
        if (u1 < 1e-300) u1 = 1e-300;
        v = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);  // Box-Muller
    }
    ComplexGrid F = fft2(n);
    double fy_cut = 0.5 * cutoff, fx_cut = 0.5 * cutoff;
    for (int r = 0; r < rows; ++r) {
        double fy = std::abs(static_cast<double>(signed_bin(r, rows)) / rows);
        for (int c = 0; c < cols; ++c) {
            double fx = std::abs(static_cast<double>(signed_bin(c, cols)) / cols);
            if (fy > fy_cut || fx > fx_cut) F.at(r, c) = 0.0;
        }
    }
    Image t = ifft2(F);
    double lo = t.min_value(), hi = t.max_value();
    double span = hi > lo ? hi - lo : 1.0;
    for (auto& v : t.data) v = 0.1 + 0.8 * (v - lo) / span;
    return t;
}

}  // namespace detail

struct SynthResult {
    LightField field;
    std::vector<Image> disparity;  // exact per-view maps, index v*n_u+u
};

// Layered Lambertian scene sampled at explicit view positions (units of
// baseline_step). Layer k shifts by d_k * (pos_u - u_ref_pos) horizontally
// and d_k * (pos_v - v_ref_pos) vertically; compositing is front-to-back by
// depth with the layer's opacity mask. Deterministic for a fixed seed.
inline SynthResult synth_lightfield_at(const SceneGeometry& geom, const std::vector<double>& pos_u,
                                       const std::vector<double>& pos_v, int h, int w, uint64_t seed,
                                       double focal_length = 1.0, double baseline_step = 1.0,
                                       double u_ref_pos = 0.0, double v_ref_pos = 0.0) {
    geom.validate();
    if (pos_u.size() < 2) throw std::invalid_argument("synth_lightfield: need at least 2 views");
    const double kb = focal_length * baseline_step;

    double max_du = 0, max_dv = 0;
    for (double p : pos_u) max_du = std::max(max_du, std::abs(p - u_ref_pos));
    for (double p : pos_v) max_dv = std::max(max_dv, std::abs(p - v_ref_pos));

    struct Prepared {
        double d;  // disparity px per unit position
        Image tex;
        const OpacityMask* mask;
        int off_x, off_y;
    };
    std::vector<Prepared> prep;
    for (const auto& layer : geom.layers) {
        Prepared p;
        p.d = kb / layer.depth;
        if (!std::isfinite(p.d)) throw std::domain_error("synth_lightfield: non-finite layer disparity");
        if (std::abs(p.d) * (pos_u.size() > 1 ? (pos_u.back() - pos_u.front()) : 1.0) >= w)
            throw std::invalid_argument("synth_lightfield: degenerate scene, layer shift exceeds frame width");
        int over_x = static_cast<int>(std::ceil(std::abs(p.d) * max_du)) + 8;
        int over_y = static_cast<int>(std::ceil(std::abs(p.d) * max_dv)) + 8;
        p.off_x = over_x;
        p.off_y = over_y;
        p.tex = detail::noise_texture(h + 2 * over_y, w + 2 * over_x,
                                      seed ^ (layer.texture_seed * 0x100000001b3ull), geom.texture_cutoff);
        p.mask = &layer.opacity;
        prep.push_back(std::move(p));
    }
    // far-to-near order
    std::vector<int> order(prep.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return geom.layers[a].depth > geom.layers[b].depth; });

    SynthResult out;
    out.field.n_u = static_cast<int>(pos_u.size());
    out.field.n_v = static_cast<int>(pos_v.size());
    out.field.height = h;
    out.field.width = w;
    out.field.baseline_step = baseline_step;
    out.field.focal_length = focal_length;
    out.field.views.resize(static_cast<size_t>(out.field.n_u) * out.field.n_v);
    out.disparity.resize(out.field.views.size());

    for (int vi = 0; vi < out.field.n_v; ++vi) {
        for (int ui = 0; ui < out.field.n_u; ++ui) {
            Image img(h, w, 0.0);
            Image disp(h, w, 0.0);
            bool first = true;
            for (int idx : order) {
                const Prepared& L = prep[idx];
                double sx = L.d * (pos_u[ui] - u_ref_pos);
                double sy = L.d * (pos_v[vi] - v_ref_pos);
                const Image& T = L.tex;
                for (int y = 0; y < h; ++y) {
                    double ty = y + L.off_y - sy;
                    int y0 = static_cast<int>(std::floor(ty));
                    double wy = ty - y0;
                    for (int x = 0; x < w; ++x) {
                        double tx = x + L.off_x - sx;
                        int x0 = static_cast<int>(std::floor(tx));
                        double wx = tx - x0;
                        auto tap = [&](const Image& g, int r, int c) {
                            r = std::clamp(r, 0, g.rows - 1);
                            c = std::clamp(c, 0, g.cols - 1);
                            return g.at(r, c);
                        };
                        double tv = (1 - wy) * ((1 - wx) * tap(T, y0, x0) + wx * tap(T, y0, x0 + 1)) +
                                    wy * ((1 - wx) * tap(T, y0 + 1, x0) + wx * tap(T, y0 + 1, x0 + 1));
                        double m0 = L.mask->value(tx, ty, T.cols, T.rows);
                        double m1 = L.mask->value(tx + 1, ty, T.cols, T.rows);
                        double mv = (1 - wx) * m0 + wx * m1;
                        if (first) mv = 1.0;  // farthest layer is the background
                        img.at(y, x) = mv * tv + (1.0 - mv) * img.at(y, x);
                        if (mv >= 0.5) disp.at(y, x) = L.d;
                    }
                }
                first = false;
            }
            out.field.view(ui, vi) = std::move(img);
            out.disparity[static_cast<size_t>(vi) * out.field.n_u + ui] = std::move(disp);
        }
    }
    return out;
}

// Integer view grid 0..n_views-1 (horizontal-parallax only).
inline SynthResult synth_lightfield(const SceneGeometry& geom, int n_views, int h, int w, uint64_t seed,
                                    double focal_length = 1.0, double baseline_step = 1.0) {
    if (n_views < 2) throw std::invalid_argument("synth_lightfield: n_views must be >= 2");
    std::vector<double> pu(n_views);
    for (int i = 0; i < n_views; ++i) pu[i] = i;
    return synth_lightfield_at(geom, pu, {0.0}, h, w, seed, focal_length, baseline_step);
}

// Full-parallax square grid.
inline SynthResult synth_lightfield_4d(const SceneGeometry& geom, int n_u, int n_v, int h, int w, uint64_t seed,
                                       double focal_length = 1.0, double baseline_step = 1.0) {
    if (n_u < 2 || n_v < 2) throw std::invalid_argument("synth_lightfield_4d: need n_u, n_v >= 2");
    std::vector<double> pu(n_u), pv(n_v);
    for (int i = 0; i < n_u; ++i) pu[i] = i;
    for (int i = 0; i < n_v; ++i) pv[i] = i;
    return synth_lightfield_at(geom, pu, pv, h, w, seed, focal_length, baseline_step);
}

// Single lit point at disparity d: one bright pixel per view row. The
// canonical scene for line-census tests.
inline Epi impulse_epi(int n_u, int w, double d, int u_ref, int x0 = -1) {
    if (x0 < 0) x0 = w / 2;
    Epi e;
    e.data = Image(n_u, w, 0.0);
    for (int u = 0; u < n_u; ++u) {
        double x = x0 + d * (u - u_ref);
        int xi = static_cast<int>(std::floor(x));
        double t = x - xi;
        if (xi >= 0 && xi < w) e.data.at(u, xi) += 1.0 - t;
        if (t > 0 && xi + 1 >= 0 && xi + 1 < w) e.data.at(u, xi + 1) += t;
    }
    e.u_ref = u_ref;
    return e;
}

}  // namespace efs
