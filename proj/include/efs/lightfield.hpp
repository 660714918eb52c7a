#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "efs/grid.hpp"

namespace efs {

// Grid of grayscale views L(u,v,x,y). n_v == 1 for horizontal-parallax-only
// fields. baseline_step and focal_length are in the same arbitrary length
// unit; disparity follows d = focal_length * baseline_step / Z.
struct LightField {
    int n_u = 0;
    int n_v = 1;
    int height = 0;
    int width = 0;
    double baseline_step = 1.0;
    double focal_length = 1.0;
    std::vector<Image> views;  // index v * n_u + u
    std::map<std::string, std::string> meta;

    Image& view(int u, int v = 0) { return views[static_cast<size_t>(v) * n_u + u]; }
    const Image& view(int u, int v = 0) const { return views[static_cast<size_t>(v) * n_u + u]; }

    void validate() const {
        if (n_u < 2) throw std::invalid_argument("LightField: n_u must be >= 2");
        if (n_v < 1) throw std::invalid_argument("LightField: n_v must be >= 1");
        if (views.size() != static_cast<size_t>(n_u) * n_v)
            throw std::invalid_argument("LightField: view count mismatch");
        for (const auto& im : views) {
            if (im.rows != height || im.cols != width)
                throw std::invalid_argument("LightField: inconsistent view dimensions");
            if (!im.all_finite() || im.min_value() < 0.0 || im.max_value() > 1.0)
                throw std::invalid_argument("LightField: intensities must be finite in [0,1]");
        }
    }
};

// One epipolar slice E(u, x): view index runs down the rows.
struct Epi {
    Image data;          // n_u x width
    int u_ref = 0;       // reference view index
    int source_row = -1; // which y (or x for the transposed variant)
    int source_fixed = -1;  // which v (or u)
    bool vertical = false;  // true when the slice varies (v, y)

    int n_u() const { return data.rows; }
    int width() const { return data.cols; }

    void validate() const {
        if (u_ref < 0 || u_ref >= data.rows) throw std::out_of_range("Epi: u_ref outside view range");
        if (!data.all_finite()) throw std::invalid_argument("Epi: non-finite values");
    }
};

// E(u,x) at fixed v and y.
inline Epi extract_epi(const LightField& lf, int fixed_row, int fixed_v, int u_ref) {
    if (fixed_row < 0 || fixed_row >= lf.height) throw std::out_of_range("extract_epi: row out of range");
    if (fixed_v < 0 || fixed_v >= lf.n_v) throw std::out_of_range("extract_epi: v out of range");
    if (u_ref < 0 || u_ref >= lf.n_u) throw std::out_of_range("extract_epi: u_ref out of range");
    Epi e;
    e.data = Image(lf.n_u, lf.width);
    for (int u = 0; u < lf.n_u; ++u) {
        const Image& im = lf.view(u, fixed_v);
        for (int x = 0; x < lf.width; ++x) e.data.at(u, x) = im.at(fixed_row, x);
    }
    e.u_ref = u_ref;
    e.source_row = fixed_row;
    e.source_fixed = fixed_v;
    return e;
}

// Transposed variant for vertical-parallax passes: E(v, y) at fixed u and x.
inline Epi extract_epi_vertical(const LightField& lf, int fixed_col, int fixed_u, int v_ref) {
    if (fixed_col < 0 || fixed_col >= lf.width) throw std::out_of_range("extract_epi_vertical: column out of range");
    if (fixed_u < 0 || fixed_u >= lf.n_u) throw std::out_of_range("extract_epi_vertical: u out of range");
    if (v_ref < 0 || v_ref >= lf.n_v) throw std::out_of_range("extract_epi_vertical: v_ref out of range");
    Epi e;
    e.data = Image(lf.n_v, lf.height);
    for (int v = 0; v < lf.n_v; ++v) {
        const Image& im = lf.view(fixed_u, v);
        for (int y = 0; y < lf.height; ++y) e.data.at(v, y) = im.at(y, fixed_col);
    }
    e.u_ref = v_ref;
    e.source_row = fixed_col;
    e.source_fixed = fixed_u;
    e.vertical = true;
    return e;
}

// Keeps views {0, factor, 2*factor, ...} along u. baseline_step scales by
// factor. force_keep_last appends the final view even off-grid, which makes
// the spacing non-uniform; default off.
inline LightField downsample_views(const LightField& lf, int factor, bool force_keep_last = false) {
    if (factor < 1) throw std::invalid_argument("downsample_views: factor must be >= 1");
    std::vector<int> keep;
    for (int u = 0; u < lf.n_u; u += factor) keep.push_back(u);
    if (force_keep_last && keep.back() != lf.n_u - 1) keep.push_back(lf.n_u - 1);
    if (keep.size() < 2) throw std::invalid_argument("downsample_views: fewer than 2 surviving views");
    LightField out;
    out.n_u = static_cast<int>(keep.size());
    out.n_v = lf.n_v;
    out.height = lf.height;
    out.width = lf.width;
    out.baseline_step = lf.baseline_step * factor;
    out.focal_length = lf.focal_length;
    out.meta = lf.meta;
    out.meta["downsample_factor"] = std::to_string(factor);
    if (force_keep_last && (lf.n_u - 1) % factor != 0) out.meta["nonuniform_tail"] = "1";
    out.views.reserve(static_cast<size_t>(out.n_u) * out.n_v);
    for (int v = 0; v < lf.n_v; ++v)
        for (int u : keep) out.views.push_back(lf.view(u, v));
    return out;
}

// Transpose u<->v and x<->y; used by the sequential full-parallax pass.
inline LightField transpose_lightfield(const LightField& lf) {
    LightField out;
    out.n_u = lf.n_v;
    out.n_v = lf.n_u;
    out.height = lf.width;
    out.width = lf.height;
    out.baseline_step = lf.baseline_step;
    out.focal_length = lf.focal_length;
    out.meta = lf.meta;
    out.views.resize(lf.views.size());
    for (int v = 0; v < out.n_v; ++v)
        for (int u = 0; u < out.n_u; ++u) {
            const Image& src = lf.view(v, u);
            Image t(lf.width, lf.height);
            for (int r = 0; r < lf.height; ++r)
                for (int c = 0; c < lf.width; ++c) t.at(c, r) = src.at(r, c);
            out.view(u, v) = std::move(t);
        }
    return out;
}

}  // namespace efs
