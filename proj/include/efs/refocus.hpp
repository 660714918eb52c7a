#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "efs/generator.hpp"
#include "efs/grid.hpp"
#include "efs/lightfield.hpp"

namespace efs {

// Governs one reconstruction: shear range, layer count, reference view and
// target view count. delta_alpha is derived and must stay consistent.
struct ReconstructionConfig {
    double d_min = -1.0;
    double d_max = 1.0;
    int n_f = 64;
    double delta_alpha = 0.0;  // (d_max - d_min) / (n_f - 1); filled by normalize()
    int u_ref = 0;
    int n_target = 0;

    ReconstructionConfig() = default;
    ReconstructionConfig(double dmin, double dmax, int nf, int uref, int ntarget)
        : d_min(dmin), d_max(dmax), n_f(nf), u_ref(uref), n_target(ntarget) {
        normalize();
    }

    void normalize() { delta_alpha = (d_max - d_min) / (n_f - 1); }

    void validate(int n_u_source = -1) const {
        if (!(d_min < d_max)) throw std::invalid_argument("ReconstructionConfig: d_min must be < d_max");
        if (n_f < 2) throw std::invalid_argument("ReconstructionConfig: n_f must be >= 2");
        double expect = (d_max - d_min) / (n_f - 1);
        if (std::abs(delta_alpha - expect) > 1e-9 * std::max(1.0, std::abs(expect)))
            throw std::invalid_argument("ReconstructionConfig: delta_alpha inconsistent with d range and n_f");
        if (n_u_source > 0) {
            if (u_ref < 0 || u_ref >= n_u_source)
                throw std::invalid_argument("ReconstructionConfig: u_ref outside source views");
            if (n_target < n_u_source)
                throw std::invalid_argument("ReconstructionConfig: n_target below source view count");
        }
    }

    double f_value(int m) const { return d_min + m * delta_alpha; }
};

// F(f,x) plus the fraction of views that contributed in-bounds samples.
struct FocalStack {
    Image data;                  // n_f x width
    Image validity;              // same shape, in [0,1]
    std::vector<double> f_values;
    int u_ref = 0;

    int n_f() const { return data.rows; }
    int width() const { return data.cols; }

    void validate() const {
        if (f_values.size() != static_cast<size_t>(data.rows))
            throw std::invalid_argument("FocalStack: f_values size mismatch");
        double step = f_values.size() > 1 ? f_values[1] - f_values[0] : 0.0;
        for (size_t i = 1; i < f_values.size(); ++i) {
            double s = f_values[i] - f_values[i - 1];
            if (!(s > 0) || std::abs(s - step) > 1e-9 * std::max(1.0, std::abs(step)))
                throw std::invalid_argument("FocalStack: f grid not uniformly increasing");
        }
        if (!data.all_finite()) throw std::invalid_argument("FocalStack: non-finite data");
        if (validity.min_value() < 0.0 || validity.max_value() > 1.0)
            throw std::invalid_argument("FocalStack: validity outside [0,1]");
    }
};

// E_d(u,x) = E(u, x + d(u - u_ref)), linear interpolation, zero-filled with an
// explicit validity mask where samples leave the frame. The reference row can
// be fractional (used when shearing resampled dense fields).
inline std::pair<Epi, Image> shear_epi(const Epi& epi, double d, double u_ref_override = std::nan("")) {
    if (!std::isfinite(d)) throw std::invalid_argument("shear_epi: non-finite disparity");
    double uref = std::isnan(u_ref_override) ? static_cast<double>(epi.u_ref) : u_ref_override;
    const int n_u = epi.n_u(), w = epi.width();
    Epi out = epi;
    Image valid(n_u, w, 0.0);
    for (int u = 0; u < n_u; ++u) {
        const double* src = epi.data.row(u);
        double* dst = out.data.row(u);
        double off = d * (u - uref);
        for (int x = 0; x < w; ++x) {
            bool full = false;
            double v = sample_row_linear(src, w, x + off, &full);
            dst[x] = full ? v : 0.0;
            valid.at(u, x) = full ? 1.0 : 0.0;
        }
    }
    return {std::move(out), std::move(valid)};
}

// F(f_m, x) = mean over views with in-bounds sheared samples. Mean rather
// than sum keeps brightness independent of the view count.
inline FocalStack build_focal_stack(const Epi& epi, const ReconstructionConfig& cfg,
                                    double u_ref_override = std::nan("")) {
    cfg.validate();
    double uref = std::isnan(u_ref_override) ? static_cast<double>(epi.u_ref) : u_ref_override;
    const int n_u = epi.n_u(), w = epi.width();
    FocalStack fs;
    fs.data = Image(cfg.n_f, w, 0.0);
    fs.validity = Image(cfg.n_f, w, 0.0);
    fs.u_ref = epi.u_ref;
    fs.f_values.resize(cfg.n_f);
    for (int m = 0; m < cfg.n_f; ++m) {
        double f = cfg.f_value(m);
        fs.f_values[m] = f;
        double* acc = fs.data.row(m);
        double* val = fs.validity.row(m);
        bool any = false;
        for (int u = 0; u < n_u; ++u) {
            const double* src = epi.data.row(u);
            double off = f * (u - uref);
            for (int x = 0; x < w; ++x) {
                bool full = false;
                double v = sample_row_linear(src, w, x + off, &full);
                if (full) {
                    acc[x] += v;
                    val[x] += 1.0;
                }
            }
        }
        for (int x = 0; x < w; ++x) {
            if (val[x] > 0) {
                acc[x] /= val[x];
                val[x] /= n_u;
                any = true;
            }
        }
        if (!any) throw std::invalid_argument("build_focal_stack: layer with no valid samples anywhere");
    }
    return fs;
}

// Eq. d = kB/Z applied to the scene depth bounds.
inline std::pair<double, double> refocus_range_from_depth(const SceneGeometry& geom, double focal_length,
                                                          double baseline) {
    geom.validate();
    if (!(focal_length * baseline > 0)) throw std::domain_error("refocus_range_from_depth: kB must be positive");
    double kb = focal_length * baseline;
    return {kb / geom.z_max, kb / geom.z_min};  // (d_min, d_max)
}

}  // namespace efs
