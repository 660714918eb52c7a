#pragma once

#include <cassert>
#include <cmath>
#include <complex>
#include <filesystem>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "efs/fft.hpp"
#include "efs/grid.hpp"
#include "efs/lightfield.hpp"
#include "efs/parallel.hpp"
#include "efs/refocus.hpp"
#include "efs/spectrum.hpp"

namespace efs {

// Tunables of the reconstruction chain that are not part of the sampling
// configuration proper.
struct PipelineOptions {
    double pad_fraction = 0.5;   // clamp-pad each side by this fraction of the width
    int pad_override = -1;       // explicit pad in pixels when >= 0
    int validity_guard = 6;      // extra trailing margin excluded from validity
    int slice_pad_factor = 8;
    bool nearest_slice = false;
    bool passthrough_sources = false;
    double classical_lambda = 1e-5;

    int pad(int width) const {
        return pad_override >= 0 ? pad_override : static_cast<int>(pad_fraction * width);
    }
};

// Which EPI of the field a completion request belongs to.
struct EpiContext {
    int slice = 0;        // y for horizontal passes, x for vertical ones
    int fixed = 0;        // v index (horizontal) or dense-u index (vertical)
    int fixed_count = 1;  // extent of the fixed axis in the source field
    bool vertical = false;
};

// Source steps per target step for n_target views spanning the source range.
inline double target_spacing(int n_src, int n_target) {
    return static_cast<double>(n_src - 1) / (n_target - 1);
}

// Reconstructable region of the target EPI spectrum: a bin maps back to a
// focal layer iff -omega_u/omega_x lies in the refocus range.
struct WedgeMask {
    int rows = 0, cols = 0;
    double d_min = 0, d_max = 0;
    double delta = 1.0;  // source steps per target step

    WedgeMask(const ReconstructionConfig& cfg, int n_src, int cols_)
        : rows(cfg.n_target), cols(cols_), d_min(cfg.d_min), d_max(cfg.d_max),
          delta(target_spacing(n_src, cfg.n_target)) {}

    // f in pixels per source step for a (row, col) bin; infinity on the DC column.
    double f_of(int r, int c) const {
        double nu = static_cast<double>(r - center_bin(rows)) / (rows * delta);
        double nx = static_cast<double>(c - center_bin(cols)) / cols;
        if (nx == 0.0) return std::numeric_limits<double>::infinity();
        return -nu / nx;
    }

    bool reconstructable(int r, int c) const {
        if (c == center_bin(cols)) return r == center_bin(rows);  // DC column: only the DC bin
        double f = f_of(r, c);
        return f >= d_min && f <= d_max;
    }

    void apply(ComplexGrid& g) const {
        if (g.rows != rows || g.cols != cols) throw std::invalid_argument("WedgeMask: dimension mismatch");
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c)
                if (!reconstructable(r, c)) g.at(r, c) = 0.0;
    }

    double exterior_energy_fraction(const ComplexGrid& g) const {
        if (g.rows != rows || g.cols != cols) throw std::invalid_argument("WedgeMask: dimension mismatch");
        double in = 0, out = 0;
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c)
                (reconstructable(r, c) ? in : out) += std::norm(g.at(r, c));
        double tot = in + out;
        return tot > 0 ? out / tot : 0.0;
    }
};

// 1D inverse transform of the EFS along the f-axis (exact inverse of the
// slice route's final forward transform).
inline ComplexGrid ifft_along_f(const ComplexGrid& efs) {
    ComplexGrid h = ifft1_axis(efs, 0);
    h.axis0 = "f";
    return h;
}

// Reverse projection: resample the hybrid slice onto the target EPI spectrum.
// The hybrid is u_ref-centered, so the result is re-phased to place target row
// i at source position i*delta; the n_target scale matches the inverse DFT's
// 1/N normalization. Non-reconstructable bins are exactly zero.
inline ComplexGrid back_project(const ComplexGrid& hybrid, const WedgeMask& mask, const ReconstructionConfig& cfg,
                                int n_src) {
    const int n_f = hybrid.rows, w = hybrid.cols;
    if (n_f != cfg.n_f) throw std::invalid_argument("back_project: hybrid row count != n_f");
    if (mask.cols != w || mask.rows != cfg.n_target) throw std::invalid_argument("back_project: mask mismatch");
    const int n_t = cfg.n_target;
    const double delta = target_spacing(n_src, n_t);
    const int cu = center_bin(n_t), cw = center_bin(w);

    ComplexGrid out(n_t, w);
    out.axis0 = "omega_u";
    out.axis1 = "omega_x";
    for (int r = 0; r < n_t; ++r) {
        double nu = static_cast<double>(r - cu) / (n_t * delta);  // cycles per source step
        std::complex<double> unphase = std::polar(1.0, -2.0 * M_PI * nu * cfg.u_ref);
        for (int c = 0; c < w; ++c) {
            if (c == cw) continue;  // handled below
            if (!mask.reconstructable(r, c)) continue;
            double f = mask.f_of(r, c);
            assert(f >= cfg.d_min && f <= cfg.d_max);
            double m = (f - cfg.d_min) / cfg.delta_alpha;
            int m0 = static_cast<int>(std::floor(m));
            double fr = m - m0;
            int m1 = std::min(m0 + 1, n_f - 1);
            m0 = std::clamp(m0, 0, n_f - 1);
            std::complex<double> v = hybrid.at(m0, c) * (1.0 - fr) + hybrid.at(m1, c) * fr;
            out.at(r, c) = v * static_cast<double>(n_t) * unphase;
        }
    }
    // DC column: view-independent offset only (Lambertian assumption).
    std::complex<double> dc = 0;
    for (int m = 0; m < n_f; ++m) dc += hybrid.at(m, cw);
    out.at(cu, cw) = dc / static_cast<double>(n_f) * static_cast<double>(n_t);
    return out;
}

// --- completion backends -------------------------------------------------

class CompletionBackend {
  public:
    virtual ~CompletionBackend() = default;
    virtual std::string name() const = 0;
    // aliased: (n_f x padded width) spatial-route EFS of the source stack.
    // Returns a completed EFS of identical dimensions, conjugate-symmetric.
    virtual ComplexGrid complete(const ComplexGrid& aliased, const ReconstructionConfig& cfg,
                                 const PipelineOptions& opts, int n_src, const EpiContext& ctx) const = 0;
};

namespace detail {

inline Epi pad_epi_clamp(const Epi& epi, int pad) {
    if (pad <= 0) return epi;
    Epi out = epi;
    out.data = Image(epi.n_u(), epi.width() + 2 * pad);
    for (int u = 0; u < epi.n_u(); ++u) {
        const double* src = epi.data.row(u);
        double* dst = out.data.row(u);
        for (int x = 0; x < out.data.cols; ++x) dst[x] = src[std::clamp(x - pad, 0, epi.width() - 1)];
    }
    return out;
}

// Gaussian elimination with partial pivoting for the small dense complex
// systems of the classical backend.
inline void solve_small(std::vector<std::complex<double>>& A, std::vector<std::complex<double>>& b, int n) {
    for (int k = 0; k < n; ++k) {
        int piv = k;
        double best = std::abs(A[static_cast<size_t>(k) * n + k]);
        for (int r = k + 1; r < n; ++r) {
            double m = std::abs(A[static_cast<size_t>(r) * n + k]);
            if (m > best) {
                best = m;
                piv = r;
            }
        }
        if (best == 0.0) throw std::runtime_error("solve_small: singular system");
        if (piv != k) {
            for (int c = k; c < n; ++c) std::swap(A[static_cast<size_t>(piv) * n + c], A[static_cast<size_t>(k) * n + c]);
            std::swap(b[piv], b[k]);
        }
        std::complex<double> inv = 1.0 / A[static_cast<size_t>(k) * n + k];
        for (int r = k + 1; r < n; ++r) {
            std::complex<double> fac = A[static_cast<size_t>(r) * n + k] * inv;
            if (fac == std::complex<double>(0, 0)) continue;
            for (int c = k; c < n; ++c) A[static_cast<size_t>(r) * n + c] -= fac * A[static_cast<size_t>(k) * n + c];
            b[r] -= fac * b[k];
        }
    }
    for (int k = n - 1; k >= 0; --k) {
        std::complex<double> s = b[k];
        for (int c = k + 1; c < n; ++c) s -= A[static_cast<size_t>(k) * n + c] * b[c];
        b[k] = s / A[static_cast<size_t>(k) * n + k];
    }
}

// sum_{m=0}^{n-1} e^{2 pi i m theta}
inline std::complex<double> dirichlet_sum(double theta, int n) {
    double s = std::sin(M_PI * theta);
    if (std::abs(s) < 1e-12) return {static_cast<double>(n), 0.0};
    std::complex<double> num = std::polar(1.0, 2.0 * M_PI * n * theta) - 1.0;
    std::complex<double> den = std::polar(1.0, 2.0 * M_PI * theta) - 1.0;
    return num / den;
}

}  // namespace detail

// Upper-bound backend: the completed EFS is the spatial-route EFS of the
// ground-truth dense field's focal stack, built in target-grid units.
class OracleBackend : public CompletionBackend {
  public:
    explicit OracleBackend(LightField dense) : dense_(std::move(dense)) {}

    std::string name() const override { return "oracle"; }

    ComplexGrid complete(const ComplexGrid& aliased, const ReconstructionConfig& cfg, const PipelineOptions& opts,
                         int n_src, const EpiContext& ctx) const override {
        int gt_n = ctx.vertical ? dense_.n_v : dense_.n_u;
        if (gt_n != cfg.n_target)
            throw std::invalid_argument("OracleBackend: dense field view count != n_target");
        int gt_fixed_n = ctx.vertical ? dense_.n_u : dense_.n_v;
        int fixed_gt = 0;
        if (ctx.fixed_count > 1) {
            double stride = static_cast<double>(gt_fixed_n - 1) / (ctx.fixed_count - 1);
            double pos = ctx.fixed * stride;
            fixed_gt = static_cast<int>(std::llround(pos));
            if (std::abs(pos - fixed_gt) > 1e-9)
                throw std::invalid_argument("OracleBackend: source slice has no aligned ground-truth slice");
        }
        Epi gt_epi = ctx.vertical ? extract_epi_vertical(dense_, ctx.slice, fixed_gt, 0)
                                  : extract_epi(dense_, ctx.slice, fixed_gt, 0);
        const double delta = target_spacing(n_src, cfg.n_target);
        Epi padded = detail::pad_epi_clamp(gt_epi, opts.pad(gt_epi.width()));
        if (padded.width() != aliased.cols || cfg.n_f != aliased.rows)
            throw std::invalid_argument("OracleBackend: dimensions disagree with the aliased grid");
        ReconstructionConfig dense_cfg(cfg.d_min * delta, cfg.d_max * delta, cfg.n_f, 0, cfg.n_target);
        FocalStack fs = build_focal_stack(padded, dense_cfg, cfg.u_ref / delta);
        return symmetrize_conjugate(efs_spatial_route(fs));
    }

  private:
    LightField dense_;
};

// Depth-blind classical backend. The aliased EFS is decomposed into per-view
// line profiles (solved through the hybrid slice, where each source view
// contributes a known phase ramp along f), missing views are filled by
// complex linear interpolation of the two nearest profiles, and all target
// lines are re-rasterized through an exact hybrid evaluation.
class ClassicalBackend : public CompletionBackend {
  public:
    std::string name() const override { return "classical"; }

    ComplexGrid complete(const ComplexGrid& aliased, const ReconstructionConfig& cfg, const PipelineOptions& opts,
                         int n_src, const EpiContext&) const override {
        const int n_f = aliased.rows, w = aliased.cols;
        if (n_f != cfg.n_f) throw std::invalid_argument("ClassicalBackend: EFS row count != n_f");
        const int n_t = cfg.n_target;
        const double delta = target_spacing(n_src, n_t);
        const int cw = center_bin(w);

        ComplexGrid hybrid = ifft_along_f(aliased);

        // A view at offset du contributes e^{2pi i nx f du} per layer, carried
        // through the shear's linear-interpolation response; the same kernel
        // describes the stack the oracle route would build, so solving against
        // it recovers unattenuated row spectra. Factored as
        // e^{2pi i nx s} * e^{-2pi i nx t} * ((1-t) + t e^{2pi i nx}), one
        // trig evaluation per layer.
        auto kernel = [&](double nx, std::complex<double> e1, double du, int m) {
            double s = cfg.f_value(m) * du;
            double t = s - std::floor(s);
            std::complex<double> ps = std::polar(1.0, 2.0 * M_PI * nx * (s - t));
            return t == 0.0 ? ps : ps * ((1.0 - t) + t * e1);
        };

        // per-column least squares for the n_src profiles
        ComplexGrid profiles(n_src, w);
        std::vector<double> dus(n_src);
        for (int u = 0; u < n_src; ++u) dus[u] = u - cfg.u_ref;
        std::vector<std::complex<double>> A(static_cast<size_t>(n_src) * n_src), b(n_src);
        std::vector<std::complex<double>> col(static_cast<size_t>(n_f) * n_src);
        for (int c = 0; c < w; ++c) {
            double nx = static_cast<double>(c - cw) / w;
            std::complex<double> e1 = std::polar(1.0, 2.0 * M_PI * nx);
            for (int u = 0; u < n_src; ++u)
                for (int m = 0; m < n_f; ++m)
                    col[static_cast<size_t>(m) * n_src + u] = kernel(nx, e1, dus[u], m) / static_cast<double>(n_src);
            std::fill(A.begin(), A.end(), std::complex<double>(0, 0));
            std::fill(b.begin(), b.end(), std::complex<double>(0, 0));
            for (int m = 0; m < n_f; ++m) {
                const std::complex<double>* row = col.data() + static_cast<size_t>(m) * n_src;
                for (int u = 0; u < n_src; ++u) {
                    b[u] += std::conj(row[u]) * hybrid.at(m, c);
                    for (int j = u; j < n_src; ++j) A[static_cast<size_t>(u) * n_src + j] += std::conj(row[u]) * row[j];
                }
            }
            double tr = 0;
            for (int u = 0; u < n_src; ++u) tr += A[static_cast<size_t>(u) * n_src + u].real();
            double reg = opts.classical_lambda * tr / n_src;
            for (int u = 0; u < n_src; ++u) {
                A[static_cast<size_t>(u) * n_src + u] += reg;
                for (int j = 0; j < u; ++j)
                    A[static_cast<size_t>(u) * n_src + j] = std::conj(A[static_cast<size_t>(j) * n_src + u]);
            }
            detail::solve_small(A, b, n_src);
            for (int u = 0; u < n_src; ++u) profiles.at(u, c) = b[u];
        }

        // complex lerp to the target grid
        ComplexGrid target(n_t, w);
        for (int i = 0; i < n_t; ++i) {
            double p = i * delta;
            int a = std::min(static_cast<int>(std::floor(p)), n_src - 2);
            double fr = p - a;
            for (int c = 0; c < w; ++c)
                target.at(i, c) = profiles.at(a, c) * (1.0 - fr) + profiles.at(a + 1, c) * fr;
        }

        // re-rasterize all n_target lines with the same stack kernel
        ComplexGrid hybrid_t(n_f, w);
        hybrid_t.axis0 = "f";
        for (int i = 0; i < n_t; ++i) {
            double dp = i * delta - cfg.u_ref;
            for (int c = 0; c < w; ++c) {
                std::complex<double> g = target.at(i, c) / static_cast<double>(n_t);
                if (g == std::complex<double>(0, 0)) continue;
                double nx = static_cast<double>(c - cw) / w;
                std::complex<double> e1 = std::polar(1.0, 2.0 * M_PI * nx);
                for (int m = 0; m < n_f; ++m) hybrid_t.at(m, c) += g * kernel(nx, e1, dp, m);
            }
        }
        return symmetrize_conjugate(fft1_axis(hybrid_t, 0));
    }
};

ComplexGrid load_complex_grid(const std::filesystem::path& path);  // container_io.hpp

// Loads completed grids produced by an outside tool, one per EPI.
class ExternalBackend : public CompletionBackend {
  public:
    explicit ExternalBackend(std::filesystem::path dir) : dir_(std::move(dir)) {}

    std::string name() const override { return "external"; }

    static std::string filename(const EpiContext& ctx) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "efs_%s_%05d_%05d.cgrid", ctx.vertical ? "v" : "h", ctx.fixed, ctx.slice);
        return buf;
    }

    ComplexGrid complete(const ComplexGrid& aliased, const ReconstructionConfig& cfg, const PipelineOptions&,
                         int, const EpiContext& ctx) const override {
        ComplexGrid g = load_complex_grid(dir_ / filename(ctx));
        if (g.rows != cfg.n_f || g.cols != aliased.cols)
            throw std::invalid_argument("ExternalBackend: grid dimensions do not match the pipeline");
        return symmetrize_conjugate(g);
    }

  private:
    std::filesystem::path dir_;
};

inline ComplexGrid complete_efs(const ComplexGrid& aliased, const ReconstructionConfig& cfg,
                                const CompletionBackend& backend, const PipelineOptions& opts, int n_src,
                                const EpiContext& ctx) {
    if (aliased.rows != cfg.n_f) throw std::invalid_argument("complete_efs: grid row count != n_f");
    return backend.complete(aliased, cfg, opts, n_src, ctx);
}

// --- the per-EPI pipeline --------------------------------------------------

struct DenseEpiResult {
    Epi epi;             // n_target x width
    Image validity;      // same shape, {0,1}
    double symmetry_score = 0.0;  // of the completed EFS
    double symmetry_ratio = 0.0;  // score / max |completed EFS|
    double imag_residue = 0.0;    // relative, after the final inverse transform
    ComplexGrid completed_efs;    // kept for diagnostics / export
};

// Trailing margins of a reconstructed view: content at x maps to stack
// position x + f*dp, which must stay inside the frame for every refocus f.
inline std::pair<int, int> validity_margins(double dp, const ReconstructionConfig& cfg, int guard) {
    double lo = std::max({-cfg.d_min * dp, -cfg.d_max * dp, 0.0});
    double hi = std::max({cfg.d_min * dp, cfg.d_max * dp, 0.0});
    return {static_cast<int>(std::ceil(lo - 1e-9)) + guard, static_cast<int>(std::ceil(hi - 1e-9)) + guard};
}

inline DenseEpiResult reconstruct_dense_epi(const Epi& epi, const ReconstructionConfig& cfg,
                                            const CompletionBackend& backend, const PipelineOptions& opts = {},
                                            const EpiContext& ctx_in = {}) {
    cfg.validate(epi.n_u());
    const int n_src = epi.n_u(), w = epi.width();
    const int pad = opts.pad(w);
    EpiContext ctx = ctx_in;

    Epi padded = detail::pad_epi_clamp(epi, pad);
    FocalStack stack = build_focal_stack(padded, cfg);
    ComplexGrid aliased = efs_spatial_route(stack);
    ComplexGrid completed = complete_efs(aliased, cfg, backend, opts, n_src, ctx);

    DenseEpiResult out;
    out.symmetry_score = conjugate_symmetry_deviation(completed);
    double cmax = completed.max_abs();
    out.symmetry_ratio = cmax > 0 ? out.symmetry_score / cmax : 0.0;

    ComplexGrid hybrid = ifft_along_f(completed);
    WedgeMask mask(cfg, n_src, padded.width());
    ComplexGrid spectrum = symmetrize_conjugate(back_project(hybrid, mask, cfg, n_src));
    double max_imag = 0;
    Image full = ifft2(spectrum, &max_imag);
    double max_real = std::max(std::abs(full.min_value()), std::abs(full.max_value()));
    out.imag_residue = max_real > 0 ? max_imag / max_real : 0.0;

    out.epi.data = Image(cfg.n_target, w);
    out.epi.u_ref = cfg.u_ref;
    out.epi.source_row = epi.source_row;
    out.epi.source_fixed = epi.source_fixed;
    out.epi.vertical = epi.vertical;
    for (int i = 0; i < cfg.n_target; ++i)
        for (int x = 0; x < w; ++x) out.epi.data.at(i, x) = full.at(i, x + pad);

    const double delta = target_spacing(n_src, cfg.n_target);
    out.validity = Image(cfg.n_target, w, 0.0);
    for (int i = 0; i < cfg.n_target; ++i) {
        auto [lo, hi] = validity_margins(i * delta - cfg.u_ref, cfg, opts.validity_guard);
        for (int x = lo; x < w - hi; ++x) out.validity.at(i, x) = 1.0;
    }

    if (opts.passthrough_sources) {
        for (int s = 0; s < n_src; ++s) {
            double t = s / delta;
            int ti = static_cast<int>(std::llround(t));
            if (ti >= 0 && ti < cfg.n_target && std::abs(t - ti) < 1e-9) {
                for (int x = 0; x < w; ++x) {
                    out.epi.data.at(ti, x) = epi.data.at(s, x);
                    out.validity.at(ti, x) = 1.0;
                }
            }
        }
    }
    out.completed_efs = std::move(completed);
    return out;
}

struct ReconstructionResult {
    LightField field;
    std::vector<Image> validity;  // per view
    double max_symmetry_ratio = 0.0;  // worst completed-EFS asymmetry relative to its peak magnitude
    double max_imag_residue = 0.0;
};

// Algorithm's outer loop: one dense EPI per spatial row, rows independent.
inline ReconstructionResult reconstruct_lightfield(const LightField& lf, const ReconstructionConfig& cfg,
                                                   const CompletionBackend& backend, const PipelineOptions& opts = {},
                                                   int fixed_v = 0) {
    lf.validate();
    cfg.validate(lf.n_u);
    ReconstructionResult res;
    res.field.n_u = cfg.n_target;
    res.field.n_v = 1;
    res.field.height = lf.height;
    res.field.width = lf.width;
    res.field.baseline_step = lf.baseline_step * target_spacing(lf.n_u, cfg.n_target);
    res.field.focal_length = lf.focal_length;
    res.field.views.assign(cfg.n_target, Image(lf.height, lf.width));
    res.validity.assign(cfg.n_target, Image(lf.height, lf.width));

    std::vector<double> sym(lf.height, 0.0), resid(lf.height, 0.0);
    parallel_for(lf.height, [&](int y) {
        Epi epi = extract_epi(lf, y, fixed_v, cfg.u_ref);
        EpiContext ctx{y, fixed_v, lf.n_v, false};
        DenseEpiResult r = reconstruct_dense_epi(epi, cfg, backend, opts, ctx);
        sym[y] = r.symmetry_ratio;
        resid[y] = r.imag_residue;
        for (int i = 0; i < cfg.n_target; ++i)
            for (int x = 0; x < lf.width; ++x) {
                res.field.view(i).at(y, x) = std::clamp(r.epi.data.at(i, x), 0.0, 1.0);
                res.validity[i].at(y, x) = r.validity.at(i, x);
            }
    });
    for (int y = 0; y < lf.height; ++y) {
        res.max_symmetry_ratio = std::max(res.max_symmetry_ratio, sym[y]);
        res.max_imag_residue = std::max(res.max_imag_residue, resid[y]);
    }
    return res;
}

// Triangular blend weights over the reference positions (hat basis, clamped
// flat beyond the outer references). Weights sum to 1 everywhere.
inline std::vector<double> reference_weights(const std::vector<int>& refs, double pos) {
    std::vector<double> w(refs.size(), 0.0);
    if (refs.size() == 1) {
        w[0] = 1.0;
        return w;
    }
    if (pos <= refs.front()) {
        w[0] = 1.0;
        return w;
    }
    if (pos >= refs.back()) {
        w.back() = 1.0;
        return w;
    }
    for (size_t k = 0; k + 1 < refs.size(); ++k) {
        if (pos >= refs[k] && pos <= refs[k + 1]) {
            double t = (pos - refs[k]) / (refs[k + 1] - refs[k]);
            w[k] = 1.0 - t;
            w[k + 1] = t;
            return w;
        }
    }
    return w;
}

// Runs the pipeline once per reference view and blends per output view with
// validity-aware triangular weights.
inline ReconstructionResult multi_reference_reconstruct(const LightField& lf, const ReconstructionConfig& cfg,
                                                        const std::vector<int>& refs,
                                                        const CompletionBackend& backend,
                                                        const PipelineOptions& opts = {}) {
    if (refs.empty()) throw std::invalid_argument("multi_reference_reconstruct: empty reference list");
    std::vector<int> sorted = refs;
    std::sort(sorted.begin(), sorted.end());
    for (int r : sorted)
        if (r < 0 || r >= lf.n_u) throw std::out_of_range("multi_reference_reconstruct: reference outside view range");

    std::vector<ReconstructionResult> runs;
    runs.reserve(sorted.size());
    for (int r : sorted) {
        ReconstructionConfig c = cfg;
        c.u_ref = r;
        runs.push_back(reconstruct_lightfield(lf, c, backend, opts));
    }
    ReconstructionResult out = runs.front();
    if (sorted.size() == 1) return out;

    const double delta = target_spacing(lf.n_u, cfg.n_target);
    for (int i = 0; i < cfg.n_target; ++i) {
        std::vector<double> w = reference_weights(sorted, i * delta);
        for (int y = 0; y < lf.height; ++y)
            for (int x = 0; x < lf.width; ++x) {
                double acc = 0, wsum = 0, raw = 0;
                for (size_t k = 0; k < runs.size(); ++k) {
                    double wk = w[k] * runs[k].validity[i].at(y, x);
                    acc += wk * runs[k].field.view(i).at(y, x);
                    wsum += wk;
                    raw += w[k] * runs[k].field.view(i).at(y, x);
                }
                if (wsum > 0) {
                    out.field.view(i).at(y, x) = acc / wsum;
                    out.validity[i].at(y, x) = 1.0;
                } else {
                    // no reference is valid here: keep the plain blend rather
                    // than punching a hole into the view
                    out.field.view(i).at(y, x) = raw;
                    out.validity[i].at(y, x) = 0.0;
                }
            }
    }
    for (const auto& r : runs) {
        out.max_symmetry_ratio = std::max(out.max_symmetry_ratio, r.max_symmetry_ratio);
        out.max_imag_residue = std::max(out.max_imag_residue, r.max_imag_residue);
    }
    return out;
}

struct FullParallaxResult {
    LightField field;  // n_target_u x n_target_v
    std::vector<Image> validity;
};

// Sequential full-parallax reconstruction: densify every input view row
// horizontally, then run the identical pipeline on vertical EPIs of the
// intermediate result. Horizontal-first order is fixed.
inline FullParallaxResult full_parallax_reconstruct(const LightField& lf, const ReconstructionConfig& cfg_h,
                                                    const ReconstructionConfig& cfg_v,
                                                    const CompletionBackend& backend,
                                                    const PipelineOptions& opts = {}) {
    if (lf.n_v < 2)
        throw std::invalid_argument("full_parallax_reconstruct: n_v must be >= 2 (use the 3D pipeline for n_v == 1)");
    lf.validate();
    cfg_h.validate(lf.n_u);
    cfg_v.validate(lf.n_v);

    // pass 1: horizontal densification per input view row
    LightField mid;
    mid.n_u = cfg_h.n_target;
    mid.n_v = lf.n_v;
    mid.height = lf.height;
    mid.width = lf.width;
    mid.baseline_step = lf.baseline_step * target_spacing(lf.n_u, cfg_h.n_target);
    mid.focal_length = lf.focal_length;
    mid.views.assign(static_cast<size_t>(mid.n_u) * mid.n_v, Image(lf.height, lf.width));
    std::vector<Image> mid_validity(mid.views.size(), Image(lf.height, lf.width));
    for (int v = 0; v < lf.n_v; ++v) {
        parallel_for(lf.height, [&, v](int y) {
            Epi epi = extract_epi(lf, y, v, cfg_h.u_ref);
            EpiContext ctx{y, v, lf.n_v, false};
            DenseEpiResult r = reconstruct_dense_epi(epi, cfg_h, backend, opts, ctx);
            for (int i = 0; i < cfg_h.n_target; ++i)
                for (int x = 0; x < lf.width; ++x) {
                    mid.view(i, v).at(y, x) = std::clamp(r.epi.data.at(i, x), 0.0, 1.0);
                    mid_validity[static_cast<size_t>(v) * mid.n_u + i].at(y, x) = r.validity.at(i, x);
                }
        });
    }

    // pass 2: vertical densification per dense column
    FullParallaxResult out;
    out.field.n_u = cfg_h.n_target;
    out.field.n_v = cfg_v.n_target;
    out.field.height = lf.height;
    out.field.width = lf.width;
    out.field.baseline_step = mid.baseline_step;
    out.field.focal_length = lf.focal_length;
    out.field.views.assign(static_cast<size_t>(out.field.n_u) * out.field.n_v, Image(lf.height, lf.width));
    out.validity.assign(out.field.views.size(), Image(lf.height, lf.width));

    for (int u = 0; u < cfg_h.n_target; ++u) {
        parallel_for(lf.width, [&, u](int x) {
            Epi epi = extract_epi_vertical(mid, x, u, cfg_v.u_ref);
            EpiContext ctx{x, u, cfg_h.n_target, true};
            DenseEpiResult r = reconstruct_dense_epi(epi, cfg_v, backend, opts, ctx);
            for (int j = 0; j < cfg_v.n_target; ++j)
                for (int y = 0; y < lf.height; ++y) {
                    out.field.view(u, j).at(y, x) = std::clamp(r.epi.data.at(j, y), 0.0, 1.0);
                    out.validity[static_cast<size_t>(j) * out.field.n_u + u].at(y, x) = r.validity.at(j, y);
                }
        });
    }
    // fold pass-1 validity into the final masks
    double dv = target_spacing(lf.n_v, cfg_v.n_target);
    for (int j = 0; j < cfg_v.n_target; ++j) {
        double vpos = j * dv;
        int v0 = std::clamp(static_cast<int>(std::llround(vpos)), 0, lf.n_v - 1);
        for (int u = 0; u < out.field.n_u; ++u) {
            Image& mask = out.validity[static_cast<size_t>(j) * out.field.n_u + u];
            const Image& h = mid_validity[static_cast<size_t>(v0) * mid.n_u + u];
            for (size_t i = 0; i < mask.data.size(); ++i) mask.data[i] = std::min(mask.data[i], h.data[i]);
        }
    }
    return out;
}

}  // namespace efs
