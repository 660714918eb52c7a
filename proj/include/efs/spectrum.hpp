#pragma once

#include <cmath>
#include <complex>
#include <optional>
#include <stdexcept>
#include <vector>

#include "efs/fft.hpp"
#include "efs/grid.hpp"
#include "efs/lightfield.hpp"
#include "efs/refocus.hpp"

namespace efs {

// EFS via the spatial route: the 2D spectrum of the focal stack.
inline ComplexGrid efs_spatial_route(const FocalStack& fs) {
    fs.validate();
    ComplexGrid g = fft2(fs.data);
    g.axis0 = "omega_f";
    g.axis1 = "omega_x";
    return g;
}

struct SliceRouteResult {
    ComplexGrid hybrid;  // F(f, omega_x): rows are focal layers, cols DC-centered
    ComplexGrid efs;     // centered both axes
};

// EFS via the spectrum route: slice the EPI spectrum along omega_u = -f omega_x,
// then transform along f. The EPI spectrum is zero-padded along u so the
// linear interpolation tracks the underlying transform closely, and rows are
// phase-shifted to put the reference view at the origin (integer shift, so
// the ramp is consistent with the DFT periodicity). The slice itself matches
// the paper's pure definition; the EFS output carries the focal stack's
// mean-over-views normalization so both routes are directly comparable.
inline SliceRouteResult efs_slice_route(const Epi& epi, const ReconstructionConfig& cfg, int pad_factor = 8,
                                        bool nearest_bin = false) {
    cfg.validate(epi.n_u());
    epi.validate();
    const int n_u = epi.n_u(), w = epi.width();
    const int P = std::max(pad_factor, 1) * n_u;

    ComplexGrid padded(P, w);
    for (int u = 0; u < n_u; ++u)
        for (int x = 0; x < w; ++x) padded.at(u, x) = epi.data.at(u, x);
    ComplexGrid EE = fft1_axis(fft1_axis(padded, 1), 0);  // centered both axes

    // re-center rows about u_ref: multiply raw bin b by e^{2pi i b u_ref / P}
    for (int r = 0; r < P; ++r) {
        double b = signed_bin(r, P);
        std::complex<double> ramp = std::polar(1.0, 2.0 * M_PI * b * epi.u_ref / P);
        for (int c = 0; c < w; ++c) EE.at(r, c) *= ramp;
    }

    SliceRouteResult out;
    out.hybrid = ComplexGrid(cfg.n_f, w);
    out.hybrid.axis0 = "f";
    out.hybrid.axis1 = "omega_x";
    const int cu = center_bin(P), cw = center_bin(w);
    for (int m = 0; m < cfg.n_f; ++m) {
        double f = cfg.f_value(m);
        for (int c = 0; c < w; ++c) {
            double nu_x = static_cast<double>(c - cw) / w;
            double nu_u = -f * nu_x;  // cycles per view step
            if (std::abs(nu_u) > 0.5) {
                out.hybrid.at(m, c) = 0.0;
                continue;
            }
            double t = nu_u * P + cu;
            std::complex<double> v;
            if (nearest_bin) {
                int ti = static_cast<int>(std::llround(t));
                v = EE.at(((ti % P) + P) % P, c);
            } else {
                int t0 = static_cast<int>(std::floor(t));
                double fr = t - t0;
                auto wrap = [&](int i) { return ((i % P) + P) % P; };
                v = EE.at(wrap(t0), c) * (1.0 - fr) + EE.at(wrap(t0 + 1), c) * fr;
            }
            out.hybrid.at(m, c) = v;
        }
    }
    out.efs = fft1_axis(out.hybrid, 0);
    out.efs.axis0 = "omega_f";
    for (auto& v : out.efs.data) v /= static_cast<double>(n_u);
    return out;
}

// Mirror bin of a DC-centered index under the DFT's periodic reflection.
inline int mirror_bin(int i, int n) {
    int raw = detail::centered_to_raw(i, n);
    int mraw = (n - raw) % n;
    return detail::raw_to_centered(mraw, n);
}

// Mean |g(w) - conj(g(-w))| over all bins; zero for spectra of real signals.
inline double conjugate_symmetry_deviation(const ComplexGrid& g) {
    double acc = 0;
    for (int r = 0; r < g.rows; ++r) {
        int mr = mirror_bin(r, g.rows);
        for (int c = 0; c < g.cols; ++c) {
            int mc = mirror_bin(c, g.cols);
            acc += std::abs(g.at(r, c) - std::conj(g.at(mr, mc)));
        }
    }
    return acc / (static_cast<double>(g.rows) * g.cols);
}

// Replace g by the average of itself and its reflected conjugate; the result
// is exactly conjugate-symmetric.
inline ComplexGrid symmetrize_conjugate(const ComplexGrid& g) {
    ComplexGrid out = g;
    for (int r = 0; r < g.rows; ++r) {
        int mr = mirror_bin(r, g.rows);
        for (int c = 0; c < g.cols; ++c) {
            int mc = mirror_bin(c, g.cols);
            out.at(r, c) = 0.5 * (g.at(r, c) + std::conj(g.at(mr, mc)));
        }
    }
    return out;
}

// Fraction of reference energy absent from the test grid's support.
inline double spectral_energy_loss(const ComplexGrid& reference, const ComplexGrid& test) {
    if (reference.rows != test.rows || reference.cols != test.cols)
        throw std::invalid_argument("spectral_energy_loss: dimension mismatch");
    double eref = reference.energy();
    if (!(eref > 0)) throw std::domain_error("spectral_energy_loss: zero-energy reference");
    return 1.0 - test.energy() / eref;
}

// Orientation analysis. Angles are measured in the (omega_x, omega_f) plane
// with omega_x in cycles/pixel and omega_f in cycles/layer; with that scaling
// view u's line sits at atan(delta_alpha * (u - u_ref)) and the discrete apex
// angle formula is exact.
struct ViewLine {
    double angle = 0.0;   // radians in [-pi/2, pi/2)
    double energy = 0.0;
    int view_index = -1;  // matched prediction, -1 if unmatched
};

struct LineDetection {
    std::vector<ViewLine> lines;
    bool complete = false;  // all n_u predictions matched
    std::vector<double> predicted;  // predicted angle per view
    std::vector<double> histogram;  // angular energy histogram
};

inline double fold_angle(double a) {
    while (a >= M_PI / 2) a -= M_PI;
    while (a < -M_PI / 2) a += M_PI;
    return a;
}

inline double predicted_line_angle(int u, int u_ref, double delta_alpha) {
    return std::atan(delta_alpha * (u - u_ref));
}

struct LineDetectOptions {
    int bins = 1024;
    double dc_disk = 3.0;        // skipped radius around DC, in bins
    double match_tol = 1.5 * M_PI / 180.0;
    double peak_fraction = 0.02; // maxima below this fraction of the top peak are ignored
};

inline std::vector<double> angular_energy_histogram(const ComplexGrid& efs, const LineDetectOptions& opt) {
    std::vector<double> hist(opt.bins, 0.0);
    const int cr = center_bin(efs.rows), cc = center_bin(efs.cols);
    for (int r = 0; r < efs.rows; ++r) {
        double nf = static_cast<double>(r - cr) / efs.rows;
        for (int c = 0; c < efs.cols; ++c) {
            if (c == cc) continue;  // DC column carries no orientation
            double ri = std::hypot(static_cast<double>(r - cr), static_cast<double>(c - cc));
            if (ri < opt.dc_disk) continue;
            double nx = static_cast<double>(c - cc) / efs.cols;
            double theta = fold_angle(std::atan2(nf, nx));
            int b = static_cast<int>(std::floor((theta + M_PI / 2) / M_PI * opt.bins));
            b = std::clamp(b, 0, opt.bins - 1);
            hist[b] += std::norm(efs.at(r, c));
        }
    }
    return hist;
}

inline LineDetection detect_view_lines(const ComplexGrid& efs, const ReconstructionConfig& cfg, int n_u,
                                       LineDetectOptions opt = {}) {
    if (n_u < 2) throw std::invalid_argument("detect_view_lines: n_u must be >= 2");
    LineDetection det;
    det.histogram = angular_energy_histogram(efs, opt);
    const int B = opt.bins;

    // smoothed copy; orientation space is periodic
    std::vector<double> sm(B);
    for (int i = 0; i < B; ++i)
        sm[i] = (det.histogram[(i + B - 1) % B] + det.histogram[i] + det.histogram[(i + 1) % B]) / 3.0;

    double peak = *std::max_element(sm.begin(), sm.end());
    std::vector<ViewLine> maxima;
    for (int i = 0; i < B; ++i) {
        double prev = sm[(i + B - 1) % B], next = sm[(i + 1) % B];
        if (sm[i] > prev && sm[i] >= next && sm[i] >= opt.peak_fraction * peak) {
            // parabolic refinement
            double denom = prev - 2 * sm[i] + next;
            double off = denom != 0.0 ? 0.5 * (prev - next) / denom : 0.0;
            off = std::clamp(off, -0.5, 0.5);
            double angle = -M_PI / 2 + (i + off + 0.5) * M_PI / B;
            maxima.push_back({fold_angle(angle), sm[i], -1});
        }
    }

    det.predicted.resize(n_u);
    for (int u = 0; u < n_u; ++u) det.predicted[u] = predicted_line_angle(u, cfg.u_ref, cfg.delta_alpha);

    // greedy match: each prediction takes the nearest unclaimed maximum
    std::vector<bool> used(maxima.size(), false);
    int matched = 0;
    for (int u = 0; u < n_u; ++u) {
        int best = -1;
        double bestd = opt.match_tol;
        for (size_t k = 0; k < maxima.size(); ++k) {
            if (used[k]) continue;
            double dd = std::abs(fold_angle(maxima[k].angle - det.predicted[u]));
            if (dd <= bestd) {
                bestd = dd;
                best = static_cast<int>(k);
            }
        }
        if (best >= 0) {
            used[best] = true;
            maxima[best].view_index = u;
            ++matched;
        }
    }
    det.lines = std::move(maxima);
    std::sort(det.lines.begin(), det.lines.end(), [](const ViewLine& a, const ViewLine& b) { return a.angle < b.angle; });
    det.complete = (matched == n_u);
    return det;
}

// Energy fraction outside the double cone of the given half-angle. The DC
// cross is skipped: the omega_f = 0 row (the reference view's own line) and a
// band of near-DC columns where the line position is sub-bin and orientation
// is therefore unresolved.
inline double cone_exterior_energy(const ComplexGrid& efs, double half_angle, double margin = 0.0,
                                   double dc_disk = 3.0) {
    const int cr = center_bin(efs.rows), cc = center_bin(efs.cols);
    double inside = 0, outside = 0;
    for (int r = 0; r < efs.rows; ++r) {
        for (int c = 0; c < efs.cols; ++c) {
            if (r == cr || std::abs(c - cc) < dc_disk) continue;
            double ri = std::hypot(static_cast<double>(r - cr), static_cast<double>(c - cc));
            if (ri < dc_disk) continue;
            double nf = static_cast<double>(r - cr) / efs.rows;
            double nx = static_cast<double>(c - cc) / efs.cols;
            double theta = std::abs(fold_angle(std::atan2(nf, nx)));
            double e = std::norm(efs.at(r, c));
            if (theta > half_angle + margin)
                outside += e;
            else
                inside += e;
        }
    }
    double tot = inside + outside;
    return tot > 0 ? outside / tot : 0.0;
}

}  // namespace efs
