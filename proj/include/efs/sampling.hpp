#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "efs/generator.hpp"

namespace efs {

// Apex angle of the focal-stack double cone. Continuous form when delta_alpha
// is absent, discrete otherwise.
inline double apex_angle(int n_u, std::optional<double> delta_alpha = std::nullopt) {
    if (n_u < 2) throw std::invalid_argument("apex_angle: n_u must be >= 2");
    double half = 0.5 * (n_u - 1);
    if (delta_alpha) half *= *delta_alpha;
    return 2.0 * std::atan(half);
}

// Ghost spread |alpha (N_u - 1)| in pixels for a point refocused alpha away
// from its true disparity.
inline double defocus_diameter(double alpha, int n_u) { return std::abs(alpha * (n_u - 1)); }

// Per-view ghost samples separate once the per-view step exceeds one pixel.
inline bool aliasing_predicate(double alpha) { return std::abs(alpha) > 1.0; }

// Slope of view u_i's aliasing trace in the focal stack. Vertical for the
// reference view itself, reported as +infinity rather than an error.
inline double aliasing_line_slope(int u_i, int u_ref, std::optional<double> delta_alpha = std::nullopt) {
    if (u_i == u_ref) return std::numeric_limits<double>::infinity();
    double denom = static_cast<double>(u_i - u_ref);
    if (delta_alpha) denom *= *delta_alpha;
    return 1.0 / denom;
}

// Largest layer gap with contiguous per-view traces.
inline double max_delta_alpha(int n_u) {
    if (n_u < 2) throw std::invalid_argument("max_delta_alpha: n_u must be >= 2");
    return 2.0 / (n_u - 1);
}

// Layer count implied by a refocus range and gap.
inline double focal_layer_count(double d_min, double d_max, double delta_alpha) {
    if (!(delta_alpha > 0)) throw std::domain_error("focal_layer_count: delta_alpha must be positive");
    return (d_max - d_min) / delta_alpha;
}

// Minimum focal layers for a non-aliased spectrum; the pre-ceiling value is
// also exposed for the consistency check against focal_layer_count.
inline double min_focal_layers_real(const SceneGeometry& geom, double focal_length, double baseline, int n_u) {
    geom.validate();
    if (geom.z_min <= 0) throw std::domain_error("min_focal_layers: z_min must be positive");
    double kb = focal_length * baseline;
    return geom.s_factor * kb * (geom.z_max - geom.z_min) * (n_u - 1) / (2.0 * geom.z_max * geom.z_min);
}

inline int min_focal_layers(const SceneGeometry& geom, double focal_length, double baseline, int n_u) {
    double v = min_focal_layers_real(geom, focal_length, baseline, n_u);
    return std::max(1, static_cast<int>(std::ceil(v - 1e-12)));
}

struct SamplingReport {
    int n_u = 0;
    double delta_alpha = 0.0;
    double apex_angle_continuous = 0.0;
    double apex_angle_discrete = 0.0;
    std::vector<double> line_slopes;  // per view, discrete form; inf at u_ref
    double delta_alpha_max = 0.0;
    double n_f_eq11 = 0.0;            // (d_max-d_min)/delta_alpha
    int n_f_min = 0;                  // ceil of the layer bound
    double n_f_min_real = 0.0;
    double cone_energy_fraction = std::numeric_limits<double>::quiet_NaN();  // measured; optional

    void validate() const {
        if (!(apex_angle_continuous > 0 && apex_angle_continuous < M_PI))
            throw std::invalid_argument("SamplingReport: apex angle out of (0, pi)");
        if (!(apex_angle_discrete > 0 && apex_angle_discrete < M_PI))
            throw std::invalid_argument("SamplingReport: apex angle out of (0, pi)");
        if (n_f_min < 1) throw std::invalid_argument("SamplingReport: n_f_min must be >= 1");
        if (!(delta_alpha_max > 0)) throw std::invalid_argument("SamplingReport: delta_alpha_max must be positive");
    }
};

inline SamplingReport sampling_report(const SceneGeometry& geom, double focal_length, double baseline, int n_u,
                                      double d_min, double d_max, double delta_alpha, int u_ref) {
    SamplingReport r;
    r.n_u = n_u;
    r.delta_alpha = delta_alpha;
    r.apex_angle_continuous = apex_angle(n_u);
    r.apex_angle_discrete = apex_angle(n_u, delta_alpha);
    r.delta_alpha_max = max_delta_alpha(n_u);
    r.n_f_eq11 = focal_layer_count(d_min, d_max, delta_alpha);
    r.n_f_min_real = min_focal_layers_real(geom, focal_length, baseline, n_u);
    r.n_f_min = min_focal_layers(geom, focal_length, baseline, n_u);
    r.line_slopes.resize(n_u);
    for (int u = 0; u < n_u; ++u) r.line_slopes[u] = aliasing_line_slope(u, u_ref, delta_alpha);
    return r;
}

}  // namespace efs
