#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "efs/grid.hpp"

namespace efs {

constexpr double kPsnrCap = 99.0;

// Peak 1.0; identical inputs report the cap.
inline double psnr(const Image& a, const Image& b, const Image* mask = nullptr) {
    if (!a.same_shape(b)) throw std::invalid_argument("psnr: dimension mismatch");
    if (mask && !mask->same_shape(a)) throw std::invalid_argument("psnr: mask dimension mismatch");
    double se = 0;
    size_t n = 0;
    for (size_t i = 0; i < a.data.size(); ++i) {
        if (mask && mask->data[i] < 0.5) continue;
        se += sq(a.data[i] - b.data[i]);
        ++n;
    }
    if (n == 0) throw std::invalid_argument("psnr: empty mask");
    double mse = se / n;
    if (mse <= 0) return kPsnrCap;
    return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

namespace detail {

inline std::vector<double> gaussian_kernel_11() {
    std::vector<double> k(11);
    double s = 0;
    for (int i = 0; i < 11; ++i) {
        double x = i - 5;
        k[i] = std::exp(-x * x / (2.0 * 1.5 * 1.5));
        s += k[i];
    }
    for (auto& v : k) v /= s;
    return k;
}

// separable filtering with reflected borders
inline Image gauss_filter(const Image& g) {
    static const std::vector<double> k = gaussian_kernel_11();
    auto reflect = [](int i, int n) {
        if (i < 0) i = -i - 1;
        if (i >= n) i = 2 * n - 1 - i;
        return i;
    };
    Image tmp(g.rows, g.cols), out(g.rows, g.cols);
    for (int r = 0; r < g.rows; ++r)
        for (int c = 0; c < g.cols; ++c) {
            double acc = 0;
            for (int t = 0; t < 11; ++t) acc += k[t] * g.at(r, reflect(c + t - 5, g.cols));
            tmp.at(r, c) = acc;
        }
    for (int r = 0; r < g.rows; ++r)
        for (int c = 0; c < g.cols; ++c) {
            double acc = 0;
            for (int t = 0; t < 11; ++t) acc += k[t] * tmp.at(reflect(r + t - 5, g.rows), c);
            out.at(r, c) = acc;
        }
    return out;
}

}  // namespace detail

// Mean local SSIM, Wang et al. constants: 11x11 Gaussian sigma 1.5,
// K1 = 0.01, K2 = 0.03, dynamic range 1.
inline double ssim(const Image& a, const Image& b, const Image* mask = nullptr) {
    if (!a.same_shape(b)) throw std::invalid_argument("ssim: dimension mismatch");
    if (a.rows < 11 || a.cols < 11) throw std::invalid_argument("ssim: image smaller than the 11x11 window");
    if (mask && !mask->same_shape(a)) throw std::invalid_argument("ssim: mask dimension mismatch");
    constexpr double C1 = 0.01 * 0.01, C2 = 0.03 * 0.03;

    Image mu_a = detail::gauss_filter(a);
    Image mu_b = detail::gauss_filter(b);
    Image aa(a.rows, a.cols), bb(a.rows, a.cols), ab(a.rows, a.cols);
    for (size_t i = 0; i < a.data.size(); ++i) {
        aa.data[i] = a.data[i] * a.data[i];
        bb.data[i] = b.data[i] * b.data[i];
        ab.data[i] = a.data[i] * b.data[i];
    }
    Image s_aa = detail::gauss_filter(aa);
    Image s_bb = detail::gauss_filter(bb);
    Image s_ab = detail::gauss_filter(ab);

    double acc = 0;
    size_t n = 0;
    for (size_t i = 0; i < a.data.size(); ++i) {
        if (mask && mask->data[i] < 0.5) continue;
        double ma = mu_a.data[i], mb = mu_b.data[i];
        double va = s_aa.data[i] - ma * ma;
        double vb = s_bb.data[i] - mb * mb;
        double cov = s_ab.data[i] - ma * mb;
        double v = ((2 * ma * mb + C1) * (2 * cov + C2)) / ((ma * ma + mb * mb + C1) * (va + vb + C2));
        acc += v;
        ++n;
    }
    if (n == 0) throw std::invalid_argument("ssim: empty mask");
    return acc / n;
}

}  // namespace efs
