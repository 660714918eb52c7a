#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace efs {

// Dense row-major real grid. Used for view images, EPIs, focal stacks and masks.
struct Image {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Image() = default;
    Image(int r, int c, double fill = 0.0) : rows(r), cols(c), data(static_cast<size_t>(r) * c, fill) {
        if (r < 0 || c < 0) throw std::invalid_argument("Image: negative dimensions");
    }

    double& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
    double at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }
    double* row(int r) { return data.data() + static_cast<size_t>(r) * cols; }
    const double* row(int r) const { return data.data() + static_cast<size_t>(r) * cols; }

    bool same_shape(const Image& o) const { return rows == o.rows && cols == o.cols; }

    bool all_finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }

    double min_value() const { return *std::min_element(data.begin(), data.end()); }
    double max_value() const { return *std::max_element(data.begin(), data.end()); }

    double mean() const {
        double s = 0;
        for (double v : data) s += v;
        return data.empty() ? 0.0 : s / static_cast<double>(data.size());
    }
};

inline double sq(double v) { return v * v; }

// Linear sample of one grid row at fractional column x. Out-of-bounds taps
// contribute nothing; *full_support reports whether every tap was in-bounds.
inline double sample_row_linear(const double* row, int n, double x, bool* full_support) {
    double x0f = std::floor(x);
    int x0 = static_cast<int>(x0f);
    double t = x - x0f;
    bool in0 = (x0 >= 0 && x0 < n);
    if (t == 0.0) {
        if (full_support) *full_support = in0;
        return in0 ? row[x0] : 0.0;
    }
    bool in1 = (x0 + 1 >= 0 && x0 + 1 < n);
    if (full_support) *full_support = in0 && in1;
    double v = 0.0;
    if (in0) v += row[x0] * (1.0 - t);
    if (in1) v += row[x0 + 1] * t;
    return v;
}

}  // namespace efs
