#pragma once

#include <fftw3.h>

#include <complex>
#include <map>
#include <mutex>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "efs/grid.hpp"

namespace efs {

// Dense complex spectrum grid. Frequency axes are stored DC-centered: the
// zero-frequency bin sits at index N/2 (floor). The forward DFT kernel is
// e^{-j2pi.}, unnormalized; the inverse carries 1/N per transformed axis.
struct ComplexGrid {
    int rows = 0;
    int cols = 0;
    std::vector<std::complex<double>> data;
    std::string axis0 = "omega_f";
    std::string axis1 = "omega_x";
    bool dc_centered = true;

    ComplexGrid() = default;
    ComplexGrid(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c) {}

    std::complex<double>& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
    std::complex<double> at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }

    bool all_finite() const {
        for (const auto& v : data)
            if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
        return true;
    }

    double max_abs() const {
        double m = 0;
        for (const auto& v : data) m = std::max(m, std::abs(v));
        return m;
    }

    double energy() const {
        double e = 0;
        for (const auto& v : data) e += std::norm(v);
        return e;
    }
};

// Signed bin index of a centered axis: index i maps to i - N/2.
inline int signed_bin(int i, int n) { return i - n / 2; }
inline int center_bin(int n) { return n / 2; }

namespace detail {

// FFTW plans are not thread-safe to create; executions via the new-array
// interface are. Plans are cached per shape and created FFTW_UNALIGNED so
// they accept std::vector storage.
class PlanCache {
  public:
    static PlanCache& instance() {
        static PlanCache c;
        return c;
    }

    // axis: -1 = full 2D, 0 = along rows dimension (length = rows), 1 = along cols.
    fftw_plan get(int rows, int cols, int axis, int sign) {
        std::lock_guard<std::mutex> lock(mu_);
        Key key{rows, cols, axis, sign};
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;

        size_t n = static_cast<size_t>(rows) * cols;
        std::vector<std::complex<double>> a(n), b(n);
        auto* in = reinterpret_cast<fftw_complex*>(a.data());
        auto* out = reinterpret_cast<fftw_complex*>(b.data());
        unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        fftw_plan p = nullptr;
        if (axis < 0) {
            p = fftw_plan_dft_2d(rows, cols, in, out, sign, flags);
        } else if (axis == 0) {
            int len = rows;
            p = fftw_plan_many_dft(1, &len, cols, in, nullptr, cols, 1, out, nullptr, cols, 1, sign, flags);
        } else {
            int len = cols;
            p = fftw_plan_many_dft(1, &len, rows, in, nullptr, 1, cols, out, nullptr, 1, cols, sign, flags);
        }
        if (!p) throw std::runtime_error("fftw planning failed");
        cache_.emplace(key, p);
        return p;
    }

  private:
    using Key = std::tuple<int, int, int, int>;
    std::mutex mu_;
    std::map<Key, fftw_plan> cache_;
};

inline void execute(fftw_plan p, const std::complex<double>* in, std::complex<double>* out) {
    fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(const_cast<std::complex<double>*>(in)),
                     reinterpret_cast<fftw_complex*>(out));
}

// Centered-layout index of a raw DFT bin and its inverse. The two differ for
// odd sizes.
inline int raw_to_centered(int i, int n) { return (i + n / 2) % n; }
inline int centered_to_raw(int i, int n) { return (i + n - n / 2) % n; }

template <typename T>
void shift_axes(const std::vector<T>& src, std::vector<T>& dst, int rows, int cols, bool axis0, bool axis1,
                bool inverse) {
    dst.resize(src.size());
    for (int r = 0; r < rows; ++r) {
        int rr = axis0 ? raw_to_centered(r, rows) : r;
        for (int c = 0; c < cols; ++c) {
            int cc = axis1 ? raw_to_centered(c, cols) : c;
            if (inverse)
                dst[static_cast<size_t>(r) * cols + c] = src[static_cast<size_t>(rr) * cols + cc];
            else
                dst[static_cast<size_t>(rr) * cols + cc] = src[static_cast<size_t>(r) * cols + c];
        }
    }
}

}  // namespace detail

// 2D forward transform of a real grid; DC-centered on both axes.
inline ComplexGrid fft2(const Image& g) {
    if (g.rows < 1 || g.cols < 1) throw std::invalid_argument("fft2: empty grid");
    ComplexGrid out(g.rows, g.cols);
    std::vector<std::complex<double>> tmp(out.data.size()), res(out.data.size());
    for (size_t i = 0; i < tmp.size(); ++i) tmp[i] = g.data[i];
    detail::execute(detail::PlanCache::instance().get(g.rows, g.cols, -1, FFTW_FORWARD), tmp.data(), res.data());
    detail::shift_axes(res, out.data, g.rows, g.cols, true, true, false);
    return out;
}

// 2D inverse; returns the complex result scaled by 1/(rows*cols). Callers that
// expect a real signal take the real part and check the imaginary residue.
inline ComplexGrid ifft2_complex(const ComplexGrid& g) {
    ComplexGrid out(g.rows, g.cols);
    std::vector<std::complex<double>> tmp(g.data.size()), res(g.data.size());
    detail::shift_axes(g.data, tmp, g.rows, g.cols, true, true, true);
    detail::execute(detail::PlanCache::instance().get(g.rows, g.cols, -1, FFTW_BACKWARD), tmp.data(), res.data());
    double scale = 1.0 / (static_cast<double>(g.rows) * g.cols);
    for (size_t i = 0; i < res.size(); ++i) out.data[i] = res[i] * scale;
    out.dc_centered = false;
    return out;
}

inline Image ifft2(const ComplexGrid& g, double* max_imag = nullptr) {
    ComplexGrid c = ifft2_complex(g);
    Image out(g.rows, g.cols);
    double mi = 0;
    for (size_t i = 0; i < c.data.size(); ++i) {
        out.data[i] = c.data[i].real();
        mi = std::max(mi, std::abs(c.data[i].imag()));
    }
    if (max_imag) *max_imag = mi;
    return out;
}

// 1D forward transform along `axis` of a complex grid; that axis becomes
// DC-centered, the other axis is untouched.
inline ComplexGrid fft1_axis(const ComplexGrid& g, int axis) {
    if (axis != 0 && axis != 1) throw std::invalid_argument("fft1_axis: axis must be 0 or 1");
    ComplexGrid out(g.rows, g.cols);
    out.axis0 = g.axis0;
    out.axis1 = g.axis1;
    std::vector<std::complex<double>> res(g.data.size());
    detail::execute(detail::PlanCache::instance().get(g.rows, g.cols, axis, FFTW_FORWARD), g.data.data(), res.data());
    detail::shift_axes(res, out.data, g.rows, g.cols, axis == 0, axis == 1, false);
    return out;
}

inline ComplexGrid fft1_axis(const Image& g, int axis) {
    ComplexGrid c(g.rows, g.cols);
    for (size_t i = 0; i < c.data.size(); ++i) c.data[i] = g.data[i];
    return fft1_axis(c, axis);
}

// Exact inverse of fft1_axis: expects the transformed axis DC-centered,
// applies the e^{+j2pi.}/N kernel along it.
inline ComplexGrid ifft1_axis(const ComplexGrid& g, int axis) {
    if (axis != 0 && axis != 1) throw std::invalid_argument("ifft1_axis: axis must be 0 or 1");
    ComplexGrid out(g.rows, g.cols);
    out.axis0 = g.axis0;
    out.axis1 = g.axis1;
    std::vector<std::complex<double>> tmp(g.data.size()), res(g.data.size());
    detail::shift_axes(g.data, tmp, g.rows, g.cols, axis == 0, axis == 1, true);
    detail::execute(detail::PlanCache::instance().get(g.rows, g.cols, axis, FFTW_BACKWARD), tmp.data(), res.data());
    double scale = 1.0 / (axis == 0 ? g.rows : g.cols);
    for (size_t i = 0; i < res.size(); ++i) out.data[i] = res[i] * scale;
    return out;
}

}  // namespace efs
