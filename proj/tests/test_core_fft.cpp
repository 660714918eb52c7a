#include <catch2/catch_amalgamated.hpp>

#include <complex>
#include <random>

#include "efs/fft.hpp"
#include "efs/spectrum.hpp"

using namespace efs;
using Catch::Approx;

namespace {
Image random_grid(int r, int c, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(0, 1);
    Image g(r, c);
    for (auto& v : g.data) v = u(rng);
    return g;
}
}  // namespace

TEST_CASE("constant grid transforms to a single DC coefficient") {
    const double c = 0.37;
    Image g(6, 8, c);
    ComplexGrid G = fft2(g);
    int cr = center_bin(6), cc = center_bin(8);
    CHECK(G.at(cr, cc).real() == Approx(c * 6 * 8));
    CHECK(G.at(cr, cc).imag() == Approx(0.0).margin(1e-12));
    for (int r = 0; r < 6; ++r)
        for (int col = 0; col < 8; ++col)
            if (r != cr || col != cc) CHECK(std::abs(G.at(r, col)) < 1e-10);
}

TEST_CASE("unit impulse at the origin gives a flat unit spectrum") {
    Image g(5, 7, 0.0);
    g.at(0, 0) = 1.0;
    ComplexGrid G = fft2(g);
    for (const auto& v : G.data) CHECK(std::abs(v) == Approx(1.0).epsilon(1e-12));
}

TEST_CASE("pure cosine along x gives conjugate peaks at +-k bins") {
    const int R = 16, C = 64, k = 5;
    const double a = 0.4;
    Image g(R, C);
    for (int r = 0; r < R; ++r)
        for (int c = 0; c < C; ++c) g.at(r, c) = 0.5 + a * std::cos(2 * M_PI * k * c / C);
    ComplexGrid G = fft2(g);
    int cr = center_bin(R), cc = center_bin(C);
    // closed-form DFT of a cosine: a/2 * R * C at the two bins
    CHECK(std::abs(G.at(cr, cc + k)) == Approx(0.5 * a * R * C).epsilon(1e-9));
    CHECK(std::abs(G.at(cr, cc - k)) == Approx(0.5 * a * R * C).epsilon(1e-9));
    CHECK(std::abs(G.at(cr, cc + k) - std::conj(G.at(cr, cc - k))) < 1e-9);
    CHECK(std::abs(G.at(cr, cc)) == Approx(0.5 * R * C).epsilon(1e-9));
    // nothing else
    double rest = 0;
    for (int r = 0; r < R; ++r)
        for (int c = 0; c < C; ++c)
            if (r == cr && (c == cc || c == cc + k || c == cc - k)) continue;
            else rest = std::max(rest, std::abs(G.at(r, c)));
    CHECK(rest < 1e-9);
}

TEST_CASE("forward then inverse returns the original within 1e-9") {
    for (auto [r, c] : {std::pair{8, 8}, {7, 9}, {16, 5}}) {
        Image g = random_grid(r, c, 17 * r + c);
        double resid = 0;
        Image back = ifft2(fft2(g), &resid);
        for (size_t i = 0; i < g.data.size(); ++i) CHECK(back.data[i] == Approx(g.data[i]).margin(1e-9));
        CHECK(resid < 1e-9);
    }
}

TEST_CASE("Parseval holds within 1e-6 relative") {
    Image g = random_grid(12, 20, 3);
    double spatial = 0;
    for (double v : g.data) spatial += v * v;
    ComplexGrid G = fft2(g);
    double spectral = G.energy() / (12.0 * 20.0);
    CHECK(spectral == Approx(spatial).epsilon(1e-6));
}

TEST_CASE("axis transforms invert exactly and center the transformed axis") {
    Image g = random_grid(9, 6, 11);
    for (int axis : {0, 1}) {
        ComplexGrid F = fft1_axis(g, axis);
        ComplexGrid back = ifft1_axis(F, axis);
        for (size_t i = 0; i < g.data.size(); ++i) {
            CHECK(back.data[i].real() == Approx(g.data[i]).margin(1e-10));
            CHECK(std::abs(back.data[i].imag()) < 1e-10);
        }
    }
    // a cosine along rows lands at the expected centered bins
    const int R = 12, C = 4, k = 3;
    Image h(R, C);
    for (int r = 0; r < R; ++r)
        for (int c = 0; c < C; ++c) h.at(r, c) = std::cos(2 * M_PI * k * r / R);
    ComplexGrid H = fft1_axis(h, 0);
    CHECK(std::abs(H.at(center_bin(R) + k, 0)) == Approx(0.5 * R).epsilon(1e-9));
    CHECK(std::abs(H.at(center_bin(R) - k, 0)) == Approx(0.5 * R).epsilon(1e-9));
}

TEST_CASE("mirror_bin pairs DC with itself and respects DFT reflection") {
    for (int n : {4, 5, 8, 9}) {
        CHECK(mirror_bin(center_bin(n), n) == center_bin(n));
        for (int i = 0; i < n; ++i) CHECK(mirror_bin(mirror_bin(i, n), n) == i);
    }
    // even size: the unpaired Nyquist bin maps to itself
    CHECK(mirror_bin(0, 8) == 0);
}

TEST_CASE("fft2 of a 2D scene is deterministic across calls") {
    Image g = random_grid(10, 10, 5);
    ComplexGrid a = fft2(g), b = fft2(g);
    for (size_t i = 0; i < a.data.size(); ++i) CHECK(a.data[i] == b.data[i]);
}
