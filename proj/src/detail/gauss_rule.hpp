#pragma once
// Internal composite Gauss-Legendre quadrature shared by the spectral-norm
// and weighted-objective translation units. Not installed.
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace irkwl::detail {

// Nodes/weights of the n-point Gauss-Legendre rule on [-1, 1], Newton
// iteration on P_n from the Chebyshev initial guess. Deterministic,
// accurate to ~1e-15. Nodes come out in ascending order.
inline void gauss_legendre_rule(int n, std::vector<double>& xs, std::vector<double>& ws) {
    xs.assign(static_cast<size_t>(n), 0.0);
    ws.assign(static_cast<size_t>(n), 0.0);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (x * p0 - p1) / (x * x - 1.0);
            double dx = p0 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        xs[static_cast<size_t>(i)] = -x;
        xs[static_cast<size_t>(n - 1 - i)] = x;
        double w = 2.0 / ((1.0 - x * x) * pp * pp);
        ws[static_cast<size_t>(i)] = w;
        ws[static_cast<size_t>(n - 1 - i)] = w;
    }
}

// sqrt of the integral of f^2 over [0, hi]: composite 64-point panels,
// refined 16 -> 32 -> 64 -> 128 panels until two successive levels agree to
// a relative 1e-12 (absolute below norm 1; summation rounding alone exceeds
// an absolute threshold once the integral is O(1)). Each level evaluates f
// at ascending abscissae, so stateful callables (marching phase unwraps) may
// rely on the ordering. Throws with the last estimate when refinement fails
// to settle.
template <class F>
double l2_norm_refined(F&& f, double hi) {
    std::vector<double> xs, ws;
    gauss_legendre_rule(64, xs, ws);
    double prev_norm = -1.0;
    for (int panels = 16; panels <= 128; panels *= 2) {
        double acc = 0.0;
        for (int p = 0; p < panels; ++p) {
            double a = hi * static_cast<double>(p) / panels;
            double b = hi * static_cast<double>(p + 1) / panels;
            double mid = 0.5 * (a + b), half = 0.5 * (b - a);
            for (size_t q = 0; q < xs.size(); ++q) {
                double v = f(mid + half * xs[q]);
                acc += half * ws[q] * v * v;
            }
        }
        double norm = std::sqrt(acc);
        if (prev_norm >= 0.0 && std::abs(norm - prev_norm) < 1e-12 * std::max(1.0, norm))
            return norm;
        prev_norm = norm;
    }
    std::ostringstream os;
    os << "quadrature failed to settle to 1e-12; last estimate " << prev_norm;
    throw std::runtime_error(os.str());
}

}  // namespace irkwl::detail
