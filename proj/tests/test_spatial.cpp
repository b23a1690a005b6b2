// Spatial operators and velocity maps: exactness on low-degree data (the
// closed-boundary rows included), interior convergence order, Fourier symbols
// against the equivalent-wavenumber identity, map limits, and the q-wave
// thresholds against published reference values.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "irkwavelab/spatial.hpp"

using namespace irkwl;

namespace {

constexpr double pi = 3.14159265358979323846;

std::vector<double> deriv(const SpatialOperator& op, const std::vector<double>& u) {
    std::vector<double> du(u.size());
    op.derivative(u.data(), du.data());
    return du;
}

// Max nodal error of d/dx sin(k x) on a periodic unit-spacing-independent grid.
double periodic_sine_error(OperatorKind kind, int n, double k) {
    const double h = 2.0 * pi / n;
    SpatialOperator op = build_operator(kind, n, h, BoundaryKind::Periodic);
    std::vector<double> u(static_cast<size_t>(n));
    for (int j = 0; j < n; ++j) u[static_cast<size_t>(j)] = std::sin(k * h * j);
    const std::vector<double> du = deriv(op, u);
    double err = 0.0;
    for (int j = 0; j < n; ++j)
        err = std::max(err, std::abs(du[static_cast<size_t>(j)] - k * std::cos(k * h * j)));
    return err;
}

}  // namespace

TEST_CASE("operator kind names round-trip") {
    for (OperatorKind k : {OperatorKind::Lele6, OperatorKind::CD6, OperatorKind::FDs13p,
                           OperatorKind::FDo13p})
        CHECK(operator_kind_from_string(to_string(k)) == k);
    CHECK_THROWS_AS(operator_kind_from_string("UW7"), std::invalid_argument);
}

TEST_CASE("derivative of constants and linears is exact") {
    // Constants: every row sum of the effective stencil must vanish — on the
    // closed operator this includes the one-sided and Pade boundary rows and
    // the interior rows adjacent to them.
    for (BoundaryKind bk : {BoundaryKind::Periodic, BoundaryKind::Closed}) {
        const SpatialOperator op = build_operator(OperatorKind::Lele6, 64, 0.1, bk);
        const std::vector<double> du = deriv(op, std::vector<double>(64, 1.0));
        for (double d : du) CHECK(std::abs(d) < 1e-11);
    }
    // Linears on the closed operator (the third-order closure differentiates
    // polynomials up to degree 3 exactly; periodic wrap would break linearity).
    const SpatialOperator op = build_operator(OperatorKind::Lele6, 50, 0.02, BoundaryKind::Closed);
    std::vector<double> u(50);
    for (int j = 0; j < 50; ++j) u[static_cast<size_t>(j)] = -1.7 + 0.4 * (0.02 * j);
    const std::vector<double> du = deriv(op, u);
    for (double d : du) CHECK(d == doctest::Approx(0.4).epsilon(1e-9));
}

TEST_CASE("interior convergence orders") {
    // Lele6 and CD6 are formally sixth order; the 13-point explicit kinds are
    // fourth order (optimized for resolution rather than formal order).
    for (auto [kind, order] : {std::pair<OperatorKind, double>{OperatorKind::Lele6, 6.0},
                               {OperatorKind::CD6, 6.0},
                               {OperatorKind::FDs13p, 4.0}}) {
        const double e1 = periodic_sine_error(kind, 24, 3.0);
        const double e2 = periodic_sine_error(kind, 48, 3.0);
        const double slope = std::log2(e1 / e2);
        INFO(to_string(kind), " slope ", slope);
        CHECK(slope > order - 0.4);
    }
    // Closed boundaries cost three orders globally in the max norm but must
    // still converge at no worse than third order.
    const auto closed_err = [](int n) {
        const double h = 1.0 / (n - 1);
        const SpatialOperator op = build_operator(OperatorKind::Lele6, n, h, BoundaryKind::Closed);
        std::vector<double> u(static_cast<size_t>(n));
        for (int j = 0; j < n; ++j) u[static_cast<size_t>(j)] = std::exp(h * j);
        const std::vector<double> du = deriv(op, u);
        double err = 0.0;
        for (int j = 0; j < n; ++j)
            err = std::max(err, std::abs(du[static_cast<size_t>(j)] - std::exp(h * j)));
        return err;
    };
    const double slope = std::log2(closed_err(51) / closed_err(101));
    CHECK(slope > 2.7);
}

TEST_CASE("symbol equals the equivalent wavenumber on periodic grids") {
    const int n = 128;
    for (OperatorKind kind : {OperatorKind::Lele6, OperatorKind::CD6, OperatorKind::FDs13p,
                              OperatorKind::FDo13p}) {
        const SpatialOperator op = build_operator(kind, n, 1.0, BoundaryKind::Periodic);
        // Wavenumbers commensurate with the ring (theta = 2 pi m / n), so the
        // plane wave is exactly periodic and the wrap seam is invisible.
        for (int m : {6, 22, 49}) {
            const double theta = 2.0 * pi * m / n;
            const double sym = operator_symbol(kind, theta);
            for (int j : {0, 17, n / 2}) {
                const std::complex<double> ke = keq(op, theta, j);
                INFO(to_string(kind), " theta ", theta, " node ", j);
                CHECK(std::abs(ke.real() - sym) < 1e-12);
                CHECK(std::abs(ke.imag()) < 1e-12);
            }
        }
        // Long waves: k_eq -> k.
        CHECK(operator_symbol(kind, 0.01) == doctest::Approx(0.01).epsilon(1e-6));
        // Odd-even decoupling: the antisymmetric stencil vanishes at theta = pi.
        CHECK(std::abs(operator_symbol(kind, pi)) < 1e-14);
    }
}

TEST_CASE("CD6 symbol matches its trigonometric closed form") {
    for (double theta : {0.2, 0.9, 1.7, 2.8}) {
        const double ref = (45.0 * std::sin(theta) - 9.0 * std::sin(2.0 * theta) +
                            std::sin(3.0 * theta)) / 30.0;
        CHECK(operator_symbol(OperatorKind::CD6, theta) == doctest::Approx(ref).epsilon(1e-14));
    }
}

TEST_CASE("velocity map tends to unit velocities for resolved waves") {
    const SpatialOperator op = build_operator(OperatorKind::CD6, 64, 1.0, BoundaryKind::Periodic);
    const VelocityMap map =
        velocity_map(op, builtin_scheme("IRK24"), {0.25, 0.5}, {0.05, 0.1}, 32);
    REQUIRE(map.nc_grid.size() == 2);
    REQUIRE(map.kh_grid.size() == 2);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            REQUIRE(map.cell_valid(i, j));
            CHECK(map.at_vp(i, j) == doctest::Approx(1.0).epsilon(2e-3));
            CHECK(map.at_vg(i, j) == doctest::Approx(1.0).epsilon(2e-3));
        }
}

TEST_CASE("S2D1 and IRK24 produce identical velocity maps") {
    // Both are the two-stage Gauss-Legendre member, entered independently in
    // the registry; their maps must agree to solver precision.
    const SpatialOperator op = build_operator(OperatorKind::Lele6, 64, 1.0, BoundaryKind::Periodic);
    std::vector<double> khs;
    for (int j = 0; j < 9; ++j) khs.push_back(0.1 + j * 0.3);
    const VelocityMap a = velocity_map(op, builtin_scheme("S2D1"), {0.5, 1.0}, khs, 32);
    const VelocityMap b = velocity_map(op, builtin_scheme("IRK24"), {0.5, 1.0}, khs, 32);
    for (size_t k = 0; k < a.vp.size(); ++k) {
        CHECK(std::abs(a.vp[k] - b.vp[k]) < 1e-10);
        CHECK(std::abs(a.vg[k] - b.vg[k]) < 1e-10);
    }
}

TEST_CASE("q-wave thresholds match published reference values") {
    const SpatialOperator lele = build_operator(OperatorKind::Lele6, 501, 1.0, BoundaryKind::Periodic);
    const SpatialOperator cd6 = build_operator(OperatorKind::CD6, 501, 1.0, BoundaryKind::Periodic);
    const Tableau& irk24 = builtin_scheme("IRK24");
    CHECK(qwave_threshold(lele, irk24, 1.0) == doctest::Approx(2.27).epsilon(0.015));
    CHECK(qwave_threshold(cd6, irk24, 1.0) == doctest::Approx(1.94).epsilon(0.015));
    // For a unitary scheme the threshold is a property of the spatial symbol
    // alone, so it cannot move with the CFL number.
    CHECK(std::abs(qwave_threshold(lele, irk24, 0.5) - qwave_threshold(lele, irk24, 1.5)) < 5e-3);
}

TEST_CASE("construction guards") {
    CHECK_THROWS_AS(build_operator(OperatorKind::CD6, 64, 1.0, BoundaryKind::Closed),
                    std::invalid_argument);
    CHECK_THROWS_AS(build_operator(OperatorKind::Lele6, 4, 1.0, BoundaryKind::Closed),
                    std::invalid_argument);
    CHECK_THROWS_AS(build_operator(OperatorKind::FDs13p, 8, 1.0, BoundaryKind::Periodic),
                    std::invalid_argument);
}
