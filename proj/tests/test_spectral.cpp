// Amplification factor and dissipation/dispersion machinery: backward Euler
// against its closed form, unitarity of the registry schemes, the reduced
// family phases against the generic unwrapped argument, small-sigma fidelity
// of the cancellation-free phase errors, empirical order fits, and crossover
// locations against published reference values.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "irkwavelab/spectral.hpp"

using namespace irkwl;

namespace {
constexpr double pi = 3.14159265358979323846;
}

TEST_CASE("backward Euler amplification matches 1/(1 - i sigma)") {
    const Tableau& be = builtin_scheme("BE");
    for (double s : {0.0, 0.1, 0.7, 2.5, 3.1}) {
        const cplx g = amplification(be, s);
        const cplx ref = 1.0 / cplx(1.0, -s);
        CHECK(std::abs(g - ref) < 1e-14);
    }
}

TEST_CASE("singular stage matrix is reported with the offending sigma") {
    // A = [[0, 1], [-1, 0]] has eigenvalues +-i, so I - i sigma A is singular
    // exactly at sigma = 1.
    Tableau tab;
    tab.name = "rotor";
    tab.R = 2;
    tab.A = {0.0, 1.0, -1.0, 0.0};
    tab.b = {0.5, 0.5};
    tab.c = {1.0, -1.0};
    tab.validate();
    CHECK_NOTHROW(amplification(tab, 0.5));
    CHECK_THROWS_AS(amplification(tab, 1.0), SingularStageMatrix);
    try {
        amplification(tab, 1.0);
    } catch (const SingularStageMatrix& e) {
        CHECK(e.sigma == 1.0);
    }
}

TEST_CASE("sampled curve is internally consistent") {
    const SpectralCurve curve = sample_curve(builtin_scheme("S3B1"), 65);
    REQUIRE(curve.sigma.size() == 65);
    CHECK(curve.sigma.front() == 0.0);
    CHECK(curve.sigma.back() == doctest::Approx(pi).epsilon(1e-14));
    CHECK(std::abs(curve.g.front() - 1.0) < 1e-14);
    CHECK(curve.phase.front() == 0.0);
    for (size_t k = 0; k < curve.sigma.size(); ++k) {
        CHECK(curve.amplitude[k] == doctest::Approx(std::abs(curve.g[k])).epsilon(1e-14));
        CHECK(curve.a_err[k] == doctest::Approx(1.0 - curve.amplitude[k]).epsilon(1e-14));
        CHECK(curve.phi_err[k] ==
              doctest::Approx(curve.sigma[k] - curve.phase[k]).epsilon(1e-12));
        if (k > 0) CHECK(std::abs(curve.phase[k] - curve.phase[k - 1]) < 0.5);  // unwrapped
    }
    std::ostringstream os;
    curve.write_csv(os);
    CHECK(os.str().substr(0, 5) == "sigma");
}

TEST_CASE("registry schemes are non-dissipative to roundoff") {
    for (const auto& name : registry_names()) {
        if (name == "BE" || name == "FE") continue;
        const Tableau& tab = builtin_scheme(name);
        for (double s : {0.3, 1.2, 2.9}) {
            INFO(name, " sigma ", s);
            CHECK(std::abs(1.0 - std::abs(amplification(tab, s))) < 1e-12);
        }
    }
}

TEST_CASE("closed family phases equal the generic unwrapped argument") {
    for (const char* name : {"S2A1", "S2B2", "S2C3", "S2D1"}) {
        const Tableau& tab = builtin_scheme(name);
        const double Y = param_Y(tab);
        for (int i = 1; i <= 30; ++i) {
            const double s = pi * i / 30.0;
            INFO(name, " sigma ", s);
            CHECK(std::abs(arg_two_stage(Y, s) - unwrapped_phase(tab, s)) < 1e-8);
        }
    }
    for (const char* name : {"S3A1", "S3C2", "S3D1", "S3D2", "IRK36"}) {
        const Tableau& tab = builtin_scheme(name);
        const double X = param_X(tab);
        for (int i = 1; i <= 30; ++i) {
            const double s = pi * i / 30.0;
            INFO(name, " sigma ", s);
            CHECK(std::abs(arg_three_stage(X, s) - unwrapped_phase(tab, s)) < 1e-8);
        }
    }
}

TEST_CASE("three-stage phase stays on the continuous branch") {
    // For X > 1/12 + 1/pi^2 the numerator of the half-angle crosses zero
    // inside (0, pi]; the unwrapped phase must pass through that point
    // without a 2 pi sheet jump. X = 0.2 is the worst case the optimizer
    // bracket can reach.
    const double X = 0.2;
    const double sc = 1.0 / std::sqrt(X - 1.0 / 12.0);
    REQUIRE(sc < pi);
    CHECK(std::abs(arg_three_stage(X, sc + 1e-6) - arg_three_stage(X, sc - 1e-6)) < 1e-4);
    double prev = arg_three_stage(X, 1e-3);
    for (int i = 1; i <= 2000; ++i) {
        const double s = pi * i / 2000.0;
        const double cur = arg_three_stage(X, s);
        CHECK(std::abs(cur - prev) < 0.02);
        prev = cur;
    }
}

TEST_CASE("phase errors keep full relative accuracy at tiny sigma") {
    // Leading coefficients of the family phase errors:
    //   two-stage   phi ~ (Y + 1/12) sigma^3
    //   three-stage phi ~ ((1 - 10 X)/120) sigma^5
    // The direct difference sigma - arg loses every digit down here, so this
    // exercises the series branch, including the sign.
    const double Y = param_Y(builtin_scheme("S2A1"));
    const double c3 = Y + 1.0 / 12.0;
    for (double s : {1e-4, 1e-3, 1e-2}) {
        const double ratio = phase_error_two_stage(Y, s) / (c3 * s * s * s);
        CHECK(ratio == doctest::Approx(1.0).epsilon(1e-3));
    }
    const double X = param_X(builtin_scheme("S3C1"));
    const double c5 = (1.0 - 10.0 * X) / 120.0;
    for (double s : {1e-4, 1e-3, 3e-3}) {
        const double ratio = phase_error_three_stage(X, s) / (c5 * std::pow(s, 5));
        CHECK(ratio == doctest::Approx(1.0).epsilon(1e-2));
    }
}

TEST_CASE("dispersion norm reproduces the published two-stage optimum") {
    CHECK(dispersion_norm(builtin_scheme("S2A1")) == doctest::Approx(4.238151e-2).epsilon(2e-5));
    // The [0, hi] variant degenerates to the [0, pi] norm at hi = pi.
    const Tableau& s3 = builtin_scheme("S3B1");
    CHECK(std::abs(dispersion_norm_upto(s3, pi) - dispersion_norm(s3)) < 1e-11);
    CHECK(dispersion_norm_upto(s3, 1.0) < dispersion_norm_upto(s3, 2.0));
    // Unitary schemes have zero dissipation norm.
    CHECK(dissipation_norm(builtin_scheme("IRK36")) < 1e-12);
    CHECK(dissipation_norm(builtin_scheme("BE")) > 0.1);
}

TEST_CASE("empirical dissipative and dispersive orders") {
    CHECK(dispersive_order(builtin_scheme("S2A1")) == 2);
    CHECK(dispersive_order(builtin_scheme("S2B1")) == 2);
    CHECK(dispersive_order(builtin_scheme("IRK24")) == 4);
    CHECK(dispersive_order(builtin_scheme("S3A1")) == 4);
    CHECK(dispersive_order(builtin_scheme("IRK36")) == 6);

    CHECK(dissipative_order(builtin_scheme("S2A1")).infinite);
    CHECK(dissipative_order(builtin_scheme("IRK36")).infinite);
    const DissipativeOrder be = dissipative_order(builtin_scheme("BE"));
    CHECK_FALSE(be.infinite);
    CHECK(be.p == 1);
}

TEST_CASE("crossover locations match published reference values") {
    const auto cross = [](const char* a, const char* b) {
        return crossover(builtin_scheme(a), builtin_scheme(b));
    };
    CrossoverResult r = cross("S2A1", "S2D1");
    REQUIRE(r.found);
    CHECK(r.sigma == doctest::Approx(1.9795).epsilon(2e-3));
    r = cross("S2C1", "S2D1");
    REQUIRE(r.found);
    CHECK(r.sigma == doctest::Approx(0.2335).epsilon(2e-3));
    r = cross("S3A1", "S3D1");
    REQUIRE(r.found);
    CHECK(r.sigma == doctest::Approx(2.0726).epsilon(2e-3));
    r = cross("S3B1", "S3D1");
    REQUIRE(r.found);
    CHECK(r.sigma == doctest::Approx(0.5842).epsilon(2e-3));
    r = cross("S3C1", "S3D1");
    REQUIRE(r.found);
    CHECK(r.sigma == doctest::Approx(0.2929).epsilon(2e-3));

    // Identical phase curves never cross.
    CHECK_FALSE(cross("S2A1", "S2A1").found);
    // Dissipative schemes are outside the contract.
    CHECK_THROWS_AS(cross("BE", "S2A1"), std::invalid_argument);
}
