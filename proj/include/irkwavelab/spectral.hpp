#pragma once
// Amplification factor on the oscillatory test equation u' = i*lambda*u and
// the dissipation / dispersion error machinery built on it.
#include <complex>
#include <iosfwd>
#include <string>
#include <vector>

#include "irkwavelab/butcher.hpp"

namespace irkwl {

using cplx = std::complex<double>;

// Thrown when det(I - i*sigma*A) vanishes (relative threshold 1e-14).
struct SingularStageMatrix : std::runtime_error {
    double sigma;
    explicit SingularStageMatrix(double s);
};

// G_N(sigma) = 1 + i*sigma * b^T (I - i*sigma*A)^{-1} 1.
cplx amplification(const Tableau& tab, double sigma);

// Sampled spectral data on a uniform sigma grid over [0, pi].
// phase is the continuous (unwrapped) argument with phase(0) = 0;
// a_err = 1 - |G|; phi_err = sigma - phase.
struct SpectralCurve {
    std::vector<double> sigma;
    std::vector<cplx> g;
    std::vector<double> amplitude;
    std::vector<double> phase;
    std::vector<double> a_err;
    std::vector<double> phi_err;

    void write_csv(std::ostream& os) const;  // header: sigma,re_g,im_g,...
};

SpectralCurve sample_curve(const Tableau& tab, int n_samples);

// Unwrapped arg G_N at a single sigma >= 0, marched from 0 so the branch is
// continuous (handles sigma beyond pi; used by velocity maps).
double unwrapped_phase(const Tableau& tab, double sigma);

// L2 norms over [0, pi] of (1 - |G|) and (sigma - arg G). Composite
// Gauss-Legendre quadrature, refined until two successive levels agree to
// 1e-12 (throws std::runtime_error with the achieved estimate otherwise).
double dissipation_norm(const Tableau& tab);
double dispersion_norm(const Tableau& tab);
// Same integrand over [0, hi]; used to reproduce reference values whose
// published integration limit differs in the last digit of pi.
double dispersion_norm_upto(const Tableau& tab, double hi);

// Empirical orders: slope fit of log|err| vs log sigma. The fit window is
// chosen adaptively inside [1e-4, pi/2]: samples with |err| in
// [1e-12, 1e-1] (order >= 4 schemes put the nominal [1e-4, 1e-2] window
// below double-precision noise). Dissipative order reports infinite when
// the scheme is non-dissipative to 1e-13 over the window.
struct DissipativeOrder {
    bool infinite = false;
    int p = 0;
};
int dispersive_order(const Tableau& tab);
DissipativeOrder dissipative_order(const Tableau& tab);

// Closed-form unwrapped phase of the reduced one-parameter families:
// two-stage with Y = a12 a21 - a11 a22, three-stage with X = sum of the
// principal 2x2 minors of A (both on the zero-dissipation manifold with
// trace(A) = 1/2). Continuous in sigma, equal to 0 at sigma = 0.
double arg_two_stage(double Y, double sigma);
double arg_three_stage(double X, double sigma);

// Cancellation-free phase errors sigma - arg(...): accurate in the
// sigma -> 0 limit where the direct difference loses all digits.
double phase_error_two_stage(double Y, double sigma);
double phase_error_three_stage(double X, double sigma);

// Family parameters of a tableau.
double param_Y(const Tableau& tab);  // requires R == 2
double param_X(const Tableau& tab);  // requires R == 3

// Smallest sigma in (0, pi) where |phi_A| = |phi_B|, located by scanning a
// fine grid and bisecting. When both tableaux lie on a reduced family
// manifold (trace 1/2, R = 3 determinant tied to X) the closed-form phases
// are used and the scan starts at 1e-4; otherwise phases come from G_N
// directly and sigma below 0.003 is excluded (both phase errors vanish at 0
// and the sign of their difference is roundoff noise there).
// Precondition: both tableaux have |G| = 1 within 1e-8 on [0, pi].
struct CrossoverResult {
    bool found = false;
    double sigma = 0.0;
};
CrossoverResult crossover(const Tableau& a, const Tableau& b);

}  // namespace irkwl
