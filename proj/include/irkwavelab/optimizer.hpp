#pragma once
// Weighted phase-error minimization over the reduced family parameter and
// the constrained tableau solves that turn a parameter value into concrete
// coefficients.
#include <optional>
#include <string>
#include <vector>

#include "irkwavelab/butcher.hpp"
#include "irkwavelab/spectral.hpp"

namespace irkwl {

enum class Family { TwoStage, ThreeStage };

// Objective: L2[0,pi] norm of (sigma - arg(param, sigma)) * exp(-alpha sigma^2).
// asymptotic = true models the alpha -> infinity limit (handled analytically).
struct WeightedObjective {
    Family family = Family::TwoStage;
    double alpha = 0.0;
    bool asymptotic = false;
};

double weighted_phase_norm(const WeightedObjective& obj, double param);

// Minimizing parameter: golden-section plus parabolic refinement on the
// bracket [-0.2, 0] (two-stage Y) or [0, 0.2] (three-stage X), final
// uncertainty <= 1e-10. Asymptotic objectives return the exact analytic
// limits -1/12 and 1/10 (zeros of the leading phase-series coefficient).
// Throws std::runtime_error when no interior minimum exists in the bracket.
double minimize_param(const WeightedObjective& obj);

struct AlphaSweepPoint {
    double alpha = 0.0;
    double param_min = 0.0;
    bool ok = true;
    std::string error;  // bracket failures reported per point, sweep continues
};
std::vector<AlphaSweepPoint> alpha_sweep(Family family, const std::vector<double>& alphas);

// One closure equation in normal form sum_i coeff_i * var_i = rhs over the
// variables b1..bR, a11..aRR.
struct LinearClosure {
    std::vector<std::pair<std::string, double>> terms;
    double rhs = 0.0;
    std::string source;  // original text
};

// Parsed closure set. Grammar (one constraint per line):
//   <linexpr> = <linexpr>        e.g.  b1 = b2, a12 = 2*a22, a13 + a31 = 5/18
//   order >= 3                   (two-stage: adds the two order-3 conditions)
// Identifiers: b1..b3, a11..a33; constants are integers or rationals p/q.
struct ConstraintSet {
    Family family = Family::TwoStage;
    bool order_bump = false;  // "order >= 3"
    std::vector<LinearClosure> closures;

    static ConstraintSet parse(const std::string& text, Family family);
    static ConstraintSet parse_lines(const std::vector<std::string>& lines, Family family);
};

// Solve the family system: base equations (order conditions + trace(A) = 1/2
// + parameter definition) plus the closures. Damped Gauss-Newton with exact
// Jacobian, seeded from 64 quasi-random restarts (plus near_hint when given).
// Among converged roots the tie-break prefers the one nearest to near_hint;
// without a hint it prefers roots with all |coefficients| <= 3 and smallest
// max |a_rs|. Residuals of the returned tableau are <= 1e-12 (two-stage) /
// 1e-11 (three-stage); throws std::runtime_error with the best residual
// achieved when nothing converges.
Tableau solve_two_stage(double Y, const ConstraintSet& closures,
                        const Tableau* near_hint = nullptr);
Tableau solve_three_stage(double X, const ConstraintSet& closures,
                          const Tableau* near_hint = nullptr);

// Residual vector of the defining system at a tableau (diagnostics/tests).
std::vector<double> family_residuals(const Tableau& tab, double param,
                                     const ConstraintSet& closures);

// Analysis summary used by `schemes list` / `analyze`.
struct VerifyReport {
    std::string name;
    int stages = 0;
    int classical_order = 0;
    DissipativeOrder dissipative;
    int dispersive = 0;
    double phi_norm = 0.0;
    double a_norm = 0.0;
    std::optional<double> Y;
    std::optional<double> X;
};
VerifyReport verify_scheme(const Tableau& tab);
std::string report_to_json(const VerifyReport& r);

}  // namespace irkwl
