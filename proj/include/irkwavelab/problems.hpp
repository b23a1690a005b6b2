#pragma once
// The six benchmark problems: semi-discrete builders, exact solutions, and
// error metrics.
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "irkwavelab/spatial.hpp"
#include "irkwavelab/timeloop.hpp"

namespace irkwl {

// ---- Problem 1: oscillatory test system u' = [[0,-l],[l,0]] u, l = 10 ----
SemiDiscreteSystem problem1_system(double lambda = 10.0);
// || u_num - u_exact ||_2 at t* = 0.768 (common multiple of the table dts,
// near a maximum of the first component).
double run_problem1(const std::string& scheme, double dt, double t_star = 0.768);

// ---- Problem 2: forced oscillator u'' = -k^2 u + (k^2 - w^2) sin(w t) ----
SemiDiscreteSystem problem2_system(double omega = 10.0, double k = 15.0);
// |u_1 - sin(w t*)| at t* = 0.768.
double run_problem2(const std::string& scheme, double dt, double t_star = 0.768);

// ---- Problem 3: 1D wave packet, u_t + u_x = 0, periodic [0, 30] ----------
// u0 = exp(-(x-5)^2/2) cos(k (x-5)), h = 0.01, Lele6 periodic; dt = N_c h.
struct Problem3Result {
    double rms_error = 0.0;   // sqrt(mean((u - exact)^2)) at t_end
    double t_end = 0.0;       // t adjusted so t/dt is an integer
    long steps = 0;
    std::vector<double> u;    // final field (for snapshot outputs)
};
Problem3Result run_problem3(const std::string& scheme, double nc, double k = 4.0,
                            double t_end = 20.0, int n = 3000, double h = 0.01);

// ---- Problem 4: two-wave packet on [0, 600], closed Lele6, Dirichlet -----
// u0 = exp(-(x-90)^2/400) [cos(2 pi 0.125 (x-90)) + cos(2 pi 0.0625 (x-90))],
// dx = 0.5, t = 300, c = 1; dt = N_c dx. RMS error vs exact transport.
double run_problem4(const std::string& scheme, double nc);

// ---- Problem 5: conservative inviscid Burgers, ramp initial data ---------
// u_t + (u^2/2)_x = 0 on [0, 5], dx = 0.005, Lele6 closed, ends pinned to
// the inflow/outflow values, dt = N_c dx / max|u0|, run to t = 0.9.
struct Problem5Result {
    double midpoint = 0.0;        // x where u crosses 1/2 (steepened front)
    double exact_midpoint = 0.0;  // characteristics: 2.5 - 0.5 (1 - t)
    double max_err_location = 0.0;
    double overshoot = 0.0;       // max(u) - 1
    double undershoot = 0.0;      // min(u)
    double l1_error_outside = 0.0;  // L1 error away from the +-0.05 window
    std::vector<double> u;
};
Problem5Result run_problem5(const std::string& scheme, double nc = 1.0,
                            double t_end = 0.9, double dx = 0.005);
// Exact solution by characteristics at time t < 1 (ramp steepens, shock at t=1).
double problem5_exact(double x, double t);

// ---- Problem 6: 2D convection u_t + 0.5 u_x + 0.5 u_y = 0, periodic ------
// u0 = exp(-((x-xm)^2+(y-ym)^2)/b) sin(2 pi x + 2 pi y), dx = dy = 0.1.
// Two-stage configuration: FDo13p, b = 0.2, t = 3.0; three-stage: FDs13p,
// b = 20, t = 7.2. Stage systems solved matrix-free (CGS). The "semidiscrete"
// reference advances the spatial semi-discretization exactly in time
// (isolates the time-integration error for convergence-order studies).
struct Problem6Config {
    double domain = 60.0;  // square side; grid n = domain/0.1 unique nodes
    double xm = 30.0, ym = 30.0;
    double b = 0.2;
    double t_end = 3.0;
    OperatorKind op = OperatorKind::FDo13p;
    double kx = 2 * 3.14159265358979323846, ky = 2 * 3.14159265358979323846;
};
Problem6Config problem6_two_stage(double domain = 60.0);
Problem6Config problem6_three_stage(double domain = 60.0);
struct Problem6Result {
    double rms_vs_transport = 0.0;     // vs exact PDE solution (rolled field)
    double rms_vs_semidiscrete = 0.0;  // vs exact-in-time semi-discrete field
    long steps = 0;
    long krylov_iterations = 0;
};
Problem6Result run_problem6(const std::string& scheme, double nc, const Problem6Config& cfg);

// Ranking helper: index of the smallest value (used for ordinal winner checks).
int argmin_index(const std::vector<double>& v);

}  // namespace irkwl
