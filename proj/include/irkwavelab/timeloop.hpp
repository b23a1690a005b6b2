#pragma once
// Time marching of semi-discrete systems with implicit Runge-Kutta tableaux:
// exact stage solves on linear systems, Newton iteration otherwise.
#include <complex>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "irkwavelab/butcher.hpp"
#include "irkwavelab/spatial.hpp"

namespace irkwl {

struct StepReport {
    long steps = 0;
    std::vector<int> newton_iters;   // per step (nonlinear path only)
    double max_stage_residual = 0.0;  // residual of the accepted stage values
    long krylov_iterations = 0;
    double wall_seconds = 0.0;
};

enum class StageSolverKind { Direct, Krylov };

struct IrkOptions {
    double newton_tol = 1e-12;  // absolute inf-norm of the stage residual
    int newton_max_iters = 50;
    StageSolverKind solver = StageSolverKind::Direct;
    double krylov_tol = 1e-12;
    int krylov_max_iters = 10000;
};

// Backend that solves the stacked stage equations for one step. Instances
// may cache factorizations/multipliers keyed by (tableau, dt); access is
// single-threaded per integration.
class StageBackend;

// Semi-discrete system u' = rhs(t, u). The linear flag declares
// rhs(t, u) = L u + f(t) with constant L; integrate() spot-checks it by
// superposition on random vectors. jac_apply(t, u, v, out) applies the
// Jacobian of rhs at (t, u) to v (used by the generic Newton path and the
// Krylov solver). exact(t), when set, enables error reporting.
struct SemiDiscreteSystem {
    int n = 0;
    bool linear = false;
    std::function<void(double, const double*, double*)> rhs;
    std::function<void(double, const double*, const double*, double*)> jac_apply;
    std::function<std::vector<double>(double)> exact;
    std::shared_ptr<StageBackend> backend;  // optional structured direct solver
};

// ----- structured backends ----------------------------------------------

// Dense constant L (small ODE systems), rhs = L u + g(t).
std::shared_ptr<StageBackend> make_dense_linear_backend(
    int n, std::vector<double> L_rowmajor,
    std::function<void(double, double*)> g = {});

// Circulant constant L given by its eigenvalues on the FFT basis
// (periodic uniform-grid discretizations); one FFT pair per step.
std::shared_ptr<StageBackend> make_circulant_backend(
    std::vector<std::complex<double>> eigenvalues);

// Linear banded "mass form": M1 u' = W u with banded M1 (may be empty =
// identity) and banded W; stacked node-major stage system solved by LAPACK
// banded LU, factored once per (tableau, dt).
std::shared_ptr<StageBackend> make_banded_linear_backend(BandedMatrix M1, BandedMatrix W);

// Nonlinear conservative flux in mass form: M1 u' = W flux(u) with banded
// Jacobian blocks; full-Newton stage solves with one halved-step fallback.
std::shared_ptr<StageBackend> make_banded_flux_backend(
    BandedMatrix M1, BandedMatrix W,
    std::function<double(double)> flux, std::function<double(double)> dflux);

// Matrix-free Krylov (CGS with diagonal preconditioning) for linear systems
// whose action is only available as a function (2D operators).
std::shared_ptr<StageBackend> make_krylov_backend(
    std::function<void(const double*, double*)> L_apply, double diag_of_L);

// ----- stepping ----------------------------------------------------------

// One step u -> u + dt sum_r b_r F_r with stage slopes from the backend
// (direct) or generic dense/Newton fallbacks. Throws std::runtime_error on
// Newton divergence or a singular stacked system.
std::vector<double> irk_step(const SemiDiscreteSystem& sys, const Tableau& tab,
                             double t, const std::vector<double>& u, double dt,
                             const IrkOptions& opts = {}, StepReport* report = nullptr);

using Recorder = std::function<void(double, const std::vector<double>&)>;

// Repeated irk_step from t0 to t_end. (t_end - t0)/dt must be within one ULP
// of an integer (no partial final steps). recorder, when set, is invoked
// after every step with (t, state).
struct IntegrateResult {
    std::vector<double> u;
    StepReport report;
};
IntegrateResult integrate(const SemiDiscreteSystem& sys, const Tableau& tab,
                          const std::vector<double>& u0, double t0, double t_end,
                          double dt, const Recorder& recorder = {},
                          const IrkOptions& opts = {});

// Error at t_end per dt (L2 norm against sys.exact) and pairwise rates:
// rate_i = log2(e_{i+1}/e_i) / log2(dt_{i+1}/dt_i) compares entry i with the
// next one (the convention used by convergence tables); the last entry and
// equal consecutive dts get rate 0.
struct ConvergencePoint {
    double dt = 0.0;
    double error = 0.0;
    double rate = 0.0;
};
std::vector<ConvergencePoint> convergence_study(const SemiDiscreteSystem& sys,
                                                const Tableau& tab,
                                                const std::vector<double>& u0,
                                                double t0, double t_end,
                                                const std::vector<double>& dts,
                                                const IrkOptions& opts = {});

}  // namespace irkwl
