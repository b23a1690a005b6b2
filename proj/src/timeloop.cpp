#include "irkwavelab/timeloop.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <limits>
#include <mutex>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>
#include <fftw3.h>
#include <lapacke.h>

#include "detail/fftw_guard.hpp"

namespace irkwl {

// ----- backend interface ----------------------------------------------------

class StageBackend {
  public:
    virtual ~StageBackend() = default;
    // Advance u by one step of size dt; returns the new state.
    virtual std::vector<double> step(const Tableau& tab, double t,
                                     const std::vector<double>& u, double dt,
                                     const IrkOptions& opts, StepReport* rep) = 0;
};

namespace {

// stability function R(z) = 1 + z b^T (I - z A)^{-1} 1 for complex z
std::complex<double> stability_function(const Tableau& tab, std::complex<double> z) {
    using cd = std::complex<double>;
    const int R = tab.R;
    std::vector<cd> M(static_cast<size_t>(R) * R);
    std::vector<cd> x(static_cast<size_t>(R), cd(1.0, 0.0));
    for (int r = 0; r < R; ++r)
        for (int s = 0; s < R; ++s)
            M[static_cast<size_t>(r) * R + s] =
                (r == s ? cd(1.0, 0.0) : cd(0.0, 0.0)) - z * tab.a(r, s);
    // Gaussian elimination with partial pivoting (R <= 3)
    for (int col = 0; col < R; ++col) {
        int piv = col;
        for (int r = col + 1; r < R; ++r)
            if (std::abs(M[static_cast<size_t>(r) * R + col]) >
                std::abs(M[static_cast<size_t>(piv) * R + col]))
                piv = r;
        if (std::abs(M[static_cast<size_t>(piv) * R + col]) == 0.0)
            throw std::runtime_error("stability function: singular stage matrix");
        if (piv != col) {
            for (int s = col; s < R; ++s)
                std::swap(M[static_cast<size_t>(piv) * R + s], M[static_cast<size_t>(col) * R + s]);
            std::swap(x[static_cast<size_t>(piv)], x[static_cast<size_t>(col)]);
        }
        for (int r = col + 1; r < R; ++r) {
            cd f = M[static_cast<size_t>(r) * R + col] / M[static_cast<size_t>(col) * R + col];
            for (int s = col; s < R; ++s)
                M[static_cast<size_t>(r) * R + s] -= f * M[static_cast<size_t>(col) * R + s];
            x[static_cast<size_t>(r)] -= f * x[static_cast<size_t>(col)];
        }
    }
    for (int r = R - 1; r >= 0; --r) {
        cd acc = x[static_cast<size_t>(r)];
        for (int s = r + 1; s < R; ++s) acc -= M[static_cast<size_t>(r) * R + s] * x[static_cast<size_t>(s)];
        x[static_cast<size_t>(r)] = acc / M[static_cast<size_t>(r) * R + r];
    }
    cd bty(0.0, 0.0);
    for (int r = 0; r < R; ++r) bty += tab.b[static_cast<size_t>(r)] * x[static_cast<size_t>(r)];
    return cd(1.0, 0.0) + z * bty;
}

bool same_tableau(const Tableau& a, const Tableau& b) {
    return a.R == b.R && a.A == b.A && a.b == b.b;
}

// ----- dense linear backend -------------------------------------------------

class DenseLinearBackend final : public StageBackend {
  public:
    DenseLinearBackend(int n, std::vector<double> L, std::function<void(double, double*)> g)
        : n_(n), g_(std::move(g)) {
        L_ = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                      Eigen::RowMajor>>(L.data(), n, n);
    }

    std::vector<double> step(const Tableau& tab, double t, const std::vector<double>& u,
                             double dt, const IrkOptions&, StepReport*) override {
        const int R = tab.R;
        refresh_cache(tab, dt);
        // stacked rhs (stage-major): L u + g(t + c_r dt)
        Eigen::VectorXd um = Eigen::Map<const Eigen::VectorXd>(u.data(), n_);
        Eigen::VectorXd Lu = L_ * um;
        Eigen::VectorXd rhs(static_cast<long>(R) * n_);
        std::vector<double> gbuf(static_cast<size_t>(n_), 0.0);
        for (int r = 0; r < R; ++r) {
            rhs.segment(static_cast<long>(r) * n_, n_) = Lu;
            if (g_) {
                std::fill(gbuf.begin(), gbuf.end(), 0.0);
                g_(t + tab.c[static_cast<size_t>(r)] * dt, gbuf.data());
                for (int i = 0; i < n_; ++i)
                    rhs[static_cast<long>(r) * n_ + i] += gbuf[static_cast<size_t>(i)];
            }
        }
        Eigen::VectorXd F = lu_.solve(rhs);
        std::vector<double> out(u);
        for (int r = 0; r < R; ++r)
            for (int i = 0; i < n_; ++i)
                out[static_cast<size_t>(i)] +=
                    dt * tab.b[static_cast<size_t>(r)] * F[static_cast<long>(r) * n_ + i];
        return out;
    }

  private:
    void refresh_cache(const Tableau& tab, double dt) {
        if (cached_ && dt == cached_dt_ && same_tableau(tab, cached_tab_)) return;
        const int R = tab.R;
        Eigen::MatrixXd S = Eigen::MatrixXd::Identity(static_cast<long>(R) * n_,
                                                      static_cast<long>(R) * n_);
        for (int r = 0; r < R; ++r)
            for (int s = 0; s < R; ++s)
                S.block(static_cast<long>(r) * n_, static_cast<long>(s) * n_, n_, n_) -=
                    dt * tab.a(r, s) * L_;
        lu_.compute(S);
        if (lu_.rcond() < 1e-15)
            throw std::runtime_error("dense linear backend: stage system is singular");
        cached_ = true;
        cached_dt_ = dt;
        cached_tab_ = tab;
    }

    int n_;
    Eigen::MatrixXd L_;
    std::function<void(double, double*)> g_;
    bool cached_ = false;
    double cached_dt_ = 0.0;
    Tableau cached_tab_;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
};

// ----- circulant backend ----------------------------------------------------

std::mutex& fftw_plan_mutex() { return detail::fftw_plan_mutex; }

class CirculantBackend final : public StageBackend {
  public:
    explicit CirculantBackend(std::vector<std::complex<double>> eigenvalues)
        : lambda_(std::move(eigenvalues)), n_(static_cast<int>(lambda_.size())) {
        buf_ = fftw_alloc_complex(static_cast<size_t>(n_));
        std::lock_guard<std::mutex> lock(fftw_plan_mutex());
        fwd_ = fftw_plan_dft_1d(n_, buf_, buf_, FFTW_FORWARD, FFTW_ESTIMATE);
        bwd_ = fftw_plan_dft_1d(n_, buf_, buf_, FFTW_BACKWARD, FFTW_ESTIMATE);
    }
    ~CirculantBackend() override {
        std::lock_guard<std::mutex> lock(fftw_plan_mutex());
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(bwd_);
        fftw_free(buf_);
    }
    CirculantBackend(const CirculantBackend&) = delete;
    CirculantBackend& operator=(const CirculantBackend&) = delete;

    std::vector<double> step(const Tableau& tab, double, const std::vector<double>& u,
                             double dt, const IrkOptions&, StepReport*) override {
        if (static_cast<int>(u.size()) != n_)
            throw std::invalid_argument("circulant backend: state size mismatch");
        refresh_cache(tab, dt);
        for (int i = 0; i < n_; ++i) {
            buf_[i][0] = u[static_cast<size_t>(i)];
            buf_[i][1] = 0.0;
        }
        fftw_execute(fwd_);
        for (int m = 0; m < n_; ++m) {
            std::complex<double> v(buf_[m][0], buf_[m][1]);
            v *= mult_[static_cast<size_t>(m)];
            buf_[m][0] = v.real();
            buf_[m][1] = v.imag();
        }
        fftw_execute(bwd_);
        std::vector<double> out(static_cast<size_t>(n_));
        for (int i = 0; i < n_; ++i) out[static_cast<size_t>(i)] = buf_[i][0] / n_;
        return out;
    }

  private:
    void refresh_cache(const Tableau& tab, double dt) {
        if (!mult_.empty() && dt == cached_dt_ && same_tableau(tab, cached_tab_)) return;
        mult_.resize(static_cast<size_t>(n_));
        for (int m = 0; m < n_; ++m)
            mult_[static_cast<size_t>(m)] = stability_function(tab, dt * lambda_[static_cast<size_t>(m)]);
        cached_dt_ = dt;
        cached_tab_ = tab;
    }

    std::vector<std::complex<double>> lambda_;
    int n_;
    fftw_complex* buf_ = nullptr;
    fftw_plan fwd_ = nullptr, bwd_ = nullptr;
    std::vector<std::complex<double>> mult_;
    double cached_dt_ = 0.0;
    Tableau cached_tab_;
};

// ----- banded helpers -------------------------------------------------------

struct BandedLU {
    int N = 0, kl = 0, ku = 0, ldab = 0;
    std::vector<double> ab;
    std::vector<lapack_int> ipiv;

    void factor() {
        ipiv.assign(static_cast<size_t>(N), 0);
        lapack_int info = LAPACKE_dgbtrf(LAPACK_COL_MAJOR, N, N, kl, ku, ab.data(), ldab,
                                         ipiv.data());
        if (info != 0) {
            std::ostringstream os;
            os << "banded LU factorization failed (info = " << info << ")";
            throw std::runtime_error(os.str());
        }
    }
    void solve(double* b) const {
        lapack_int info = LAPACKE_dgbtrs(LAPACK_COL_MAJOR, 'N', N, kl, ku, 1, ab.data(),
                                         ldab, ipiv.data(), b, N);
        if (info != 0) throw std::runtime_error("banded LU solve failed");
    }
    // zero-initialized storage for a fresh assembly
    void reset(int N_, int kl_, int ku_) {
        N = N_;
        kl = kl_;
        ku = ku_;
        ldab = 2 * kl + ku + 1;
        ab.assign(static_cast<size_t>(ldab) * N, 0.0);
    }
    void add(int row, int col, double v) {
        // dgbtrf layout: A(row, col) at ab[col*ldab + kl + ku + row - col]
        ab[static_cast<size_t>(col) * ldab + static_cast<size_t>(kl + ku + row - col)] += v;
    }
};

int max_abs_offset(const BandedMatrix& M) {
    int m = 0;
    for (int off : M.offsets) m = std::max(m, std::abs(off));
    return m;
}

void banded_or_identity_multiply(const BandedMatrix& M, const double* x, double* y, int n) {
    if (M.n == 0) {
        std::copy(x, x + n, y);
        return;
    }
    M.multiply(x, y);
}

// visit the nonzero entries (i, j, v) of a banded matrix
template <class Fn>
void for_each_entry(const BandedMatrix& M, const Fn& fn) {
    for (size_t d = 0; d < M.offsets.size(); ++d) {
        const int off = M.offsets[d];
        for (int i = 0; i < M.n; ++i) {
            int j = i + off;
            if (j < 0 || j >= M.n) continue;
            fn(i, j, M.band[d][static_cast<size_t>(i)]);
        }
    }
}

// ----- banded linear backend -----------------------------------------------

class BandedLinearBackend final : public StageBackend {
  public:
    BandedLinearBackend(BandedMatrix M1, BandedMatrix W)
        : M1_(std::move(M1)), W_(std::move(W)), n_(W_.n) {
        if (M1_.periodic || W_.periodic)
            throw std::invalid_argument(
                "banded linear backend: periodic wrap breaks bandedness; use the "
                "circulant backend for periodic grids");
        if (M1_.n != 0 && M1_.n != n_)
            throw std::invalid_argument("banded linear backend: M1/W size mismatch");
    }

    std::vector<double> step(const Tableau& tab, double, const std::vector<double>& u,
                             double dt, const IrkOptions&, StepReport*) override {
        const int R = tab.R;
        refresh_cache(tab, dt);
        // node-major stacked rhs: (W u)_i for every stage
        std::vector<double> Wu(static_cast<size_t>(n_));
        W_.multiply(u.data(), Wu.data());
        std::vector<double> z(static_cast<size_t>(n_) * R);
        for (int i = 0; i < n_; ++i)
            for (int r = 0; r < R; ++r)
                z[static_cast<size_t>(i) * R + static_cast<size_t>(r)] = Wu[static_cast<size_t>(i)];
        lu_.solve(z.data());
        std::vector<double> out(u);
        for (int i = 0; i < n_; ++i)
            for (int r = 0; r < R; ++r)
                out[static_cast<size_t>(i)] +=
                    dt * tab.b[static_cast<size_t>(r)] * z[static_cast<size_t>(i) * R + static_cast<size_t>(r)];
        return out;
    }

  private:
    void refresh_cache(const Tableau& tab, double dt) {
        if (cached_ && dt == cached_dt_ && same_tableau(tab, cached_tab_)) return;
        const int R = tab.R;
        const int hw = std::max(max_abs_offset(M1_), max_abs_offset(W_));
        const int klku = hw * R + (R - 1);
        lu_.reset(n_ * R, klku, klku);
        if (M1_.n == 0) {
            for (int i = 0; i < n_; ++i)
                for (int r = 0; r < R; ++r) lu_.add(i * R + r, i * R + r, 1.0);
        } else {
            for_each_entry(M1_, [&](int i, int j, double v) {
                for (int r = 0; r < R; ++r) lu_.add(i * R + r, j * R + r, v);
            });
        }
        for_each_entry(W_, [&](int i, int j, double v) {
            for (int r = 0; r < R; ++r)
                for (int s = 0; s < R; ++s)
                    lu_.add(i * R + r, j * R + s, -dt * tab.a(r, s) * v);
        });
        lu_.factor();
        cached_ = true;
        cached_dt_ = dt;
        cached_tab_ = tab;
    }

    BandedMatrix M1_, W_;
    int n_;
    bool cached_ = false;
    double cached_dt_ = 0.0;
    Tableau cached_tab_;
    BandedLU lu_;
};

// ----- banded flux (Newton) backend ----------------------------------------

class BandedFluxBackend final : public StageBackend {
  public:
    BandedFluxBackend(BandedMatrix M1, BandedMatrix W, std::function<double(double)> flux,
                      std::function<double(double)> dflux)
        : M1_(std::move(M1)), W_(std::move(W)), flux_(std::move(flux)),
          dflux_(std::move(dflux)), n_(W_.n) {
        if (M1_.periodic || W_.periodic)
            throw std::invalid_argument(
                "banded flux backend: periodic wrap breaks bandedness");
        if (M1_.n != 0 && M1_.n != n_)
            throw std::invalid_argument("banded flux backend: M1/W size mismatch");
        if (M1_.n != 0) {
            const int hw = max_abs_offset(M1_);
            mass_lu_.reset(n_, hw, hw);
            for_each_entry(M1_, [&](int i, int j, double v) { mass_lu_.add(i, j, v); });
            mass_lu_.factor();
        }
    }

    std::vector<double> step(const Tableau& tab, double t, const std::vector<double>& u,
                             double dt, const IrkOptions& opts, StepReport* rep) override {
        try {
            return newton_step(tab, u, dt, opts, rep);
        } catch (const std::runtime_error&) {
            // one halved-step retry before giving up
            std::vector<double> mid = newton_step(tab, u, dt / 2.0, opts, rep);
            (void)t;
            return newton_step(tab, mid, dt / 2.0, opts, rep);
        }
    }

  private:
    // rhs(v) = M1^{-1} W flux(v)
    std::vector<double> apply_rhs(const std::vector<double>& v) const {
        std::vector<double> fv(static_cast<size_t>(n_));
        for (int i = 0; i < n_; ++i) fv[static_cast<size_t>(i)] = flux_(v[static_cast<size_t>(i)]);
        std::vector<double> out(static_cast<size_t>(n_));
        W_.multiply(fv.data(), out.data());
        if (M1_.n != 0) mass_lu_.solve(out.data());
        return out;
    }

    std::vector<double> newton_step(const Tableau& tab, const std::vector<double>& u,
                                    double dt, const IrkOptions& opts, StepReport* rep) {
        const int R = tab.R;
        const int N = n_ * R;
        const int hw = std::max(max_abs_offset(M1_), max_abs_offset(W_));
        const int klku = hw * R + (R - 1);

        // stage slopes, node-major; initial guess F_r = rhs(u)
        std::vector<double> F(static_cast<size_t>(N));
        {
            std::vector<double> f0 = apply_rhs(u);
            for (int i = 0; i < n_; ++i)
                for (int r = 0; r < R; ++r)
                    F[static_cast<size_t>(i) * R + static_cast<size_t>(r)] = f0[static_cast<size_t>(i)];
        }

        std::vector<double> v(static_cast<size_t>(n_)), fv(static_cast<size_t>(n_)),
            Wf(static_cast<size_t>(n_)), Mf(static_cast<size_t>(n_)),
            stage(static_cast<size_t>(n_)), resid(static_cast<size_t>(N)),
            vs(static_cast<size_t>(n_) * R);
        double rnorm = std::numeric_limits<double>::infinity();
        int iter = 0;
        for (; iter < opts.newton_max_iters; ++iter) {
            // residual: (M1 F_r - W flux(v_r))_i with v_r = u + dt sum_s a_rs F_s
            rnorm = 0.0;
            for (int r = 0; r < R; ++r) {
                for (int i = 0; i < n_; ++i) {
                    double acc = u[static_cast<size_t>(i)];
                    for (int s = 0; s < R; ++s)
                        acc += dt * tab.a(r, s) * F[static_cast<size_t>(i) * R + static_cast<size_t>(s)];
                    v[static_cast<size_t>(i)] = acc;
                    vs[static_cast<size_t>(i) * R + static_cast<size_t>(r)] = acc;
                }
                for (int i = 0; i < n_; ++i) fv[static_cast<size_t>(i)] = flux_(v[static_cast<size_t>(i)]);
                W_.multiply(fv.data(), Wf.data());
                for (int i = 0; i < n_; ++i) stage[static_cast<size_t>(i)] = F[static_cast<size_t>(i) * R + static_cast<size_t>(r)];
                banded_or_identity_multiply(M1_, stage.data(), Mf.data(), n_);
                for (int i = 0; i < n_; ++i) {
                    double res = Mf[static_cast<size_t>(i)] - Wf[static_cast<size_t>(i)];
                    resid[static_cast<size_t>(i) * R + static_cast<size_t>(r)] = res;
                    rnorm = std::max(rnorm, std::abs(res));
                }
            }
            if (rnorm <= opts.newton_tol) break;

            // Jacobian: M1[i,j] delta_rs - dt a_rs W[i,j] flux'(v_s[j])
            BandedLU J;
            J.reset(N, klku, klku);
            if (M1_.n == 0) {
                for (int i = 0; i < n_; ++i)
                    for (int r = 0; r < R; ++r) J.add(i * R + r, i * R + r, 1.0);
            } else {
                for_each_entry(M1_, [&](int i, int j, double val) {
                    for (int r = 0; r < R; ++r) J.add(i * R + r, j * R + r, val);
                });
            }
            for_each_entry(W_, [&](int i, int j, double val) {
                // d/dF_{j,s} of -W flux(v_r): the flux derivative is taken at
                // the residual's own stage value v_r[j].
                for (int r = 0; r < R; ++r) {
                    double d = dflux_(vs[static_cast<size_t>(j) * R + static_cast<size_t>(r)]);
                    for (int s = 0; s < R; ++s)
                        J.add(i * R + r, j * R + s, -dt * tab.a(r, s) * val * d);
                }
            });
            J.factor();
            J.solve(resid.data());
            for (int k = 0; k < N; ++k) F[static_cast<size_t>(k)] -= resid[static_cast<size_t>(k)];
        }
        if (rnorm > opts.newton_tol) {
            std::ostringstream os;
            os << "stage Newton did not reach tol " << opts.newton_tol << " in "
               << opts.newton_max_iters << " iterations (residual " << rnorm << ")";
            throw std::runtime_error(os.str());
        }
        // Residual of the accepted stage values (not the Newton iterates).
        if (rep) rep->max_stage_residual = std::max(rep->max_stage_residual, rnorm);
        if (rep) rep->newton_iters.push_back(iter);

        std::vector<double> out(u);
        // unew = u + dt sum_r b_r M1^{-1} (W flux(v_r))  ==  u + dt sum b_r F_r
        for (int i = 0; i < n_; ++i)
            for (int r = 0; r < R; ++r)
                out[static_cast<size_t>(i)] +=
                    dt * tab.b[static_cast<size_t>(r)] * F[static_cast<size_t>(i) * R + static_cast<size_t>(r)];
        return out;
    }

    BandedMatrix M1_, W_;
    std::function<double(double)> flux_, dflux_;
    int n_;
    BandedLU mass_lu_;
};

// ----- matrix-free Krylov backend -------------------------------------------

class KrylovBackend final : public StageBackend {
  public:
    KrylovBackend(std::function<void(const double*, double*)> L_apply, double diag)
        : L_(std::move(L_apply)), diag_(diag) {}

    std::vector<double> step(const Tableau& tab, double, const std::vector<double>& u,
                             double dt, const IrkOptions& opts, StepReport* rep) override {
        const int R = tab.R;
        const int n = static_cast<int>(u.size());
        const long N = static_cast<long>(R) * n;

        // stacked operator (stage-major): out_r = F_r - dt sum_s a_rs L F_s
        std::vector<double> Ls(static_cast<size_t>(N));
        auto apply = [&](const std::vector<double>& x, std::vector<double>& y) {
            for (int s = 0; s < R; ++s)
                L_(x.data() + static_cast<long>(s) * n, Ls.data() + static_cast<long>(s) * n);
            for (int r = 0; r < R; ++r)
                for (int i = 0; i < n; ++i) {
                    double acc = x[static_cast<size_t>(r) * n + static_cast<size_t>(i)];
                    for (int s = 0; s < R; ++s)
                        acc -= dt * tab.a(r, s) * Ls[static_cast<size_t>(s) * n + static_cast<size_t>(i)];
                    y[static_cast<size_t>(r) * n + static_cast<size_t>(i)] = acc;
                }
        };
        // diagonal preconditioner from the stage diagonal
        std::vector<double> pinv(static_cast<size_t>(R));
        for (int r = 0; r < R; ++r) {
            double d = 1.0 - dt * tab.a(r, r) * diag_;
            pinv[static_cast<size_t>(r)] = std::abs(d) > 1e-14 ? 1.0 / d : 1.0;
        }
        auto precond = [&](const std::vector<double>& x, std::vector<double>& y) {
            for (int r = 0; r < R; ++r)
                for (int i = 0; i < n; ++i)
                    y[static_cast<size_t>(r) * n + static_cast<size_t>(i)] =
                        pinv[static_cast<size_t>(r)] * x[static_cast<size_t>(r) * n + static_cast<size_t>(i)];
        };

        std::vector<double> b(static_cast<size_t>(N));
        {
            std::vector<double> Lu(static_cast<size_t>(n));
            L_(u.data(), Lu.data());
            for (int r = 0; r < R; ++r)
                std::copy(Lu.begin(), Lu.end(), b.begin() + static_cast<long>(r) * n);
        }

        std::vector<double> F = cgs_solve(apply, precond, b, opts, rep);
        std::vector<double> out(u);
        for (int r = 0; r < R; ++r)
            for (int i = 0; i < n; ++i)
                out[static_cast<size_t>(i)] +=
                    dt * tab.b[static_cast<size_t>(r)] * F[static_cast<size_t>(r) * n + static_cast<size_t>(i)];
        return out;
    }

  private:
    template <class ApplyFn, class PrecondFn>
    static std::vector<double> cgs_solve(const ApplyFn& apply, const PrecondFn& precond,
                                         const std::vector<double>& b, const IrkOptions& opts,
                                         StepReport* rep) {
        const size_t N = b.size();
        auto dot = [](const std::vector<double>& x, const std::vector<double>& y) {
            double acc = 0.0;
            for (size_t i = 0; i < x.size(); ++i) acc += x[i] * y[i];
            return acc;
        };
        auto nrm = [&](const std::vector<double>& x) { return std::sqrt(dot(x, x)); };

        std::vector<double> x = b;  // initial guess: the unscaled rhs
        std::vector<double> r(N), tmp(N);
        apply(x, tmp);
        for (size_t i = 0; i < N; ++i) r[i] = b[i] - tmp[i];
        const double bnorm = std::max(nrm(b), 1e-300);
        std::vector<double> rtilde = r, p(N, 0.0), q(N, 0.0), uvec(N, 0.0), phat(N), vhat(N),
            uhat(N), qhat(N);
        double rho_prev = 0.0;
        for (int iter = 1; iter <= opts.krylov_max_iters; ++iter) {
            if (nrm(r) <= opts.krylov_tol * bnorm) {
                if (rep) rep->krylov_iterations += iter - 1;
                return x;
            }
            double rho = dot(rtilde, r);
            if (rho == 0.0) throw std::runtime_error("CGS breakdown (rho = 0)");
            if (iter == 1) {
                uvec = r;
                p = uvec;
            } else {
                double beta = rho / rho_prev;
                for (size_t i = 0; i < N; ++i) {
                    uvec[i] = r[i] + beta * q[i];
                    p[i] = uvec[i] + beta * (q[i] + beta * p[i]);
                }
            }
            precond(p, phat);
            apply(phat, vhat);
            double denom = dot(rtilde, vhat);
            if (denom == 0.0) throw std::runtime_error("CGS breakdown (rtilde . v = 0)");
            double alpha = rho / denom;
            for (size_t i = 0; i < N; ++i) q[i] = uvec[i] - alpha * vhat[i];
            for (size_t i = 0; i < N; ++i) tmp[i] = uvec[i] + q[i];
            precond(tmp, uhat);
            for (size_t i = 0; i < N; ++i) x[i] += alpha * uhat[i];
            apply(uhat, qhat);
            for (size_t i = 0; i < N; ++i) r[i] -= alpha * qhat[i];
            rho_prev = rho;
        }
        std::ostringstream os;
        os << "CGS did not converge in " << opts.krylov_max_iters << " iterations";
        throw std::runtime_error(os.str());
    }

    std::function<void(const double*, double*)> L_;
    double diag_;
};

}  // namespace

// ----- factories ------------------------------------------------------------

std::shared_ptr<StageBackend> make_dense_linear_backend(int n, std::vector<double> L_rowmajor,
                                                        std::function<void(double, double*)> g) {
    if (static_cast<int>(L_rowmajor.size()) != n * n)
        throw std::invalid_argument("make_dense_linear_backend: L must be n*n row-major");
    return std::make_shared<DenseLinearBackend>(n, std::move(L_rowmajor), std::move(g));
}

std::shared_ptr<StageBackend> make_circulant_backend(
    std::vector<std::complex<double>> eigenvalues) {
    if (eigenvalues.empty())
        throw std::invalid_argument("make_circulant_backend: empty eigenvalue list");
    return std::make_shared<CirculantBackend>(std::move(eigenvalues));
}

std::shared_ptr<StageBackend> make_banded_linear_backend(BandedMatrix M1, BandedMatrix W) {
    return std::make_shared<BandedLinearBackend>(std::move(M1), std::move(W));
}

std::shared_ptr<StageBackend> make_banded_flux_backend(BandedMatrix M1, BandedMatrix W,
                                                       std::function<double(double)> flux,
                                                       std::function<double(double)> dflux) {
    return std::make_shared<BandedFluxBackend>(std::move(M1), std::move(W), std::move(flux),
                                               std::move(dflux));
}

std::shared_ptr<StageBackend> make_krylov_backend(
    std::function<void(const double*, double*)> L_apply, double diag_of_L) {
    return std::make_shared<KrylovBackend>(std::move(L_apply), diag_of_L);
}

// ----- generic fallback paths ------------------------------------------------

namespace {

// dense direct solve of the stacked stage system for declared-linear rhs
std::vector<double> generic_linear_step(const SemiDiscreteSystem& sys, const Tableau& tab,
                                        double t, const std::vector<double>& u, double dt) {
    const int n = sys.n, R = tab.R;
    // recover L and the stage forcing from the affine rhs
    Eigen::MatrixXd L(n, n);
    std::vector<double> e(static_cast<size_t>(n), 0.0), col(static_cast<size_t>(n)),
        f0(static_cast<size_t>(n));
    sys.rhs(t, e.data(), f0.data());  // rhs(t, 0) = f(t)
    for (int j = 0; j < n; ++j) {
        e[static_cast<size_t>(j)] = 1.0;
        sys.rhs(t, e.data(), col.data());
        for (int i = 0; i < n; ++i) L(i, j) = col[static_cast<size_t>(i)] - f0[static_cast<size_t>(i)];
        e[static_cast<size_t>(j)] = 0.0;
    }
    Eigen::MatrixXd S = Eigen::MatrixXd::Identity(static_cast<long>(R) * n,
                                                  static_cast<long>(R) * n);
    for (int r = 0; r < R; ++r)
        for (int s = 0; s < R; ++s)
            S.block(static_cast<long>(r) * n, static_cast<long>(s) * n, n, n) -=
                dt * tab.a(r, s) * L;
    Eigen::VectorXd rhs(static_cast<long>(R) * n);
    Eigen::Map<const Eigen::VectorXd> um(u.data(), n);
    std::vector<double> fr(static_cast<size_t>(n)), zero(static_cast<size_t>(n), 0.0);
    for (int r = 0; r < R; ++r) {
        double tr = t + tab.c[static_cast<size_t>(r)] * dt;
        sys.rhs(tr, zero.data(), fr.data());
        rhs.segment(static_cast<long>(r) * n, n) =
            L * um + Eigen::Map<const Eigen::VectorXd>(fr.data(), n);
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(S);
    Eigen::VectorXd F = lu.solve(rhs);
    if ((S * F - rhs).lpNorm<Eigen::Infinity>() >
        1e-8 * std::max(1.0, rhs.lpNorm<Eigen::Infinity>()))
        throw std::runtime_error("stacked stage system is numerically singular");
    std::vector<double> out(u);
    for (int r = 0; r < R; ++r)
        for (int i = 0; i < n; ++i)
            out[static_cast<size_t>(i)] += dt * tab.b[static_cast<size_t>(r)] * F[static_cast<long>(r) * n + i];
    return out;
}

// dense Newton on the stacked stage slopes for general rhs
std::vector<double> generic_newton_step(const SemiDiscreteSystem& sys, const Tableau& tab,
                                        double t, const std::vector<double>& u, double dt,
                                        const IrkOptions& opts, StepReport* rep) {
    const int n = sys.n, R = tab.R;
    const long N = static_cast<long>(R) * n;
    std::vector<double> F(static_cast<size_t>(N));
    std::vector<double> stage_t(static_cast<size_t>(R));
    for (int r = 0; r < R; ++r) {
        stage_t[static_cast<size_t>(r)] = t + tab.c[static_cast<size_t>(r)] * dt;
        sys.rhs(stage_t[static_cast<size_t>(r)], u.data(), F.data() + static_cast<long>(r) * n);
    }
    std::vector<double> v(static_cast<size_t>(n)), fv(static_cast<size_t>(n));
    Eigen::VectorXd resid(N);
    Eigen::MatrixXd J(N, N);
    std::vector<double> jv(static_cast<size_t>(n)), basis(static_cast<size_t>(n), 0.0);
    double rnorm = std::numeric_limits<double>::infinity();
    int iter = 0;
    for (; iter < opts.newton_max_iters; ++iter) {
        rnorm = 0.0;
        std::vector<std::vector<double>> stage_vals(static_cast<size_t>(R));
        for (int r = 0; r < R; ++r) {
            for (int i = 0; i < n; ++i) {
                double acc = u[static_cast<size_t>(i)];
                for (int s = 0; s < R; ++s)
                    acc += dt * tab.a(r, s) * F[static_cast<size_t>(s) * n + static_cast<size_t>(i)];
                v[static_cast<size_t>(i)] = acc;
            }
            stage_vals[static_cast<size_t>(r)] = v;
            sys.rhs(stage_t[static_cast<size_t>(r)], v.data(), fv.data());
            for (int i = 0; i < n; ++i) {
                double res = F[static_cast<size_t>(r) * n + static_cast<size_t>(i)] - fv[static_cast<size_t>(i)];
                resid[static_cast<long>(r) * n + i] = res;
                rnorm = std::max(rnorm, std::abs(res));
            }
        }
        if (rnorm <= opts.newton_tol) break;

        // J = I - dt (a_rs  Jac(v_s)); Jacobian columns via jac_apply or FD
        J.setIdentity();
        for (int s = 0; s < R; ++s) {
            Eigen::MatrixXd Js(n, n);
            const std::vector<double>& vsv = stage_vals[static_cast<size_t>(s)];
            for (int j = 0; j < n; ++j) {
                if (sys.jac_apply) {
                    basis[static_cast<size_t>(j)] = 1.0;
                    sys.jac_apply(stage_t[static_cast<size_t>(s)], vsv.data(), basis.data(), jv.data());
                    basis[static_cast<size_t>(j)] = 0.0;
                } else {
                    const double eps = 1e-7 * std::max(1.0, std::abs(vsv[static_cast<size_t>(j)]));
                    std::vector<double> vp = vsv;
                    vp[static_cast<size_t>(j)] += eps;
                    std::vector<double> fp(static_cast<size_t>(n));
                    sys.rhs(stage_t[static_cast<size_t>(s)], vp.data(), fp.data());
                    sys.rhs(stage_t[static_cast<size_t>(s)], vsv.data(), fv.data());
                    for (int i = 0; i < n; ++i)
                        jv[static_cast<size_t>(i)] = (fp[static_cast<size_t>(i)] - fv[static_cast<size_t>(i)]) / eps;
                }
                for (int r = 0; r < R; ++r)
                    for (int i = 0; i < n; ++i)
                        J(static_cast<long>(r) * n + i, static_cast<long>(s) * n + j) -=
                            dt * tab.a(r, s) * jv[static_cast<size_t>(i)];
            }
        }
        Eigen::VectorXd delta = J.partialPivLu().solve(resid);
        for (long k = 0; k < N; ++k) F[static_cast<size_t>(k)] -= delta[k];
    }
    if (rnorm > opts.newton_tol) {
        std::ostringstream os;
        os << "stage Newton did not reach tol " << opts.newton_tol << " in "
           << opts.newton_max_iters << " iterations (residual " << rnorm << ")";
        throw std::runtime_error(os.str());
    }
    // Residual of the accepted stage values (not the Newton iterates).
    if (rep) rep->max_stage_residual = std::max(rep->max_stage_residual, rnorm);
    if (rep) rep->newton_iters.push_back(iter);
    std::vector<double> out(u);
    for (int r = 0; r < R; ++r)
        for (int i = 0; i < n; ++i)
            out[static_cast<size_t>(i)] += dt * tab.b[static_cast<size_t>(r)] * F[static_cast<size_t>(r) * n + static_cast<size_t>(i)];
    return out;
}

// matrix-free Krylov without a structured backend: linear systems with a
// Jacobian action only
std::vector<double> generic_krylov_step(const SemiDiscreteSystem& sys, const Tableau& tab,
                                        double t, const std::vector<double>& u, double dt,
                                        const IrkOptions& opts, StepReport* rep) {
    if (!sys.linear || !sys.jac_apply)
        throw std::invalid_argument(
            "Krylov stage solver without a backend needs a linear system with jac_apply");
    auto backend = make_krylov_backend(
        [&sys, t, &u](const double* x, double* y) { sys.jac_apply(t, u.data(), x, y); }, 0.0);
    return backend->step(tab, t, u, dt, opts, rep);
}

}  // namespace

std::vector<double> irk_step(const SemiDiscreteSystem& sys, const Tableau& tab, double t,
                             const std::vector<double>& u, double dt, const IrkOptions& opts,
                             StepReport* report) {
    if (static_cast<int>(u.size()) != sys.n)
        throw std::invalid_argument("irk_step: state size does not match the system");
    tab.validate(1e-9);
    auto t_start = std::chrono::steady_clock::now();
    std::vector<double> out;
    if (sys.backend) {
        out = sys.backend->step(tab, t, u, dt, opts, report);
    } else if (opts.solver == StageSolverKind::Krylov) {
        out = generic_krylov_step(sys, tab, t, u, dt, opts, report);
    } else if (sys.linear) {
        out = generic_linear_step(sys, tab, t, u, dt);
    } else {
        out = generic_newton_step(sys, tab, t, u, dt, opts, report);
    }
    if (report) {
        report->steps += 1;
        report->wall_seconds +=
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    }
    return out;
}

IntegrateResult integrate(const SemiDiscreteSystem& sys, const Tableau& tab,
                          const std::vector<double>& u0, double t0, double t_end, double dt,
                          const Recorder& recorder, const IrkOptions& opts) {
    if (dt <= 0.0) throw std::invalid_argument("integrate: dt must be positive");
    const double span = t_end - t0;
    if (span < 0.0) throw std::invalid_argument("integrate: t_end precedes t0");
    const double ns_real = span / dt;
    const double ns_round = std::round(ns_real);
    // Allow a few ULPs: t_end is typically formed as ns * dt, which already
    // carries one rounding, and the division here adds another.
    const double ulp = 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, ns_real);
    if (std::abs(ns_real - ns_round) > ulp) {
        std::ostringstream os;
        os << "integrate: (t_end - t0)/dt = " << ns_real
           << " is not an integer step count (within rounding)";
        throw std::invalid_argument(os.str());
    }
    const long ns = static_cast<long>(ns_round);

    if (sys.linear && sys.rhs) {
        // spot-check the declared linearity: rhs(v+w) - rhs(v) - rhs(w) + rhs(0) = 0
        std::vector<double> v(static_cast<size_t>(sys.n)), w(static_cast<size_t>(sys.n)),
            vw(static_cast<size_t>(sys.n)), fv(static_cast<size_t>(sys.n)),
            fw(static_cast<size_t>(sys.n)), fvw(static_cast<size_t>(sys.n)),
            f0(static_cast<size_t>(sys.n)), zero(static_cast<size_t>(sys.n), 0.0);
        double scale = 0.0;
        for (int i = 0; i < sys.n; ++i) {
            v[static_cast<size_t>(i)] = std::sin(static_cast<double>(i) + 1.0);
            w[static_cast<size_t>(i)] = std::cos(2.0 * static_cast<double>(i) + 0.5);
            vw[static_cast<size_t>(i)] = v[static_cast<size_t>(i)] + w[static_cast<size_t>(i)];
        }
        sys.rhs(t0, v.data(), fv.data());
        sys.rhs(t0, w.data(), fw.data());
        sys.rhs(t0, vw.data(), fvw.data());
        sys.rhs(t0, zero.data(), f0.data());
        for (int i = 0; i < sys.n; ++i)
            scale = std::max({scale, std::abs(fv[static_cast<size_t>(i)]), std::abs(fw[static_cast<size_t>(i)])});
        for (int i = 0; i < sys.n; ++i) {
            double dev = fvw[static_cast<size_t>(i)] - fv[static_cast<size_t>(i)] -
                         fw[static_cast<size_t>(i)] + f0[static_cast<size_t>(i)];
            if (std::abs(dev) > 1e-8 * std::max(1.0, scale))
                throw std::invalid_argument(
                    "integrate: system declared linear fails a superposition spot-check");
        }
    }

    IntegrateResult res;
    res.u = u0;
    for (long i = 0; i < ns; ++i) {
        double t = t0 + static_cast<double>(i) * dt;
        res.u = irk_step(sys, tab, t, res.u, dt, opts, &res.report);
        if (recorder) recorder(t0 + static_cast<double>(i + 1) * dt, res.u);
    }
    return res;
}

std::vector<ConvergencePoint> convergence_study(const SemiDiscreteSystem& sys,
                                                const Tableau& tab,
                                                const std::vector<double>& u0, double t0,
                                                double t_end, const std::vector<double>& dts,
                                                const IrkOptions& opts) {
    if (!sys.exact)
        throw std::invalid_argument("convergence_study: the system has no exact solution");
    std::vector<ConvergencePoint> pts;
    pts.reserve(dts.size());
    for (double dt : dts) {
        IntegrateResult r = integrate(sys, tab, u0, t0, t_end, dt, {}, opts);
        std::vector<double> ex = sys.exact(t_end);
        double acc = 0.0;
        for (size_t i = 0; i < ex.size(); ++i) {
            double d = r.u[i] - ex[i];
            acc += d * d;
        }
        pts.push_back({dt, std::sqrt(acc), 0.0});
    }
    for (size_t i = 0; i + 1 < pts.size(); ++i) {
        double num = std::log2(pts[i + 1].error / pts[i].error);
        double den = std::log2(pts[i + 1].dt / pts[i].dt);
        pts[i].rate = (pts[i].error > 0.0 && pts[i + 1].error > 0.0 && den != 0.0)
                          ? num / den
                          : 0.0;
    }
    return pts;
}

}  // namespace irkwl
