#include "irkwavelab/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <mutex>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "irkwavelab/spectral.hpp"

namespace irkwl {

namespace {

constexpr double kPi = std::numbers::pi;

struct OperatorCoeffs {
    bool compact = false;
    std::vector<double> lhs;      // M1 row, offsets -1,0,+1 (compact only)
    std::vector<double> rhs;      // antisymmetric weights a_m, offsets 1..hw
    std::vector<double> b0_lhs;   // closed row 0: lhs (0,0),(0,1)
    std::vector<double> b0_rhs;   // closed row 0: rhs (0,0),(0,1),(0,2)
    std::vector<double> b1_lhs;   // closed row 1: lhs (1,0),(1,1),(1,2)
    std::vector<double> b1_rhs;   // closed row 1: rhs (1,0),(1,1),(1,2)
};

const OperatorCoeffs& coeffs_for(OperatorKind kind) {
    static std::once_flag once;
    static std::array<OperatorCoeffs, 4> table;
    std::call_once(once, [] {
        const std::string path = data_dir() + "/spatial_operators.json";
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open spatial operator table: " + path);
        nlohmann::json j = nlohmann::json::parse(in, nullptr, true, /*ignore_comments=*/true);
        const auto& ops = j.at("operators");
        auto load = [&](const char* name, OperatorKind k) {
            const auto& o = ops.at(name);
            OperatorCoeffs c;
            c.compact = o.at("type").get<std::string>() == "compact";
            c.rhs = o.at("rhs").get<std::vector<double>>();
            if (c.compact) {
                c.lhs = o.at("lhs").get<std::vector<double>>();
                const auto& bc = o.at("boundary_closure");
                c.b0_lhs = bc.at("row0").at("lhs").get<std::vector<double>>();
                c.b0_rhs = bc.at("row0").at("rhs").get<std::vector<double>>();
                c.b1_lhs = bc.at("row1").at("lhs").get<std::vector<double>>();
                c.b1_rhs = bc.at("row1").at("rhs").get<std::vector<double>>();
            }
            table[static_cast<size_t>(k)] = std::move(c);
        };
        load("Lele6", OperatorKind::Lele6);
        load("CD6", OperatorKind::CD6);
        load("FDs13p", OperatorKind::FDs13p);
        load("FDo13p", OperatorKind::FDo13p);
    });
    return table[static_cast<size_t>(kind)];
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

// Thomas algorithm for tridiagonal systems given the three diagonals
// (sub[0] and sup[n-1] unused). The compact-operator matrices keep their
// pivots away from zero, so no row exchange is needed.
void tridiag_solve(std::vector<double> sub, std::vector<double> diag, std::vector<double> sup,
                   std::vector<double>& x) {
    const size_t n = diag.size();
    for (size_t i = 1; i < n; ++i) {
        double m = sub[i] / diag[i - 1];
        diag[i] -= m * sup[i - 1];
        x[i] -= m * x[i - 1];
    }
    x[n - 1] /= diag[n - 1];
    for (size_t i = n - 1; i-- > 0;) x[i] = (x[i] - sup[i] * x[i + 1]) / diag[i];
}

// Cyclic tridiagonal (corner entries tr = A(0,n-1), bl = A(n-1,0)) via
// Sherman-Morrison on top of the Thomas solve.
void cyclic_tridiag_solve(const std::vector<double>& sub, std::vector<double> diag,
                          const std::vector<double>& sup, double tr, double bl,
                          std::vector<double>& x) {
    const size_t n = diag.size();
    if (n < 3) throw std::invalid_argument("cyclic tridiagonal solve needs n >= 3");
    const double gamma = -diag[0];
    diag[0] -= gamma;
    diag[n - 1] -= tr * bl / gamma;
    std::vector<double> z(n, 0.0);
    z[0] = gamma;
    z[n - 1] = bl;
    std::vector<double> y = x;
    tridiag_solve(sub, diag, sup, y);
    tridiag_solve(sub, diag, sup, z);
    double vy = y[0] + tr / gamma * y[n - 1];
    double vz = z[0] + tr / gamma * z[n - 1];
    double f = vy / (1.0 + vz);
    for (size_t i = 0; i < n; ++i) x[i] = y[i] - f * z[i];
}

// Solve M^T y = e_j for a (possibly cyclic) tridiagonal banded matrix.
std::vector<double> transpose_unit_solve(const BandedMatrix& M, int j) {
    const int n = M.n;
    std::vector<double> sub(static_cast<size_t>(n), 0.0), diag(static_cast<size_t>(n), 0.0),
        sup(static_cast<size_t>(n), 0.0), x(static_cast<size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
        diag[static_cast<size_t>(i)] = M.entry(i, i);
        if (i > 0) sub[static_cast<size_t>(i)] = M.entry(i - 1, i);      // (M^T)(i, i-1)
        if (i < n - 1) sup[static_cast<size_t>(i)] = M.entry(i + 1, i);  // (M^T)(i, i+1)
    }
    x[static_cast<size_t>(j)] = 1.0;
    if (M.periodic) {
        double tr = M.entry(n - 1, 0);  // (M^T)(0, n-1)
        double bl = M.entry(0, n - 1);  // (M^T)(n-1, 0)
        cyclic_tridiag_solve(sub, diag, sup, tr, bl, x);
    } else {
        tridiag_solve(sub, diag, sup, x);
    }
    return x;
}

}  // namespace

OperatorKind operator_kind_from_string(const std::string& s) {
    std::string t = lower(s);
    if (t == "lele6") return OperatorKind::Lele6;
    if (t == "cd6") return OperatorKind::CD6;
    if (t == "fds13p") return OperatorKind::FDs13p;
    if (t == "fdo13p") return OperatorKind::FDo13p;
    throw std::invalid_argument("unknown spatial operator '" + s +
                                "' (expected lele6, cd6, fds13p or fdo13p)");
}

std::string to_string(OperatorKind k) {
    switch (k) {
        case OperatorKind::Lele6: return "lele6";
        case OperatorKind::CD6: return "cd6";
        case OperatorKind::FDs13p: return "fds13p";
        case OperatorKind::FDo13p: return "fdo13p";
    }
    return "?";
}

void BandedMatrix::multiply(const double* x, double* y) const {
    for (int i = 0; i < n; ++i) y[i] = 0.0;
    for (size_t d = 0; d < offsets.size(); ++d) {
        const int off = offsets[d];
        const auto& diag = band[d];
        if (periodic) {
            for (int i = 0; i < n; ++i) {
                int j = i + off;
                j -= n * static_cast<int>(std::floor(static_cast<double>(j) / n));
                y[i] += diag[static_cast<size_t>(i)] * x[j];
            }
        } else {
            const int lo = std::max(0, -off), hi = std::min(n, n - off);
            for (int i = lo; i < hi; ++i) y[i] += diag[static_cast<size_t>(i)] * x[i + off];
        }
    }
}

double BandedMatrix::entry(int i, int j) const {
    double v = 0.0;
    for (size_t d = 0; d < offsets.size(); ++d) {
        int jj = i + offsets[d];
        if (periodic) jj -= n * static_cast<int>(std::floor(static_cast<double>(jj) / n));
        if (jj == j) v += band[d][static_cast<size_t>(i)];
    }
    return v;
}

SpatialOperator build_operator(OperatorKind kind, int n, double h, BoundaryKind boundary) {
    const OperatorCoeffs& c = coeffs_for(kind);
    const int hw = static_cast<int>(c.rhs.size());
    if (h <= 0.0) throw std::invalid_argument("build_operator: grid spacing must be positive");
    if (n < 2 * hw + 1)
        throw std::invalid_argument("build_operator: grid too small for the stencil");
    if (boundary == BoundaryKind::Closed && !c.compact)
        throw std::invalid_argument("build_operator: closed boundaries are only supported "
                                    "for the compact operator");

    SpatialOperator op;
    op.kind = kind;
    op.boundary = boundary;
    op.n = n;
    op.h = h;
    op.implicit_lhs = c.compact;
    op.stencil_halfwidth = hw;

    const bool wrap = boundary == BoundaryKind::Periodic;

    // M2: antisymmetric weights on offsets -hw..-1, 1..hw (plus the diagonal
    // for closed-boundary rows).
    BandedMatrix& M2 = op.M2;
    M2.n = n;
    M2.periodic = wrap;
    for (int off = -hw; off <= hw; ++off) {
        if (off == 0 && wrap) continue;  // diagonal only needed for closed rows
        M2.offsets.push_back(off);
        double w = off == 0 ? 0.0
                            : (off > 0 ? c.rhs[static_cast<size_t>(off - 1)]
                                       : -c.rhs[static_cast<size_t>(-off - 1)]);
        M2.band.emplace_back(static_cast<size_t>(n), w);
    }
    if (!wrap) {
        // zero the stencil where it would reach outside the grid
        for (size_t d = 0; d < M2.offsets.size(); ++d) {
            const int off = M2.offsets[d];
            for (int i = 0; i < n; ++i)
                if (i + off < 0 || i + off >= n) M2.band[d][static_cast<size_t>(i)] = 0.0;
        }
    }

    if (c.compact) {
        BandedMatrix& M1 = op.M1;
        M1.n = n;
        M1.periodic = wrap;
        M1.offsets = {-1, 0, 1};
        M1.band = {std::vector<double>(static_cast<size_t>(n), c.lhs[0]),
                   std::vector<double>(static_cast<size_t>(n), c.lhs[1]),
                   std::vector<double>(static_cast<size_t>(n), c.lhs[2])};
        if (!wrap) {
            M1.band[0][0] = 0.0;
            M1.band[2][static_cast<size_t>(n - 1)] = 0.0;
            auto set1 = [&](int i, int j, double v) {
                for (size_t d = 0; d < M1.offsets.size(); ++d)
                    if (i + M1.offsets[d] == j) M1.band[d][static_cast<size_t>(i)] = v;
            };
            auto set2 = [&](int i, int j, double v) {
                for (size_t d = 0; d < M2.offsets.size(); ++d)
                    if (i + M2.offsets[d] == j) M2.band[d][static_cast<size_t>(i)] = v;
            };
            // Clear the four closure rows of M2 entirely first: the interior
            // band still holds weights beyond the columns the closures write
            // (e.g. offset +2 at row 1), and a leftover weight breaks the
            // zero row sum that makes the derivative of a constant vanish.
            for (size_t d = 0; d < M2.offsets.size(); ++d)
                for (int i : {0, 1, n - 2, n - 1}) M2.band[d][static_cast<size_t>(i)] = 0.0;
            // left end: one-sided third-order row, then the Pade row
            set1(0, 0, c.b0_lhs[0]);
            set1(0, 1, c.b0_lhs[1]);
            for (int j = 0; j < 3; ++j) set2(0, j, c.b0_rhs[static_cast<size_t>(j)]);
            set1(1, 0, c.b1_lhs[0]);
            set1(1, 1, c.b1_lhs[1]);
            set1(1, 2, c.b1_lhs[2]);
            for (int j = 0; j < 3; ++j) set2(1, j, c.b1_rhs[static_cast<size_t>(j)]);
            // right end: mirrored with flipped sign on the rhs
            set1(n - 1, n - 1, c.b0_lhs[0]);
            set1(n - 1, n - 2, c.b0_lhs[1]);
            for (int j = 0; j < 3; ++j)
                set2(n - 1, n - 1 - j, -c.b0_rhs[static_cast<size_t>(j)]);
            set1(n - 2, n - 1, c.b1_lhs[0]);
            set1(n - 2, n - 2, c.b1_lhs[1]);
            set1(n - 2, n - 3, c.b1_lhs[2]);
            for (int j = 0; j < 3; ++j)
                set2(n - 2, n - 1 - j, -c.b1_rhs[static_cast<size_t>(j)]);
        }
    }
    return op;
}

void SpatialOperator::derivative(const double* u, double* du) const {
    M2.multiply(u, du);
    if (implicit_lhs) {
        std::vector<double> sub(static_cast<size_t>(n)), diag(static_cast<size_t>(n)),
            sup(static_cast<size_t>(n)), x(du, du + n);
        for (int i = 0; i < n; ++i) {
            diag[static_cast<size_t>(i)] = M1.entry(i, i);
            if (i > 0) sub[static_cast<size_t>(i)] = M1.entry(i, i - 1);
            if (i < n - 1) sup[static_cast<size_t>(i)] = M1.entry(i, i + 1);
        }
        if (M1.periodic)
            cyclic_tridiag_solve(sub, diag, sup, M1.entry(0, n - 1), M1.entry(n - 1, 0), x);
        else
            tridiag_solve(sub, diag, sup, x);
        for (int i = 0; i < n; ++i) du[i] = x[static_cast<size_t>(i)];
    }
    for (int i = 0; i < n; ++i) du[i] /= h;
}

double operator_symbol(OperatorKind kind, double theta) {
    const OperatorCoeffs& c = coeffs_for(kind);
    double num = 0.0;
    for (size_t m = 1; m <= c.rhs.size(); ++m)
        num += 2.0 * c.rhs[m - 1] * std::sin(static_cast<double>(m) * theta);
    if (!c.compact) return num;
    double den = c.lhs[1] + (c.lhs[0] + c.lhs[2]) * std::cos(theta);
    return num / den;
}

std::complex<double> keq(const SpatialOperator& op, double k, int j) {
    if (j < 0 || j >= op.n) throw std::invalid_argument("keq: probe node out of range");
    const int n = op.n;
    std::vector<double> vr(static_cast<size_t>(n)), vi(static_cast<size_t>(n));
    for (int l = 0; l < n; ++l) {
        double ph = k * op.h * static_cast<double>(l);
        vr[static_cast<size_t>(l)] = std::cos(ph);
        vi[static_cast<size_t>(l)] = std::sin(ph);
    }
    std::vector<double> wr(static_cast<size_t>(n)), wi(static_cast<size_t>(n));
    op.M2.multiply(vr.data(), wr.data());
    op.M2.multiply(vi.data(), wi.data());

    std::complex<double> cvj;
    if (op.implicit_lhs) {
        // (C v)_j = y . (M2 v) / h  with  M1^T y = e_j
        std::vector<double> y = transpose_unit_solve(op.M1, j);
        double rr = 0.0, ii = 0.0;
        for (int l = 0; l < n; ++l) {
            rr += y[static_cast<size_t>(l)] * wr[static_cast<size_t>(l)];
            ii += y[static_cast<size_t>(l)] * wi[static_cast<size_t>(l)];
        }
        cvj = {rr / op.h, ii / op.h};
    } else {
        cvj = {wr[static_cast<size_t>(j)] / op.h, wi[static_cast<size_t>(j)] / op.h};
    }
    double xj = k * op.h * static_cast<double>(j);
    return std::complex<double>(0.0, -1.0) * std::polar(1.0, -xj) * cvj;
}

// ----- velocity maps --------------------------------------------------------

namespace {

// beta(kh) = unwrapped phase of the amplification at sigma = nc * h * Re k_eq
double beta_of_kh(const SpatialOperator& op, const Tableau& tab, double nc, double kh,
                  int probe) {
    double sigma = nc * op.h * keq(op, kh / op.h, probe).real();
    return unwrapped_phase(tab, sigma);
}

}  // namespace

void VelocityMap::write_csv(std::ostream& os) const {
    os << "nc,kh,vp,vg,valid\n";
    char line[192];
    for (size_t i = 0; i < nc_grid.size(); ++i)
        for (size_t j = 0; j < kh_grid.size(); ++j) {
            size_t c = i * kh_grid.size() + j;
            std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g,%.17g,%d\n", nc_grid[i],
                          kh_grid[j], vp[c], vg[c], valid[c] != 0 ? 1 : 0);
            os << line;
        }
}

VelocityMap velocity_map(const SpatialOperator& op, const Tableau& tab,
                         const std::vector<double>& nc_grid,
                         const std::vector<double>& kh_grid, int probe) {
    if (probe < 0 || probe >= op.n)
        throw std::invalid_argument("velocity_map: probe node out of range");
    VelocityMap map;
    map.nc_grid = nc_grid;
    map.kh_grid = kh_grid;
    const size_t cells = nc_grid.size() * kh_grid.size();
    map.vp.assign(cells, 0.0);
    map.vg.assign(cells, 0.0);
    map.valid.assign(cells, 0);

    double min_spacing = 1e-2;
    for (size_t j = 0; j + 1 < kh_grid.size(); ++j)
        min_spacing = std::min(min_spacing, std::abs(kh_grid[j + 1] - kh_grid[j]));
    const double delta = std::min(1e-4, 0.5 * min_spacing);

    for (size_t i = 0; i < nc_grid.size(); ++i) {
        const double nc = nc_grid[i];
        for (size_t j = 0; j < kh_grid.size(); ++j) {
            const double kh = kh_grid[j];
            const size_t c = i * kh_grid.size() + j;
            if (kh <= 0.0 || nc <= 0.0) continue;  // left invalid
            try {
                double beta = beta_of_kh(op, tab, nc, kh, probe);
                double bp = beta_of_kh(op, tab, nc, kh + delta, probe);
                double bm = beta_of_kh(op, tab, nc, kh - delta, probe);
                map.vp[c] = beta / (nc * kh);
                map.vg[c] = (bp - bm) / (2.0 * delta) / nc;
                map.valid[c] = 1;
            } catch (const SingularStageMatrix&) {
                // cell left invalid; map generation continues
            }
        }
    }
    return map;
}

double qwave_threshold(const SpatialOperator& op, const Tableau& tab, double nc) {
    const int probe = op.n / 2;
    const double delta = 1e-5;
    auto vg = [&](double kh) {
        return (beta_of_kh(op, tab, nc, kh + delta, probe) -
                beta_of_kh(op, tab, nc, kh - delta, probe)) /
               (2.0 * delta) / nc;
    };
    const int N = 512;
    const double lo = 0.01, hi = kPi - 1e-6;
    double prev_kh = lo, prev_vg = vg(lo);
    if (prev_vg <= 0.0)
        throw std::runtime_error("qwave_threshold: group velocity already negative at kh = 0.01");
    for (int i = 1; i <= N; ++i) {
        double kh = lo + (hi - lo) * static_cast<double>(i) / N;
        double g = vg(kh);
        if (g <= 0.0) {
            double a = prev_kh, b = kh;
            for (int it = 0; it < 50 && b - a > 1e-7; ++it) {
                double m = 0.5 * (a + b);
                (vg(m) > 0.0 ? a : b) = m;
            }
            return 0.5 * (a + b);
        }
        prev_kh = kh;
        prev_vg = g;
    }
    throw std::runtime_error("qwave_threshold: no sign change of the group velocity below "
                             "the grid Nyquist");
}

}  // namespace irkwl
