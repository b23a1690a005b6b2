#pragma once
// Spatial first-derivative operators (compact and explicit), equivalent
// wavenumbers, and nodal phase/group-velocity maps.
#include <complex>
#include <iosfwd>
#include <string>
#include <vector>

#include "irkwavelab/butcher.hpp"

namespace irkwl {

enum class OperatorKind { Lele6, CD6, FDs13p, FDo13p };
enum class BoundaryKind { Periodic, Closed };

OperatorKind operator_kind_from_string(const std::string& s);
std::string to_string(OperatorKind k);

// General banded matrix with optional periodic wrap. Rows store diagonals
// band[d][i] = entry (i, i + offsets[d]); column indices wrap modulo n for
// periodic operators. Dense enough machinery for n ~ 10^3-10^5 rows.
struct BandedMatrix {
    int n = 0;
    std::vector<int> offsets;               // sorted diagonal offsets
    std::vector<std::vector<double>> band;  // one vector of length n per offset
    bool periodic = false;

    void multiply(const double* x, double* y) const;
    double entry(int i, int j) const;  // 0 outside the band
};

// M1 u' = (1/h) M2 u. Explicit kinds have M1 = I (empty bands).
// Closed boundaries are only supported for Lele6 (one-sided third-order row
// at the ends, fourth-order Pade rows next to them).
struct SpatialOperator {
    OperatorKind kind = OperatorKind::CD6;
    BoundaryKind boundary = BoundaryKind::Periodic;
    int n = 0;
    double h = 1.0;
    bool implicit_lhs = false;  // true for Lele6
    BandedMatrix M1;            // empty when implicit_lhs == false
    BandedMatrix M2;            // raw weights; derivative() applies the 1/h
    int stencil_halfwidth = 0;

    // du = M1^{-1} M2 u / h via a banded solve (or direct stencil when explicit).
    void derivative(const double* u, double* du) const;
};

SpatialOperator build_operator(OperatorKind kind, int n, double h, BoundaryKind boundary);

// Fourier symbol of the periodic operator: h * k_eq at grid phase theta = k h.
// Real for all four kinds (antisymmetric stencils).
double operator_symbol(OperatorKind kind, double theta);

// Equivalent wavenumber at node j from row j of C = M1^{-1} M2 / h:
// k_eq = -i e^{-i k x_j} (C v)_j with v_l = e^{i k x_l}.
std::complex<double> keq(const SpatialOperator& op, double k, int j);

// Phase/group-velocity map on an (N_c, kh) grid at one probe node:
//   sigma = N_c * h * Re k_eq(kh),  beta = unwrapped arg G_N(sigma),
//   vp = beta / (N_c * kh),         vg = (1/N_c) d beta / d(kh)
// (centered difference, step min(1e-4, half the kh grid spacing)). Cells where
// the stage matrix is singular are flagged invalid and skipped.
struct VelocityMap {
    std::vector<double> nc_grid;
    std::vector<double> kh_grid;
    std::vector<double> vp;     // row-major [nc][kh]
    std::vector<double> vg;
    std::vector<char> valid;

    double at_vp(int i_nc, int j_kh) const { return vp[static_cast<size_t>(i_nc) * kh_grid.size() + j_kh]; }
    double at_vg(int i_nc, int j_kh) const { return vg[static_cast<size_t>(i_nc) * kh_grid.size() + j_kh]; }
    bool cell_valid(int i_nc, int j_kh) const { return valid[static_cast<size_t>(i_nc) * kh_grid.size() + j_kh] != 0; }

    void write_csv(std::ostream& os) const;  // header: nc,kh,vp,vg,valid
};

VelocityMap velocity_map(const SpatialOperator& op, const Tableau& tab,
                         const std::vector<double>& nc_grid,
                         const std::vector<double>& kh_grid, int probe);

// Smallest kh where the scaled group velocity turns negative (q-wave
// threshold) at the given CFL number; scans a fine kh grid on (0, pi).
double qwave_threshold(const SpatialOperator& op, const Tableau& tab, double nc);

}  // namespace irkwl
