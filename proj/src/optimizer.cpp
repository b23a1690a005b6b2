#include "irkwavelab/optimizer.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "detail/gauss_rule.hpp"

namespace irkwl {

namespace {

constexpr double kPi = std::numbers::pi;

// ----- objective ------------------------------------------------------------

double family_phase_error(Family fam, double param, double sigma) {
    return fam == Family::TwoStage ? phase_error_two_stage(param, sigma)
                                   : phase_error_three_stage(param, sigma);
}

// Leading coefficient of the small-sigma phase-error series. The
// alpha -> infinity objective concentrates all weight at sigma = 0, so the
// limit problem is |leading coefficient| -> min (zero at -1/12 resp. 1/10).
double leading_series_coeff(Family fam, double param) {
    return fam == Family::TwoStage ? param + 1.0 / 12.0 : (1.0 - 10.0 * param) / 120.0;
}

}  // namespace

double weighted_phase_norm(const WeightedObjective& obj, double param) {
    if (obj.asymptotic) return std::abs(leading_series_coeff(obj.family, param));
    return detail::l2_norm_refined(
        [&](double s) {
            return family_phase_error(obj.family, param, s) *
                   std::exp(-obj.alpha * s * s);
        },
        kPi);
}

double minimize_param(const WeightedObjective& obj) {
    if (obj.asymptotic) return obj.family == Family::TwoStage ? -1.0 / 12.0 : 1.0 / 10.0;
    const double lo = obj.family == Family::TwoStage ? -0.2 : 0.0;
    const double hi = obj.family == Family::TwoStage ? 0.0 : 0.2;

    // coarse scan to isolate an interior bracket cell
    const int n = 81;
    int best = 0;
    double best_f = 0.0;
    for (int i = 0; i < n; ++i) {
        double x = lo + (hi - lo) * i / (n - 1);
        double f = weighted_phase_norm(obj, x);
        if (i == 0 || f < best_f) {
            best = i;
            best_f = f;
        }
    }
    if (best == 0 || best == n - 1) {
        std::ostringstream os;
        os << "weighted objective (alpha = " << obj.alpha
           << ") has no interior minimum in the bracket [" << lo << ", " << hi << "]";
        throw std::runtime_error(os.str());
    }
    double a = lo + (hi - lo) * (best - 1) / (n - 1);
    double b = lo + (hi - lo) * (best + 1) / (n - 1);

    // golden-section to an interval below 1e-10
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double f1 = weighted_phase_norm(obj, x1), f2 = weighted_phase_norm(obj, x2);
    while (b - a > 1e-11) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - gr * (b - a);
            f1 = weighted_phase_norm(obj, x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (b - a);
            f2 = weighted_phase_norm(obj, x2);
        }
    }
    return 0.5 * (a + b);
}

std::vector<AlphaSweepPoint> alpha_sweep(Family family, const std::vector<double>& alphas) {
    std::vector<AlphaSweepPoint> out;
    out.reserve(alphas.size());
    for (double alpha : alphas) {
        AlphaSweepPoint pt;
        pt.alpha = alpha;
        try {
            pt.param_min = minimize_param({family, alpha, false});
        } catch (const std::exception& e) {
            pt.ok = false;
            pt.error = e.what();
        }
        out.push_back(std::move(pt));
    }
    return out;
}

// ----- closure parsing ------------------------------------------------------

namespace {

const std::map<std::string, int>& variable_index(Family fam) {
    static const std::map<std::string, int> two{{"b1", 0},  {"b2", 1},  {"a11", 2},
                                                {"a12", 3}, {"a21", 4}, {"a22", 5}};
    static const std::map<std::string, int> three{
        {"b1", 0},  {"b2", 1},  {"b3", 2},  {"a11", 3},  {"a12", 4},  {"a13", 5},
        {"a21", 6}, {"a22", 7}, {"a23", 8}, {"a31", 9},  {"a32", 10}, {"a33", 11}};
    return fam == Family::TwoStage ? two : three;
}

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

// numbers are integers, decimals, or rationals p/q
bool parse_number(const std::string& tok, double* out) {
    size_t slash = tok.find('/');
    try {
        size_t used = 0;
        if (slash == std::string::npos) {
            double v = std::stod(tok, &used);
            if (used != tok.size()) return false;
            *out = v;
            return true;
        }
        std::string num = trim(tok.substr(0, slash)), den = trim(tok.substr(slash + 1));
        double p = std::stod(num, &used);
        if (used != num.size()) return false;
        double q = std::stod(den, &used);
        if (used != den.size() || q == 0.0) return false;
        *out = p / q;
        return true;
    } catch (const std::exception&) {
        return false;
    }
}

// One side of an equation: signed terms, each "coeff", "var" or "coeff*var".
// Accumulates variable coefficients into `terms` (scaled by `sign_scale`)
// and constants into `constant`.
void parse_side(const std::string& side, Family fam, double sign_scale,
                std::map<std::string, double>& terms, double& constant,
                const std::string& line) {
    std::vector<std::pair<double, std::string>> raw;  // (sign, token)
    double sign = 1.0;
    std::string tok;
    bool after_op = false;  // a binary +/- still waiting for its operand
    auto flush = [&] {
        std::string t = trim(tok);
        if (!t.empty()) {
            raw.emplace_back(sign, t);
            after_op = false;
        }
        tok.clear();
    };
    for (char ch : side) {
        if (ch == '+' || ch == '-') {
            if (raw.empty() && trim(tok).empty()) {
                sign = (ch == '-') ? -sign : sign;  // leading sign
                continue;
            }
            if (trim(tok).empty())
                throw std::invalid_argument("constraint '" + line + "': dangling operator");
            flush();
            sign = (ch == '-') ? -1.0 : 1.0;
            after_op = true;
        } else {
            tok += ch;
        }
    }
    if (after_op && trim(tok).empty())
        throw std::invalid_argument("constraint '" + line + "': dangling operator");
    flush();
    if (raw.empty())
        throw std::invalid_argument("constraint '" + line + "': empty expression side");

    const auto& vidx = variable_index(fam);
    for (auto& [sg, t] : raw) {
        size_t star = t.find('*');
        double coeff = 1.0;
        std::string var;
        if (star != std::string::npos) {
            std::string lhs = trim(t.substr(0, star)), rhs = trim(t.substr(star + 1));
            if (!parse_number(lhs, &coeff))
                throw std::invalid_argument("constraint '" + line + "': bad coefficient '" +
                                            lhs + "'");
            var = rhs;
        } else if (vidx.count(trim(t))) {
            var = trim(t);
        } else {
            double v = 0.0;
            if (!parse_number(trim(t), &v))
                throw std::invalid_argument("constraint '" + line + "': unknown term '" + t +
                                            "'");
            constant += sign_scale * sg * v;
            continue;
        }
        if (!vidx.count(var))
            throw std::invalid_argument("constraint '" + line + "': unknown variable '" + var +
                                        "'");
        terms[var] += sign_scale * sg * coeff;
    }
}

LinearClosure parse_equation(const std::string& line, Family fam) {
    size_t eq = line.find('=');
    if (eq == std::string::npos || line.find('=', eq + 1) != std::string::npos)
        throw std::invalid_argument("constraint '" + line + "': expected a single '='");
    std::map<std::string, double> terms;
    double constant = 0.0;  // accumulated as lhs-const - rhs-const
    parse_side(line.substr(0, eq), fam, +1.0, terms, constant, line);
    parse_side(line.substr(eq + 1), fam, -1.0, terms, constant, line);
    LinearClosure cl;
    cl.source = trim(line);
    cl.rhs = -constant;
    for (auto& [var, coeff] : terms)
        if (coeff != 0.0) cl.terms.emplace_back(var, coeff);
    if (cl.terms.empty())
        throw std::invalid_argument("constraint '" + line + "': no variables on either side");
    return cl;
}

}  // namespace

ConstraintSet ConstraintSet::parse(const std::string& text, Family family) {
    std::vector<std::string> lines;
    std::string cur;
    for (char ch : text) {
        if (ch == '\n' || ch == ';') {
            lines.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    lines.push_back(cur);
    return parse_lines(lines, family);
}

ConstraintSet ConstraintSet::parse_lines(const std::vector<std::string>& lines, Family family) {
    ConstraintSet cs;
    cs.family = family;
    for (const auto& raw : lines) {
        std::string line = trim(raw);
        if (line.empty() || line[0] == '#') continue;
        // normalize spacing for the order form
        std::string squashed;
        for (char ch : line)
            if (!std::isspace(static_cast<unsigned char>(ch))) squashed += ch;
        if (squashed == "order>=3") {
            // For the three-stage system the base equations already enforce
            // order 4, so the flag is recorded but adds nothing there.
            cs.order_bump = true;
            continue;
        }
        cs.closures.push_back(parse_equation(line, family));
    }
    return cs;
}

// ----- family systems -------------------------------------------------------

namespace {

// Forward-mode dual with a fixed-width gradient: exact Jacobians for the
// polynomial order conditions.
template <int N>
struct DualN {
    double v = 0.0;
    std::array<double, N> d{};

    DualN() = default;
    explicit DualN(double value) : v(value) {}
    static DualN seed(double value, int slot) {
        DualN x(value);
        x.d[static_cast<size_t>(slot)] = 1.0;
        return x;
    }
    DualN operator+(const DualN& o) const {
        DualN r(v + o.v);
        for (int i = 0; i < N; ++i) r.d[i] = d[i] + o.d[i];
        return r;
    }
    DualN operator-(const DualN& o) const {
        DualN r(v - o.v);
        for (int i = 0; i < N; ++i) r.d[i] = d[i] - o.d[i];
        return r;
    }
    DualN operator*(const DualN& o) const {
        DualN r(v * o.v);
        for (int i = 0; i < N; ++i) r.d[i] = d[i] * o.v + v * o.d[i];
        return r;
    }
    DualN operator-(double s) const {
        DualN r = *this;
        r.v -= s;
        return r;
    }
    DualN operator*(double s) const {
        DualN r(v * s);
        for (int i = 0; i < N; ++i) r.d[i] = d[i] * s;
        return r;
    }
};

// residuals of the two-stage defining system at u = (b1,b2,a11,a12,a21,a22)
template <class T>
std::vector<T> two_stage_residuals(const std::array<T, 6>& u, double Y,
                                   const ConstraintSet& cs) {
    const T &b1 = u[0], &b2 = u[1], &a11 = u[2], &a12 = u[3], &a21 = u[4], &a22 = u[5];
    T c1 = a11 + a12, c2 = a21 + a22;
    std::vector<T> r;
    r.push_back(b1 + b2 - 1.0);
    r.push_back(b1 * c1 + b2 * c2 - 0.5);
    r.push_back(a11 + a22 - 0.5);                 // unitary amplification
    r.push_back(a12 * a21 - a11 * a22 - Y);       // family parameter
    if (cs.order_bump) {
        r.push_back(b1 * c1 * c1 + b2 * c2 * c2 - 1.0 / 3.0);
        r.push_back(b1 * (a11 * c1 + a12 * c2) + b2 * (a21 * c1 + a22 * c2) - 1.0 / 6.0);
    }
    const auto& vidx = variable_index(Family::TwoStage);
    for (const auto& cl : cs.closures) {
        T acc(0.0);
        for (const auto& [var, coeff] : cl.terms) acc = acc + u[static_cast<size_t>(vidx.at(var))] * coeff;
        r.push_back(acc - cl.rhs);
    }
    return r;
}

// residuals of the three-stage defining system at
// u = (b1,b2,b3, a11,a12,a13, a21,a22,a23, a31,a32,a33)
template <class T>
std::vector<T> three_stage_residuals(const std::array<T, 12>& u, double X,
                                     const ConstraintSet& cs) {
    std::array<T, 3> b{u[0], u[1], u[2]};
    std::array<std::array<T, 3>, 3> A;
    for (int r = 0; r < 3; ++r)
        for (int s = 0; s < 3; ++s) A[static_cast<size_t>(r)][static_cast<size_t>(s)] = u[static_cast<size_t>(3 + 3 * r + s)];
    std::array<T, 3> c, Ac, Ac2, AAc;
    for (int r = 0; r < 3; ++r) {
        c[static_cast<size_t>(r)] = A[static_cast<size_t>(r)][0] + A[static_cast<size_t>(r)][1] + A[static_cast<size_t>(r)][2];
    }
    for (int r = 0; r < 3; ++r) {
        T ac(0.0), ac2(0.0);
        for (int s = 0; s < 3; ++s) {
            ac = ac + A[static_cast<size_t>(r)][static_cast<size_t>(s)] * c[static_cast<size_t>(s)];
            ac2 = ac2 + A[static_cast<size_t>(r)][static_cast<size_t>(s)] * (c[static_cast<size_t>(s)] * c[static_cast<size_t>(s)]);
        }
        Ac[static_cast<size_t>(r)] = ac;
        Ac2[static_cast<size_t>(r)] = ac2;
    }
    for (int r = 0; r < 3; ++r) {
        T acc(0.0);
        for (int s = 0; s < 3; ++s) acc = acc + A[static_cast<size_t>(r)][static_cast<size_t>(s)] * Ac[static_cast<size_t>(s)];
        AAc[static_cast<size_t>(r)] = acc;
    }
    auto dot_b = [&](const std::array<T, 3>& w) {
        return b[0] * w[0] + b[1] * w[1] + b[2] * w[2];
    };
    std::array<T, 3> ones_c2{c[0] * c[0], c[1] * c[1], c[2] * c[2]};
    std::array<T, 3> c3{ones_c2[0] * c[0], ones_c2[1] * c[1], ones_c2[2] * c[2]};
    std::array<T, 3> cAc{c[0] * Ac[0], c[1] * Ac[1], c[2] * Ac[2]};

    std::vector<T> r;
    r.push_back(b[0] + b[1] + b[2] - 1.0);     // order 1
    r.push_back(dot_b(c) - 0.5);               // order 2
    r.push_back(dot_b(ones_c2) - 1.0 / 3.0);   // order 3
    r.push_back(dot_b(Ac) - 1.0 / 6.0);
    r.push_back(dot_b(c3) - 0.25);             // order 4
    r.push_back(dot_b(cAc) - 1.0 / 8.0);
    r.push_back(dot_b(Ac2) - 1.0 / 12.0);
    r.push_back(dot_b(AAc) - 1.0 / 24.0);
    r.push_back(A[0][0] + A[1][1] + A[2][2] - 0.5);  // unitary amplification
    // family parameter: sum of the principal 2x2 minors of A
    T minors = (A[0][0] * A[1][1] - A[0][1] * A[1][0]) +
               (A[0][0] * A[2][2] - A[0][2] * A[2][0]) +
               (A[1][1] * A[2][2] - A[1][2] * A[2][1]);
    r.push_back(minors - X);
    const auto& vidx = variable_index(Family::ThreeStage);
    for (const auto& cl : cs.closures) {
        T acc(0.0);
        for (const auto& [var, coeff] : cl.terms) acc = acc + u[static_cast<size_t>(vidx.at(var))] * coeff;
        r.push_back(acc - cl.rhs);
    }
    return r;
}

double halton(int index, int base) {
    double f = 1.0, r = 0.0;
    while (index > 0) {
        f /= base;
        r += f * (index % base);
        index /= base;
    }
    return r;
}

template <int N>
struct SolveOutcome {
    bool converged = false;
    Eigen::Matrix<double, N, 1> u;
    double residual_inf = std::numeric_limits<double>::infinity();
};

// Damped Gauss-Newton least squares from one seed.
template <int N, class ResidFn>
SolveOutcome<N> gauss_newton(const ResidFn& residuals, Eigen::Matrix<double, N, 1> u,
                             double tol) {
    auto eval = [&](const Eigen::Matrix<double, N, 1>& x, Eigen::VectorXd* r,
                    Eigen::MatrixXd* J) {
        std::array<DualN<N>, N> xs;
        for (int i = 0; i < N; ++i) xs[static_cast<size_t>(i)] = DualN<N>::seed(x[i], i);
        auto res = residuals(xs);
        const int m = static_cast<int>(res.size());
        r->resize(m);
        if (J) J->resize(m, N);
        for (int i = 0; i < m; ++i) {
            (*r)[i] = res[static_cast<size_t>(i)].v;
            if (J)
                for (int j = 0; j < N; ++j) (*J)(i, j) = res[static_cast<size_t>(i)].d[static_cast<size_t>(j)];
        }
    };

    SolveOutcome<N> out;
    Eigen::VectorXd r;
    Eigen::MatrixXd J;
    eval(u, &r, &J);
    double fnorm = r.norm();
    for (int iter = 0; iter < 200; ++iter) {
        if (r.lpNorm<Eigen::Infinity>() <= 1e-14) break;
        Eigen::Matrix<double, N, 1> delta = J.colPivHouseholderQr().solve(-r);
        double t = 1.0;
        bool improved = false;
        for (int ls = 0; ls < 40; ++ls) {
            Eigen::Matrix<double, N, 1> trial = u + t * delta;
            Eigen::VectorXd rt;
            eval(trial, &rt, nullptr);
            if (rt.norm() < fnorm) {
                u = trial;
                fnorm = rt.norm();
                improved = true;
                break;
            }
            t *= 0.5;
        }
        if (!improved) break;
        eval(u, &r, &J);
        fnorm = r.norm();
    }
    out.u = u;
    out.residual_inf = r.lpNorm<Eigen::Infinity>();
    out.converged = out.residual_inf <= tol;
    return out;
}

template <int N, class ResidFn>
Eigen::Matrix<double, N, 1> solve_family_system(const ResidFn& residuals,
                                                const Eigen::Matrix<double, N, 1>& center,
                                                const Tableau* near_hint,
                                                const std::vector<double>& hint_vec,
                                                double tol, const char* what) {
    static constexpr int primes[12] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};
    std::vector<Eigen::Matrix<double, N, 1>> seeds;
    if (near_hint) {
        Eigen::Matrix<double, N, 1> h;
        for (int i = 0; i < N; ++i) h[i] = hint_vec[static_cast<size_t>(i)];
        seeds.push_back(h);
    }
    seeds.push_back(center);
    for (int k = 1; k <= 64; ++k) {
        Eigen::Matrix<double, N, 1> s = center;
        for (int i = 0; i < N; ++i) s[i] += 1.5 * (halton(k, primes[i]) - 0.5);
        seeds.push_back(s);
    }

    std::vector<Eigen::Matrix<double, N, 1>> roots;
    double best_residual = std::numeric_limits<double>::infinity();
    for (const auto& s : seeds) {
        auto r = gauss_newton<N>(residuals, s, tol);
        best_residual = std::min(best_residual, r.residual_inf);
        if (!r.converged) continue;
        bool dup = false;
        for (const auto& known : roots)
            if ((known - r.u).template lpNorm<Eigen::Infinity>() < 1e-8) {
                dup = true;
                break;
            }
        if (!dup) roots.push_back(r.u);
        if (near_hint && !roots.empty() &&
            (roots.front() - seeds.front()).template lpNorm<Eigen::Infinity>() < 1e-6)
            break;  // hint reproduced itself; no need to keep hunting
    }
    if (roots.empty()) {
        std::ostringstream os;
        os << what << ": no root converged (best residual " << best_residual << ")";
        throw std::runtime_error(os.str());
    }

    if (near_hint) {
        Eigen::Matrix<double, N, 1> h;
        for (int i = 0; i < N; ++i) h[i] = hint_vec[static_cast<size_t>(i)];
        return *std::min_element(roots.begin(), roots.end(),
                                 [&](const auto& x, const auto& y) {
                                     return (x - h).norm() < (y - h).norm();
                                 });
    }
    // prefer roots with every coefficient bounded by 3, then the flattest A
    auto max_abs = [](const Eigen::Matrix<double, N, 1>& x, int from) {
        double m = 0.0;
        for (int i = from; i < N; ++i) m = std::max(m, std::abs(x[i]));
        return m;
    };
    std::vector<Eigen::Matrix<double, N, 1>> tame;
    for (const auto& x : roots)
        if (max_abs(x, 0) <= 3.0) tame.push_back(x);
    const auto& pool = tame.empty() ? roots : tame;
    const int a_from = (N == 6) ? 2 : 3;
    return *std::min_element(pool.begin(), pool.end(), [&](const auto& x, const auto& y) {
        return max_abs(x, a_from) < max_abs(y, a_from);
    });
}

std::vector<double> tableau_to_unknowns(const Tableau& tab) {
    std::vector<double> u;
    u.insert(u.end(), tab.b.begin(), tab.b.end());
    u.insert(u.end(), tab.A.begin(), tab.A.end());
    return u;
}

Tableau unknowns_to_tableau(Family fam, const double* u) {
    Tableau tab;
    tab.R = fam == Family::TwoStage ? 2 : 3;
    const size_t R = static_cast<size_t>(tab.R);
    tab.b.assign(u, u + R);
    tab.A.assign(u + R, u + R + R * R);
    tab.c.assign(R, 0.0);
    for (size_t r = 0; r < R; ++r)
        for (size_t s = 0; s < R; ++s) tab.c[r] += tab.A[r * R + s];
    return tab;
}

}  // namespace

Tableau solve_two_stage(double Y, const ConstraintSet& closures, const Tableau* near_hint) {
    if (closures.family != Family::TwoStage)
        throw std::invalid_argument("solve_two_stage: constraint set is not two-stage");
    if (near_hint && near_hint->R != 2)
        throw std::invalid_argument("solve_two_stage: hint tableau is not two-stage");
    auto resid = [&](const std::array<DualN<6>, 6>& u) {
        return two_stage_residuals(u, Y, closures);
    };
    Eigen::Matrix<double, 6, 1> center;
    center << 0.5, 0.5, 0.25, 0.0, 0.3, 0.25;
    std::vector<double> hint_vec = near_hint ? tableau_to_unknowns(*near_hint)
                                             : std::vector<double>{};
    auto u = solve_family_system<6>(resid, center, near_hint, hint_vec, 1e-12,
                                    "solve_two_stage");
    Tableau tab = unknowns_to_tableau(Family::TwoStage, u.data());
    tab.validate(1e-9);
    return tab;
}

Tableau solve_three_stage(double X, const ConstraintSet& closures, const Tableau* near_hint) {
    if (closures.family != Family::ThreeStage)
        throw std::invalid_argument("solve_three_stage: constraint set is not three-stage");
    if (near_hint && near_hint->R != 3)
        throw std::invalid_argument("solve_three_stage: hint tableau is not three-stage");
    auto resid = [&](const std::array<DualN<12>, 12>& u) {
        return three_stage_residuals(u, X, closures);
    };
    Eigen::Matrix<double, 12, 1> center;
    center << 1.0 / 3, 1.0 / 3, 1.0 / 3, 0.15, 0.0, 0.0, 0.3, 0.2, 0.0, 0.3, 0.3, 0.15;
    std::vector<double> hint_vec = near_hint ? tableau_to_unknowns(*near_hint)
                                             : std::vector<double>{};
    auto u = solve_family_system<12>(resid, center, near_hint, hint_vec, 1e-11,
                                     "solve_three_stage");
    Tableau tab = unknowns_to_tableau(Family::ThreeStage, u.data());
    tab.validate(1e-9);
    return tab;
}

std::vector<double> family_residuals(const Tableau& tab, double param,
                                     const ConstraintSet& closures) {
    const int R = closures.family == Family::TwoStage ? 2 : 3;
    if (tab.R != R)
        throw std::invalid_argument("family_residuals: tableau stage count does not match "
                                    "the constraint family");
    std::vector<double> u = tableau_to_unknowns(tab);
    if (R == 2) {
        std::array<double, 6> x;
        std::copy_n(u.begin(), 6, x.begin());
        return two_stage_residuals(x, param, closures);
    }
    std::array<double, 12> x;
    std::copy_n(u.begin(), 12, x.begin());
    return three_stage_residuals(x, param, closures);
}

// ----- analysis reports -----------------------------------------------------

VerifyReport verify_scheme(const Tableau& tab) {
    VerifyReport rep;
    rep.name = tab.name;
    rep.stages = tab.R;
    rep.classical_order = order_of_accuracy(tab);
    rep.dissipative = dissipative_order(tab);
    try {
        rep.dispersive = dispersive_order(tab);
    } catch (const std::runtime_error&) {
        rep.dispersive = -1;  // below measurable phase error everywhere
    }
    rep.phi_norm = dispersion_norm(tab);
    rep.a_norm = dissipation_norm(tab);
    if (tab.R == 2) rep.Y = param_Y(tab);
    if (tab.R == 3) rep.X = param_X(tab);
    return rep;
}

std::string report_to_json(const VerifyReport& r) {
    nlohmann::json j;
    j["name"] = r.name;
    j["stages"] = r.stages;
    j["classical_order"] = r.classical_order;
    if (r.dissipative.infinite)
        j["dissipative_order"] = "infinite";
    else
        j["dissipative_order"] = r.dissipative.p;
    if (r.dispersive < 0)
        j["dispersive_order"] = "above_measurable";
    else
        j["dispersive_order"] = r.dispersive;
    j["dispersion_norm"] = r.phi_norm;
    j["dissipation_norm"] = r.a_norm;
    if (r.Y) j["Y"] = *r.Y;
    if (r.X) j["X"] = *r.X;
    return j.dump(1);
}

}  // namespace irkwl
