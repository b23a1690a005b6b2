// Tableau and order-condition machinery: rooted-tree enumeration against the
// known counting sequence, elementary weights against hand-expanded formulas
// and an independent nonlinear-ODE step oracle, the scheme registry against
// its published reference values, and JSON round-trips.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <map>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "irkwavelab/butcher.hpp"

using namespace irkwl;

namespace {

// One scalar-autonomous implicit RK step u' = f(u) solved by fixed-point
// iteration on the stage values (contractive for dt * |f'| << 1). Used as an
// order oracle that shares no code with elementary_weight / tree machinery.
double scalar_step(const Tableau& tab, double (*f)(double), double u0, double dt) {
    std::vector<double> g(static_cast<size_t>(tab.R), u0);
    for (int it = 0; it < 400; ++it) {
        double delta = 0.0;
        for (int r = 0; r < tab.R; ++r) {
            double acc = u0;
            for (int s = 0; s < tab.R; ++s) acc += dt * tab.a(r, s) * f(g[static_cast<size_t>(s)]);
            delta = std::max(delta, std::abs(acc - g[static_cast<size_t>(r)]));
            g[static_cast<size_t>(r)] = acc;
        }
        if (delta < 1e-16) break;
    }
    double u1 = u0;
    for (int r = 0; r < tab.R; ++r) u1 += dt * tab.b[static_cast<size_t>(r)] * f(g[static_cast<size_t>(r)]);
    return u1;
}

double quadratic(double u) { return u * u; }

// Tableau coefficient addressed by registry key ("b2", "a13", ...).
double coeff_by_key(const Tableau& tab, const std::string& key) {
    if (key[0] == 'b') return tab.b[static_cast<size_t>(key[1] - '1')];
    return tab.a(key[1] - '1', key[2] - '1');
}

}  // namespace

TEST_CASE("rooted tree counts follow 1, 1, 2, 4, 9, 20") {
    const auto trees = enumerate_trees(6);
    REQUIRE(trees.size() == 6);
    const size_t expect[6] = {1, 1, 2, 4, 9, 20};
    for (size_t k = 0; k < 6; ++k) CHECK(trees[k].size() == expect[k]);
    // Canonical encodings must be pairwise distinct within an order.
    for (const auto& level : trees) {
        std::set<std::string> enc;
        for (const auto& t : level) enc.insert(t.encoding);
        CHECK(enc.size() == level.size());
    }
    CHECK_THROWS_AS(enumerate_trees(0), std::invalid_argument);
    CHECK_THROWS_AS(enumerate_trees(11), std::invalid_argument);
}

TEST_CASE("tree densities and weights match hand expansions at order 3") {
    const auto trees = enumerate_trees(3);
    REQUIRE(trees[2].size() == 2);

    std::mt19937 rng(20240117);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    Tableau tab;
    tab.name = "random3";
    tab.R = 3;
    tab.A.resize(9);
    for (double& a : tab.A) a = U(rng);
    tab.b = {U(rng), U(rng), U(rng)};
    tab.c.resize(3);
    for (int r = 0; r < 3; ++r) tab.c[static_cast<size_t>(r)] = tab.a(r, 0) + tab.a(r, 1) + tab.a(r, 2);

    for (const auto& t : trees[2]) {
        const bool bushy = t.children.size() == 2;     // [tau, tau] vs [[tau]]
        CHECK(tree_density(t) == (bushy ? 3 : 6));
        double direct = 0.0;
        for (int r = 0; r < 3; ++r) {
            if (bushy) {
                direct += tab.b[static_cast<size_t>(r)] * tab.c[static_cast<size_t>(r)] * tab.c[static_cast<size_t>(r)];
            } else {
                for (int s = 0; s < 3; ++s)
                    direct += tab.b[static_cast<size_t>(r)] * tab.a(r, s) * tab.c[static_cast<size_t>(s)];
            }
        }
        CHECK(std::abs(elementary_weight(t, tab) - direct) < 1e-14);
    }
}

TEST_CASE("order_of_accuracy agrees with a nonlinear one-step oracle") {
    // Random consistent tableaux (b scaled to sum 1). The local error of one
    // step on u' = u^2, u(0) = 1 (exact 1/(1 - t)) must scale like dt^(p+1).
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> U(-0.6, 0.6);
    int checked = 0;
    while (checked < 3) {
        Tableau tab;
        tab.R = 2;
        tab.A = {U(rng), U(rng), U(rng), U(rng)};
        tab.b = {U(rng), U(rng)};
        const double sb = tab.b[0] + tab.b[1];
        if (std::abs(sb) < 0.2) continue;
        tab.b[0] /= sb;
        tab.b[1] /= sb;
        tab.c = {tab.a(0, 0) + tab.a(0, 1), tab.a(1, 0) + tab.a(1, 1)};

        const int p = order_of_accuracy(tab);
        REQUIRE(p >= 1);
        if (p > 2) continue;  // vanishing odds; the dt^6 local error would sit near roundoff

        const double dt1 = 0.04, dt2 = 0.02;
        const double e1 = std::abs(scalar_step(tab, quadratic, 1.0, dt1) - 1.0 / (1.0 - dt1));
        const double e2 = std::abs(scalar_step(tab, quadratic, 1.0, dt2) - 1.0 / (1.0 - dt2));
        REQUIRE(e2 > 1e-13);
        const double p_emp = std::log2(e1 / e2) - 1.0;
        CHECK(std::abs(p_emp - p) < 0.35);
        ++checked;
    }
}

TEST_CASE("registry classical orders") {
    const std::map<std::string, int> expect = {
        {"S2A1", 2}, {"S2A2", 2}, {"S2A3", 2}, {"S2B1", 2}, {"S2B2", 2}, {"S2B3", 2},
        {"S2C1", 2}, {"S2C2", 2}, {"S2C3", 2}, {"S2D1", 4}, {"S2D2", 3}, {"S2D3", 3},
        {"S3A1", 4}, {"S3A2", 4}, {"S3A3", 4}, {"S3A4", 4}, {"S3B1", 4}, {"S3B2", 4},
        {"S3B3", 4}, {"S3B4", 4}, {"S3C1", 4}, {"S3C2", 4}, {"S3C3", 4}, {"S3C4", 4},
        {"S3D1", 4}, {"S3D2", 6}, {"S3D3", 4}, {"S3D4", 4},
        {"IRK24", 4}, {"IRK36", 6}, {"BE", 1}, {"FE", 1}};
    for (const auto& name : registry_names()) {
        const Tableau& tab = builtin_scheme(name);
        CHECK_NOTHROW(tab.validate());
        const auto it = expect.find(name);
        REQUIRE(it != expect.end());
        const int p = order_of_accuracy(tab);
        INFO(name, " measured order ", p);
        CHECK(p == it->second);
        CHECK(p == scheme_info(name).order);
    }
}

TEST_CASE("Gauss-Legendre members match their closed forms") {
    const Tableau g2 = gauss_legendre_2();
    const Tableau g3 = gauss_legendre_3();
    const double r3 = std::sqrt(3.0), r15 = std::sqrt(15.0);
    CHECK(std::abs(g2.a(0, 1) - (0.25 - r3 / 6.0)) < 1e-15);
    CHECK(std::abs(g3.b[1] - 4.0 / 9.0) < 1e-15);
    CHECK(std::abs(g3.a(0, 2) - (5.0 / 36.0 - r15 / 30.0)) < 1e-15);

    // IRK24 / IRK36 and the corresponding alpha = inf rows carry the same
    // coefficients to full precision in the registry.
    for (auto [name, closed] : {std::pair<const char*, const Tableau*>{"IRK24", &g2},
                                {"S2D1", &g2},
                                {"IRK36", &g3},
                                {"S3D2", &g3}}) {
        const Tableau& tab = builtin_scheme(name);
        REQUIRE(tab.R == closed->R);
        double dev = 0.0;
        for (size_t k = 0; k < tab.A.size(); ++k) dev = std::max(dev, std::abs(tab.A[k] - closed->A[k]));
        for (size_t k = 0; k < tab.b.size(); ++k) dev = std::max(dev, std::abs(tab.b[k] - closed->b[k]));
        INFO(name);
        CHECK(dev < 5e-10);
    }
}

TEST_CASE("high-order conditions fail where they should") {
    // Gauss-2 has order exactly 4: some order-5 tree must violate its
    // condition by a visible margin (the c^4 quadrature residual is ~5.6e-3).
    const Tableau g2 = gauss_legendre_2();
    const auto trees = enumerate_trees(5);
    double worst = 0.0;
    for (const auto& t : trees[4])
        worst = std::max(worst,
                         std::abs(elementary_weight(t, g2) - 1.0 / static_cast<double>(tree_density(t))));
    CHECK(worst > 1e-3);
}

TEST_CASE("polished coefficients reproduce the published reference values") {
    for (const auto& name : registry_names()) {
        const SchemeInfo& info = scheme_info(name);
        if (info.published.empty()) continue;
        const Tableau& tab = builtin_scheme(name);
        for (const auto& [key, pub] : info.published) {
            const double ours = coeff_by_key(tab, key);
            INFO(name, " ", key);
            if (info.published_misprint.count(key)) {
                // The printed digit string is inconsistent with the row's own
                // closure equations; the registry stores the corrected value.
                CHECK(std::abs(ours - pub) > 1e-7);
                CHECK(std::abs(ours - pub) < 1e-5);
            } else {
                CHECK(std::abs(ours - pub) <= 5e-10);
            }
        }
    }
    // Exactly one registry row carries a misprint annotation (S2B2 a22).
    int misprints = 0;
    for (const auto& name : registry_names()) misprints += !scheme_info(name).published_misprint.empty();
    CHECK(misprints == 1);
    CHECK(scheme_info("S2B2").published_misprint.count("a22") == 1);
}

TEST_CASE("tableau validation rejects broken row sums") {
    Tableau tab = builtin_scheme("S2A1");
    tab.c[0] += 1e-6;
    CHECK_THROWS_AS(tab.validate(), std::invalid_argument);
    tab = builtin_scheme("S2A1");
    tab.b.pop_back();
    CHECK_THROWS_AS(tab.validate(), std::invalid_argument);
}

TEST_CASE("JSON round-trip is exact") {
    for (const char* name : {"S2B2", "S3D1", "IRK36"}) {
        const Tableau& tab = builtin_scheme(name);
        const Tableau back = tableau_from_json(tableau_to_json(tab));
        CHECK(back.name == tab.name);
        REQUIRE(back.R == tab.R);
        for (size_t k = 0; k < tab.A.size(); ++k) CHECK(back.A[k] == tab.A[k]);
        for (size_t k = 0; k < tab.b.size(); ++k) CHECK(back.b[k] == tab.b[k]);
        for (size_t k = 0; k < tab.c.size(); ++k) CHECK(back.c[k] == tab.c[k]);
    }
    CHECK_THROWS(tableau_from_json("{\"name\":\"x\",\"R\":2}"));
    // Row-sum violations are caught on read, not just on use.
    CHECK_THROWS_AS(tableau_from_json("{\"name\":\"x\",\"R\":1,\"A\":[0.5],\"b\":[1.0],\"c\":[0.3]}"),
                    std::invalid_argument);
}

TEST_CASE("unknown registry names throw out_of_range") {
    CHECK_THROWS_AS(builtin_scheme("S9Z9"), std::out_of_range);
    CHECK_THROWS_AS(scheme_info("S9Z9"), std::out_of_range);
    CHECK(registry_names().size() == 32);
}
