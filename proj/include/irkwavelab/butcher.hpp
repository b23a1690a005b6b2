#pragma once
// Butcher tableaux, rooted-tree order conditions, and the scheme registry.
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace irkwl {

// R-stage Runge-Kutta tableau. A is row-major R*R, b and c have length R.
// Immutable after construction; cheap to copy.
struct Tableau {
    std::string name;
    int R = 0;
    std::vector<double> A;
    std::vector<double> b;
    std::vector<double> c;

    double a(int r, int s) const { return A[static_cast<size_t>(r) * R + s]; }

    // Checks dimensions and the row-sum identity c_r = sum_s a_rs.
    // Throws std::invalid_argument on violation.
    void validate(double tol = 1e-12) const;
};

// Rooted tree for order conditions. Children are stored sorted by their
// canonical encoding so isomorphic trees compare equal.
struct RootedTree {
    std::vector<RootedTree> children;
    int order = 1;           // node count
    std::string encoding;    // canonical parenthesis string

    static RootedTree leaf();
    static RootedTree with_children(std::vector<RootedTree> kids);
};

// All non-isomorphic rooted trees grouped by order 1..max_order.
// Counts per order follow 1, 1, 2, 4, 9, 20, ... ; max_order in [1, 10].
std::vector<std::vector<RootedTree>> enumerate_trees(int max_order);

// Elementary weight Phi(t) of a tree for a tableau: b^T prod_children(A w).
double elementary_weight(const RootedTree& t, const Tableau& tab);

// Tree density gamma(t): gamma(leaf) = 1, gamma(t) = order * prod gamma(child).
// Exact in 64-bit integer for order <= 10.
long long tree_density(const RootedTree& t);

// Largest p <= 8 with |Phi(t) - 1/gamma(t)| <= tol for every tree of order <= p.
int order_of_accuracy(const Tableau& tab, double tol = 1e-10);

// ----- registry ---------------------------------------------------------

// Registry metadata carried alongside each builtin tableau.
struct SchemeInfo {
    std::string family;                 // e.g. "S2A", "GaussLegendre", "Euler"
    std::optional<double> alpha;        // weight exponent; empty = asymptotic
    bool asymptotic_alpha = false;
    std::string param_name;             // "Y" or "X" (empty for BE/FE)
    std::optional<double> param_value;
    std::vector<std::string> closures;  // closure equations, parser grammar
    int order = 0;                      // classical order
    std::map<std::string, double> published;  // 10-digit reference values
    std::map<std::string, double> published_misprint;  // printed-but-wrong entries
};

// Look up a builtin scheme. Throws std::out_of_range with a descriptive
// message for unknown names.
const Tableau& builtin_scheme(const std::string& name);
const SchemeInfo& scheme_info(const std::string& name);
std::vector<std::string> registry_names();

// Closed-form Gauss-Legendre tableaux (for tests against the data file).
Tableau gauss_legendre_2();  // IRK24
Tableau gauss_legendre_3();  // IRK36

// ----- serialization ----------------------------------------------------

// JSON object {name, R, A (row-major), b, c}; reader validates invariants,
// writer round-trips doubles exactly.
std::string tableau_to_json(const Tableau& tab);
Tableau tableau_from_json(const std::string& text);
Tableau tableau_from_json_file(const std::string& path);

// Directory holding irk_schemes.json / spatial_operators.json. Resolution:
// IRKWAVELAB_DATA env var, else the source-tree data directory baked in at
// configure time, else "./data".
std::string data_dir();

}  // namespace irkwl
