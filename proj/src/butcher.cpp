#include "irkwavelab/butcher.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <sstream>

#include <json.hpp>

#ifndef IRKWAVELAB_SOURCE_DATA_DIR
#define IRKWAVELAB_SOURCE_DATA_DIR "data"
#endif

namespace irkwl {

using nlohmann::json;

void Tableau::validate(double tol) const {
    if (R < 1) throw std::invalid_argument("tableau '" + name + "': R must be >= 1");
    if (A.size() != static_cast<size_t>(R) * R || b.size() != static_cast<size_t>(R) ||
        c.size() != static_cast<size_t>(R))
        throw std::invalid_argument("tableau '" + name + "': A/b/c dimensions inconsistent with R");
    for (int r = 0; r < R; ++r) {
        double rowsum = 0.0;
        for (int s = 0; s < R; ++s) rowsum += a(r, s);
        if (std::abs(rowsum - c[r]) > tol) {
            std::ostringstream os;
            os << "tableau '" << name << "': row-sum invariant violated at row " << r
               << " (|sum a_rs - c_r| = " << std::abs(rowsum - c[r]) << ")";
            throw std::invalid_argument(os.str());
        }
    }
}

// ----- rooted trees ------------------------------------------------------

RootedTree RootedTree::leaf() {
    RootedTree t;
    t.order = 1;
    t.encoding = "()";
    return t;
}

RootedTree RootedTree::with_children(std::vector<RootedTree> kids) {
    RootedTree t;
    t.order = 1;
    std::sort(kids.begin(), kids.end(), [](const RootedTree& a, const RootedTree& b) {
        if (a.order != b.order) return a.order < b.order;
        return a.encoding < b.encoding;
    });
    std::string enc = "(";
    for (const auto& k : kids) {
        t.order += k.order;
        enc += k.encoding;
    }
    enc += ")";
    t.children = std::move(kids);
    t.encoding = std::move(enc);
    return t;
}

namespace {

// Extend each tree set by adding one more child of order <= remaining budget.
// Children multisets are generated in non-decreasing canonical order to avoid
// duplicates; dedupe by encoding as a safety net.
void gen_children(int budget, size_t min_choice, const std::vector<RootedTree>& pool,
                  std::vector<RootedTree>& current, std::vector<RootedTree>& out) {
    if (budget == 0) {
        out.push_back(RootedTree::with_children(current));
        return;
    }
    for (size_t i = min_choice; i < pool.size(); ++i) {
        if (pool[i].order > budget) continue;
        current.push_back(pool[i]);
        gen_children(budget - pool[i].order, i, pool, current, out);
        current.pop_back();
    }
}

}  // namespace

std::vector<std::vector<RootedTree>> enumerate_trees(int max_order) {
    if (max_order < 1 || max_order > 10)
        throw std::invalid_argument("enumerate_trees: max_order must lie in [1, 10]");
    std::vector<std::vector<RootedTree>> by_order(max_order);
    by_order[0].push_back(RootedTree::leaf());
    std::vector<RootedTree> pool;  // all trees of order < current, canonical order
    for (int order = 2; order <= max_order; ++order) {
        pool.clear();
        for (int q = 0; q < order - 1; ++q)
            pool.insert(pool.end(), by_order[q].begin(), by_order[q].end());
        std::sort(pool.begin(), pool.end(), [](const RootedTree& a, const RootedTree& b) {
            if (a.order != b.order) return a.order < b.order;
            return a.encoding < b.encoding;
        });
        std::vector<RootedTree> kids, made;
        gen_children(order - 1, 0, pool, kids, made);
        std::sort(made.begin(), made.end(),
                  [](const RootedTree& a, const RootedTree& b) { return a.encoding < b.encoding; });
        made.erase(std::unique(made.begin(), made.end(),
                               [](const RootedTree& a, const RootedTree& b) {
                                   return a.encoding == b.encoding;
                               }),
                   made.end());
        by_order[order - 1] = std::move(made);
    }
    return by_order;
}

namespace {

// Weight vector w(t): product over children of A * w(child); empty product
// is the all-ones vector. Phi(t) = b^T w(t).
std::vector<double> weight_vector(const RootedTree& t, const Tableau& tab) {
    std::vector<double> w(static_cast<size_t>(tab.R), 1.0);
    for (const auto& child : t.children) {
        std::vector<double> wc = weight_vector(child, tab);
        for (int r = 0; r < tab.R; ++r) {
            double acc = 0.0;
            for (int s = 0; s < tab.R; ++s) acc += tab.a(r, s) * wc[static_cast<size_t>(s)];
            w[static_cast<size_t>(r)] *= acc;
        }
    }
    return w;
}

}  // namespace

double elementary_weight(const RootedTree& t, const Tableau& tab) {
    tab.validate(1e-9);
    std::vector<double> w = weight_vector(t, tab);
    double phi = 0.0;
    for (int r = 0; r < tab.R; ++r) phi += tab.b[static_cast<size_t>(r)] * w[static_cast<size_t>(r)];
    return phi;
}

long long tree_density(const RootedTree& t) {
    long long g = t.order;
    for (const auto& child : t.children) g *= tree_density(child);
    return g;
}

int order_of_accuracy(const Tableau& tab, double tol) {
    static std::vector<std::vector<RootedTree>> all = enumerate_trees(8);
    int p = 0;
    for (int order = 1; order <= 8; ++order) {
        for (const auto& t : all[static_cast<size_t>(order - 1)]) {
            double phi = elementary_weight(t, tab);
            double target = 1.0 / static_cast<double>(tree_density(t));
            if (std::abs(phi - target) > tol) return p;
        }
        p = order;
    }
    return p;
}

// ----- registry ----------------------------------------------------------

std::string data_dir() {
    if (const char* env = std::getenv("IRKWAVELAB_DATA"); env && *env) return env;
    return IRKWAVELAB_SOURCE_DATA_DIR;
}

namespace {

struct Registry {
    std::map<std::string, Tableau> tableaux;
    std::map<std::string, SchemeInfo> infos;
    std::vector<std::string> names;
};

json parse_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open data file: " + path);
    return json::parse(in, nullptr, /*allow_exceptions=*/true, /*ignore_comments=*/true);
}

const Registry& registry() {
    static Registry reg;
    static std::once_flag once;
    std::call_once(once, [] {
        json doc = parse_json_file(data_dir() + "/irk_schemes.json");
        for (auto& [name, s] : doc.at("schemes").items()) {
            Tableau tab;
            tab.name = name;
            tab.R = s.at("stages").get<int>();
            for (const auto& row : s.at("A"))
                for (const auto& v : row) tab.A.push_back(v.get<double>());
            tab.b = s.at("b").get<std::vector<double>>();
            tab.c = s.at("c").get<std::vector<double>>();
            tab.validate(1e-9);

            SchemeInfo info;
            info.family = s.value("family", "");
            info.order = s.value("order", 0);
            if (s.contains("alpha")) {
                std::string a = s.at("alpha").get<std::string>();
                if (a == "inf")
                    info.asymptotic_alpha = true;
                else
                    info.alpha = std::stod(a);
            }
            info.param_name = s.value("param", "");
            if (s.contains("param_value")) info.param_value = s.at("param_value").get<double>();
            if (s.contains("closures"))
                info.closures = s.at("closures").get<std::vector<std::string>>();
            if (s.contains("published"))
                for (auto& [k, v] : s.at("published").items())
                    info.published[k] = std::stod(v.get<std::string>());
            if (s.contains("published_misprint"))
                for (auto& [k, v] : s.at("published_misprint").items())
                    info.published_misprint[k] = std::stod(v.at("printed").get<std::string>());
            reg.tableaux.emplace(name, std::move(tab));
            reg.infos.emplace(name, std::move(info));
        }
        for (const auto& [name, t] : reg.tableaux) reg.names.push_back(name);
        std::sort(reg.names.begin(), reg.names.end());
    });
    return reg;
}

}  // namespace

const Tableau& builtin_scheme(const std::string& name) {
    const Registry& reg = registry();
    auto it = reg.tableaux.find(name);
    if (it == reg.tableaux.end())
        throw std::out_of_range("unknown scheme '" + name +
                                "'; run `schemes list` for the available names");
    return it->second;
}

const SchemeInfo& scheme_info(const std::string& name) {
    const Registry& reg = registry();
    auto it = reg.infos.find(name);
    if (it == reg.infos.end())
        throw std::out_of_range("unknown scheme '" + name +
                                "'; run `schemes list` for the available names");
    return it->second;
}

std::vector<std::string> registry_names() { return registry().names; }

Tableau gauss_legendre_2() {
    const double s3 = std::sqrt(3.0);
    Tableau t;
    t.name = "IRK24";
    t.R = 2;
    t.A = {0.25, 0.25 - s3 / 6.0, 0.25 + s3 / 6.0, 0.25};
    t.b = {0.5, 0.5};
    t.c = {0.5 - s3 / 6.0, 0.5 + s3 / 6.0};
    return t;
}

Tableau gauss_legendre_3() {
    const double s15 = std::sqrt(15.0);
    Tableau t;
    t.name = "IRK36";
    t.R = 3;
    t.A = {5.0 / 36.0,            2.0 / 9.0 - s15 / 15.0, 5.0 / 36.0 - s15 / 30.0,
           5.0 / 36.0 + s15 / 24.0, 2.0 / 9.0,            5.0 / 36.0 - s15 / 24.0,
           5.0 / 36.0 + s15 / 30.0, 2.0 / 9.0 + s15 / 15.0, 5.0 / 36.0};
    t.b = {5.0 / 18.0, 4.0 / 9.0, 5.0 / 18.0};
    t.c = {0.5 - s15 / 10.0, 0.5, 0.5 + s15 / 10.0};
    return t;
}

// ----- serialization -----------------------------------------------------

std::string tableau_to_json(const Tableau& tab) {
    json j;
    j["name"] = tab.name;
    j["R"] = tab.R;
    j["A"] = tab.A;
    j["b"] = tab.b;
    j["c"] = tab.c;
    return j.dump(1);
}

Tableau tableau_from_json(const std::string& text) {
    json j = json::parse(text, nullptr, true, true);
    Tableau tab;
    tab.name = j.value("name", "");
    tab.R = j.at("R").get<int>();
    tab.A = j.at("A").get<std::vector<double>>();
    tab.b = j.at("b").get<std::vector<double>>();
    tab.c = j.at("c").get<std::vector<double>>();
    tab.validate(1e-9);
    return tab;
}

Tableau tableau_from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open tableau file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return tableau_from_json(ss.str());
}

}  // namespace irkwl
