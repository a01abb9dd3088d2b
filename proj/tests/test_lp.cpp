#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "vinfra/lp.hpp"
#include "vinfra/rng.hpp"

#include <cmath>
#include <cstring>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

using namespace vinfra;

namespace {

// --- vertex enumeration oracle -------------------------------------------
// Enumerates all candidate vertices (n tight constraints out of rows and
// x_j = 0 planes, equalities always tight), solves the square system by
// Gaussian elimination and keeps the best feasible objective.

bool gauss_solve(std::vector<std::vector<double>> a, std::vector<double> b,
                 std::vector<double>& x) {
    const std::size_t n = b.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
        if (std::abs(a[piv][col]) < 1e-10) return false;
        std::swap(a[piv], a[col]);
        std::swap(b[piv], b[col]);
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = a[r][col] / a[col][col];
            if (f == 0.0) continue;
            for (std::size_t j = col; j < n; ++j) a[r][j] -= f * a[col][j];
            b[r] -= f * b[col];
        }
    }
    x.resize(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = b[i] / a[i][i];
    return true;
}

double vertex_enumeration_optimum(const LinearProgram& lp) {
    const std::size_t n = lp.variables().size();
    const auto& rows = lp.constraints();
    // planes: first the rows, then x_j = 0
    const std::size_t planes = rows.size() + n;
    std::vector<std::size_t> forced; // equality rows
    std::vector<std::size_t> optional;
    for (std::size_t r = 0; r < rows.size(); ++r)
        (rows[r].relation == Relation::Equal ? forced : optional).push_back(r);
    for (std::size_t j = 0; j < n; ++j) optional.push_back(rows.size() + j);
    REQUIRE(forced.size() <= n);
    const std::size_t pick_count = n - forced.size();

    auto dense_row = [&](std::size_t plane, std::vector<double>& out, double& rhs) {
        out.assign(n, 0.0);
        if (plane < rows.size()) {
            for (const auto& [v, c] : rows[plane].terms) out[v] += c;
            rhs = rows[plane].rhs;
        } else {
            out[plane - rows.size()] = 1.0;
            rhs = 0.0;
        }
    };

    double best = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> idx(pick_count);
    for (std::size_t i = 0; i < pick_count; ++i) idx[i] = i;
    const std::size_t choices = optional.size();
    if (pick_count > choices) return best;
    bool more = true;
    while (more) {
        std::vector<std::vector<double>> a;
        std::vector<double> b;
        std::vector<double> row(n);
        double rhs;
        for (std::size_t f : forced) {
            dense_row(f, row, rhs);
            a.push_back(row);
            b.push_back(rhs);
        }
        for (std::size_t i : idx) {
            dense_row(optional[i], row, rhs);
            a.push_back(row);
            b.push_back(rhs);
        }
        std::vector<double> x;
        if (gauss_solve(a, b, x)) {
            bool ok = true;
            for (std::size_t j = 0; j < n && ok; ++j) ok = x[j] >= -1e-7;
            for (std::size_t r = 0; r < rows.size() && ok; ++r) {
                double lhs = 0.0;
                for (const auto& [v, c] : rows[r].terms) lhs += c * x[v];
                if (rows[r].relation == Relation::LessEqual)
                    ok = lhs <= rows[r].rhs + 1e-7;
                else if (rows[r].relation == Relation::GreaterEqual)
                    ok = lhs >= rows[r].rhs - 1e-7;
                else
                    ok = std::abs(lhs - rows[r].rhs) <= 1e-7;
            }
            if (ok) {
                double obj = 0.0;
                for (std::size_t j = 0; j < n; ++j) obj += lp.variables()[j].objective * x[j];
                best = std::min(best, obj);
            }
        }
        // next combination
        more = false;
        for (std::size_t i = pick_count; i-- > 0;) {
            if (idx[i] + (pick_count - i) < choices) {
                ++idx[i];
                for (std::size_t j = i + 1; j < pick_count; ++j) idx[j] = idx[j - 1] + 1;
                more = true;
                break;
            }
        }
        (void)planes;
    }
    return best;
}

LinearProgram random_feasible_lp(Rng& rng) {
    LinearProgram lp;
    const std::size_t n = static_cast<std::size_t>(rng.next_int(2, 5));
    const std::size_t m = static_cast<std::size_t>(rng.next_int(1, 5));
    std::vector<double> xstar(n);
    for (std::size_t j = 0; j < n; ++j) {
        lp.add_variable("x" + std::to_string(j));
        xstar[j] = 3.0 * rng.next_double();
        lp.add_objective(j, 0.1 + 2.0 * rng.next_double()); // positive: bounded below
    }
    std::size_t equalities = 0;
    for (std::size_t r = 0; r < m; ++r) {
        std::vector<std::pair<std::size_t, double>> terms;
        double lhs = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (rng.next_bool(0.6)) {
                const double c = -2.0 + 4.0 * rng.next_double();
                if (c != 0.0) {
                    terms.emplace_back(j, c);
                    lhs += c * xstar[j];
                }
            }
        }
        if (terms.empty()) terms.emplace_back(0, 1.0), lhs = xstar[0];
        const int kind = static_cast<int>(rng.next_int(0, 2));
        if (kind == 0) {
            lp.add_constraint("r" + std::to_string(r), terms, Relation::LessEqual,
                              lhs + rng.next_double());
        } else if (kind == 1) {
            lp.add_constraint("r" + std::to_string(r), terms, Relation::GreaterEqual,
                              lhs - rng.next_double());
        } else if (equalities + 1 < n) {
            lp.add_constraint("r" + std::to_string(r), terms, Relation::Equal, lhs);
            ++equalities;
        } else {
            lp.add_constraint("r" + std::to_string(r), terms, Relation::LessEqual,
                              lhs + rng.next_double());
        }
    }
    return lp;
}

// --- minimal independent MPS reader ---------------------------------------

std::vector<std::string> tokens(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream is(line);
    std::string t;
    while (is >> t) out.push_back(t);
    return out;
}

LinearProgram parse_mps(const std::string& text) {
    LinearProgram lp;
    enum { None, Rows, Columns, Rhs, Bounds } section = None;
    std::map<std::string, Relation> row_rel;
    std::map<std::string, std::size_t> row_index;
    std::vector<std::tuple<std::string, std::string, double>> entries;
    std::map<std::string, double> rhs;
    std::map<std::string, std::pair<double, std::optional<double>>> bounds;
    std::vector<std::string> col_order;
    std::map<std::string, bool> col_integral;
    bool integer_block = false;

    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '*') continue;
        if (line[0] != ' ') {
            const auto t = tokens(line);
            if (t[0] == "ROWS") section = Rows;
            else if (t[0] == "COLUMNS") section = Columns;
            else if (t[0] == "RHS") section = Rhs;
            else if (t[0] == "BOUNDS") section = Bounds;
            else if (t[0] == "ENDATA") break;
            continue;
        }
        const auto t = tokens(line);
        if (section == Rows) {
            if (t[0] == "N") continue; // objective row
            row_rel[t[1]] = t[0] == "L" ? Relation::LessEqual
                                        : (t[0] == "G" ? Relation::GreaterEqual : Relation::Equal);
        } else if (section == Columns) {
            if (t.size() >= 3 && t[1] == "'MARKER'") {
                integer_block = t[2] == "'INTORG'";
                continue;
            }
            const std::string& col = t[0];
            if (!col_integral.count(col)) {
                col_order.push_back(col);
                col_integral[col] = integer_block;
            }
            for (std::size_t i = 1; i + 1 < t.size(); i += 2)
                entries.emplace_back(col, t[i], std::stod(t[i + 1]));
        } else if (section == Rhs) {
            for (std::size_t i = 1; i + 1 < t.size(); i += 2) rhs[t[i]] = std::stod(t[i + 1]);
        } else if (section == Bounds) {
            auto& b = bounds[t[2]];
            if (t[0] == "UP") b.second = std::stod(t[3]);
            else if (t[0] == "LO") b.first = std::stod(t[3]);
            else if (t[0] == "FX") b = {std::stod(t[3]), std::stod(t[3])};
        }
    }

    std::map<std::string, std::size_t> col_index;
    for (const auto& c : col_order) {
        const auto b = bounds.count(c) ? bounds[c] : std::make_pair(0.0, std::optional<double>{});
        col_index[c] = lp.add_variable(c, b.first, b.second, col_integral[c]);
    }
    std::map<std::string, std::vector<std::pair<std::size_t, double>>> row_terms;
    for (const auto& [col, row, val] : entries) {
        if (row == "COST") {
            if (val != 0.0) lp.add_objective(col_index[col], val);
        } else {
            row_terms[row].emplace_back(col_index[col], val);
        }
    }
    for (const auto& [name, rel] : row_rel)
        lp.add_constraint(name, row_terms[name], rel, rhs.count(name) ? rhs[name] : 0.0);
    return lp;
}

} // namespace

TEST_CASE("basic solves") {
    SUBCASE("min x subject to x >= 3") {
        LinearProgram lp;
        const auto x = lp.add_variable("x");
        lp.add_objective(x, 1.0);
        lp.add_constraint("c", {{x, 1.0}}, Relation::GreaterEqual, 3.0);
        const auto sol = solve(lp, true);
        REQUIRE(sol.status == LpStatus::Optimal);
        CHECK(sol.values[x] == doctest::Approx(3.0).epsilon(1e-9));
        CHECK(sol.objective == doctest::Approx(3.0).epsilon(1e-9));
    }
    SUBCASE("min x+y with x+y >= 2, x-y = 0") {
        LinearProgram lp;
        const auto x = lp.add_variable("x");
        const auto y = lp.add_variable("y");
        lp.add_objective(x, 1.0);
        lp.add_objective(y, 1.0);
        lp.add_constraint("sum", {{x, 1.0}, {y, 1.0}}, Relation::GreaterEqual, 2.0);
        lp.add_constraint("eq", {{x, 1.0}, {y, -1.0}}, Relation::Equal, 0.0);
        const auto sol = solve(lp, true);
        REQUIRE(sol.status == LpStatus::Optimal);
        CHECK(sol.values[x] == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(sol.values[y] == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(sol.objective == doctest::Approx(2.0).epsilon(1e-9));
    }
    SUBCASE("infeasible") {
        LinearProgram lp;
        const auto x = lp.add_variable("x");
        lp.add_constraint("a", {{x, 1.0}}, Relation::LessEqual, 1.0);
        lp.add_constraint("b", {{x, 1.0}}, Relation::GreaterEqual, 2.0);
        CHECK(solve(lp, true).status == LpStatus::Infeasible);
    }
    SUBCASE("unbounded") {
        LinearProgram lp;
        const auto x = lp.add_variable("x");
        lp.add_objective(x, -1.0);
        CHECK(solve(lp, true).status == LpStatus::Unbounded);
    }
    SUBCASE("upper bound") {
        LinearProgram lp;
        const auto x = lp.add_variable("x", 0.0, 4.5);
        lp.add_objective(x, -1.0);
        const auto sol = solve(lp, true);
        REQUIRE(sol.status == LpStatus::Optimal);
        CHECK(sol.values[x] == doctest::Approx(4.5).epsilon(1e-9));
    }
    SUBCASE("shifted lower bound") {
        LinearProgram lp;
        const auto x = lp.add_variable("x", 2.0);
        lp.add_objective(x, 1.0);
        const auto sol = solve(lp, true);
        REQUIRE(sol.status == LpStatus::Optimal);
        CHECK(sol.values[x] == doctest::Approx(2.0).epsilon(1e-9));
        CHECK(sol.objective == doctest::Approx(2.0).epsilon(1e-9));
    }
    SUBCASE("integral flags demand relaxation") {
        LinearProgram lp;
        lp.add_variable("x", 0.0, 1.0, true);
        CHECK_THROWS_AS(solve(lp, false), std::invalid_argument);
        CHECK_NOTHROW(solve(lp, true));
    }
}

TEST_CASE("random LPs match the vertex enumeration oracle") {
    Rng rng(314159);
    int solved = 0;
    for (int t = 0; t < 20; ++t) {
        auto lp = random_feasible_lp(rng);
        const auto sol = solve(lp, true);
        REQUIRE(sol.status == LpStatus::Optimal); // feasible by construction, bounded by c > 0
        const double oracle = vertex_enumeration_optimum(lp);
        REQUIRE(oracle < std::numeric_limits<double>::infinity());
        CHECK(sol.objective == doctest::Approx(oracle).epsilon(1e-6));
        ++solved;
    }
    CHECK(solved == 20);
}

TEST_CASE("solution properties") {
    Rng rng(271828);
    auto lp = random_feasible_lp(rng);
    const auto sol = solve(lp, true);
    REQUIRE(sol.status == LpStatus::Optimal);

    SUBCASE("determinism") {
        const auto again = solve(lp, true);
        REQUIRE(again.status == sol.status);
        REQUIRE(again.values.size() == sol.values.size());
        CHECK(std::memcmp(again.values.data(), sol.values.data(),
                          sol.values.size() * sizeof(double)) == 0);
        CHECK(again.objective == sol.objective);
    }
    SUBCASE("argmin invariant under positive objective scaling") {
        LinearProgram scaled = lp;
        for (std::size_t v = 0; v < lp.variables().size(); ++v)
            scaled.add_objective(v, 4.0 * lp.variables()[v].objective); // now 5x original
        const auto s2 = solve(scaled, true);
        REQUIRE(s2.status == LpStatus::Optimal);
        for (std::size_t v = 0; v < sol.values.size(); ++v)
            CHECK(s2.values[v] == doctest::Approx(sol.values[v]).epsilon(1e-9));
    }
    SUBCASE("no sampled feasible perturbation beats the optimum") {
        Rng noise(5150);
        for (int s = 0; s < 1000; ++s) {
            std::vector<double> x = sol.values;
            for (auto& v : x) v = std::max(0.0, v + 0.5 - noise.next_double());
            bool feasible = true;
            for (const auto& row : lp.constraints()) {
                double lhs = 0.0;
                for (const auto& [vi, c] : row.terms) lhs += c * x[vi];
                if (row.relation == Relation::LessEqual)
                    feasible = feasible && lhs <= row.rhs + 1e-9;
                else if (row.relation == Relation::GreaterEqual)
                    feasible = feasible && lhs >= row.rhs - 1e-9;
                else
                    feasible = feasible && std::abs(lhs - row.rhs) <= 1e-9;
            }
            if (!feasible) continue;
            double obj = 0.0;
            for (std::size_t v = 0; v < x.size(); ++v)
                obj += lp.variables()[v].objective * x[v];
            CHECK(obj >= sol.objective - 1e-9);
        }
    }
}

TEST_CASE("mps emission") {
    SUBCASE("sections present for a minimal program") {
        LinearProgram lp;
        const auto x = lp.add_variable("x", 0.0, 7.0);
        lp.add_constraint("cap", {{x, 1.0}}, Relation::LessEqual, 5.0);
        const auto text = emit_mps(lp);
        CHECK(text.find("NAME") != std::string::npos);
        CHECK(text.find("ROWS") != std::string::npos);
        CHECK(text.find("COLUMNS") != std::string::npos);
        CHECK(text.find("RHS") != std::string::npos);
        CHECK(text.find("BOUNDS") != std::string::npos);
        CHECK(text.find("ENDATA") != std::string::npos);
    }
    SUBCASE("integer markers") {
        LinearProgram lp;
        lp.add_variable("a");
        lp.add_variable("b", 0.0, 1.0, true);
        lp.add_variable("c");
        lp.add_objective(0, 1.0);
        lp.add_objective(1, 1.0);
        lp.add_objective(2, 1.0);
        const auto text = emit_mps(lp);
        CHECK(text.find("'INTORG'") != std::string::npos);
        CHECK(text.find("'INTEND'") != std::string::npos);
        CHECK(text.find("'INTORG'") < text.find("'INTEND'"));
    }
    SUBCASE("long names are mangled with a map comment") {
        LinearProgram lp;
        lp.add_variable("a_very_long_variable_name");
        lp.add_objective(0, 1.0);
        lp.add_constraint("an_even_longer_constraint_name", {{0, 1.0}}, Relation::GreaterEqual,
                          1.0);
        const auto text = emit_mps(lp);
        CHECK(text.find("* NAME-MAP COL C0000000 a_very_long_variable_name") != std::string::npos);
        CHECK(text.find("* NAME-MAP ROW R0000000 an_even_longer_constraint_name") !=
              std::string::npos);
    }
    SUBCASE("parse-back on random programs preserves the optimum") {
        Rng rng(161803);
        for (int t = 0; t < 10; ++t) {
            auto lp = random_feasible_lp(rng);
            auto reparsed = parse_mps(emit_mps(lp));
            const auto a = solve(lp, true);
            const auto b = solve(reparsed, true);
            REQUIRE(a.status == LpStatus::Optimal);
            REQUIRE(b.status == LpStatus::Optimal);
            CHECK(a.objective == doctest::Approx(b.objective).epsilon(1e-6));
        }
    }
    SUBCASE("emission is deterministic") {
        Rng rng(999);
        auto lp = random_feasible_lp(rng);
        CHECK(emit_mps(lp) == emit_mps(lp));
    }
}
