#include "vinfra/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace vinfra {

std::size_t LinearProgram::add_variable(std::string name, double lower,
                                        std::optional<double> upper, bool integral) {
    if (lower < 0.0) throw std::invalid_argument("lp: variable lower bounds must be >= 0");
    if (upper && *upper < lower) throw std::invalid_argument("lp: empty variable bound interval");
    if (index_.count(name)) throw std::invalid_argument("lp: duplicate variable " + name);
    const std::size_t id = vars_.size();
    index_.emplace(name, id);
    vars_.push_back({std::move(name), lower, upper, integral, 0.0});
    return id;
}

std::size_t LinearProgram::add_constraint(std::string name,
                                          std::vector<std::pair<std::size_t, double>> terms,
                                          Relation rel, double rhs) {
    for (const auto& [v, c] : terms) {
        (void)c;
        if (v >= vars_.size())
            throw std::invalid_argument("lp: constraint references unknown variable");
    }
    rows_.push_back({std::move(name), std::move(terms), rel, rhs});
    return rows_.size() - 1;
}

void LinearProgram::add_objective(std::size_t var, double coeff) {
    if (var >= vars_.size())
        throw std::invalid_argument("lp: objective references unknown variable");
    vars_[var].objective += coeff;
}

std::optional<std::size_t> LinearProgram::variable_index(const std::string& name) const {
    const auto it = index_.find(name);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

bool LinearProgram::has_integral_variables() const {
    return std::any_of(vars_.begin(), vars_.end(), [](const LpVariable& v) { return v.integral; });
}

namespace {

// Revised primal simplex over the standard form min c x, A x = b, x >= 0,
// with a dense explicit basis inverse. Columns are stored sparse.
class Simplex {
  public:
    explicit Simplex(std::size_t rows) : m_(rows), binv_(rows * rows, 0.0), rhs_(rows, 0.0) {
        for (std::size_t i = 0; i < m_; ++i) binv_[i * m_ + i] = 1.0;
    }

    std::size_t add_column(std::vector<std::pair<std::size_t, double>> col, double cost) {
        cols_.push_back(std::move(col));
        costs_.push_back(cost);
        return cols_.size() - 1;
    }

    void set_rhs(std::size_t row, double b) { rhs_[row] = b; }

    // returns false on pivot budget exhaustion
    bool run(const std::vector<std::size_t>& initial_basis, const SolveOptions& opts,
             const std::vector<bool>& priceable, std::size_t* pivot_budget, bool* unbounded) {
        basis_ = initial_basis;
        in_basis_.assign(cols_.size(), 0);
        for (std::size_t i : basis_) in_basis_[i] = 1;
        refactorize();
        *unbounded = false;

        std::vector<double> y(m_);
        std::vector<double> w(m_);
        while (true) {
            if (*pivot_budget == 0) return false;
            // y = c_B * Binv
            for (std::size_t j = 0; j < m_; ++j) y[j] = 0.0;
            for (std::size_t i = 0; i < m_; ++i) {
                const double cb = costs_[basis_[i]];
                if (cb == 0.0) continue;
                const double* row = &binv_[i * m_];
                for (std::size_t j = 0; j < m_; ++j) y[j] += cb * row[j];
            }
            // pricing: Dantzig first, Bland once the pivot count grows
            std::size_t enter = SIZE_MAX;
            const bool bland = pivots_done_ >= opts.dantzig_pivots;
            double best = -opts.reduced_cost_tol;
            for (std::size_t j = 0; j < cols_.size(); ++j) {
                if (in_basis_[j] || !priceable[j]) continue;
                double d = costs_[j];
                for (const auto& [r, a] : cols_[j]) d -= y[r] * a;
                if (d < best) {
                    best = d;
                    enter = j;
                    if (bland) break;
                }
            }
            if (enter == SIZE_MAX) return true; // optimal

            // w = Binv * A_enter
            for (std::size_t i = 0; i < m_; ++i) w[i] = 0.0;
            for (const auto& [r, a] : cols_[enter]) {
                for (std::size_t i = 0; i < m_; ++i) w[i] += binv_[i * m_ + r] * a;
            }

            // ratio test; ties resolved toward the smallest basis variable
            std::size_t leave = SIZE_MAX;
            double best_ratio = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < m_; ++i) {
                if (w[i] > 1e-9) {
                    const double ratio = std::max(basic_rhs_[i], 0.0) / w[i];
                    if (ratio < best_ratio - 1e-12 ||
                        (ratio < best_ratio + 1e-12 &&
                         (leave == SIZE_MAX || basis_[i] < basis_[leave]))) {
                        best_ratio = ratio;
                        leave = i;
                    }
                }
            }
            if (leave == SIZE_MAX) {
                *unbounded = true;
                return true;
            }

            pivot(enter, leave, w);
            --*pivot_budget;
            ++pivots_done_;
            if (pivots_done_ % 1024 == 0) refactorize();
        }
    }

    double objective() const {
        double acc = 0.0;
        for (std::size_t i = 0; i < m_; ++i) acc += costs_[basis_[i]] * basic_rhs_[i];
        return acc;
    }

    double value_of(std::size_t col) const {
        for (std::size_t i = 0; i < m_; ++i)
            if (basis_[i] == col) return std::max(basic_rhs_[i], 0.0);
        return 0.0;
    }

    const std::vector<std::size_t>& basis() const { return basis_; }
    double cost_of(std::size_t col) const { return costs_[col]; }
    void set_cost(std::size_t col, double c) { costs_[col] = c; }
    std::size_t column_count() const { return cols_.size(); }

  private:
    void pivot(std::size_t enter, std::size_t leave, const std::vector<double>& w) {
        const double piv = w[leave];
        double* lrow = &binv_[leave * m_];
        for (std::size_t j = 0; j < m_; ++j) lrow[j] /= piv;
        basic_rhs_[leave] /= piv;
        for (std::size_t i = 0; i < m_; ++i) {
            if (i == leave) continue;
            const double f = w[i];
            if (f == 0.0) continue;
            double* row = &binv_[i * m_];
            for (std::size_t j = 0; j < m_; ++j) row[j] -= f * lrow[j];
            basic_rhs_[i] -= f * basic_rhs_[leave];
        }
        in_basis_[basis_[leave]] = 0;
        in_basis_[enter] = 1;
        basis_[leave] = enter;
    }

    // rebuild the explicit inverse by Gauss-Jordan with partial pivoting;
    // counters floating-point drift over long pivot runs
    void refactorize() {
        std::vector<double> B(m_ * m_, 0.0);
        for (std::size_t i = 0; i < m_; ++i)
            for (const auto& [r, a] : cols_[basis_[i]]) B[r * m_ + i] = a;
        std::vector<double> inv(m_ * m_, 0.0);
        for (std::size_t i = 0; i < m_; ++i) inv[i * m_ + i] = 1.0;
        for (std::size_t col = 0; col < m_; ++col) {
            std::size_t piv = col;
            for (std::size_t r = col + 1; r < m_; ++r)
                if (std::abs(B[r * m_ + col]) > std::abs(B[piv * m_ + col])) piv = r;
            if (std::abs(B[piv * m_ + col]) < 1e-12) return; // keep the running inverse
            if (piv != col) {
                for (std::size_t j = 0; j < m_; ++j) {
                    std::swap(B[piv * m_ + j], B[col * m_ + j]);
                    std::swap(inv[piv * m_ + j], inv[col * m_ + j]);
                }
            }
            const double d = B[col * m_ + col];
            for (std::size_t j = 0; j < m_; ++j) {
                B[col * m_ + j] /= d;
                inv[col * m_ + j] /= d;
            }
            for (std::size_t r = 0; r < m_; ++r) {
                if (r == col) continue;
                const double f = B[r * m_ + col];
                if (f == 0.0) continue;
                for (std::size_t j = 0; j < m_; ++j) {
                    B[r * m_ + j] -= f * B[col * m_ + j];
                    inv[r * m_ + j] -= f * inv[col * m_ + j];
                }
            }
        }
        binv_ = std::move(inv);
        basic_rhs_.assign(m_, 0.0);
        for (std::size_t i = 0; i < m_; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < m_; ++j) acc += binv_[i * m_ + j] * rhs_[j];
            basic_rhs_[i] = acc;
        }
    }

    std::size_t m_;
    std::vector<std::vector<std::pair<std::size_t, double>>> cols_;
    std::vector<double> costs_;
    std::vector<double> binv_; // row-major m x m
    std::vector<double> rhs_;
    std::vector<double> basic_rhs_;
    std::vector<std::size_t> basis_;
    std::vector<char> in_basis_;
    std::size_t pivots_done_ = 0;
};

} // namespace

LpSolution solve(const LinearProgram& lp, bool relax_integrality, const SolveOptions& opts) {
    if (!relax_integrality && lp.has_integral_variables())
        throw std::invalid_argument(
            "lp: exact integral solves are not supported; relax and round, or export MPS");

    const auto& vars = lp.variables();
    const auto& rows = lp.constraints();

    // assemble rows: shift lower bounds into the rhs, turn upper bounds into
    // extra <= rows, flip rows so every rhs is non-negative
    struct Row {
        std::vector<std::pair<std::size_t, double>> terms;
        Relation rel;
        double rhs;
    };
    std::vector<Row> work;
    work.reserve(rows.size());
    for (const auto& r : rows) {
        Row w{r.terms, r.relation, r.rhs};
        for (auto& [v, c] : w.terms) w.rhs -= c * vars[v].lower;
        work.push_back(std::move(w));
    }
    for (std::size_t v = 0; v < vars.size(); ++v)
        if (vars[v].upper)
            work.push_back({{{v, 1.0}}, Relation::LessEqual, *vars[v].upper - vars[v].lower});
    for (auto& w : work) {
        if (w.rhs < 0.0) {
            w.rhs = -w.rhs;
            for (auto& [v, c] : w.terms) c = -c;
            w.rel = w.rel == Relation::LessEqual
                        ? Relation::GreaterEqual
                        : (w.rel == Relation::GreaterEqual ? Relation::LessEqual : Relation::Equal);
        }
    }

    const std::size_t m = work.size();
    Simplex sx(m);
    {
        // gather structural columns row by row, merging duplicate entries
        std::vector<std::vector<std::pair<std::size_t, double>>> cols(vars.size());
        for (std::size_t r = 0; r < m; ++r)
            for (const auto& [tv, tc] : work[r].terms)
                if (tc != 0.0) cols[tv].emplace_back(r, tc);
        for (std::size_t v = 0; v < vars.size(); ++v) {
            auto& col = cols[v];
            std::sort(col.begin(), col.end());
            std::vector<std::pair<std::size_t, double>> merged;
            for (const auto& [r, c] : col) {
                if (!merged.empty() && merged.back().first == r)
                    merged.back().second += c;
                else
                    merged.emplace_back(r, c);
            }
            sx.add_column(std::move(merged), vars[v].objective);
        }
    }

    std::vector<std::size_t> basis(m, SIZE_MAX);
    std::vector<std::size_t> artificials;
    for (std::size_t r = 0; r < m; ++r) {
        sx.set_rhs(r, work[r].rhs);
        if (work[r].rel == Relation::LessEqual)
            basis[r] = sx.add_column({{r, 1.0}}, 0.0); // slack
        else if (work[r].rel == Relation::GreaterEqual)
            sx.add_column({{r, -1.0}}, 0.0); // surplus, nonbasic at 0
    }
    for (std::size_t r = 0; r < m; ++r) {
        if (basis[r] == SIZE_MAX) {
            basis[r] = sx.add_column({{r, 1.0}}, 0.0); // artificial
            artificials.push_back(basis[r]);
        }
    }

    const std::size_t total_cols = sx.column_count();
    LpSolution out;
    std::size_t budget = opts.pivot_limit;
    bool unbounded = false;

    if (!artificials.empty()) {
        // phase one: minimize the artificial sum with zero structural costs
        std::vector<double> saved_costs(total_cols);
        for (std::size_t j = 0; j < total_cols; ++j) {
            saved_costs[j] = sx.cost_of(j);
            sx.set_cost(j, 0.0);
        }
        for (std::size_t a : artificials) sx.set_cost(a, 1.0);
        std::vector<bool> priceable(total_cols, true);
        if (!sx.run(basis, opts, priceable, &budget, &unbounded)) {
            out.status = LpStatus::IterationLimit;
            out.pivots = opts.pivot_limit;
            return out;
        }
        if (sx.objective() > opts.feasibility_tol) {
            out.status = LpStatus::Infeasible;
            out.pivots = opts.pivot_limit - budget;
            return out;
        }
        for (std::size_t j = 0; j < total_cols; ++j) sx.set_cost(j, saved_costs[j]);
        basis = sx.basis();
    }

    // phase two: artificials are frozen out of pricing
    std::vector<bool> priceable(total_cols, true);
    for (std::size_t a : artificials) priceable[a] = false;
    if (!sx.run(basis, opts, priceable, &budget, &unbounded)) {
        out.status = LpStatus::IterationLimit;
        out.pivots = opts.pivot_limit;
        return out;
    }
    out.pivots = opts.pivot_limit - budget;
    if (unbounded) {
        out.status = LpStatus::Unbounded;
        return out;
    }

    out.status = LpStatus::Optimal;
    out.values.resize(vars.size());
    double shift = 0.0;
    for (std::size_t v = 0; v < vars.size(); ++v) {
        out.values[v] = sx.value_of(v) + vars[v].lower;
        shift += vars[v].objective * vars[v].lower;
    }
    out.objective = sx.objective() + shift;
    return out;
}

} // namespace vinfra
