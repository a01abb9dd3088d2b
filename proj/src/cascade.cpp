#include "vinfra/cascade.hpp"

#include "vinfra/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace vinfra {

namespace {

double saturate(double z) { return z < 0.0 ? 0.0 : (z > 1.0 ? 1.0 : z); }

void normalize_pmf(std::vector<double>& probs) {
    double s = std::accumulate(probs.begin(), probs.end(), 0.0);
    if (s <= 0.0) throw ModelError("empirical pmf has no mass");
    for (double& q : probs) q /= s;
}

} // namespace

void LoadModelParams::validate() const {
    if (!(l_max > l_min)) throw ModelError("load model: l_max must exceed l_min");
    if (p_transfer < 0.0) throw ModelError("load model: transfer load must be non-negative");
    if (norm_disturbance() < 0.0)
        throw ModelError("load model: normalized disturbance must be non-negative");
}

void TreeModelParams::validate() const {
    if (n == 0) throw ModelError("tree model: need at least one category");
    if (environments == 0) throw ModelError("tree model: need at least one environment");
    auto check_matrix = [&](const std::vector<std::vector<double>>& m, std::size_t cols,
                            bool strictly_positive, const char* what) {
        if (m.size() != n) throw ModelError(std::string("tree model: bad row count for ") + what);
        for (const auto& row : m) {
            if (row.size() != cols)
                throw ModelError(std::string("tree model: bad column count for ") + what);
            for (double v : row) {
                if (!std::isfinite(v) || v < 0.0 || (strictly_positive && v <= 0.0))
                    throw ModelError(std::string("tree model: bad rate in ") + what);
            }
        }
    };
    check_matrix(cascade_rates, n, false, "cascade_rates");
    check_matrix(fail_rates, environments, true, "fail_rates");
    check_matrix(repair_rates, environments, true, "repair_rates");
    if (env_transition_rates.size() != environments)
        throw ModelError("tree model: env_transition_rates size mismatch");
    for (double v : env_transition_rates)
        if (!std::isfinite(v) || v < 0.0) throw ModelError("tree model: bad environment rate");
    // with E > 1 the cyclic environment chain must keep moving, otherwise the
    // full chain is reducible
    if (environments > 1)
        for (double v : env_transition_rates)
            if (v <= 0.0) throw ModelError("tree model: environment rates must be positive");
}

void DegreeModelParams::validate() const {
    if (degree_dist.empty()) throw ModelError("degree model: empty degree distribution");
    double s = 0.0;
    for (double q : degree_dist) {
        if (q < 0.0) throw ModelError("degree model: negative degree mass");
        s += q;
    }
    if (std::abs(s - 1.0) > 1e-9) throw ModelError("degree model: degree pmf must sum to 1");
    if (threshold_values.size() != threshold_probs.size() || threshold_values.empty())
        throw ModelError("degree model: threshold grid size mismatch");
    s = 0.0;
    for (std::size_t i = 0; i < threshold_values.size(); ++i) {
        if (!(threshold_values[i] > 0.0 && threshold_values[i] <= 1.0))
            throw ModelError("degree model: thresholds must lie in (0,1]");
        if (threshold_probs[i] < 0.0) throw ModelError("degree model: negative threshold mass");
        s += threshold_probs[i];
    }
    if (std::abs(s - 1.0) > 1e-9) throw ModelError("degree model: threshold pmf must sum to 1");
    double z = 0.0;
    for (std::size_t d = 0; d < degree_dist.size(); ++d)
        z += static_cast<double>(d) * degree_dist[d];
    if (z <= 0.0) throw ModelError("degree model: average degree must be positive");
}

FailureDistribution load_based_distribution(const LoadModelParams& params) {
    params.validate();
    const std::size_t n = params.n;
    const double d = params.norm_disturbance();
    const double ph = params.norm_transfer();
    FailureDistribution f;
    f.n = n;
    f.probs.assign(n + 1, 0.0);
    double partial = 0.0;
    for (std::size_t x = 0; x < n; ++x) {
        double term;
        if (x == 0) {
            // phi(d)/d resolves to 1 at d = 0 (0/0 convention) and for d in (0,1]
            const double head = d == 0.0 ? 1.0 : saturate(d) / d;
            term = head * std::pow(saturate(1.0 - d), static_cast<double>(n));
        } else {
            const double base = d + static_cast<double>(x) * ph;
            term = std::exp(log_binomial(n, static_cast<long long>(x))) * saturate(d) *
                   std::pow(base, static_cast<double>(x) - 1.0) *
                   std::pow(saturate(1.0 - d - static_cast<double>(x) * ph),
                            static_cast<double>(n - x));
        }
        if (term < -1e-9) throw ModelError("load model: negative probability mass");
        f.probs[x] = std::max(0.0, term);
        partial += f.probs[x];
    }
    f.probs[n] = std::min(1.0, std::max(0.0, 1.0 - partial));
    return f;
}

FailureDistribution tree_based_distribution(const TreeModelParams& params) {
    params.validate();
    const std::size_t n = params.n;
    const std::size_t E = params.environments;
    if (n >= 63 || static_cast<double>(E) * std::pow(2.0, static_cast<double>(n)) >
                       static_cast<double>(std::size_t{1} << 20))
        throw SizeError("tree model: state space exceeds 2^20");
    const std::size_t masks = std::size_t{1} << n;
    const std::size_t S = masks * E;

    Eigen::MatrixXd Q =
        Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(S));
    auto idx = [&](std::size_t e, std::size_t mask) {
        return static_cast<Eigen::Index>(e * masks + mask);
    };
    for (std::size_t e = 0; e < E; ++e) {
        for (std::size_t mask = 0; mask < masks; ++mask) {
            const auto s = idx(e, mask);
            double out = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (mask & (std::size_t{1} << j)) {
                    const double rate = params.repair_rates[j][e];
                    Q(s, idx(e, mask & ~(std::size_t{1} << j))) += rate;
                    out += rate;
                } else {
                    double rate = params.fail_rates[j][e];
                    for (std::size_t i = 0; i < n; ++i)
                        if (mask & (std::size_t{1} << i)) rate += params.cascade_rates[i][j];
                    Q(s, idx(e, mask | (std::size_t{1} << j))) += rate;
                    out += rate;
                }
            }
            if (E > 1) {
                const double rate = params.env_transition_rates[e];
                Q(s, idx((e + 1) % E, mask)) += rate;
                out += rate;
            }
            Q(s, s) = -out;
        }
    }

    // pi^T Q = 0 with sum(pi) = 1: replace one redundant balance equation of
    // Q^T pi = 0 by the normalization row (the balance equations sum to zero)
    Eigen::MatrixXd A = Q.transpose();
    A.row(0).setOnes();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(S));
    b(0) = 1.0;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
    if (!lu.isInvertible())
        throw SingularityError("tree model: stationary distribution is not unique");
    Eigen::VectorXd pi = lu.solve(b);

    const double residual = (pi.transpose() * Q).cwiseAbs().maxCoeff();
    if (residual > 1e-8)
        throw SingularityError("tree model: stationary solve residual too large");
    for (Eigen::Index i = 0; i < pi.size(); ++i)
        if (pi(i) < -1e-10) throw SingularityError("tree model: negative stationary mass");

    FailureDistribution f;
    f.n = n;
    f.probs.assign(n + 1, 0.0);
    for (std::size_t e = 0; e < E; ++e)
        for (std::size_t mask = 0; mask < masks; ++mask)
            f.probs[static_cast<std::size_t>(__builtin_popcountll(mask))] +=
                std::max(0.0, pi(idx(e, mask)));
    normalize_pmf(f.probs);
    return f;
}

namespace {

// rho_d: probability a degree-d node is vulnerable (threshold <= 1/d)
std::vector<double> vulnerability(const DegreeModelParams& params) {
    std::vector<double> rho(params.degree_dist.size(), 1.0);
    for (std::size_t d = 1; d < rho.size(); ++d) {
        double acc = 0.0;
        for (std::size_t i = 0; i < params.threshold_values.size(); ++i)
            if (params.threshold_values[i] <= 1.0 / static_cast<double>(d))
                acc += params.threshold_probs[i];
        rho[d] = acc;
    }
    return rho;
}

double average_degree(const DegreeModelParams& params) {
    double z = 0.0;
    for (std::size_t d = 0; d < params.degree_dist.size(); ++d)
        z += static_cast<double>(d) * params.degree_dist[d];
    return z;
}

} // namespace

bool degree_cascade_condition(const DegreeModelParams& params) {
    params.validate();
    const auto rho = vulnerability(params);
    const double z = average_degree(params);
    double rhs = 0.0;
    for (std::size_t d = 0; d < params.degree_dist.size(); ++d)
        rhs += static_cast<double>(d) * (static_cast<double>(d) - 1.0) * rho[d] *
               params.degree_dist[d];
    return z < rhs;
}

double degree_cascade_probability(const DegreeModelParams& params) {
    params.validate();
    if (!degree_cascade_condition(params)) return 0.0;
    const auto rho = vulnerability(params);
    const double z = average_degree(params);
    const auto& pd = params.degree_dist;

    auto G0 = [&](double s) {
        double acc = 0.0;
        for (std::size_t d = 0; d < pd.size(); ++d)
            acc += rho[d] * pd[d] * std::pow(s, static_cast<double>(d));
        return acc;
    };
    auto G1 = [&](double s) {
        double acc = 0.0;
        for (std::size_t d = 1; d < pd.size(); ++d)
            acc +=
                static_cast<double>(d) * rho[d] * pd[d] * std::pow(s, static_cast<double>(d - 1));
        return acc / z;
    };

    // damped fixed point from 0 selects the smallest root of
    // H = 1 - G1(1) + G1(H)
    const double g1_at_1 = G1(1.0);
    double h = 0.0;
    bool converged = false;
    for (int it = 0; it < 100000; ++it) {
        const double next = 0.5 * h + 0.5 * (1.0 - g1_at_1 + G1(h));
        if (std::abs(next - h) < 1e-12) {
            h = next;
            converged = true;
            break;
        }
        h = next;
    }
    if (!converged) throw ConvergenceError("degree model: H1 fixed point did not converge");

    const double g0_at_1 = G0(1.0);
    const double g0_at_h = G0(h);
    double f = 0.0;
    for (std::size_t d = 0; d < pd.size(); ++d) {
        const double p_d = 1.0 - std::pow(1.0 - g0_at_1 + g0_at_h, static_cast<double>(d));
        f += p_d * pd[d];
    }
    return std::clamp(f, 0.0, 1.0);
}

FailureDistribution degree_worst_case_distribution(const DegreeModelParams& params) {
    if (params.n < 1) throw ModelError("degree model: need n >= 1 for the worst case");
    const double f_all = degree_cascade_probability(params);
    FailureDistribution f;
    f.n = params.n;
    f.probs.assign(params.n + 1, 0.0);
    f.probs[params.n] = f_all;
    f.probs[params.n - 1] = 1.0 - f_all;
    return f;
}

namespace {

std::size_t simulate_load_trial(const LoadModelParams& params, Rng& rng) {
    const double d = params.norm_disturbance();
    const double ph = params.norm_transfer();
    std::vector<double> load(params.n);
    for (double& u : load) u = rng.next_double();
    std::vector<bool> failed(params.n, false);
    std::size_t total = 0;
    for (;;) {
        const double cut = 1.0 - d - static_cast<double>(total) * ph;
        std::size_t fresh = 0;
        for (std::size_t i = 0; i < params.n; ++i) {
            if (!failed[i] && load[i] > cut) {
                failed[i] = true;
                ++fresh;
            }
        }
        if (fresh == 0) break;
        total += fresh;
    }
    return total;
}

std::size_t sample_index(const std::vector<double>& pmf, Rng& rng) {
    const double u = rng.next_double();
    double acc = 0.0;
    for (std::size_t i = 0; i < pmf.size(); ++i) {
        acc += pmf[i];
        if (u < acc) return i;
    }
    return pmf.size() - 1;
}

std::size_t simulate_degree_trial(const DegreeModelParams& params, Rng& rng) {
    const std::size_t n = params.n;
    std::vector<std::size_t> degree(n);
    std::size_t stub_total = 0;
    for (std::size_t i = 0; i < n; ++i)
        stub_total += (degree[i] = sample_index(params.degree_dist, rng));
    if (stub_total % 2 == 1) {
        ++degree[0];
        ++stub_total;
    }
    std::vector<std::uint32_t> stubs;
    stubs.reserve(stub_total);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < degree[i]; ++j) stubs.push_back(static_cast<std::uint32_t>(i));
    // Fisher-Yates, then pair consecutive stubs (configuration model; rare
    // self-loops and multi-edges are kept)
    for (std::size_t i = stubs.size(); i > 1; --i)
        std::swap(stubs[i - 1],
                  stubs[static_cast<std::size_t>(rng.next_int(0, static_cast<std::int64_t>(i) - 1))]);
    std::vector<std::uint32_t> adj_head(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i)
        adj_head[i + 1] = adj_head[i] + static_cast<std::uint32_t>(degree[i]);
    std::vector<std::uint32_t> adj(stubs.size());
    {
        std::vector<std::uint32_t> fill(adj_head.begin(), adj_head.end() - 1);
        for (std::size_t i = 0; i + 1 < stubs.size(); i += 2) {
            const std::uint32_t a = stubs[i], b = stubs[i + 1];
            adj[fill[a]++] = b;
            adj[fill[b]++] = a;
        }
    }
    std::vector<double> threshold(n);
    for (double& t : threshold)
        t = params.threshold_values[sample_index(params.threshold_probs, rng)];

    std::vector<bool> failed(n, false);
    std::vector<std::uint32_t> failed_nbrs(n, 0);
    std::vector<std::uint32_t> queue;
    const std::size_t seed_node =
        static_cast<std::size_t>(rng.next_int(0, static_cast<std::int64_t>(n) - 1));
    failed[seed_node] = true;
    queue.push_back(static_cast<std::uint32_t>(seed_node));
    std::size_t total = 1;
    while (!queue.empty()) {
        const std::uint32_t u = queue.back();
        queue.pop_back();
        for (std::uint32_t e = adj_head[u]; e < adj_head[u + 1]; ++e) {
            const std::uint32_t v = adj[e];
            if (failed[v] || degree[v] == 0) continue;
            ++failed_nbrs[v];
            const double frac =
                static_cast<double>(failed_nbrs[v]) / static_cast<double>(degree[v]);
            if (frac >= threshold[v]) {
                failed[v] = true;
                ++total;
                queue.push_back(v);
            }
        }
    }
    return total;
}

// One long Gillespie run; occupancy is time-weighted and "trials" bounds the
// number of transition events after a 10% burn-in.
FailureDistribution simulate_tree_occupancy(const TreeModelParams& params, std::size_t events,
                                            std::uint64_t seed) {
    params.validate();
    Rng rng = Rng::substream(seed, "mc-tree");
    const std::size_t n = params.n;
    FailureDistribution f;
    f.n = n;
    f.probs.assign(n + 1, 0.0);
    std::size_t e = 0;
    std::uint64_t mask = 0;
    const std::size_t burn = events / 10;
    std::vector<double> rates;
    std::vector<std::pair<int, std::size_t>> actions;
    for (std::size_t step = 0; step < events + burn; ++step) {
        // transition menu in a fixed order: fail/cascade or repair per
        // category, then the environment switch
        rates.clear();
        actions.clear();
        for (std::size_t j = 0; j < n; ++j) {
            if (mask & (std::uint64_t{1} << j)) {
                rates.push_back(params.repair_rates[j][e]);
                actions.emplace_back(1, j);
            } else {
                double rate = params.fail_rates[j][e];
                for (std::size_t i = 0; i < n; ++i)
                    if (mask & (std::uint64_t{1} << i)) rate += params.cascade_rates[i][j];
                rates.push_back(rate);
                actions.emplace_back(0, j);
            }
        }
        if (params.environments > 1) {
            rates.push_back(params.env_transition_rates[e]);
            actions.emplace_back(2, 0);
        }
        double rates_total = std::accumulate(rates.begin(), rates.end(), 0.0);
        const double dwell = rng.next_exponential(rates_total);
        if (step >= burn)
            f.probs[static_cast<std::size_t>(__builtin_popcountll(mask))] += dwell;
        double u = rng.next_double() * rates_total;
        std::size_t pick = 0;
        while (pick + 1 < rates.size() && u >= rates[pick]) u -= rates[pick++];
        const auto [kind, j] = actions[pick];
        if (kind == 0)
            mask |= std::uint64_t{1} << j;
        else if (kind == 1)
            mask &= ~(std::uint64_t{1} << j);
        else
            e = (e + 1) % params.environments;
    }
    normalize_pmf(f.probs);
    return f;
}

} // namespace

FailureDistribution monte_carlo_distribution(const CascadeModel& model, std::size_t trials,
                                             std::uint64_t seed) {
    if (trials < 1) throw ModelError("monte carlo: need at least one trial");
    if (const auto* tree = std::get_if<TreeModelParams>(&model))
        return simulate_tree_occupancy(*tree, trials, seed);

    FailureDistribution f;
    if (const auto* load = std::get_if<LoadModelParams>(&model)) {
        load->validate();
        f.n = load->n;
        f.probs.assign(load->n + 1, 0.0);
        for (std::size_t t = 0; t < trials; ++t) {
            Rng rng = Rng::substream(seed, "mc-load", t);
            f.probs[simulate_load_trial(*load, rng)] += 1.0;
        }
    } else {
        const auto& deg = std::get<DegreeModelParams>(model);
        deg.validate();
        f.n = deg.n;
        f.probs.assign(deg.n + 1, 0.0);
        for (std::size_t t = 0; t < trials; ++t) {
            Rng rng = Rng::substream(seed, "mc-degree", t);
            f.probs[simulate_degree_trial(deg, rng)] += 1.0;
        }
    }
    normalize_pmf(f.probs);
    return f;
}

} // namespace vinfra
