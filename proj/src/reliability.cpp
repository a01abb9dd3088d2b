#include "vinfra/reliability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace vinfra {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

void FailureDistribution::validate() const {
    if (probs.size() != n + 1)
        throw std::invalid_argument("FailureDistribution: probs must have length n+1");
    double sum = 0.0;
    for (double q : probs) {
        if (!(q >= 0.0 && q <= 1.0))
            throw std::invalid_argument("FailureDistribution: entries must lie in [0,1]");
        sum += q;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("FailureDistribution: entries must sum to 1");
}

void ReliabilityQuery::validate() const {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("ReliabilityQuery: p must be in (0,1)");
    if (!(r > 0.0 && r < 1.0)) throw std::invalid_argument("ReliabilityQuery: r must be in (0,1)");
    if (f.n != n) throw std::invalid_argument("ReliabilityQuery: f.n must equal n");
    f.validate();
}

double log_binomial(std::size_t n, long long k) {
    if (k < 0 || static_cast<std::size_t>(k) > n) return kNegInf;
    if (k == 0 || static_cast<std::size_t>(k) == n) return 0.0;
    const double nd = static_cast<double>(n);
    const double kd = static_cast<double>(k);
    return std::lgamma(nd + 1.0) - std::lgamma(kd + 1.0) - std::lgamma(nd - kd + 1.0);
}

double binomial_pmf(std::size_t n, long long k, double p) {
    if (k < 0 || static_cast<std::size_t>(k) > n) return 0.0;
    if (p <= 0.0) return k == 0 ? 1.0 : 0.0;
    if (p >= 1.0) return static_cast<std::size_t>(k) == n ? 1.0 : 0.0;
    const double kd = static_cast<double>(k);
    const double nd = static_cast<double>(n);
    return std::exp(log_binomial(n, k) + kd * std::log(p) + (nd - kd) * std::log1p(-p));
}

double binomial_cdf(std::size_t n, long long k, double p) {
    if (k < 0) return 0.0;
    if (static_cast<std::size_t>(k) >= n) return 1.0;
    if (p <= 0.0) return 1.0;
    if (p >= 1.0) return 0.0;
    // Sum the tail on the far side of the mean with a multiplicative term
    // recurrence: the summed mass is small there, so 1 - tail loses no
    // precision, and terms decay geometrically so the loop is O(stddev).
    const std::size_t ku = static_cast<std::size_t>(k);
    const double mean = static_cast<double>(n) * p;
    const double odds = p / (1.0 - p);
    if (static_cast<double>(ku) >= mean) {
        // upper tail: x = k+1 .. n, terms decreasing
        double lterm = log_binomial(n, k + 1) + static_cast<double>(k + 1) * std::log(p) +
                       static_cast<double>(n - ku - 1) * std::log1p(-p);
        if (lterm < -745.0) return 1.0; // tail below double underflow
        double term = std::exp(lterm);
        double sum = 0.0;
        for (std::size_t x = ku + 1; x <= n; ++x) {
            sum += term;
            if (term < sum * 1e-18) break;
            term *= static_cast<double>(n - x) / static_cast<double>(x + 1) * odds;
        }
        return std::max(0.0, 1.0 - sum);
    }
    // lower tail: x = k .. 0, terms decreasing downward (k is below the mode)
    double lterm = log_binomial(n, k) + static_cast<double>(ku) * std::log(p) +
                   static_cast<double>(n - ku) * std::log1p(-p);
    if (lterm < -745.0) return 0.0;
    double term = std::exp(lterm);
    double sum = 0.0;
    for (std::size_t x = ku;; --x) {
        sum += term;
        if (term < sum * 1e-18 || x == 0) break;
        term *= static_cast<double>(x) / static_cast<double>(n - x + 1) / odds;
    }
    return std::min(1.0, sum);
}

double regularized_incomplete_beta(double q, std::size_t a, std::size_t b) {
    if (!(q >= 0.0 && q <= 1.0))
        throw std::domain_error("regularized_incomplete_beta: q must be in [0,1]");
    if (a < 1 || b < 1)
        throw std::domain_error("regularized_incomplete_beta: a, b must be >= 1");
    // I_q(a, b) = P(X >= a) with X ~ Bin(a+b-1, q)
    const std::size_t trials = a + b - 1;
    return 1.0 - binomial_cdf(trials, static_cast<long long>(a) - 1, q);
}

double reliability_independent(std::size_t n, std::size_t k, double p) {
    return binomial_cdf(n + k, static_cast<long long>(k), p);
}

FailureDistribution independent_distribution(std::size_t n, double p) {
    FailureDistribution f;
    f.n = n;
    f.probs.resize(n + 1);
    for (std::size_t x = 0; x <= n; ++x)
        f.probs[x] = binomial_pmf(n, static_cast<long long>(x), p);
    return f;
}

double reliability_general(std::size_t k, double p, const FailureDistribution& f) {
    // r(k) = sum_x f(x) * P(Bin(k, p) <= k - x); terms with x > k vanish
    // because no valid backup-failure count y - x remains.
    const std::size_t xmax = std::min(f.n, k);
    double r = 0.0;
    for (std::size_t x = 0; x <= xmax; ++x)
        r += f.probs[x] * binomial_cdf(k, static_cast<long long>(k - x), p);
    return std::min(1.0, r);
}

namespace {

// Worst-case reliability with K total backups when all n critical nodes fail
// with certainty: P(at most K - n of the K backups fail).
double worst_case_reliability(std::size_t K, std::size_t n, double p) {
    if (K < n) return 0.0;
    return binomial_cdf(K, static_cast<long long>(K - n), p);
}

} // namespace

std::size_t k_max(std::size_t n, double p, double r) {
    if (n == 0) return 0;
    if (worst_case_reliability(n, n, p) >= r) return n;
    // bracket the surplus over n by doubling, then bisect; the worst-case
    // reliability is non-decreasing in K
    std::size_t extra_hi = 1;
    while (worst_case_reliability(n + extra_hi, n, p) < r) {
        extra_hi *= 2;
        if (extra_hi > (std::size_t{1} << 40))
            throw InfeasibleError("k_max: target reliability unreachable");
    }
    std::size_t lo = extra_hi / 2, hi = extra_hi;
    while (lo + 1 < hi) {
        const std::size_t mid = lo + (hi - lo) / 2;
        if (worst_case_reliability(n + mid, n, p) >= r)
            hi = mid;
        else
            lo = mid;
    }
    return n + hi;
}

std::size_t min_backups(std::size_t n, double p, double r, const FailureDistribution& f) {
    ReliabilityQuery{n, p, r, f}.validate();
    if (n == 0) return 0;
    std::size_t hi = k_max(n, p, r);
    if (reliability_general(hi, p, f) < r)
        throw InfeasibleError("min_backups: no k within k_max meets the target");
    if (reliability_general(0, p, f) >= r) return 0;
    std::size_t lo = 0; // invariant: r(lo) < r <= r(hi)
    while (lo + 1 < hi) {
        const std::size_t mid = lo + (hi - lo) / 2;
        if (reliability_general(mid, p, f) < r)
            lo = mid;
        else
            hi = mid;
    }
    return hi;
}

} // namespace vinfra
