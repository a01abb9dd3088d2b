#pragma once

#include "vinfra/errors.hpp"

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace vinfra {

/// Probability mass function of the number of simultaneously failed critical
/// nodes: probs[x] = P(x of the n critical nodes fail), x in [0, n].
struct FailureDistribution {
    std::size_t n = 0;
    std::vector<double> probs; // length n + 1

    void validate() const; // throws std::invalid_argument on violation
};

struct ReliabilityQuery {
    std::size_t n;
    double p; // per-node physical failure probability, in (0,1)
    double r; // reliability target, in (0,1)
    FailureDistribution f;

    void validate() const;
};


// log C(n, k), exact lgamma-based; -inf when k < 0 or k > n.
double log_binomial(std::size_t n, long long k);

// Binomial pmf and lower CDF, computed in log space.
double binomial_pmf(std::size_t n, long long k, double p);
double binomial_cdf(std::size_t n, long long k, double p);

// Regularized incomplete beta function I_q(a, b) for positive integer a, b.
// Equals the binomial tail P(X >= a), X ~ Bin(a+b-1, q).
double regularized_incomplete_beta(double q, std::size_t a, std::size_t b);

// Reliability of n critical nodes with k shared backups under independent
// uniform failures with probability p: P(Bin(n+k, p) <= k).
double reliability_independent(std::size_t n, std::size_t k, double p);

// Binomial failure distribution for n independent critical nodes.
FailureDistribution independent_distribution(std::size_t n, double p);

// r(k) for an arbitrary critical-failure distribution f and k backups whose
// hosts fail independently with probability p.
double reliability_general(std::size_t k, double p, const FailureDistribution& f);

// Universal upper bound on the number of backups: smallest K >= n such that
// P(at least n of K backups survive) >= r, i.e. all n critical nodes are
// assumed to fail with certainty.
std::size_t k_max(std::size_t n, double p, double r);

// Smallest k with reliability_general(k, p, f) >= r, by binary search over
// [0, k_max(n, p, r)]. Throws InfeasibleError if the bound cannot meet r.
std::size_t min_backups(std::size_t n, double p, double r, const FailureDistribution& f);

} // namespace vinfra
