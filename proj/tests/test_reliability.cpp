#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "vinfra/reliability.hpp"
#include "vinfra/rng.hpp"

#include <cmath>
#include <cstdint>
#include <vector>

using namespace vinfra;

namespace {

FailureDistribution point_mass(std::size_t n, std::size_t at) {
    FailureDistribution f;
    f.n = n;
    f.probs.assign(n + 1, 0.0);
    f.probs[at] = 1.0;
    return f;
}

// Brute-force r(k): enumerate backup failure subsets of [k] and weight the
// critical failure count by f. Independent of the production code path.
double enumerate_reliability(std::size_t k, double p, const FailureDistribution& f) {
    double r = 0.0;
    for (std::size_t x = 0; x <= f.n; ++x) {
        for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << k); ++mask) {
            const int bf = __builtin_popcountll(mask);
            if (x + static_cast<std::size_t>(bf) > k) continue;
            double w = f.probs[x];
            for (std::size_t j = 0; j < k; ++j) w *= (mask >> j) & 1 ? p : 1.0 - p;
            r += w;
        }
    }
    return r;
}

std::size_t linear_scan_k_max(std::size_t n, double p, double r) {
    for (std::size_t K = n;; ++K) {
        double s = 0.0;
        for (std::size_t y = 0; y + n <= K; ++y) s += binomial_pmf(K, static_cast<long long>(y), p);
        if (s >= r) return K;
    }
}

} // namespace

TEST_CASE("regularized incomplete beta") {
    CHECK(regularized_incomplete_beta(0.37, 1, 1) == doctest::Approx(0.37).epsilon(1e-12));
    // consistent with k = 8 sufficing for n = 100, p = 0.01
    CHECK(regularized_incomplete_beta(0.99, 100, 9) >= 0.99999);
    CHECK(regularized_incomplete_beta(0.97, 29, 8) ==
          doctest::Approx(0.99999065093).epsilon(1e-11));
    CHECK(regularized_incomplete_beta(0.0, 3, 4) == doctest::Approx(0.0));
    CHECK(regularized_incomplete_beta(1.0, 3, 4) == doctest::Approx(1.0));
    CHECK_THROWS_AS(regularized_incomplete_beta(1.5, 2, 2), std::domain_error);
    CHECK_THROWS_AS(regularized_incomplete_beta(-0.1, 2, 2), std::domain_error);

    // integer-argument identity: I_q(a,b) equals the binomial tail sum
    for (std::size_t a = 1; a <= 6; ++a) {
        for (std::size_t b = 1; b <= 6; ++b) {
            const double q = 0.31;
            double tail = 0.0;
            for (std::size_t j = a; j <= a + b - 1; ++j)
                tail += binomial_pmf(a + b - 1, static_cast<long long>(j), q);
            CHECK(regularized_incomplete_beta(q, a, b) == doctest::Approx(tail).epsilon(1e-12));
        }
    }
}

TEST_CASE("reliability_independent paper values") {
    CHECK(reliability_independent(0, 0, 0.5) == doctest::Approx(1.0));
    // ten significant digits from the worked pooling discussion
    CHECK(reliability_independent(30, 8, 0.03) ==
          doctest::Approx(0.999998544522).epsilon(1e-12));
    CHECK(reliability_independent(29, 7, 0.03) ==
          doctest::Approx(0.99999065093).epsilon(1e-11));
    // agreement with the beta-function form for n >= 1
    for (std::size_t n : {1u, 5u, 30u}) {
        for (std::size_t k : {0u, 2u, 8u}) {
            CHECK(reliability_independent(n, k, 0.03) ==
                  doctest::Approx(regularized_incomplete_beta(1.0 - 0.03, n, k + 1))
                      .epsilon(1e-12));
        }
    }
}

TEST_CASE("reliability_independent vs Monte-Carlo") {
    // 20 random (n, k, p) triples, 1e6 seeded trials each; the analytic value
    // must sit within 3 standard errors of the empirical survival rate.
    Rng pick(20240617);
    for (int t = 0; t < 20; ++t) {
        const std::size_t n = static_cast<std::size_t>(pick.next_int(1, 12));
        const std::size_t k = static_cast<std::size_t>(pick.next_int(0, 6));
        const double p = 0.01 + 0.1 * pick.next_double();
        const int trials = 1000000;
        Rng mc = Rng::substream(987654321ULL, "mc-reliability", static_cast<std::uint64_t>(t));
        long long ok = 0;
        for (int i = 0; i < trials; ++i) {
            int fails = 0;
            for (std::size_t j = 0; j < n + k; ++j) fails += mc.next_bool(p);
            ok += fails <= static_cast<int>(k);
        }
        const double est = static_cast<double>(ok) / trials;
        const double r = reliability_independent(n, k, p);
        const double se = std::sqrt(std::max(r * (1.0 - r), 1e-12) / trials);
        CHECK(std::abs(est - r) <= 3.0 * se + 1e-9);
    }
}

TEST_CASE("independent_distribution") {
    auto f1 = independent_distribution(1, 0.2);
    CHECK(f1.probs[0] == doctest::Approx(0.8));
    CHECK(f1.probs[1] == doctest::Approx(0.2));
    auto f2 = independent_distribution(2, 0.5);
    CHECK(f2.probs[0] == doctest::Approx(0.25));
    CHECK(f2.probs[1] == doctest::Approx(0.5));
    CHECK(f2.probs[2] == doctest::Approx(0.25));
    f2.validate();

    // cross-formula equivalence at n = 100, k = 8
    auto f100 = independent_distribution(100, 0.01);
    f100.validate();
    CHECK(reliability_general(8, 0.01, f100) ==
          doctest::Approx(reliability_independent(100, 8, 0.01)).epsilon(1e-12));
}

TEST_CASE("reliability_general") {
    SUBCASE("point mass at zero is full reliability") {
        for (std::size_t k : {0u, 1u, 5u})
            CHECK(reliability_general(k, 0.3, point_mass(4, 0)) == doctest::Approx(1.0));
    }
    SUBCASE("more failures than backups with perfect backups") {
        CHECK(reliability_general(2, 0.0, point_mass(3, 3)) == doctest::Approx(0.0));
    }
    SUBCASE("matches exhaustive enumeration") {
        Rng rng(77);
        for (int t = 0; t < 25; ++t) {
            const std::size_t n = static_cast<std::size_t>(rng.next_int(0, 12));
            const std::size_t k = static_cast<std::size_t>(rng.next_int(0, 12));
            const double p = rng.next_double();
            FailureDistribution f;
            f.n = n;
            f.probs.resize(n + 1);
            double s = 0.0;
            for (auto& q : f.probs) s += (q = rng.next_double());
            for (auto& q : f.probs) q /= s;
            CHECK(reliability_general(k, p, f) ==
                  doctest::Approx(enumerate_reliability(k, p, f)).epsilon(1e-9));
        }
    }
    SUBCASE("monotone in k") {
        Rng rng(91);
        for (int t = 0; t < 10; ++t) {
            const std::size_t n = static_cast<std::size_t>(rng.next_int(1, 10));
            const double p = 0.4 * rng.next_double() + 0.01;
            FailureDistribution f;
            f.n = n;
            f.probs.resize(n + 1);
            double s = 0.0;
            for (auto& q : f.probs) s += (q = rng.next_double());
            for (auto& q : f.probs) q /= s;
            double prev = -1.0;
            for (std::size_t k = 0; k <= 12; ++k) {
                const double r = reliability_general(k, p, f);
                CHECK(r >= prev - 1e-12);
                prev = r;
            }
        }
    }
}

TEST_CASE("k_max") {
    CHECK(k_max(5, 1e-12, 0.999) == 5);
    // closed form: smallest K with 1 - 0.5^K >= 0.9
    CHECK(k_max(1, 0.5, 0.9) == 4);
    CHECK(k_max(100, 0.01, 0.99999) >= 108);
    for (std::size_t n : {1u, 3u, 7u}) {
        for (double p : {0.02, 0.2}) {
            for (double r : {0.9, 0.999}) {
                CHECK(k_max(n, p, r) == linear_scan_k_max(n, p, r));
            }
        }
    }
}

TEST_CASE("min_backups paper integers") {
    CHECK(min_backups(100, 0.01, 0.99999, independent_distribution(100, 0.01)) == 8);
    CHECK(min_backups(200, 0.01, 0.99999, independent_distribution(200, 0.01)) == 11);
    CHECK(min_backups(29, 0.03, 0.99999, independent_distribution(29, 0.03)) == 7);
    CHECK(min_backups(30, 0.03, 0.99999, independent_distribution(30, 0.03)) == 8);
}

TEST_CASE("min_backups minimality and edge cases") {
    Rng rng(4242);
    for (int t = 0; t < 15; ++t) {
        const std::size_t n = static_cast<std::size_t>(rng.next_int(1, 14));
        const double p = 0.3 * rng.next_double() + 0.005;
        const double r = 0.9 + 0.0999 * rng.next_double();
        FailureDistribution f;
        f.n = n;
        f.probs.resize(n + 1);
        double s = 0.0;
        for (auto& q : f.probs) s += (q = rng.next_double());
        for (auto& q : f.probs) q /= s;
        const std::size_t k = min_backups(n, p, r, f);
        CHECK(reliability_general(k, p, f) >= r - 1e-12);
        if (k > 0) CHECK(reliability_general(k - 1, p, f) < r + 1e-12);
        CHECK(k <= k_max(n, p, r));
    }
    CHECK(min_backups(0, 0.01, 0.99999, independent_distribution(0, 0.01)) == 0);
    // worst-case distribution saturates the k_max bound
    CHECK(min_backups(4, 0.1, 0.99, point_mass(4, 4)) == k_max(4, 0.1, 0.99));
}

TEST_CASE("asymptotic backup ratio approaches (1-p)/p") {
    // The n/k ratio climbs toward 1/p - 1 = 49 as n grows; at n = 1e6 it is
    // inside 5%. Convergence is O(1/sqrt(n)), so smaller n sit further out.
    const double p = 0.02, r = 0.99999;
    double prev = 0.0;
    for (std::size_t n : {std::size_t{10000}, std::size_t{100000}, std::size_t{1000000}}) {
        const std::size_t k = min_backups(n, p, r, independent_distribution(n, p));
        const double ratio = static_cast<double>(n) / static_cast<double>(k);
        CHECK(ratio > prev);
        CHECK(ratio < 49.0);
        prev = ratio;
        if (n == 100000) CHECK(k == 2238); // pinned against an independent bigint/scipy check
        if (n == 1000000) CHECK(std::abs(ratio - 49.0) / 49.0 < 0.05);
    }
}
