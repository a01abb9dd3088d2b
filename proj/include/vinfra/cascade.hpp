#pragma once

#include "vinfra/reliability.hpp"

#include <cstdint>
#include <stdexcept>
#include <variant>
#include <vector>

namespace vinfra {


// Overload cascade: identical nodes with initial load in [l_min, l_max], a
// failure threshold l_fail, an initial disturbance and a per-failure load
// transfer. Only the normalized disturbance and transfer enter the math.
struct LoadModelParams {
    std::size_t n = 0;
    double l_min = 0.0;
    double l_max = 1.0;
    double l_fail = 1.0;
    double d_disturb = 0.0;  // D
    double p_transfer = 0.0; // P

    double norm_transfer() const { return p_transfer / (l_max - l_min); }
    double norm_disturbance() const { return (d_disturb + l_max - l_fail) / (l_max - l_min); }
    void validate() const;
};

// CTMC over per-category up/down bits and an operating environment. Cascades
// are modeled as extra failure rate cascade_rates[i][j] exerted on category j
// while category i is down.
struct TreeModelParams {
    std::size_t n = 0;                                  // categories
    std::size_t environments = 1;                       // E
    std::vector<std::vector<double>> cascade_rates;     // n x n, phi[i][j]
    std::vector<std::vector<double>> fail_rates;        // n x E, lambda[i][e] > 0
    std::vector<std::vector<double>> repair_rates;      // n x E, mu[i][e] > 0
    std::vector<double> env_transition_rates;           // E, nu[e]

    void validate() const;
};

// Threshold cascade on a random graph described by its degree distribution;
// the threshold distribution is a discrete grid pmf.
struct DegreeModelParams {
    std::vector<double> degree_dist;      // pmf over d = 0..d_max
    std::vector<double> threshold_values; // grid points in (0, 1]
    std::vector<double> threshold_probs;  // pmf over the grid
    std::size_t n = 0;                    // node count

    void validate() const;
};

using CascadeModel = std::variant<LoadModelParams, TreeModelParams, DegreeModelParams>;

FailureDistribution load_based_distribution(const LoadModelParams& params);

// Steady state of the tree CTMC, aggregated by number of failed categories.
// Throws SizeError when environments * 2^n exceeds 2^20 and SingularityError
// when the stationary solve has no unique solution.
FailureDistribution tree_based_distribution(const TreeModelParams& params);

// True when a vanishing seed of failures can grow into a global cascade.
bool degree_cascade_condition(const DegreeModelParams& params);

// Probability that a random single-seed perturbation triggers a global
// cascade; 0 when the cascade condition does not hold.
double degree_cascade_probability(const DegreeModelParams& params);

// All-fail/all-but-one-fail distribution built from the cascade probability.
FailureDistribution degree_worst_case_distribution(const DegreeModelParams& params);

// Empirical distribution of the total failed-node count over seeded trials.
FailureDistribution monte_carlo_distribution(const CascadeModel& model, std::size_t trials,
                                             std::uint64_t seed);

} // namespace vinfra
