#pragma once
// Optimal-allocation fixed point: plug-in coin bias, optimal sampling
// proportions p*, the posterior-convergence exponent, and the game-theoretic
// certificate that p* is an equilibrium allocation.

#include <vector>

#include "dts/instance.hpp"

namespace dts {

struct AllocationSolution {
    Vector p_star;             // strictly positive, sums to 1
    double gamma_inverse = 0;  // optimal exponent
    double y_star = 0;         // fixed-point auxiliary
    double balance_residual = 0;  // max pairwise gap of the information-balance ratios
    double beta_residual = 0;     // |p*[best] - sqrt(sum of squared challenger shares)|
    int best_arm_index = 0;
};

// Plug-in coin bias. If the argmax of the means is not unique (ties within
// 1e-12) returns previous_beta; otherwise solves
//   sum_{i != best} (gap_i^2 y - 1)^{-2} = 1
// for y by bisection and returns 1 / (1 + sum_i (gap_i^2 y - 1)^{-1}).
// The result always lies in [1/(1+sqrt(k-1)), 1/2].
double solve_beta(const Vector& means, double previous_beta);

// Optimal sampling proportions for the given population means. scale is the
// squared population-direction norm under the inverse information rate,
// sigma^2 * x_pop' E[XX']^{-1} x_pop for i.i.d. contexts.
// Requires all-distinct means; throws "instance outside the distinct-means
// set" otherwise.
AllocationSolution solve_p_star(const Vector& population_means, double scale);

// Posterior-convergence exponent under ergodic sampling proportions p:
//   min_{j != best} gap_j^2 / (2 scale (1/p_best + 1/p_j)).
double gamma_inverse_at(const Vector& p, const Vector& population_means, double scale);

struct EquilibriumCertificate {
    std::vector<Vector> nature_alternatives;  // one stacked vector per challenger arm
    std::vector<int> challenger_arms;
    Vector nature_weights;                  // q*, over the alternatives
    std::vector<Matrix> information_shares;  // M*_i = p*_i E[XX']
    double max_tie_residual = 0;   // worst |pop-mean tie gap| over alternatives
    double value_gap = 0;          // worst |game utility - gamma_inverse|
    double weight_sum = 0;
};

// Evidence-rate utility of a design M against an alternative parameter:
//   (1/2 sigma^2) sum_i ||theta_i - alt_i||^2_{M_i}.
double game_utility(const Vector& theta, const Vector& theta_alt, const std::vector<Matrix>& M,
                    double sigma2, int d);

// Builds nature's least-favorable alternatives for the solved allocation and
// checks that each one ties its challenger arm with the best arm and achieves
// utility equal to the optimal exponent. second_moment is the exact context
// second-moment matrix E[XX'] and must be positive definite.
EquilibriumCertificate verify_equilibrium(const Instance& inst, const Matrix& second_moment,
                                          const AllocationSolution& sol);

}  // namespace dts
