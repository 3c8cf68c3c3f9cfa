#include "dts/allocation.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

namespace dts {

namespace {

struct FixedPoint {
    double y;
    Vector shares;  // p over all arms, best included
};

// Solves sum_i (gap_i^2 y - 1)^{-2} = 1 on (max_i gap_i^{-2}, inf). The
// residual is strictly decreasing there, so bisection is unconditionally
// convergent.
FixedPoint solve_share_fixed_point(const Vector& means, int best) {
    const int k = static_cast<int>(means.size());
    std::vector<double> gap2;
    gap2.reserve(k - 1);
    for (int i = 0; i < k; ++i) {
        if (i == best) continue;
        const double g = means[best] - means[i];
        gap2.push_back(g * g);
    }

    auto assemble = [&](double y) {
        Vector p(k);
        double denom = 1.0;
        for (double g2 : gap2) denom += 1.0 / (g2 * y - 1.0);
        const double p_best = 1.0 / denom;
        int slot = 0;
        for (int i = 0; i < k; ++i) {
            if (i == best) {
                p[i] = p_best;
            } else {
                p[i] = p_best / (gap2[slot++] * y - 1.0);
            }
        }
        return p;
    };

    if (k == 2) {
        // Single challenger: (gap^2 y - 1)^2 = 1 exactly, so the best arm's
        // share is 1/2 for any gap.
        return {2.0 / gap2[0], assemble(2.0 / gap2[0])};
    }

    auto residual = [&](double y) {
        double r = -1.0;
        for (double g2 : gap2) {
            const double t = g2 * y - 1.0;
            r += 1.0 / (t * t);
        }
        return r;
    };

    double g2_min = gap2[0];
    for (double g2 : gap2) g2_min = std::min(g2_min, g2);
    double lo = (1.0 + 1e-12) / g2_min;
    double hi = 2.0 * lo;
    while (residual(hi) > 0.0) hi *= 2.0;

    double y = 0.5 * (lo + hi);
    for (int iter = 0; iter < 200; ++iter) {
        y = 0.5 * (lo + hi);
        const double r = residual(y);
        if (std::abs(r) < 1e-12) break;
        if (r > 0.0) {
            lo = y;
        } else {
            hi = y;
        }
    }
    return {y, assemble(y)};
}

int unique_argmax(const Vector& means, double tol) {
    const int best = argmax_lowest(means);
    for (Eigen::Index i = 0; i < means.size(); ++i) {
        if (static_cast<int>(i) != best && means[best] - means[i] <= tol) return -1;
    }
    return best;
}

}  // namespace

double solve_beta(const Vector& means, double previous_beta) {
    for (Eigen::Index i = 0; i < means.size(); ++i) {
        if (!std::isfinite(means[i])) throw std::invalid_argument("non-finite posterior mean");
    }
    const int best = unique_argmax(means, 1e-12);
    if (best < 0) return previous_beta;
    return solve_share_fixed_point(means, best).shares[best];
}

AllocationSolution solve_p_star(const Vector& population_means, double scale) {
    const int k = static_cast<int>(population_means.size());
    if (k < 2) throw std::invalid_argument("need at least 2 arms");
    if (!(scale > 0.0)) throw std::invalid_argument("scale must be positive");
    for (int i = 0; i < k; ++i) {
        for (int j = i + 1; j < k; ++j) {
            if (std::abs(population_means[i] - population_means[j]) <= 1e-12) {
                throw std::invalid_argument("instance outside the distinct-means set");
            }
        }
    }
    const int best = argmax_lowest(population_means);
    FixedPoint fp = solve_share_fixed_point(population_means, best);

    AllocationSolution sol;
    sol.p_star = fp.shares;
    sol.y_star = fp.y;
    sol.best_arm_index = best;
    sol.gamma_inverse = gamma_inverse_at(fp.shares, population_means, scale);

    // Balance: the standardized gap rate must match across challengers.
    double r_min = std::numeric_limits<double>::infinity();
    double r_max = -r_min;
    double sum_sq = 0.0;
    for (int i = 0; i < k; ++i) {
        if (i == best) continue;
        const double gap = population_means[best] - population_means[i];
        const double r = gap / std::sqrt(1.0 / sol.p_star[best] + 1.0 / sol.p_star[i]);
        r_min = std::min(r_min, std::abs(r));
        r_max = std::max(r_max, std::abs(r));
        sum_sq += sol.p_star[i] * sol.p_star[i];
    }
    sol.balance_residual = r_max - r_min;
    sol.beta_residual = std::abs(sol.p_star[best] - std::sqrt(sum_sq));
    return sol;
}

double gamma_inverse_at(const Vector& p, const Vector& population_means, double scale) {
    const int k = static_cast<int>(population_means.size());
    for (int i = 0; i < k; ++i) {
        if (!(p[i] > 0.0)) throw std::invalid_argument("sampling proportions must be positive");
    }
    const int best = argmax_lowest(population_means);
    double worst = std::numeric_limits<double>::infinity();
    for (int j = 0; j < k; ++j) {
        if (j == best) continue;
        const double gap = population_means[best] - population_means[j];
        worst = std::min(worst, gap * gap / (2.0 * scale * (1.0 / p[best] + 1.0 / p[j])));
    }
    return worst;
}

double game_utility(const Vector& theta, const Vector& theta_alt, const std::vector<Matrix>& M,
                    double sigma2, int d) {
    const int k = static_cast<int>(M.size());
    double total = 0.0;
    for (int i = 0; i < k; ++i) {
        const Vector diff = theta.segment(i * d, d) - theta_alt.segment(i * d, d);
        total += diff.dot(M[i] * diff);
    }
    return total / (2.0 * sigma2);
}

EquilibriumCertificate verify_equilibrium(const Instance& inst, const Matrix& second_moment,
                                          const AllocationSolution& sol) {
    if (!inst.truth) throw std::invalid_argument("equilibrium check needs a truth vector");
    const double sigma2 = inst.prior.noise_variance;
    if (!(sigma2 > 0.0)) throw std::invalid_argument("equilibrium check needs positive noise");

    Eigen::SelfAdjointEigenSolver<Matrix> es(second_moment);
    if (es.eigenvalues().minCoeff() <= 1e-12 * es.eigenvalues().maxCoeff()) {
        throw std::invalid_argument("context second-moment matrix is singular");
    }

    const Vector& theta = *inst.truth;
    const Vector& x_pop = inst.population.x_pop;
    const int k = inst.k;
    const int d = inst.d;
    const int best = sol.best_arm_index;

    const Matrix lambda_inv = second_moment.inverse();
    const Vector dir = lambda_inv * x_pop;         // direction nature perturbs along
    const double pop_norm2 = x_pop.dot(dir);       // squared norm under the inverse moment

    std::vector<Matrix> shares(k);
    for (int i = 0; i < k; ++i) shares[i] = sol.p_star[i] * second_moment;

    EquilibriumCertificate cert;
    cert.information_shares = shares;
    cert.nature_weights.resize(k - 1);

    int slot = 0;
    for (int i = 0; i < k; ++i) {
        if (i == best) continue;
        const double gap = population_mean(theta, best, inst.population) -
                           population_mean(theta, i, inst.population);
        // Multiplier that makes the tie constraint bind exactly.
        const double eta =
            gap / (pop_norm2 * (1.0 / sol.p_star[i] + 1.0 / sol.p_star[best]));

        Vector alt = theta;
        alt.segment(i * d, d) += (eta / sol.p_star[i]) * dir;
        alt.segment(best * d, d) -= (eta / sol.p_star[best]) * dir;

        const double tie = std::abs(population_mean(alt, i, inst.population) -
                                    population_mean(alt, best, inst.population));
        const double utility = game_utility(theta, alt, shares, sigma2, d);

        cert.nature_alternatives.push_back(std::move(alt));
        cert.challenger_arms.push_back(i);
        cert.nature_weights[slot] =
            (sol.p_star[i] / sol.p_star[best]) * (sol.p_star[i] / sol.p_star[best]);
        cert.max_tie_residual = std::max(cert.max_tie_residual, tie);
        cert.value_gap = std::max(cert.value_gap, std::abs(utility - sol.gamma_inverse));
        ++slot;
    }
    cert.weight_sum = cert.nature_weights.sum();
    return cert;
}

}  // namespace dts
