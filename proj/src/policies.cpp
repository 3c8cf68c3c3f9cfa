#include "dts/policies.hpp"

#include <cmath>
#include <stdexcept>

#include "dts/normal.hpp"

namespace dts {

namespace {

// z-score variant that treats the fully degenerate tie as "no evidence"
// instead of throwing; selection rules need a total function.
double safe_z(const PosteriorState& state, int i, int j) {
    const double var = state.s2[i] + state.s2[j];
    const double gap = state.m[i] - state.m[j];
    if (var <= 0.0) {
        if (gap == 0.0) return 0.0;
        return gap > 0.0 ? std::numeric_limits<double>::infinity()
                         : -std::numeric_limits<double>::infinity();
    }
    return gap / std::sqrt(var);
}

int challenger_by_z_weights(const PosteriorState& state, int leader, Rng& rng) {
    const int k = state.k;
    std::vector<double> weights(k, 0.0);
    double total = 0.0;
    for (int j = 0; j < k; ++j) {
        if (j == leader) continue;
        weights[j] = norm_cdf(-safe_z(state, leader, j));
        total += weights[j];
    }
    if (total <= 0.0) {
        // All challengers infinitely dominated; any of them serves.
        for (int j = 0; j < k; ++j) weights[j] = (j == leader) ? 0.0 : 1.0;
    }
    return static_cast<int>(rng.categorical(weights));
}

}  // namespace

PolicyDecision dts_select(const PosteriorState& state, double beta_t, Rng& rng,
                          int max_resamples) {
    if (!(beta_t > 0.0 && beta_t <= 1.0)) throw std::invalid_argument("beta must be in (0,1]");
    const int k = state.k;

    PolicyDecision dec;
    dec.top_one = argmax_lowest(sample_population_means(state, rng));

    // One fresh draw produces a challenger with probability 1 - alpha_leader,
    // which is at most k * max_j Phi(-z_{leader,j}). If even max_resamples
    // draws are certifiably futile, go straight to the budget-exhausted rule.
    double max_tail = 0.0;
    for (int j = 0; j < k; ++j) {
        if (j != dec.top_one) max_tail = std::max(max_tail, norm_cdf(-safe_z(state, dec.top_one, j)));
    }
    const bool futile =
        static_cast<double>(max_resamples) * static_cast<double>(k) * max_tail < 1e-6;

    int challenger = -1;
    if (!futile) {
        for (long draw = 0; draw < max_resamples; ++draw) {
            const int cand = argmax_lowest(sample_population_means(state, rng));
            ++dec.resample_draws_used;
            if (cand != dec.top_one) {
                challenger = cand;
                break;
            }
        }
    }
    if (challenger < 0) {
        challenger = challenger_by_z_weights(state, dec.top_one, rng);
        dec.challenger_fallback = true;
    }
    dec.top_two = challenger;

    dec.coin = rng.bernoulli(beta_t) ? 1 : 0;
    dec.arm = dec.coin == 1 ? dec.top_one : dec.top_two;
    return dec;
}

Vector dts_propensities(const Vector& alpha, double beta_t) {
    const int k = static_cast<int>(alpha.size());
    for (int i = 0; i < k; ++i) {
        if (!(alpha[i] > 0.0 && alpha[i] < 1.0)) {
            throw std::domain_error("degenerate posterior probabilities");
        }
    }
    Vector psi(k);
    for (int i = 0; i < k; ++i) {
        double challenger_rate = 0.0;
        for (int j = 0; j < k; ++j) {
            if (j != i) challenger_rate += alpha[j] / (1.0 - alpha[j]);
        }
        psi[i] = alpha[i] * (beta_t + (1.0 - beta_t) * challenger_rate);
    }
    return psi;
}

PolicyDecision uniform_select(int k, Rng& rng) {
    PolicyDecision dec;
    dec.arm = static_cast<int>(rng.uniform_index(static_cast<std::size_t>(k)));
    dec.top_one = dec.top_two = dec.arm;
    dec.propensities = Vector::Constant(k, 1.0 / k);
    return dec;
}

PolicyDecision context_unaware_ts_select(const NaivePosterior& naive, Rng& rng) {
    const int k = naive.arms();
    Vector nu(k);
    for (int i = 0; i < k; ++i) {
        const auto [mean, var] = naive.summary(i);
        nu[i] = mean + std::sqrt(var) * rng.normal();
    }
    PolicyDecision dec;
    dec.arm = argmax_lowest(nu);
    dec.top_one = dec.top_two = dec.arm;
    return dec;
}

PolicyDecision deconfounded_ucb_select(const PosteriorState& state, double z) {
    if (!(z > 0.0)) throw std::invalid_argument("ucb quantile multiplier must be positive");
    Vector ucb(state.k);
    for (int i = 0; i < state.k; ++i) ucb[i] = state.m[i] + z * std::sqrt(state.s2[i]);
    PolicyDecision dec;
    dec.arm = argmax_lowest(ucb);
    dec.top_one = dec.top_two = dec.arm;
    return dec;
}

PolicyDecision contextual_ts_select(const PosteriorState& state, const Vector& current_context,
                                    Rng& rng) {
    const int k = state.k;
    const int d = state.d;
    Vector values(k);
    if (!state.cross_arm_correlated) {
        // Independent blocks: sample each arm's parameter separately.
        for (int i = 0; i < k; ++i) {
            const Matrix block = state.covariance.block(i * d, i * d, d, d);
            Eigen::LLT<Matrix> llt(block);
            Matrix chol;
            if (llt.info() == Eigen::Success) {
                chol = llt.matrixL();
            } else {
                Eigen::SelfAdjointEigenSolver<Matrix> es(block);
                chol = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
            }
            Vector zvec(d);
            for (int c = 0; c < d; ++c) zvec[c] = rng.normal();
            values[i] = current_context.dot(state.mean.segment(i * d, d) + chol * zvec);
        }
    } else {
        Eigen::LLT<Matrix> llt(state.covariance);
        Matrix chol;
        if (llt.info() == Eigen::Success) {
            chol = llt.matrixL();
        } else {
            Eigen::SelfAdjointEigenSolver<Matrix> es(state.covariance);
            chol = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
        }
        Vector zvec(k * d);
        for (int c = 0; c < k * d; ++c) zvec[c] = rng.normal();
        const Vector theta = state.mean + chol * zvec;
        for (int i = 0; i < k; ++i) values[i] = current_context.dot(theta.segment(i * d, d));
    }
    PolicyDecision dec;
    dec.arm = argmax_lowest(values);
    dec.top_one = dec.top_two = dec.arm;
    return dec;
}

}  // namespace dts
