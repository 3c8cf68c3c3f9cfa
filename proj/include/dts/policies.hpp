#pragma once
// Arm-selection rules: deconfounded top-two sampling with a biased coin, the
// uniform baseline, context-unaware Thompson sampling, deconfounded UCB and
// contextual Thompson sampling. Exact per-period propensities for the
// top-two rule.

#include "dts/posterior.hpp"

namespace dts {

struct PolicyDecision {
    int arm = 0;
    int top_one = 0;
    int top_two = 0;  // equals top_one for policies without a challenger draw
    int coin = -1;    // 0/1, -1 when the policy flips no coin
    Vector propensities;  // empty when not available in closed form
    long resample_draws_used = 0;
    bool challenger_fallback = false;  // challenger picked by the z-weight approximation
};

// Top-two sampling: draw the leader as the argmax of sampled population
// means, redraw until a distinct challenger appears (at most max_resamples
// times), then play the leader with probability beta_t. When the posterior
// has concentrated so far that the redraw loop is certifiably futile
// (probability < 1e-6 of producing a challenger within the budget), the
// challenger is sampled directly with weights Phi(-z) against the leader,
// the same rule used when the budget is exhausted.
PolicyDecision dts_select(const PosteriorState& state, double beta_t, Rng& rng,
                          int max_resamples = 10000);

// Closed-form selection probabilities of the top-two rule given the
// optimal-arm probabilities alpha:
//   psi_i = alpha_i [beta + (1-beta) sum_{j != i} alpha_j / (1 - alpha_j)].
// Requires alpha strictly inside the simplex.
Vector dts_propensities(const Vector& alpha, double beta_t);

PolicyDecision uniform_select(int k, Rng& rng);

// Samples each arm's naive belief independently and plays the argmax.
PolicyDecision context_unaware_ts_select(const NaivePosterior& naive, Rng& rng);

// Plays argmax of m + z * s, ties to the lowest index.
PolicyDecision deconfounded_ucb_select(const PosteriorState& state, double z);

// Samples a parameter vector from the joint posterior and plays the arm that
// is best in the current context. The only rule here that reads the context.
PolicyDecision contextual_ts_select(const PosteriorState& state, const Vector& current_context,
                                    Rng& rng);

}  // namespace dts
