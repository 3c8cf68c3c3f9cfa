#pragma once
// z-threshold stopping rule, Bayes-optimal final selection and the combined
// sampling-cost objective.

#include "dts/posterior.hpp"

namespace dts {

// The stopping threshold admits two readings of the same tail bound. The
// default compares min-z against g + sqrt(g) with g = sqrt(2 log(t^3/d)).
// The expansion variant applies the add-on on the squared scale,
// z^2/2 >= l + sqrt(l) with l = log(t^3/d), which is much less conservative
// at realistic horizons. Both are kept; studies record which one they used.
enum class ThresholdMode { ZPlusSqrt, SquaredExpansion };

struct StoppingConfig {
    double delta = 0.01;
    long max_horizon = 1000000;  // safety cap, reported as a distinct stop reason
    ThresholdMode mode = ThresholdMode::ZPlusSqrt;
};

double stopping_threshold(long t, double delta, ThresholdMode mode = ThresholdMode::ZPlusSqrt);

struct StopCheck {
    bool stop = false;
    bool cap_hit = false;
    double min_z = 0.0;
    double threshold = 0.0;
    int leader = 0;
};

// True iff every z-score of the empirical best arm against a challenger
// clears the threshold, or the horizon cap is reached.
StopCheck should_stop(const PosteriorState& state, long t, const StoppingConfig& config);

// Argmax of posterior population means, ties to the lowest index. Callers
// flush the delay buffer first so this sees the full-information posterior.
int bayes_select(const PosteriorState& state);

double combined_cost(double cost_per_period, long tau, double regret);

}  // namespace dts
