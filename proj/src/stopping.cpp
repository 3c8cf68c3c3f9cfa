#include "dts/stopping.hpp"

#include <cmath>
#include <stdexcept>

namespace dts {

double stopping_threshold(long t, double delta, ThresholdMode mode) {
    const double log_term = 3.0 * std::log(static_cast<double>(t)) + std::log(1.0 / delta);
    if (log_term <= 0.0) return 0.0;
    if (mode == ThresholdMode::ZPlusSqrt) {
        const double gamma = std::sqrt(2.0 * log_term);
        return gamma + std::sqrt(gamma);
    }
    return std::sqrt(2.0 * (log_term + std::sqrt(log_term)));
}

StopCheck should_stop(const PosteriorState& state, long t, const StoppingConfig& config) {
    StopCheck check;
    check.leader = argmax_lowest(state.m);
    check.threshold = stopping_threshold(t, config.delta, config.mode);

    double min_z = std::numeric_limits<double>::infinity();
    for (int j = 0; j < state.k; ++j) {
        if (j == check.leader) continue;
        const double var = state.s2[check.leader] + state.s2[j];
        double z;
        if (var <= 0.0) {
            const double gap = state.m[check.leader] - state.m[j];
            z = gap > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
        } else {
            z = (state.m[check.leader] - state.m[j]) / std::sqrt(var);
        }
        min_z = std::min(min_z, z);
    }
    check.min_z = min_z;

    if (min_z >= check.threshold) {
        check.stop = true;
    } else if (t >= config.max_horizon) {
        check.stop = true;
        check.cap_hit = true;
    }
    return check;
}

int bayes_select(const PosteriorState& state) { return argmax_lowest(state.m); }

double combined_cost(double cost_per_period, long tau, double regret) {
    if (!(cost_per_period > 0.0)) throw std::invalid_argument("per-period cost must be positive");
    if (tau < 1) throw std::invalid_argument("stopping index must be >= 1");
    return cost_per_period * static_cast<double>(tau) + regret;
}

}  // namespace dts
