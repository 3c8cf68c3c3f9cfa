#pragma once
// Context sequences and reward generation for the benchmark families:
// i.i.d. finite-support contexts, day-of-week blocks, the two-phase
// counterexample, latent smoothly-drifting confounders, and the
// mainstream-action instance with its exact discrete belief.

#include <cstdint>
#include <optional>
#include <vector>

#include "dts/instance.hpp"
#include "dts/rng.hpp"

namespace dts {

enum class ContextKind { Iid, DayOfWeek, TwoPhase, Fixed, LatentTime };

struct ContextProcess {
    ContextKind kind = ContextKind::Iid;
    int dimension = 0;
    std::vector<Vector> support;        // iid / fixed supports; basis vectors elsewhere
    std::vector<double> probabilities;  // iid
    int block_length = 1;               // day-of-week periods per day
    int days = 7;
    long horizon = 0;  // two-phase split horizon; hard length for fixed/latent-time

    // Context for period t (1-based). Deterministic kinds ignore the rng.
    // context_id reports the support index (or day, phase, period).
    Vector step(long t, Rng& rng, int* context_id = nullptr) const;

    // Exact E[XX'] for i.i.d. processes.
    Matrix second_moment() const;
};

ContextProcess make_iid(std::vector<Vector> contexts, std::vector<double> probabilities);
ContextProcess make_day_of_week(int periods_per_day, int days = 7);
ContextProcess make_two_phase(long horizon);
ContextProcess make_fixed(std::vector<Vector> sequence);
ContextProcess make_latent_time(long horizon);

struct RewardModel {
    Vector theta;  // stacked truth
    double sigma2 = 1.0;
    int d = 0;

    double reward(int arm, const Vector& x, Rng& rng) const {
        const double mean = x.dot(theta.segment(arm * d, d));
        if (sigma2 == 0.0) return mean;
        return mean + std::sqrt(sigma2) * rng.normal();
    }
};

struct Environment {
    Instance instance;  // truth left empty; studies draw it per replication
    ContextProcess process;
};

// Two arms, two contexts observed in two phases, zero reward noise, and a
// prior that gives arm 2 twice the variance of arm 1 in every coordinate.
// Context-unaware inference confounds here and optimism starves an arm.
Environment make_counterexample_instance(long horizon);

// k arms over d basis-vector day contexts with an N(0, I) prior per arm and
// uniform population weights.
Environment make_day_of_week_instance(int k, int periods_per_day, int days, double sigma2);

// Contexts e_1..e_T in order; each arm's parameter is a common level plus a
// smooth exogenous shift with correlation exp(-lag/kappa). shared puts the
// same shift on every arm (cross-arm correlated prior).
Environment make_latent_confounder_instance(long horizon, double arm_variance,
                                            double eps_variance, double kappa, bool shared);

// Stationary draw of the latent-confounder truth via the order-one
// autoregression equivalent to the exponential kernel; O(T) rather than a
// dense factorization.
Vector latent_confounder_truth(long horizon, double arm_variance, double eps_variance,
                               double kappa, bool shared, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Mainstream-action instance: three arms, two segments, a middle arm that is
// best on average but optimal in neither segment. Non-Gaussian, so the demo
// runs on an exact discrete belief over the finite parameter grid instead of
// the Gaussian engine.

struct MainstreamTruth {
    double theta0;  // mainstream arm level, uniform over a 101-point grid
    int theta1;     // segment preferences, each uniform over {1, 2}
    int theta2;
};

inline constexpr int kMainstreamGridSize = 101;

MainstreamTruth draw_mainstream_truth(Rng& rng);

double mainstream_mean(const MainstreamTruth& truth, int arm, int context);  // context in {0,1}

// Exact belief: each unknown is independent, observations identify
// coordinates outright (rewards are noiseless).
struct MainstreamBelief {
    std::optional<int> theta1;
    std::optional<int> theta2;
    std::optional<double> theta0;

    int sample_contextual_best(int context, Rng& rng) const;  // contextual TS draw
    void update(int arm, int context, double reward);
    int bayes_population_select() const;
};

struct MainstreamEpisode {
    double regret = 0.0;          // population simple regret of the final selection
    long arm3_plays_after = 0;    // plays of the mainstream arm after the burn-in period
    long periods_after = 0;
    long arm3_plays_total = 0;
};

MainstreamEpisode run_mainstream_episode(long horizon, long burnin, std::uint64_t seed);

}  // namespace dts
