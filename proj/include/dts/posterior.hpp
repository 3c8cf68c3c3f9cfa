#pragma once
// Exact Gaussian posterior over the stacked parameter under delayed
// observations, plus the scalar population-mean summaries, z-scores and
// optimal-arm probabilities consumed by the selection policies.

#include <deque>
#include <vector>

#include "dts/instance.hpp"
#include "dts/rng.hpp"

namespace dts {

struct PosteriorState {
    int k = 0;
    int d = 0;
    double sigma2 = 1.0;
    Vector x_pop;

    Vector mean;        // stacked, length d*k
    Matrix covariance;  // d*k x d*k, kept symmetric

    Vector m;   // posterior mean of each arm's population mean
    Vector s2;  // posterior variance of each arm's population mean

    std::vector<long> observation_count;  // released observations per arm
    long clock = 1;

    // Nonzero cross-arm prior covariance; quadrature over per-arm marginals
    // is then invalid and callers must use joint sampling.
    bool cross_arm_correlated = false;

    static PosteriorState init(const Instance& inst);

    // Incorporates one observation immediately (the delay buffer decides when
    // to call this). Rank-one covariance downdate; with zero noise this is
    // exact conditioning and the context must be a standard basis vector.
    void apply_observation(int arm, const Vector& x, double reward);

    // Recomputes m and s2 from the stacked belief.
    void refresh_summaries();

    // Posterior covariance matrix of the k population means.
    Matrix population_mean_covariance() const;

  private:
    int updates_since_symmetrize_ = 0;
};

struct Observation {
    long period;
    int arm;
    Vector context;
    double reward;
};

// FIFO of observations not yet visible to the decision-maker. An observation
// made at period p becomes visible at period t iff p <= t - delay.
class DelayBuffer {
  public:
    explicit DelayBuffer(int delay) : delay_(delay) {}

    void record(long period, int arm, Vector context, double reward);

    // Releases every pending observation visible at current_period.
    void release(PosteriorState& state, long current_period);

    // Releases everything; used for the full-information final selection.
    void flush(PosteriorState& state);

    std::size_t pending_count() const { return pending_.size(); }
    int delay() const { return delay_; }

  private:
    std::deque<Observation> pending_;
    int delay_;
};

enum class ZScoreMode { MeanGap, CovarianceAware };

// Standardized posterior mean gap between arms i and j. Returns +-inf when
// both variances vanish but the means differ; throws if the score is 0/0.
double z_score(const PosteriorState& state, int i, int j, ZScoreMode mode = ZScoreMode::MeanGap);

// One joint draw of the k population means from the posterior.
Vector sample_population_means(const PosteriorState& state, Rng& rng);

enum class AlphaMethod { Quadrature, MonteCarlo };

// Posterior probability that each arm is the population-best arm.
// Quadrature integrates the independent-arm marginals to ~1e-6; with
// cross-arm correlation it falls back to Monte Carlo (flagging *fell_back)
// which estimates by argmax frequency over mc_samples joint draws.
Vector optimal_arm_probabilities(const PosteriorState& state, AlphaMethod method,
                                 Rng* rng = nullptr, int mc_samples = 100000,
                                 bool* fell_back = nullptr);

// Quadrature over plain (m, s2) summaries, shared by checkpoint diagnostics.
Vector optimal_arm_probabilities_quadrature(const Vector& m, const Vector& s2);

// Context-unaware belief: treats every arm as a unit-variance scalar bandit
// with an N(0,1) prior, ignoring contexts entirely. Zero noise is handled as
// the limit: variance 0 and empirical mean once the arm has been played.
struct NaivePosterior {
    NaivePosterior(int k, double sigma2) : counts_(k, 0), reward_sums_(k, 0.0), sigma2_(sigma2) {}

    void update(int arm, double reward) {
        counts_[arm] += 1;
        reward_sums_[arm] += reward;
    }

    // (mean, variance) of the naive belief for one arm.
    std::pair<double, double> summary(int arm) const;

    int arms() const { return static_cast<int>(counts_.size()); }

  private:
    std::vector<long> counts_;
    std::vector<double> reward_sums_;
    double sigma2_;
};

}  // namespace dts
