#pragma once
// Episode runner and Monte Carlo studies: simple regret, stopping times,
// context-informativeness and regret bounds, convergence diagnostics and
// cost-objective sweeps. Replications are deterministic given the base seed
// and independent of the parallelism degree.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dts/allocation.hpp"
#include "dts/environments.hpp"
#include "dts/policies.hpp"
#include "dts/stopping.hpp"

namespace dts {

enum class PolicyKind { Dts, Uniform, NaiveTs, DeconfoundedUcb, ContextualTs };

enum class BetaMode { Fixed, Plugin };

struct PolicySpec {
    PolicyKind kind = PolicyKind::Dts;
    BetaMode beta_mode = BetaMode::Fixed;
    double beta = 0.5;
    int max_resamples = 10000;
    double ucb_z = 1.645;  // 95% posterior quantile
};

PolicyKind policy_kind_from_name(const std::string& name);
std::string policy_name(PolicyKind kind);

struct PeriodRecord {
    long t;
    int context_id;
    int arm;
    double reward;
    double beta;
    double z_min;  // min z of the current leader against challengers
    Vector m;
    Vector s2;
};

struct CheckpointRecord {
    long t = 0;
    Vector p_hat;   // empirical arm frequencies through t
    Vector m;
    Vector s2;
    Vector alpha;   // empty when not computed
    Vector psi;     // empty unless the policy has closed-form propensities
    double beta = 0.5;
    // -(1/t) log(1 - alpha at the true best arm); switches to the
    // z-score tail surrogate once 1 - alpha underflows.
    double exponent = std::numeric_limits<double>::quiet_NaN();
    bool exponent_from_surrogate = false;
};

struct RunTrace {
    std::vector<PeriodRecord> periods;  // empty unless recording was requested
    std::vector<CheckpointRecord> checkpoints;
    long tau = 0;
    std::string stop_reason;  // "horizon", "threshold" or "cap"
    int leader_at_stop = 0;   // argmax of delayed-posterior means when stopping
    int final_selection = 0;  // Bayes selection on the flushed posterior
    double regret = 0.0;
    double combined_cost = std::numeric_limits<double>::quiet_NaN();
    std::uint64_t seed = 0;
};

struct EpisodeConfig {
    PolicySpec policy;
    std::optional<long> horizon;
    std::optional<StoppingConfig> stopping;
    double cost_per_period = 0.0;  // enters combined cost for stopped runs
    bool record_periods = false;
    bool checkpoints_enabled = true;
    bool compute_alpha = true;  // quadrature at checkpoints (independent-arm states)
};

// Truth used by replication r; receives the replication seed.
using TruthSampler = std::function<Vector(std::uint64_t)>;

TruthSampler fixed_truth(Vector theta);
TruthSampler prior_truth(const Instance& inst);

RunTrace run_episode(const Instance& inst, const ContextProcess& process,
                     const EpisodeConfig& config, const Vector& truth, std::uint64_t seed);

struct Stat {
    double mean = 0.0;
    double ci_half_width = 0.0;  // 95% normal approximation
    double std_error = 0.0;
    long n = 0;
};

Stat summarize(const std::vector<double>& values);

struct CheckpointSummary {
    long t = 0;
    Vector p_mean;
    Vector p_abs_err;  // mean |p_hat - reference| per arm; empty without a reference
    double exponent_mean = std::numeric_limits<double>::quiet_NaN();
    double exponent_se = 0.0;
    long n = 0;
};

struct RunSummary {
    long n_reps = 0;
    std::uint64_t base_seed = 0;
    Stat regret;
    Stat tau;
    Stat cost;
    double cap_hit_fraction = 0.0;
    double wrong_selection_fraction = 0.0;
    std::vector<CheckpointSummary> checkpoints;
    RunTrace first_trace;  // replication 0, for artifact output
};

struct StudySpec {
    Instance instance;  // truth ignored; truth_sampler decides
    ContextProcess process;
    EpisodeConfig episode;
    TruthSampler truth_sampler;
    std::optional<Vector> reference_proportions;  // enables |p - p*| aggregation
    long n_reps = 1;
    std::uint64_t base_seed = 0;
    int parallelism = 1;
};

// Replication r runs on seed base_seed ^ r; aggregation is sequential in r,
// so the summary is bitwise independent of the parallelism degree.
RunSummary monte_carlo(const StudySpec& spec);

// Population-direction posterior variance attainable if one arm were
// observed in every listed period.
double info_measure_V(const std::vector<Vector>& contexts, const Matrix& prior_covariance,
                      double sigma2, const Vector& x_pop);

double iota_factor(int d, long T, const Matrix& prior_covariance);

// Simple-regret bound sqrt(2 iota k H V); H defaults to log k.
double prop1_bound(int k, int d, long T, const Matrix& prior_covariance, double V,
                   std::optional<double> entropy = std::nullopt);

struct ConvergenceRow {
    long t;
    Vector p_abs_err;
    double exponent_mean;
    double exponent_ratio;  // against the optimal exponent
};

std::vector<ConvergenceRow> convergence_diagnostics(const RunSummary& summary,
                                                    const AllocationSolution& allocation);

struct CostSweepRow {
    double c;
    Stat tau;
    Stat regret;
    Stat cost;
    double normalized_cost;  // mean cost / (c log(1/c))
    double wrong_selection_fraction;
    long cap_hits;
};

// Runs the stopped experiment at each per-period cost with confidence
// parameter delta = c.
std::vector<CostSweepRow> cost_sweep(const Instance& inst, const ContextProcess& process,
                                     const PolicySpec& policy, const TruthSampler& truth,
                                     const std::vector<double>& c_values, long n_reps,
                                     std::uint64_t base_seed, ThresholdMode mode,
                                     long max_horizon, int parallelism);

void write_trace_csv(const std::string& path, const RunTrace& trace, int k);

}  // namespace dts
