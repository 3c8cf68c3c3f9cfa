#include "dts/harness.hpp"

#include <Eigen/Eigenvalues>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <thread>

#include "dts/normal.hpp"

namespace dts {

PolicyKind policy_kind_from_name(const std::string& name) {
    if (name == "dts") return PolicyKind::Dts;
    if (name == "uniform") return PolicyKind::Uniform;
    if (name == "naive-ts") return PolicyKind::NaiveTs;
    if (name == "deconfounded-ucb") return PolicyKind::DeconfoundedUcb;
    if (name == "contextual-ts") return PolicyKind::ContextualTs;
    throw std::invalid_argument("unknown policy: " + name);
}

std::string policy_name(PolicyKind kind) {
    switch (kind) {
        case PolicyKind::Dts: return "dts";
        case PolicyKind::Uniform: return "uniform";
        case PolicyKind::NaiveTs: return "naive-ts";
        case PolicyKind::DeconfoundedUcb: return "deconfounded-ucb";
        case PolicyKind::ContextualTs: return "contextual-ts";
    }
    return "?";
}

TruthSampler fixed_truth(Vector theta) {
    return [theta = std::move(theta)](std::uint64_t) { return theta; };
}

TruthSampler prior_truth(const Instance& inst) {
    // Factorize the prior once; every replication reuses the factor.
    const Vector mu = inst.joint_prior_mean();
    const Matrix cov = inst.joint_prior_covariance();
    Eigen::LLT<Matrix> llt(cov);
    Matrix chol;
    if (llt.info() == Eigen::Success) {
        chol = llt.matrixL();
    } else {
        Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
        chol = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
    }
    return [mu, chol](std::uint64_t seed) {
        Rng rng(splitmix64(seed ^ 0x5eedf00d2468aceULL));
        Vector z(mu.size());
        for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
        return Vector(mu + chol * z);
    };
}

namespace {

double leader_min_z(const PosteriorState& state) {
    const int leader = argmax_lowest(state.m);
    double min_z = std::numeric_limits<double>::infinity();
    for (int j = 0; j < state.k; ++j) {
        if (j == leader) continue;
        const double var = state.s2[leader] + state.s2[j];
        const double gap = state.m[leader] - state.m[j];
        double z;
        if (var <= 0.0) {
            z = gap > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
        } else {
            z = gap / std::sqrt(var);
        }
        min_z = std::min(min_z, z);
    }
    return min_z;
}

PolicyDecision select_arm(const PolicySpec& spec, const PosteriorState& state,
                          const NaivePosterior& naive, const Vector& context, double beta,
                          Rng& rng) {
    switch (spec.kind) {
        case PolicyKind::Dts: return dts_select(state, beta, rng, spec.max_resamples);
        case PolicyKind::Uniform: return uniform_select(state.k, rng);
        case PolicyKind::NaiveTs: return context_unaware_ts_select(naive, rng);
        case PolicyKind::DeconfoundedUcb: return deconfounded_ucb_select(state, spec.ucb_z);
        case PolicyKind::ContextualTs: return contextual_ts_select(state, context, rng);
    }
    throw std::logic_error("unreachable");
}

// -(1/t) log(1 - alpha at arm star), switching to the tail surrogate
// max_j log Phi(-z_{star,j}) when the direct value underflows.
void fill_exponent(CheckpointRecord& cp, const Vector& alpha, const PosteriorState& state,
                   int star) {
    double one_minus = 0.0;
    if (alpha.size() == state.k) {
        for (int j = 0; j < state.k; ++j) {
            if (j != star) one_minus += alpha[j];
        }
    }
    double log_one_minus;
    if (one_minus > 1e-12) {
        log_one_minus = std::log(one_minus);
        cp.exponent_from_surrogate = false;
    } else {
        log_one_minus = -std::numeric_limits<double>::infinity();
        for (int j = 0; j < state.k; ++j) {
            if (j == star) continue;
            const double var = state.s2[star] + state.s2[j];
            if (var <= 0.0) continue;
            const double z = (state.m[star] - state.m[j]) / std::sqrt(var);
            log_one_minus = std::max(log_one_minus, norm_logcdf(-z));
        }
        cp.exponent_from_surrogate = true;
        if (!std::isfinite(log_one_minus)) {
            cp.exponent = std::numeric_limits<double>::quiet_NaN();
            return;
        }
    }
    cp.exponent = -log_one_minus / static_cast<double>(cp.t);
}

}  // namespace

RunTrace run_episode(const Instance& inst, const ContextProcess& process,
                     const EpisodeConfig& config, const Vector& truth, std::uint64_t seed) {
    if (config.horizon.has_value() == config.stopping.has_value()) {
        throw std::invalid_argument("exactly one of horizon/stopping must be set");
    }

    Rng rng(seed);
    PosteriorState state = PosteriorState::init(inst);
    DelayBuffer buffer(inst.delay);
    NaivePosterior naive(inst.k, inst.prior.noise_variance);
    RewardModel rewards{truth, inst.prior.noise_variance, inst.d};
    const int star = best_arm(truth, inst.k, inst.population);

    RunTrace trace;
    trace.seed = seed;

    double beta = config.policy.beta;
    std::vector<long> counts(inst.k, 0);
    long next_checkpoint = 1;

    auto take_checkpoint = [&](long t) {
        CheckpointRecord cp;
        cp.t = t;
        cp.beta = beta;
        cp.p_hat.resize(inst.k);
        for (int i = 0; i < inst.k; ++i) {
            cp.p_hat[i] = static_cast<double>(counts[i]) / static_cast<double>(t);
        }
        cp.m = state.m;
        cp.s2 = state.s2;
        if (config.compute_alpha && !state.cross_arm_correlated) {
            cp.alpha = optimal_arm_probabilities_quadrature(state.m, state.s2);
            if (config.policy.kind == PolicyKind::Dts) {
                bool interior = true;
                for (int i = 0; i < inst.k; ++i) {
                    if (!(cp.alpha[i] > 0.0 && cp.alpha[i] < 1.0)) interior = false;
                }
                if (interior) cp.psi = dts_propensities(cp.alpha, beta);
            }
        }
        fill_exponent(cp, cp.alpha, state, star);
        trace.checkpoints.push_back(std::move(cp));
    };

    for (long t = 1;; ++t) {
        buffer.release(state, t);
        if (config.policy.kind == PolicyKind::Dts && config.policy.beta_mode == BetaMode::Plugin) {
            beta = solve_beta(state.m, beta);
        }
        if (config.stopping && t > 1) {
            const StopCheck check = should_stop(state, t, *config.stopping);
            if (check.stop) {
                trace.tau = t - 1;
                trace.stop_reason = check.cap_hit ? "cap" : "threshold";
                trace.leader_at_stop = check.leader;
                break;
            }
        }
        if (config.horizon && t > *config.horizon) {
            trace.tau = *config.horizon;
            trace.stop_reason = "horizon";
            trace.leader_at_stop = argmax_lowest(state.m);
            break;
        }

        int context_id = 0;
        const Vector x = process.step(t, rng, &context_id);
        const PolicyDecision dec = select_arm(config.policy, state, naive, x, beta, rng);
        const double r = rewards.reward(dec.arm, x, rng);
        buffer.record(t, dec.arm, x, r);
        if (config.policy.kind == PolicyKind::NaiveTs) naive.update(dec.arm, r);
        counts[dec.arm] += 1;

        if (config.record_periods) {
            trace.periods.push_back(
                PeriodRecord{t, context_id, dec.arm, r, beta, leader_min_z(state), state.m,
                             state.s2});
        }
        if (config.checkpoints_enabled &&
            (t == next_checkpoint || (config.horizon && t == *config.horizon))) {
            take_checkpoint(t);
            while (next_checkpoint <= t) next_checkpoint *= 2;
        }
    }

    // End-of-run belief checkpoint for stopped runs (fixed-horizon runs
    // already snapshot the final period inside the loop).
    if (config.checkpoints_enabled && trace.tau > 0 &&
        (trace.checkpoints.empty() || trace.checkpoints.back().t != trace.tau)) {
        take_checkpoint(trace.tau);
    }

    buffer.flush(state);
    trace.final_selection = bayes_select(state);
    trace.regret = simple_regret(truth, inst.k, trace.final_selection, inst.population);
    if (config.stopping && config.cost_per_period > 0.0) {
        trace.combined_cost = combined_cost(config.cost_per_period, trace.tau, trace.regret);
    }
    return trace;
}

Stat summarize(const std::vector<double>& values) {
    Stat s;
    s.n = static_cast<long>(values.size());
    if (s.n == 0) return s;
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(s.n);
    if (s.n > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        const double sd = std::sqrt(ss / static_cast<double>(s.n - 1));
        s.std_error = sd / std::sqrt(static_cast<double>(s.n));
        s.ci_half_width = 1.96 * s.std_error;
    }
    return s;
}

RunSummary monte_carlo(const StudySpec& spec) {
    if (spec.n_reps < 1) throw std::invalid_argument("need at least one replication");
    if (!spec.truth_sampler) throw std::invalid_argument("study needs a truth sampler");

    struct RepResult {
        double regret = 0.0;
        double tau = 0.0;
        double cost = std::numeric_limits<double>::quiet_NaN();
        bool cap_hit = false;
        bool wrong = false;
        std::vector<CheckpointRecord> checkpoints;
    };

    std::vector<RepResult> results(spec.n_reps);
    RunTrace first_trace;

    std::atomic<long> cursor{0};
    auto worker = [&]() {
        for (long r = cursor.fetch_add(1); r < spec.n_reps; r = cursor.fetch_add(1)) {
            const std::uint64_t seed = replication_seed(spec.base_seed, static_cast<std::uint64_t>(r));
            const Vector truth = spec.truth_sampler(seed);
            EpisodeConfig cfg = spec.episode;
            if (r != 0) cfg.record_periods = false;  // artifacts keep replication 0 only
            RunTrace trace = run_episode(spec.instance, spec.process, cfg, truth, seed);
            RepResult& out = results[r];
            out.regret = trace.regret;
            out.tau = static_cast<double>(trace.tau);
            out.cost = trace.combined_cost;
            out.cap_hit = trace.stop_reason == "cap";
            out.wrong = trace.regret > 0.0;
            out.checkpoints = trace.checkpoints;
            if (r == 0) first_trace = std::move(trace);
        }
    };

    const int threads = std::max(1, std::min<int>(spec.parallelism,
                                                  static_cast<int>(spec.n_reps)));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    RunSummary summary;
    summary.n_reps = spec.n_reps;
    summary.base_seed = spec.base_seed;
    summary.first_trace = std::move(first_trace);

    std::vector<double> regrets, taus, costs;
    long caps = 0, wrongs = 0;
    for (const RepResult& r : results) {
        regrets.push_back(r.regret);
        taus.push_back(r.tau);
        if (!std::isnan(r.cost)) costs.push_back(r.cost);
        caps += r.cap_hit ? 1 : 0;
        wrongs += r.wrong ? 1 : 0;
    }
    summary.regret = summarize(regrets);
    summary.tau = summarize(taus);
    summary.cost = summarize(costs);
    summary.cap_hit_fraction = static_cast<double>(caps) / static_cast<double>(spec.n_reps);
    summary.wrong_selection_fraction =
        static_cast<double>(wrongs) / static_cast<double>(spec.n_reps);

    // Group checkpoints by time, aggregating in replication order.
    std::vector<long> times;
    for (const RepResult& r : results) {
        for (const CheckpointRecord& cp : r.checkpoints) {
            if (std::find(times.begin(), times.end(), cp.t) == times.end()) {
                times.push_back(cp.t);
            }
        }
    }
    std::sort(times.begin(), times.end());

    const int k = spec.instance.k;
    for (long t : times) {
        CheckpointSummary cs;
        cs.t = t;
        cs.p_mean = Vector::Zero(k);
        if (spec.reference_proportions) cs.p_abs_err = Vector::Zero(k);
        std::vector<double> exponents;
        for (const RepResult& r : results) {
            for (const CheckpointRecord& cp : r.checkpoints) {
                if (cp.t != t) continue;
                cs.p_mean += cp.p_hat;
                if (spec.reference_proportions) {
                    cs.p_abs_err += (cp.p_hat - *spec.reference_proportions).cwiseAbs();
                }
                if (std::isfinite(cp.exponent)) exponents.push_back(cp.exponent);
                ++cs.n;
            }
        }
        if (cs.n > 0) {
            cs.p_mean /= static_cast<double>(cs.n);
            if (spec.reference_proportions) cs.p_abs_err /= static_cast<double>(cs.n);
        }
        const Stat es = summarize(exponents);
        cs.exponent_mean = es.n > 0 ? es.mean : std::numeric_limits<double>::quiet_NaN();
        cs.exponent_se = es.std_error;
        summary.checkpoints.push_back(std::move(cs));
    }
    return summary;
}

double info_measure_V(const std::vector<Vector>& contexts, const Matrix& prior_covariance,
                      double sigma2, const Vector& x_pop) {
    if (!contexts.empty() && !(sigma2 > 0.0)) {
        throw std::invalid_argument("information measure needs positive noise");
    }
    Matrix precision = prior_covariance.inverse();
    for (const Vector& x : contexts) precision += (x * x.transpose()) / sigma2;
    return x_pop.dot(precision.ldlt().solve(x_pop));
}

double iota_factor(int d, long T, const Matrix& prior_covariance) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(prior_covariance);
    const double lam_max = es.eigenvalues().maxCoeff();
    const double lam_min = es.eigenvalues().minCoeff();
    const double inner = d * lam_max * (1.0 / lam_min + static_cast<double>(T));
    return std::max(9.0 * std::log(inner) * lam_max, 9.0);
}

double prop1_bound(int k, int d, long T, const Matrix& prior_covariance, double V,
                   std::optional<double> entropy) {
    const double H = entropy.value_or(std::log(static_cast<double>(k)));
    return std::sqrt(2.0 * iota_factor(d, T, prior_covariance) * k * H * V);
}

std::vector<ConvergenceRow> convergence_diagnostics(const RunSummary& summary,
                                                    const AllocationSolution& allocation) {
    std::vector<ConvergenceRow> rows;
    for (const CheckpointSummary& cs : summary.checkpoints) {
        ConvergenceRow row;
        row.t = cs.t;
        row.p_abs_err = cs.p_abs_err;
        row.exponent_mean = cs.exponent_mean;
        row.exponent_ratio = cs.exponent_mean / allocation.gamma_inverse;
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<CostSweepRow> cost_sweep(const Instance& inst, const ContextProcess& process,
                                     const PolicySpec& policy, const TruthSampler& truth,
                                     const std::vector<double>& c_values, long n_reps,
                                     std::uint64_t base_seed, ThresholdMode mode,
                                     long max_horizon, int parallelism) {
    if (inst.delay != 1) {
        throw std::invalid_argument("cost sweep requires undelayed observations");
    }
    std::vector<CostSweepRow> rows;
    for (double c : c_values) {
        StudySpec spec;
        spec.instance = inst;
        spec.process = process;
        spec.episode.policy = policy;
        spec.episode.stopping = StoppingConfig{c, max_horizon, mode};
        spec.episode.cost_per_period = c;
        spec.episode.checkpoints_enabled = false;
        spec.truth_sampler = truth;
        spec.n_reps = n_reps;
        spec.base_seed = base_seed;
        spec.parallelism = parallelism;
        RunSummary summary = monte_carlo(spec);

        CostSweepRow row;
        row.c = c;
        row.tau = summary.tau;
        row.regret = summary.regret;
        row.cost = summary.cost;
        row.normalized_cost = summary.cost.mean / (c * std::log(1.0 / c));
        row.wrong_selection_fraction = summary.wrong_selection_fraction;
        row.cap_hits = static_cast<long>(std::lround(summary.cap_hit_fraction *
                                                     static_cast<double>(n_reps)));
        rows.push_back(row);
    }
    return rows;
}

namespace {

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

}  // namespace

void write_trace_csv(const std::string& path, const RunTrace& trace, int k) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);

    out << "t,context_id,arm,reward,beta,z_min";
    for (int i = 0; i < k; ++i) out << ",m_" << (i + 1);
    for (int i = 0; i < k; ++i) out << ",s2_" << (i + 1);
    out << ",checkpoint";
    for (int i = 0; i < k; ++i) out << ",alpha_" << (i + 1);
    for (int i = 0; i < k; ++i) out << ",psi_" << (i + 1);
    out << "\n";

    auto checkpoint_at = [&](long t) -> const CheckpointRecord* {
        for (const CheckpointRecord& cp : trace.checkpoints) {
            if (cp.t == t) return &cp;
        }
        return nullptr;
    };

    for (const PeriodRecord& p : trace.periods) {
        out << p.t << ',' << p.context_id << ',' << (p.arm + 1) << ',' << format_double(p.reward)
            << ',' << format_double(p.beta) << ',' << format_double(p.z_min);
        for (int i = 0; i < k; ++i) out << ',' << format_double(p.m[i]);
        for (int i = 0; i < k; ++i) out << ',' << format_double(p.s2[i]);
        const CheckpointRecord* cp = checkpoint_at(p.t);
        out << ',' << (cp ? 1 : 0);
        for (int i = 0; i < k; ++i) {
            out << ',';
            if (cp && cp->alpha.size() == k) out << format_double(cp->alpha[i]);
        }
        for (int i = 0; i < k; ++i) {
            out << ',';
            if (cp && cp->psi.size() == k) out << format_double(cp->psi[i]);
        }
        out << "\n";
    }
}

}  // namespace dts
