#include "dts/environments.hpp"

#include <cmath>
#include <stdexcept>

namespace dts {

namespace {

Vector basis(int dim, int index) {
    Vector e = Vector::Zero(dim);
    e[index] = 1.0;
    return e;
}

}  // namespace

Vector ContextProcess::step(long t, Rng& rng, int* context_id) const {
    if (t < 1) throw std::invalid_argument("period index starts at 1");
    switch (kind) {
        case ContextKind::Iid: {
            const int idx = static_cast<int>(rng.categorical(probabilities));
            if (context_id) *context_id = idx;
            return support[idx];
        }
        case ContextKind::DayOfWeek: {
            const int day = static_cast<int>(((t - 1) / block_length) % days);
            if (context_id) *context_id = day;
            return basis(dimension, day);
        }
        case ContextKind::TwoPhase: {
            if (t > horizon) throw std::out_of_range("two-phase process exhausted");
            const int phase = t <= horizon / 2 ? 0 : 1;
            if (context_id) *context_id = phase;
            return basis(dimension, phase);
        }
        case ContextKind::Fixed: {
            if (t > static_cast<long>(support.size())) {
                throw std::out_of_range("fixed context sequence exhausted");
            }
            if (context_id) *context_id = static_cast<int>(t - 1);
            return support[t - 1];
        }
        case ContextKind::LatentTime: {
            if (t > horizon) throw std::out_of_range("latent-time process exhausted");
            if (context_id) *context_id = static_cast<int>(t - 1);
            return basis(dimension, static_cast<int>(t - 1));
        }
    }
    throw std::logic_error("unreachable");
}

Matrix ContextProcess::second_moment() const {
    if (kind != ContextKind::Iid) {
        throw std::invalid_argument("exact second moment available only for i.i.d. processes");
    }
    Matrix m = Matrix::Zero(dimension, dimension);
    for (std::size_t i = 0; i < support.size(); ++i) {
        m += probabilities[i] * support[i] * support[i].transpose();
    }
    return m;
}

ContextProcess make_iid(std::vector<Vector> contexts, std::vector<double> probabilities) {
    if (contexts.empty() || contexts.size() != probabilities.size()) {
        throw std::invalid_argument("iid process needs matching contexts and probabilities");
    }
    double sum = 0.0;
    for (double p : probabilities) {
        if (p < 0.0) throw std::invalid_argument("negative context probability");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-12) {
        throw std::invalid_argument("context probabilities must sum to 1");
    }
    ContextProcess proc;
    proc.kind = ContextKind::Iid;
    proc.dimension = static_cast<int>(contexts[0].size());
    proc.support = std::move(contexts);
    proc.probabilities = std::move(probabilities);
    return proc;
}

ContextProcess make_day_of_week(int periods_per_day, int days) {
    if (periods_per_day < 1) throw std::invalid_argument("need at least one period per day");
    ContextProcess proc;
    proc.kind = ContextKind::DayOfWeek;
    proc.dimension = days;
    proc.block_length = periods_per_day;
    proc.days = days;
    return proc;
}

ContextProcess make_two_phase(long horizon) {
    if (horizon < 2) throw std::invalid_argument("two-phase horizon must be >= 2");
    ContextProcess proc;
    proc.kind = ContextKind::TwoPhase;
    proc.dimension = 2;
    proc.horizon = horizon;
    return proc;
}

ContextProcess make_fixed(std::vector<Vector> sequence) {
    if (sequence.empty()) throw std::invalid_argument("fixed sequence must be nonempty");
    ContextProcess proc;
    proc.kind = ContextKind::Fixed;
    proc.dimension = static_cast<int>(sequence[0].size());
    proc.horizon = static_cast<long>(sequence.size());
    proc.support = std::move(sequence);
    return proc;
}

ContextProcess make_latent_time(long horizon) {
    if (horizon < 1) throw std::invalid_argument("latent-time horizon must be >= 1");
    ContextProcess proc;
    proc.kind = ContextKind::LatentTime;
    proc.dimension = static_cast<int>(horizon);
    proc.horizon = horizon;
    return proc;
}

Environment make_counterexample_instance(long horizon) {
    const int d = 2, k = 2;
    PriorSpec prior;
    prior.mode = PriorMode::Joint;
    prior.joint_mean = Vector::Zero(d * k);
    Vector diag(d * k);
    diag << 1.0, 1.0, 2.0, 2.0;
    prior.joint_covariance = diag.asDiagonal();
    prior.noise_variance = 0.0;

    ContextSpace ctx;
    ctx.dimension = d;
    ctx.contexts = {basis(d, 0), basis(d, 1)};

    PopulationSpec pop;
    pop.weights = {0.5, 0.5};

    Environment env{build_instance(k, d, ctx, pop, prior, std::nullopt, 1),
                    make_two_phase(horizon)};
    return env;
}

Environment make_day_of_week_instance(int k, int periods_per_day, int days, double sigma2) {
    PriorSpec prior;
    prior.mode = PriorMode::IndependentArms;
    prior.arm_means.assign(k, Vector::Zero(days));
    prior.arm_covariance = Matrix::Identity(days, days);
    prior.noise_variance = sigma2;

    ContextSpace ctx;
    ctx.dimension = days;
    for (int day = 0; day < days; ++day) ctx.contexts.push_back(basis(days, day));

    PopulationSpec pop;
    pop.weights.assign(days, 1.0 / days);

    Environment env{build_instance(k, days, ctx, pop, prior, std::nullopt, 1),
                    make_day_of_week(periods_per_day, days)};
    return env;
}

Environment make_latent_confounder_instance(long horizon, double arm_variance,
                                            double eps_variance, double kappa, bool shared) {
    if (!(kappa > 0.0)) throw std::invalid_argument("kernel bandwidth must be positive");
    const int T = static_cast<int>(horizon);
    const int k = 2;

    Matrix kernel(T, T);
    for (int a = 0; a < T; ++a) {
        for (int b = 0; b < T; ++b) {
            kernel(a, b) = std::exp(-std::abs(a - b) / kappa);
        }
    }

    Matrix cov = Matrix::Zero(k * T, k * T);
    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j) {
            Matrix block = Matrix::Zero(T, T);
            if (i == j) {
                block = arm_variance * Matrix::Ones(T, T) + eps_variance * kernel;
            } else if (shared) {
                block = eps_variance * kernel;
            }
            cov.block(i * T, j * T, T, T) = block;
        }
    }
    // The all-ones level component makes diagonal blocks only PSD at the
    // margin; a hair of ridge keeps the instance validator happy.
    cov += 1e-8 * Matrix::Identity(k * T, k * T);

    PriorSpec prior;
    prior.mode = PriorMode::Joint;
    prior.joint_mean = Vector::Zero(k * T);
    prior.joint_covariance = std::move(cov);
    prior.noise_variance = 1.0;

    ContextSpace ctx;
    ctx.dimension = T;

    PopulationSpec pop;
    pop.x_pop = Vector::Constant(T, 1.0 / T);

    Environment env{build_instance(k, T, ctx, pop, prior, std::nullopt, 1),
                    make_latent_time(horizon)};
    return env;
}

Vector latent_confounder_truth(long horizon, double arm_variance, double eps_variance,
                               double kappa, bool shared, std::uint64_t seed) {
    const int T = static_cast<int>(horizon);
    const int k = 2;
    Rng rng(seed);
    const double rho = std::exp(-1.0 / kappa);
    const double innovation_sd = std::sqrt(eps_variance * (1.0 - rho * rho));

    auto draw_path = [&](Vector& eps) {
        eps[0] = std::sqrt(eps_variance) * rng.normal();
        for (int t = 1; t < T; ++t) eps[t] = rho * eps[t - 1] + innovation_sd * rng.normal();
    };

    Vector theta(k * T);
    Vector eps(T);
    if (shared) draw_path(eps);
    for (int i = 0; i < k; ++i) {
        const double level = std::sqrt(arm_variance) * rng.normal();
        if (!shared) draw_path(eps);
        for (int t = 0; t < T; ++t) theta[i * T + t] = level + eps[t];
    }
    return theta;
}

MainstreamTruth draw_mainstream_truth(Rng& rng) {
    MainstreamTruth truth;
    // Midpoint grid keeps the mainstream arm strictly inside (0,1) and off
    // the exact-tie values of the segment arms.
    const int cell = static_cast<int>(rng.uniform_index(kMainstreamGridSize));
    truth.theta0 = (cell + 0.5) / kMainstreamGridSize;
    truth.theta1 = rng.bernoulli(0.5) ? 1 : 2;
    truth.theta2 = rng.bernoulli(0.5) ? 1 : 2;
    return truth;
}

double mainstream_mean(const MainstreamTruth& truth, int arm, int context) {
    const int seg = context == 0 ? truth.theta1 : truth.theta2;
    switch (arm) {
        case 0: return 0.5 + 0.5 * (seg == 1 ? 1.0 : 0.0);
        case 1: return 0.5 + 0.5 * (seg == 2 ? 1.0 : 0.0);
        case 2: return truth.theta0;
        default: throw std::out_of_range("arm index out of range");
    }
}

int MainstreamBelief::sample_contextual_best(int context, Rng& rng) const {
    const std::optional<int>& seg_known = context == 0 ? theta1 : theta2;
    const int seg = seg_known ? *seg_known : (rng.bernoulli(0.5) ? 1 : 2);
    double t0;
    if (theta0) {
        t0 = *theta0;
    } else {
        const int cell = static_cast<int>(rng.uniform_index(kMainstreamGridSize));
        t0 = (cell + 0.5) / kMainstreamGridSize;
    }
    Vector values(3);
    values[0] = 0.5 + 0.5 * (seg == 1 ? 1.0 : 0.0);
    values[1] = 0.5 + 0.5 * (seg == 2 ? 1.0 : 0.0);
    values[2] = t0;
    return argmax_lowest(values);
}

void MainstreamBelief::update(int arm, int context, double reward) {
    if (arm == 2) {
        theta0 = reward;
        return;
    }
    std::optional<int>& seg = context == 0 ? theta1 : theta2;
    // Reward 1 identifies the segment preference as this arm's, 1/2 as the
    // other arm's.
    if (reward > 0.75) {
        seg = arm == 0 ? 1 : 2;
    } else {
        seg = arm == 0 ? 2 : 1;
    }
}

int MainstreamBelief::bayes_population_select() const {
    auto seg_prob1 = [](const std::optional<int>& seg) {
        if (!seg) return 0.5;
        return *seg == 1 ? 1.0 : 0.0;
    };
    const double p1a = seg_prob1(theta1);
    const double p1b = seg_prob1(theta2);
    Vector means(3);
    means[0] = 0.5 + 0.25 * (p1a + p1b);
    means[1] = 0.5 + 0.25 * ((1.0 - p1a) + (1.0 - p1b));
    means[2] = theta0 ? *theta0 : 0.5;
    return argmax_lowest(means);
}

MainstreamEpisode run_mainstream_episode(long horizon, long burnin, std::uint64_t seed) {
    Rng rng(seed);
    const MainstreamTruth truth = draw_mainstream_truth(rng);
    MainstreamBelief belief;

    MainstreamEpisode out;
    for (long t = 1; t <= horizon; ++t) {
        const int context = rng.bernoulli(0.5) ? 1 : 0;
        const int arm = belief.sample_contextual_best(context, rng);
        const double reward = mainstream_mean(truth, arm, context);
        belief.update(arm, context, reward);
        if (arm == 2) {
            ++out.arm3_plays_total;
            if (t > burnin) ++out.arm3_plays_after;
        }
        if (t > burnin) ++out.periods_after;
    }

    const int chosen = belief.bayes_population_select();
    Vector pop_means(3);
    for (int i = 0; i < 3; ++i) {
        pop_means[i] = 0.5 * (mainstream_mean(truth, i, 0) + mainstream_mean(truth, i, 1));
    }
    out.regret = pop_means[argmax_lowest(pop_means)] - pop_means[chosen];
    return out;
}

}  // namespace dts
