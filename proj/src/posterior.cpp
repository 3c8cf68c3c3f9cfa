#include "dts/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "dts/normal.hpp"

namespace dts {

namespace {

bool is_standard_basis(const Vector& x) {
    int ones = 0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (x[i] == 1.0) {
            ++ones;
        } else if (x[i] != 0.0) {
            return false;
        }
    }
    return ones == 1;
}

}  // namespace

PosteriorState PosteriorState::init(const Instance& inst) {
    PosteriorState st;
    st.k = inst.k;
    st.d = inst.d;
    st.sigma2 = inst.prior.noise_variance;
    st.x_pop = inst.population.x_pop;
    st.mean = inst.joint_prior_mean();
    st.covariance = inst.joint_prior_covariance();
    st.observation_count.assign(inst.k, 0);
    st.clock = 1;

    if (inst.prior.mode == PriorMode::Joint) {
        for (int i = 0; i < st.k && !st.cross_arm_correlated; ++i) {
            for (int j = i + 1; j < st.k; ++j) {
                const double off =
                    st.covariance.block(i * st.d, j * st.d, st.d, st.d).cwiseAbs().maxCoeff();
                if (off > 1e-12 * st.covariance.cwiseAbs().maxCoeff()) {
                    st.cross_arm_correlated = true;
                    break;
                }
            }
        }
    }

    st.m.resize(st.k);
    st.s2.resize(st.k);
    st.refresh_summaries();
    return st;
}

void PosteriorState::refresh_summaries() {
    for (int i = 0; i < k; ++i) {
        m[i] = x_pop.dot(mean.segment(i * d, d));
        const double v = x_pop.dot(covariance.block(i * d, i * d, d, d) * x_pop);
        s2[i] = std::max(0.0, v);
    }
}

Matrix PosteriorState::population_mean_covariance() const {
    Matrix c(k, k);
    for (int i = 0; i < k; ++i) {
        for (int j = i; j < k; ++j) {
            c(i, j) = x_pop.dot(covariance.block(i * d, j * d, d, d) * x_pop);
            c(j, i) = c(i, j);
        }
    }
    return c;
}

void PosteriorState::apply_observation(int arm, const Vector& x, double reward) {
    if (!std::isfinite(reward)) throw std::invalid_argument("reward must be finite");
    if (x.size() != d) throw std::invalid_argument("context dimension mismatch");
    if (arm < 0 || arm >= k) throw std::out_of_range("arm index out of range");
    if (sigma2 == 0.0 && !is_standard_basis(x)) {
        throw std::invalid_argument(
            "zero noise supported only for standard-basis contexts (exact conditioning)");
    }

    // cov * phi with phi supported on one arm block.
    Vector cov_phi = covariance.middleCols(arm * d, d) * x;
    const double phi_cov_phi = x.dot(cov_phi.segment(arm * d, d));
    const double denom = sigma2 + phi_cov_phi;
    if (denom <= 1e-300) {
        // Noiseless re-observation of an already pinned coordinate.
        return;
    }

    const double predicted = x.dot(mean.segment(arm * d, d));
    mean += cov_phi * ((reward - predicted) / denom);
    covariance -= (cov_phi * cov_phi.transpose()) / denom;

    observation_count[arm] += 1;
    if (++updates_since_symmetrize_ >= 256) {
        covariance = 0.5 * (covariance + covariance.transpose()).eval();
        updates_since_symmetrize_ = 0;
    }
    refresh_summaries();
}

void DelayBuffer::record(long period, int arm, Vector context, double reward) {
    pending_.push_back(Observation{period, arm, std::move(context), reward});
}

void DelayBuffer::release(PosteriorState& state, long current_period) {
    while (!pending_.empty() && pending_.front().period <= current_period - delay_) {
        const Observation& o = pending_.front();
        state.apply_observation(o.arm, o.context, o.reward);
        pending_.pop_front();
    }
    state.clock = current_period;
}

void DelayBuffer::flush(PosteriorState& state) {
    while (!pending_.empty()) {
        const Observation& o = pending_.front();
        state.apply_observation(o.arm, o.context, o.reward);
        pending_.pop_front();
    }
}

double z_score(const PosteriorState& state, int i, int j, ZScoreMode mode) {
    double var = state.s2[i] + state.s2[j];
    if (mode == ZScoreMode::CovarianceAware) {
        const double cij =
            state.x_pop.dot(state.covariance.block(i * state.d, j * state.d, state.d, state.d) *
                            state.x_pop);
        var = std::max(0.0, var - 2.0 * cij);
    }
    const double gap = state.m[i] - state.m[j];
    if (var <= 0.0) {
        if (gap == 0.0) throw std::domain_error("degenerate z-score");
        return gap > 0.0 ? std::numeric_limits<double>::infinity()
                         : -std::numeric_limits<double>::infinity();
    }
    return gap / std::sqrt(var);
}

Vector sample_population_means(const PosteriorState& state, Rng& rng) {
    Vector nu(state.k);
    if (!state.cross_arm_correlated) {
        for (int i = 0; i < state.k; ++i) {
            nu[i] = state.m[i] + std::sqrt(state.s2[i]) * rng.normal();
        }
        return nu;
    }
    Matrix c = state.population_mean_covariance();
    Eigen::LLT<Matrix> llt(c);
    Matrix chol;
    if (llt.info() == Eigen::Success) {
        chol = llt.matrixL();
    } else {
        Eigen::SelfAdjointEigenSolver<Matrix> es(c);
        chol = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
    }
    Vector z(state.k);
    for (int i = 0; i < state.k; ++i) z[i] = rng.normal();
    return state.m + chol * z;
}

Vector optimal_arm_probabilities_quadrature(const Vector& m, const Vector& s2) {
    const int k = static_cast<int>(m.size());
    Vector s = s2.cwiseMax(0.0).cwiseSqrt();
    const double max_s = s.maxCoeff();

    if (max_s == 0.0) {
        Vector alpha = Vector::Zero(k);
        alpha[argmax_lowest(m)] = 1.0;
        return alpha;
    }

    const double lo = m.minCoeff() - 8.0 * max_s;
    const double hi = m.maxCoeff() + 8.0 * max_s;

    // Survival factor of arm j at threshold u: P(nu_j <= u).
    auto cdf_at = [&](int j, double u) {
        if (s[j] > 0.0) return norm_cdf((u - m[j]) / s[j]);
        if (u > m[j]) return 1.0;
        if (u < m[j]) return 0.0;
        return 0.5;
    };

    auto integrate = [&](int n_panels) {
        // Composite Simpson over [lo, hi] of pdf_i(u) * prod_{j != i} cdf_j(u).
        Vector acc = Vector::Zero(k);
        const int n = 2 * n_panels;  // node count minus one, even
        const double h = (hi - lo) / n;
        std::vector<double> cdf(k);
        for (int node = 0; node <= n; ++node) {
            const double u = lo + h * node;
            const double w = (node == 0 || node == n) ? 1.0 : (node % 2 == 1 ? 4.0 : 2.0);
            for (int j = 0; j < k; ++j) cdf[j] = cdf_at(j, u);
            for (int i = 0; i < k; ++i) {
                if (s[i] == 0.0) continue;
                double prod = 1.0;
                for (int j = 0; j < k; ++j) {
                    if (j != i) prod *= cdf[j];
                }
                acc[i] += w * prod * norm_pdf((u - m[i]) / s[i]) / s[i];
            }
        }
        acc *= h / 3.0;
        // Degenerate arms contribute a point mass at their mean.
        for (int i = 0; i < k; ++i) {
            if (s[i] > 0.0) continue;
            double prod = 1.0;
            for (int j = 0; j < k; ++j) {
                if (j != i) prod *= cdf_at(j, m[i]);
            }
            acc[i] = prod;
        }
        return acc;
    };

    Vector prev = integrate(64);
    for (int panels = 128; panels <= (1 << 16); panels *= 2) {
        Vector next = integrate(panels);
        if ((next - prev).cwiseAbs().maxCoeff() < 1e-6) return next.cwiseMax(0.0);
        prev = next;
    }
    return prev.cwiseMax(0.0);
}

Vector optimal_arm_probabilities(const PosteriorState& state, AlphaMethod method, Rng* rng,
                                 int mc_samples, bool* fell_back) {
    if (fell_back) *fell_back = false;
    if (method == AlphaMethod::Quadrature) {
        if (!state.cross_arm_correlated) {
            return optimal_arm_probabilities_quadrature(state.m, state.s2);
        }
        if (fell_back) *fell_back = true;
        method = AlphaMethod::MonteCarlo;
    }
    if (!rng) throw std::invalid_argument("monte-carlo optimal-arm probabilities need an rng");
    Vector counts = Vector::Zero(state.k);
    for (int r = 0; r < mc_samples; ++r) {
        counts[argmax_lowest(sample_population_means(state, *rng))] += 1.0;
    }
    return counts / static_cast<double>(mc_samples);
}

std::pair<double, double> NaivePosterior::summary(int arm) const {
    const long n = counts_[arm];
    if (sigma2_ == 0.0) {
        if (n == 0) return {0.0, 1.0};
        return {reward_sums_[arm] / static_cast<double>(n), 0.0};
    }
    const double v = 1.0 / (1.0 + static_cast<double>(n) / sigma2_);
    const double mean = v * reward_sums_[arm] / sigma2_;
    return {mean, v};
}

}  // namespace dts
