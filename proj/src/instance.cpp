#include "dts/instance.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "dts/rng.hpp"

namespace dts {

namespace {

void check_covariance_pd(const Matrix& cov, const std::string& field) {
    if (cov.rows() != cov.cols()) {
        throw std::invalid_argument(field + ": covariance must be square");
    }
    const double asym = (cov - cov.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-10 * std::max(1.0, cov.cwiseAbs().maxCoeff())) {
        throw std::invalid_argument(field + ": covariance not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    if (!(lo > 1e-10 * hi) || !(hi > 0.0)) {
        throw std::invalid_argument(field + ": prior covariance not positive definite");
    }
}

}  // namespace

Vector Instance::lift(int arm, const Vector& x) const {
    Vector phi = Vector::Zero(stacked_dim());
    phi.segment(arm * d, d) = x;
    return phi;
}

Vector Instance::joint_prior_mean() const {
    if (prior.mode == PriorMode::Joint) return prior.joint_mean;
    Vector mu(stacked_dim());
    for (int i = 0; i < k; ++i) mu.segment(i * d, d) = prior.arm_means[i];
    return mu;
}

Matrix Instance::joint_prior_covariance() const {
    if (prior.mode == PriorMode::Joint) return prior.joint_covariance;
    Matrix cov = Matrix::Zero(stacked_dim(), stacked_dim());
    for (int i = 0; i < k; ++i) cov.block(i * d, i * d, d, d) = prior.arm_covariance;
    return cov;
}

Instance build_instance(int k, int d, ContextSpace context_space, PopulationSpec population,
                        PriorSpec prior, std::optional<Vector> truth, int delay) {
    if (k < 2) throw std::invalid_argument("k: need at least 2 arms");
    if (d < 1) throw std::invalid_argument("d: context dimension must be >= 1");
    if (delay < 1) throw std::invalid_argument("delay: must be >= 1");
    if (prior.noise_variance < 0.0) throw std::invalid_argument("sigma2: must be nonnegative");

    for (std::size_t c = 0; c < context_space.contexts.size(); ++c) {
        const Vector& x = context_space.contexts[c];
        if (x.size() != d) {
            std::ostringstream os;
            os << "contexts[" << c << "]: expected dimension " << d << ", got " << x.size();
            throw std::invalid_argument(os.str());
        }
        if (x.norm() > context_space.norm_bound + 1e-12) {
            std::ostringstream os;
            os << "contexts[" << c << "]: norm " << x.norm() << " exceeds bound "
               << context_space.norm_bound;
            throw std::invalid_argument(os.str());
        }
    }

    if (!population.weights.empty()) {
        if (population.weights.size() != context_space.contexts.size()) {
            throw std::invalid_argument("population.weights: size must match the context list");
        }
        double sum = 0.0;
        for (double w : population.weights) {
            if (w < 0.0) throw std::invalid_argument("population.weights: negative weight");
            sum += w;
        }
        if (std::abs(sum - 1.0) > 1e-12) {
            std::ostringstream os;
            os << "population.weights: sum to " << sum << ", expected 1";
            throw std::invalid_argument(os.str());
        }
        Vector xp = Vector::Zero(d);
        for (std::size_t c = 0; c < context_space.contexts.size(); ++c) {
            xp += population.weights[c] * context_space.contexts[c];
        }
        population.x_pop = xp;
    } else if (population.x_pop.size() != d) {
        throw std::invalid_argument("population.x_pop: expected dimension " + std::to_string(d));
    }

    if (prior.mode == PriorMode::IndependentArms) {
        if (static_cast<int>(prior.arm_means.size()) != k) {
            throw std::invalid_argument("prior.means: expected one mean per arm");
        }
        for (int i = 0; i < k; ++i) {
            if (prior.arm_means[i].size() != d) {
                throw std::invalid_argument("prior.means[" + std::to_string(i) +
                                            "]: expected dimension " + std::to_string(d));
            }
        }
        if (prior.arm_covariance.rows() != d) {
            throw std::invalid_argument("prior.covariance: expected " + std::to_string(d) +
                                        "x" + std::to_string(d));
        }
        check_covariance_pd(prior.arm_covariance, "prior.covariance");
    } else {
        if (prior.joint_mean.size() != d * k) {
            throw std::invalid_argument("prior.mean: expected dimension " + std::to_string(d * k));
        }
        if (prior.joint_covariance.rows() != d * k) {
            throw std::invalid_argument("prior.covariance: expected " + std::to_string(d * k) +
                                        "x" + std::to_string(d * k));
        }
        check_covariance_pd(prior.joint_covariance, "prior.covariance");
    }

    if (truth && truth->size() != d * k) {
        throw std::invalid_argument("truth: expected stacked dimension " + std::to_string(d * k));
    }

    Instance inst;
    inst.k = k;
    inst.d = d;
    inst.context_space = std::move(context_space);
    inst.population = std::move(population);
    inst.prior = std::move(prior);
    inst.truth = std::move(truth);
    inst.delay = delay;
    return inst;
}

Vector draw_truth(const Instance& inst, std::uint64_t seed) {
    Rng rng(seed);
    const Vector mu = inst.joint_prior_mean();
    const Matrix cov = inst.joint_prior_covariance();
    Eigen::LLT<Matrix> llt(cov);
    Matrix chol;
    if (llt.info() == Eigen::Success) {
        chol = llt.matrixL();
    } else {
        // PSD edge (e.g. degenerate joint builds): eigen-factorize instead.
        Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
        chol = es.eigenvectors() *
               es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
    }
    Vector z(mu.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
    return mu + chol * z;
}

double population_mean(const Vector& theta, int arm, const PopulationSpec& pop) {
    const int d = static_cast<int>(pop.x_pop.size());
    const int k = static_cast<int>(theta.size()) / d;
    if (arm < 0 || arm >= k) throw std::out_of_range("arm index out of range");
    return theta.segment(arm * d, d).dot(pop.x_pop);
}

int best_arm(const Vector& theta, int k, const PopulationSpec& pop) {
    int best = 0;
    double best_mean = population_mean(theta, 0, pop);
    for (int i = 1; i < k; ++i) {
        const double m = population_mean(theta, i, pop);
        if (m > best_mean) {
            best_mean = m;
            best = i;
        }
    }
    return best;
}

double simple_regret(const Vector& theta, int k, int chosen, const PopulationSpec& pop) {
    const int star = best_arm(theta, k, pop);
    return population_mean(theta, star, pop) - population_mean(theta, chosen, pop);
}

int argmax_lowest(const Vector& v) {
    int best = 0;
    for (Eigen::Index i = 1; i < v.size(); ++i) {
        if (v[i] > v[best]) best = static_cast<int>(i);
    }
    return best;
}

}  // namespace dts
