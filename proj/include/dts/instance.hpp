#pragma once
// Experiment instance: arms, contexts, priors, population weights and the
// ground-truth quantities (population means, best arm, simple regret).
//
// The stacked parameter vector is arm-major, so the observation of arm i in
// context x maps to the lifted feature e_i (x) x in R^{d*k}. One posterior
// engine then serves both independent-arm and cross-arm-correlated priors.

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

namespace dts {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

struct ContextSpace {
    int dimension = 0;
    std::vector<Vector> contexts;  // may be empty when contexts are generated on the fly
    double norm_bound = 1.0;
};

struct PopulationSpec {
    std::vector<double> weights;  // over listed contexts; empty when x_pop given directly
    Vector x_pop;
};

enum class PriorMode { IndependentArms, Joint };

struct PriorSpec {
    PriorMode mode = PriorMode::IndependentArms;
    // Independent-arms mode: per-arm means, one shared covariance.
    std::vector<Vector> arm_means;
    Matrix arm_covariance;
    // Joint mode: mean/covariance over the stacked vector.
    Vector joint_mean;
    Matrix joint_covariance;
    double noise_variance = 1.0;
};

struct Instance {
    int k = 0;
    int d = 0;
    ContextSpace context_space;
    PopulationSpec population;
    PriorSpec prior;
    std::optional<Vector> truth;  // stacked, length d*k; absent in belief-only instances
    int delay = 1;

    int stacked_dim() const { return d * k; }

    // Lifted feature for (arm, context).
    Vector lift(int arm, const Vector& x) const;

    // Prior mean/covariance over the stacked vector, expanding the
    // independent-arms form to block-diagonal when needed.
    Vector joint_prior_mean() const;
    Matrix joint_prior_covariance() const;
};

// Validates dimensions, weight normalization and prior positive-definiteness;
// computes x_pop from weights when not given directly. Throws
// std::invalid_argument naming the offending field.
Instance build_instance(int k, int d, ContextSpace context_space, PopulationSpec population,
                        PriorSpec prior, std::optional<Vector> truth, int delay);

// Draws a truth vector from the prior.
Vector draw_truth(const Instance& inst, std::uint64_t seed);

double population_mean(const Vector& theta, int arm, const PopulationSpec& pop);

// Argmax of population means, ties to the lowest index.
int best_arm(const Vector& theta, int k, const PopulationSpec& pop);

double simple_regret(const Vector& theta, int k, int chosen, const PopulationSpec& pop);

// Lowest-index argmax over a plain vector, the tie rule used everywhere.
int argmax_lowest(const Vector& v);

}  // namespace dts
