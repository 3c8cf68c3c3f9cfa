#include <doctest.h>

#include "dts/instance.hpp"
#include "dts/rng.hpp"

using namespace dts;

namespace {

Vector basis(int d, int i) {
    Vector e = Vector::Zero(d);
    e[i] = 1.0;
    return e;
}

Instance simple_instance(int k, int d) {
    ContextSpace ctx;
    ctx.dimension = d;
    for (int i = 0; i < d; ++i) ctx.contexts.push_back(basis(d, i));
    PopulationSpec pop;
    pop.weights.assign(d, 1.0 / d);
    PriorSpec prior;
    prior.mode = PriorMode::IndependentArms;
    prior.arm_means.assign(k, Vector::Zero(d));
    prior.arm_covariance = Matrix::Identity(d, d);
    prior.noise_variance = 1.0;
    return build_instance(k, d, ctx, pop, prior, std::nullopt, 1);
}

}  // namespace

TEST_CASE("uniform weights over basis vectors average them") {
    Instance inst = simple_instance(2, 7);
    for (int i = 0; i < 7; ++i) CHECK(inst.population.x_pop[i] == doctest::Approx(1.0 / 7));
}

TEST_CASE("explicit population vector passes through") {
    ContextSpace ctx;
    ctx.dimension = 3;
    PopulationSpec pop;
    pop.x_pop = basis(3, 0);
    PriorSpec prior;
    prior.mode = PriorMode::IndependentArms;
    prior.arm_means.assign(2, Vector::Zero(3));
    prior.arm_covariance = Matrix::Identity(3, 3);
    Instance inst = build_instance(2, 3, ctx, pop, prior, std::nullopt, 1);
    CHECK(inst.population.x_pop == basis(3, 0));
}

TEST_CASE("negative prior eigenvalue is rejected with a named field") {
    ContextSpace ctx;
    ctx.dimension = 2;
    PopulationSpec pop;
    pop.x_pop = basis(2, 0);
    PriorSpec prior;
    prior.mode = PriorMode::IndependentArms;
    prior.arm_means.assign(2, Vector::Zero(2));
    prior.arm_covariance = Matrix::Identity(2, 2);
    prior.arm_covariance(1, 1) = -0.1;
    CHECK_THROWS_WITH_AS(build_instance(2, 2, ctx, pop, prior, std::nullopt, 1),
                         doctest::Contains("prior covariance not positive definite"),
                         std::invalid_argument);
}

TEST_CASE("weights that do not sum to one are rejected") {
    ContextSpace ctx;
    ctx.dimension = 2;
    ctx.contexts = {basis(2, 0), basis(2, 1)};
    PopulationSpec pop;
    pop.weights = {0.5, 0.499};
    PriorSpec prior;
    prior.mode = PriorMode::IndependentArms;
    prior.arm_means.assign(2, Vector::Zero(2));
    prior.arm_covariance = Matrix::Identity(2, 2);
    CHECK_THROWS_AS(build_instance(2, 2, ctx, pop, prior, std::nullopt, 1),
                    std::invalid_argument);
}

TEST_CASE("population mean is the lifted inner product") {
    Instance inst = simple_instance(2, 2);
    Vector theta(4);
    theta << 1.0, 3.0, 0.0, 0.0;
    CHECK(population_mean(theta, 0, inst.population) == doctest::Approx(2.0));
    CHECK(population_mean(theta, 1, inst.population) == doctest::Approx(0.0));

    Instance wide = simple_instance(2, 7);
    Vector theta7 = Vector::Zero(14);
    for (int i = 0; i < 7; ++i) theta7[i] = i + 1.0;
    CHECK(population_mean(theta7, 0, wide.population) == doctest::Approx(4.0));
}

TEST_CASE("simple regret and ties") {
    Instance inst = simple_instance(2, 1);
    Vector theta(2);
    theta << 1.0, 0.5;
    CHECK(simple_regret(theta, 2, 0, inst.population) == doctest::Approx(0.0));
    CHECK(simple_regret(theta, 2, 1, inst.population) == doctest::Approx(0.5));

    theta << 1.0, 1.0;
    CHECK(best_arm(theta, 2, inst.population) == 0);
}

TEST_CASE("regret of the best arm is zero and the mean is linear") {
    Instance inst = simple_instance(3, 2);
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        Vector theta(6), theta2(6);
        for (int i = 0; i < 6; ++i) {
            theta[i] = rng.normal();
            theta2[i] = rng.normal();
        }
        CHECK(simple_regret(theta, 3, best_arm(theta, 3, inst.population), inst.population) ==
              doctest::Approx(0.0));
        const double a = rng.normal(), b = rng.normal();
        const Vector combo = a * theta + b * theta2;
        for (int arm = 0; arm < 3; ++arm) {
            const double lhs = population_mean(combo, arm, inst.population);
            const double rhs = a * population_mean(theta, arm, inst.population) +
                               b * population_mean(theta2, arm, inst.population);
            CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
        }
    }
}

TEST_CASE("best arm is invariant to a common shift of every block") {
    Instance inst = simple_instance(3, 2);
    Rng rng(13);
    Vector shift(2);
    shift << 0.7, -0.3;
    for (int trial = 0; trial < 50; ++trial) {
        Vector theta(6);
        for (int i = 0; i < 6; ++i) theta[i] = rng.normal();
        Vector shifted = theta;
        for (int armNo = 0; armNo < 3; ++armNo) shifted.segment(armNo * 2, 2) += shift;
        CHECK(best_arm(theta, 3, inst.population) == best_arm(shifted, 3, inst.population));
    }
}

TEST_CASE("truth dimension is validated") {
    ContextSpace ctx;
    ctx.dimension = 2;
    ctx.contexts = {basis(2, 0), basis(2, 1)};
    PopulationSpec pop;
    pop.weights = {0.5, 0.5};
    PriorSpec prior;
    prior.mode = PriorMode::IndependentArms;
    prior.arm_means.assign(2, Vector::Zero(2));
    prior.arm_covariance = Matrix::Identity(2, 2);
    Vector bad = Vector::Zero(3);
    CHECK_THROWS_AS(build_instance(2, 2, ctx, pop, prior, bad, 1), std::invalid_argument);
}
