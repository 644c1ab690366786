#include "oracles.hpp"

#include "srac/envs.hpp"
#include "srac/errors.hpp"
#include "srac/exact_oracle.hpp"

#include <doctest.h>

using namespace srac;
namespace ss = srac::envs::single_step;

namespace {

Matrix mat2(double a, double b, double c, double d) {
    Matrix m(2, 2);
    m << a, b, c, d;
    return m;
}

struct Dist1 {
    UncertaintySet set = envs::build_uncertainty_set_single_step({0.1, 0.7, 0.8, 0.3, 0.5}, 0.8);
    WeightingDistribution omega{(Vector(5) << 0.47, 0.22, 0.10, 0.09, 0.12).finished()};
    MdpSpec mdp = envs::build_single_step_mdp(0.5).mdp;
    TransitionModel p_bar = average_model(set, omega);
};

SoftmaxPolicy start_policy(double l0, double l1, double l2) {
    Vector theta = Vector::Zero(ss::kNumStates * ss::kNumActions);
    theta(0) = l0;
    theta(1) = l1;
    theta(2) = l2;
    return SoftmaxPolicy(ss::kNumStates, ss::kNumActions, theta);
}

}  // namespace

TEST_CASE("stationary distribution of small chains") {
    const Vector d = oracle::stationary_distribution(mat2(0.5, 0.5, 0.5, 0.5));
    CHECK(d(0) == doctest::Approx(0.5).epsilon(1e-15));
    const Vector e = oracle::stationary_distribution(mat2(0.7, 0.3, 0.6, 0.4));
    CHECK(std::abs(e(0) - 2.0 / 3.0) < 1e-15);
    CHECK(std::abs(e(1) - 1.0 / 3.0) < 1e-15);
    CHECK_THROWS_AS(oracle::stationary_distribution(mat2(1, 0, 0, 1)), NoUniqueStationary);
    CHECK_THROWS_AS(oracle::stationary_distribution(mat2(0.5, 0.6, 0.5, 0.5)), InvalidInput);
    CHECK_THROWS_AS(oracle::stationary_distribution(Matrix::Constant(2, 3, 0.5)), InvalidInput);
}

TEST_CASE("stationary distribution of random chains matches power iteration") {
    rng::RandomStream s(rng::SeedTree{3, {"stationary"}});
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 2 + static_cast<int>(s.next_u64() % 19);
        const Matrix P = testing::random_model(n, 1, s, 0.0).action(0);
        const Vector d = oracle::stationary_distribution(P);
        CHECK((d.transpose() * P - d.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK(std::abs(d.sum() - 1.0) < 1e-12);
        CHECK(d.minCoeff() > 0.0);
        CHECK((d - testing::power_iteration_stationary(P)).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("degenerate one-state MDP") {
    Matrix r(1, 1);
    r << 3.5;
    const MdpSpec mdp(r);
    const TransitionModel p({Matrix::Ones(1, 1)});
    const auto ev = oracle::evaluate_policy(mdp, p, SoftmaxPolicy(1, 1));
    CHECK(ev.J_bar == 3.5);
    CHECK(ev.V_bar(0) == 0.0);
    CHECK(ev.A_bar(0, 0) == 0.0);
}

TEST_CASE("evaluation invariants over random MDPs and policies") {
    rng::RandomStream s(rng::SeedTree{4, {"evaluate"}});
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 2 + static_cast<int>(s.next_u64() % 12);
        const int m = 1 + static_cast<int>(s.next_u64() % 4);
        const auto prob = testing::random_problem(n, m, 1 + static_cast<int>(s.next_u64() % 5), s);
        const auto p_bar = average_model(prob.set, prob.omega);
        for (int k = 0; k < 10; ++k) {
            const auto pi = testing::random_policy(n, m, s);
            const auto ev = oracle::evaluate_policy(prob.mdp, p_bar, pi);
            CHECK(oracle::poisson_residual(prob.mdp, p_bar, pi, ev) <= 1e-10);
            CHECK(std::abs(ev.d_bar.dot(ev.V_bar)) <= 1e-10);
            CHECK(std::abs(ev.d_bar.sum() - 1.0) <= 1e-10);
            CHECK(ev.d_bar.minCoeff() >= 0.0);
            const Matrix P = policy_matrix(p_bar, pi);
            CHECK((ev.d_bar.transpose() * P - ev.d_bar.transpose()).cwiseAbs().maxCoeff() <= 1e-10);
            CHECK(std::abs(ev.J_bar - ev.d_bar.dot(policy_rewards(prob.mdp, pi))) <= 1e-10);
            CHECK(std::abs(ev.J_bar - testing::average_reward_by_power(prob.mdp, p_bar, pi)) <= 1e-10);
            const Matrix table = pi.table();
            CHECK(table.cwiseProduct(ev.A_bar).rowwise().sum().cwiseAbs().maxCoeff() <= 1e-10);
            for (int x = 0; x < n; ++x) {
                for (int a = 0; a < m; ++a) {
                    double q = prob.mdp.reward(x, a) - ev.J_bar;
                    for (int y = 0; y < n; ++y) q += p_bar(x, a, y) * ev.V_bar(y);
                    CHECK(std::abs(q - ev.Q_bar(x, a)) <= 1e-10);
                    CHECK(std::abs(ev.A_bar(x, a) - (ev.Q_bar(x, a) - ev.V_bar(x))) <= 1e-12);
                }
            }
        }
    }
}

TEST_CASE("single-step MDP under dist1: per-cycle action values") {
    const Dist1 d;
    // average success probability sum_k omega_k p_k
    const double p = 0.47 * 0.1 + 0.22 * 0.7 + 0.10 * 0.8 + 0.09 * 0.3 + 0.12 * 0.5;
    CHECK(std::abs(p - 0.368) < 1e-15);
    const double cycle[3] = {-26400.0, 736.0, 1776.8};
    for (int a = 0; a < 3; ++a) {
        CHECK(std::abs(p * ss::kSuccessReward[a] + (1 - p) * ss::kFailureReward[a] - cycle[a]) < 1e-9);
    }

    // Renewal-reward: expected cycle length is 1 / (1 - self_loop) at s0 plus one step back.
    const double length = 1.0 / (1.0 - ss::kSelfLoop) + 1.0;
    const auto ev = oracle::evaluate_policy(d.mdp, d.p_bar, start_policy(-60.0, -60.0, 0.0));
    CHECK(std::abs(ev.J_bar - cycle[2] / length) < 1e-9);
    CHECK(std::abs(ev.J_bar - 1776.8 / 2.0) < 1e-3);

    // Q differences at s0 are cycle-value differences scaled by the exit probability.
    const auto uni = oracle::evaluate_policy(d.mdp, d.p_bar, SoftmaxPolicy(ss::kNumStates, ss::kNumActions));
    const double scale = 1.0 - ss::kSelfLoop;
    CHECK(std::abs(uni.Q_bar(0, 2) - uni.Q_bar(0, 0) - scale * (cycle[2] - cycle[0])) < 1e-8);
    CHECK(std::abs(uni.Q_bar(0, 2) - uni.Q_bar(0, 1) - scale * (cycle[2] - cycle[1])) < 1e-8);
}

TEST_CASE("fixed-model objective") {
    rng::RandomStream s(rng::SeedTree{5, {"fixed"}});
    const auto prob = testing::random_problem(4, 2, 1, s);
    const auto pi = testing::random_policy(4, 2, s);
    CHECK(std::abs(oracle::fixed_model_objective(prob.mdp, prob.set, prob.omega, pi) -
                   oracle::evaluate_policy(prob.mdp, prob.set.model(0), pi).J_bar) < 1e-12);

    const auto m = testing::random_model(4, 2, s);
    const UncertaintySet same({m, m, m}, 1);
    const auto w = WeightingDistribution::uniform(3);
    CHECK(std::abs(oracle::fixed_model_objective(prob.mdp, same, w, pi) -
                   oracle::evaluate_policy(prob.mdp, m, pi).J_bar) < 1e-12);

    // Generic 3-state, 2-model sets: both quantities are exact and generally differ.
    const auto three = testing::random_problem(3, 2, 2, s);
    const auto pi3 = testing::random_policy(3, 2, s);
    const double fixed = oracle::fixed_model_objective(three.mdp, three.set, three.omega, pi3);
    const double mixed = oracle::evaluate_policy(three.mdp, average_model(three.set, three.omega), pi3).J_bar;
    MESSAGE("fixed-model objective " << fixed << " vs average-model J " << mixed);
    CHECK(std::abs(fixed - mixed) > 1e-12);

    // The single-step MDP is affine in the success probability with a
    // p-independent cycle length, so here the two objectives coincide.
    const Dist1 d;
    const auto pol = start_policy(0.3, -0.2, 0.9);
    CHECK(std::abs(oracle::fixed_model_objective(d.mdp, d.set, d.omega, pol) -
                   oracle::evaluate_policy(d.mdp, d.p_bar, pol).J_bar) < 1e-8);
}

TEST_CASE("policy gradient: finite differences, advantage form and baselines") {
    rng::RandomStream s(rng::SeedTree{6, {"gradient"}});
    for (int trial = 0; trial < 25; ++trial) {
        const int n = 2 + static_cast<int>(s.next_u64() % 6);
        const int m = 2 + static_cast<int>(s.next_u64() % 3);
        const auto prob = testing::random_problem(n, m, 3, s);
        const auto p_bar = average_model(prob.set, prob.omega);
        const auto pi = testing::random_policy(n, m, s, 1.0);
        const Vector g = oracle::exact_policy_gradient(prob.mdp, p_bar, pi);
        CHECK(testing::relative_error(testing::finite_difference_gradient(prob.mdp, p_bar, pi), g) <= 1e-5);
        CHECK(testing::max_abs(oracle::policy_gradient_advantage_form(prob.mdp, p_bar, pi) - g) <= 1e-10);
        Vector baseline(n);
        for (int x = 0; x < n; ++x) baseline(x) = s.next_gaussian(0.0, 10.0);
        CHECK(testing::max_abs(oracle::policy_gradient_with_baseline(prob.mdp, p_bar, pi, baseline) - g) <= 1e-10);
    }
}

TEST_CASE("symmetric MDP has zero gradient") {
    rng::RandomStream s(rng::SeedTree{7, {"sym"}});
    const Matrix p = testing::random_model(4, 1, s).action(0);
    const TransitionModel model({p, p});
    Matrix r(4, 2);
    for (int x = 0; x < 4; ++x) r(x, 0) = r(x, 1) = s.next_gaussian();
    const auto pi = testing::random_policy(4, 2, s);
    CHECK(testing::max_abs(oracle::exact_policy_gradient(MdpSpec(r), model, pi)) < 1e-12);
}

TEST_CASE("single-step uniform start: gradient points to a3 at s0") {
    const Dist1 d;
    const Vector g = oracle::exact_policy_gradient(d.mdp, d.p_bar, SoftmaxPolicy(ss::kNumStates, ss::kNumActions));
    Eigen::Index best = 0;
    g.maxCoeff(&best);
    CHECK(best == 2);
    CHECK(g(2) > 0.0);
    CHECK(g(0) < 0.0);
}

TEST_CASE("critic fixed point with tabular-minus-one features") {
    rng::RandomStream s(rng::SeedTree{8, {"critic"}});
    for (int trial = 0; trial < 10; ++trial) {
        const auto prob = testing::random_problem(6, 3, 3, s);
        const auto p_bar = average_model(prob.set, prob.omega);
        const auto pi = testing::random_policy(6, 3, s);
        const int dropped = static_cast<int>(s.next_u64() % 6);
        const auto f = FeatureMap::tabular_minus_one(6, dropped);
        const Vector v = oracle::critic_fixed_point(prob.mdp, p_bar, pi, f);
        const auto ev = oracle::evaluate_policy(prob.mdp, p_bar, pi);
        const Vector shifted = ev.V_bar.array() - ev.V_bar(dropped);
        CHECK(testing::max_abs(f.values(v) - shifted) < 1e-9);
        CHECK(testing::max_abs(oracle::td_fixed_point(prob.mdp, p_bar, p_bar, pi, f) - v) < 1e-12);
    }
}

TEST_CASE("critic fixed point with one coarse feature matches the scalar solve") {
    rng::RandomStream s(rng::SeedTree{9, {"scalar"}});
    const auto prob = testing::random_problem(3, 2, 2, s);
    const auto p_bar = average_model(prob.set, prob.omega);
    const auto pi = testing::random_policy(3, 2, s);
    Matrix phi(3, 1);
    phi << 0.0, 1.0, -0.5;
    const FeatureMap f(phi);
    const Vector v = oracle::critic_fixed_point(prob.mdp, p_bar, pi, f);
    const auto ev = oracle::evaluate_policy(prob.mdp, p_bar, pi);
    const Matrix P = policy_matrix(p_bar, pi);
    const Vector R = policy_rewards(prob.mdp, pi);
    const Vector col = phi.col(0);
    const Vector dphi = ev.d_bar.cwiseProduct(col);
    const double expected =
        dphi.dot(R - Vector::Constant(3, ev.J_bar)) / dphi.dot(col - P * col);
    CHECK(std::abs(v(0) - expected) < 1e-10 * std::max(1.0, std::abs(expected)));
}

TEST_CASE("critic fixed point rejects rank-deficient features") {
    rng::RandomStream s(rng::SeedTree{10, {}});
    const auto prob = testing::random_problem(3, 2, 1, s);
    const auto pi = testing::random_policy(3, 2, s);
    CHECK_THROWS_AS(oracle::critic_fixed_point(prob.mdp, prob.set.model(0), pi, FeatureMap(Matrix::Identity(3, 3))),
                    AssumptionViolation);
    CHECK_THROWS_AS(oracle::gradient_bias(prob.mdp, prob.set.model(0), pi, FeatureMap(Matrix::Ones(3, 1))),
                    AssumptionViolation);
}

TEST_CASE("gradient bias vanishes for value-representing features") {
    rng::RandomStream s(rng::SeedTree{11, {"bias0"}});
    for (int trial = 0; trial < 10; ++trial) {
        const auto prob = testing::random_problem(5, 3, 2, s);
        const auto p_bar = average_model(prob.set, prob.omega);
        const auto pi = testing::random_policy(5, 3, s);
        const Vector g = oracle::exact_policy_gradient(prob.mdp, p_bar, pi);
        const double scale = std::max(1.0, testing::max_abs(g));
        CHECK(testing::max_abs(oracle::gradient_bias(prob.mdp, p_bar, pi, FeatureMap::tabular_minus_one(5))) <=
              1e-10 * scale);
        // a single feature equal to V_bar spans the true value function
        const Matrix phi = oracle::evaluate_policy(prob.mdp, p_bar, pi).V_bar;
        CHECK(testing::max_abs(oracle::gradient_bias(prob.mdp, p_bar, pi, FeatureMap(phi))) <= 1e-10 * scale);
    }
}

TEST_CASE("gradient bias with coarse features") {
    rng::RandomStream s(rng::SeedTree{12, {"bias"}});
    for (int trial = 0; trial < 10; ++trial) {
        const auto prob = testing::random_problem(3, 2, 2, s);
        const auto p_bar = average_model(prob.set, prob.omega);
        const auto pi = testing::random_policy(3, 2, s, 1.0);
        Matrix phi(3, 1);
        phi << 0.0, 1.0, s.next_gaussian();
        const FeatureMap f(phi);
        const Vector bias = oracle::gradient_bias(prob.mdp, p_bar, pi, f);
        CHECK(testing::max_abs(bias) > 1e-6);

        // bias = E[delta psi] - grad J
        const Vector v = oracle::critic_fixed_point(prob.mdp, p_bar, pi, f);
        const double J = oracle::evaluate_policy(prob.mdp, p_bar, pi).J_bar;
        const Vector update = oracle::expected_actor_update(prob.mdp, p_bar, pi, f, v, J);
        CHECK(testing::max_abs(update - oracle::exact_policy_gradient(prob.mdp, p_bar, pi) - bias) < 1e-12);

        // independent route through the gradients of the approximate values
        CHECK(testing::relative_error(testing::bias_by_value_gradients(prob.mdp, p_bar, pi, f), bias) < 1e-5);

        // rescaling the features leaves Phi v and hence the bias unchanged
        const Vector scaled = oracle::gradient_bias(prob.mdp, p_bar, pi, FeatureMap(3.7 * phi));
        CHECK(testing::max_abs(scaled - bias) <= 1e-10 * std::max(1.0, testing::max_abs(bias)));
    }
}

TEST_CASE("expected actor update with exact values is the gradient") {
    rng::RandomStream s(rng::SeedTree{13, {"update"}});
    const auto prob = testing::random_problem(4, 3, 2, s);
    const auto p_bar = average_model(prob.set, prob.omega);
    const auto pi = testing::random_policy(4, 3, s);
    const auto f = FeatureMap::tabular_minus_one(4, 1);
    const double J = oracle::evaluate_policy(prob.mdp, p_bar, pi).J_bar;
    const Vector v = oracle::critic_fixed_point(prob.mdp, p_bar, pi, f);
    const Vector g = oracle::exact_policy_gradient(prob.mdp, p_bar, pi);
    CHECK(testing::max_abs(oracle::expected_actor_update(prob.mdp, p_bar, pi, f, v, J) - g) < 1e-10);
    // an offset in J_hat or in the critic does not move the expected update
    CHECK(testing::max_abs(oracle::expected_actor_update(prob.mdp, p_bar, pi, f, v, J + 5.0) - g) < 1e-10);
}

TEST_CASE("discounted value iteration") {
    rng::RandomStream s(rng::SeedTree{14, {"vi"}});
    const auto prob = testing::random_problem(5, 3, 3, s);
    const double gamma = 0.9;
    for (std::size_t k = 0; k < prob.set.size(); ++k) {
        const Matrix q = oracle::discounted_q_values(prob.mdp, prob.set.model(k), gamma);
        const Vector vmax = q.rowwise().maxCoeff();
        for (int x = 0; x < 5; ++x) {
            for (int a = 0; a < 3; ++a) {
                double target = prob.mdp.reward(x, a);
                for (int y = 0; y < 5; ++y) target += gamma * prob.set.model(k)(x, a, y) * vmax(y);
                CHECK(std::abs(q(x, a) - target) < 1e-10);
            }
        }
    }
    const Matrix robust = oracle::robust_discounted_q_values(prob.mdp, prob.set, gamma);
    for (std::size_t k = 0; k < prob.set.size(); ++k) {
        const Matrix q = oracle::discounted_q_values(prob.mdp, prob.set.model(k), gamma);
        CHECK((robust.array() <= q.array() + 1e-10).all());
    }
    const UncertaintySet single({prob.set.model(0)}, 0);
    CHECK((oracle::robust_discounted_q_values(prob.mdp, single, gamma) -
           oracle::discounted_q_values(prob.mdp, prob.set.model(0), gamma))
              .cwiseAbs()
              .maxCoeff() < 1e-10);
    CHECK_THROWS_AS(oracle::discounted_q_values(prob.mdp, prob.set.model(0), 1.0), InvalidInput);
}
