#pragma once

#include "srac/mdp_core.hpp"

namespace srac::oracle {

/// Exact long-run quantities of a policy under one (average) transition model.
struct SoftRobustEvaluation {
    Vector d_bar;  ///< stationary distribution of P^pi
    double J_bar = 0.0;  ///< average reward per step
    Vector V_bar;  ///< differential values, normalized so d_bar . V_bar = 0
    Matrix Q_bar;  ///< differential action values (n_states x n_actions)
    Matrix A_bar;  ///< Q_bar - V_bar
};

/// Unique d with d^T P = d^T, sum d = 1, by a direct solve of (P^T - I)
/// with one row replaced by the normalization. Throws NoUniqueStationary if
/// the chain is reducible.
Vector stationary_distribution(const Matrix& chain);

/// Average reward, differential values, action values and advantages of
/// `policy` under `p_bar`. The Poisson system is solved in the augmented
/// form (I - P + e d^T) V = R - J e.
SoftRobustEvaluation evaluate_policy(const MdpSpec& mdp, const TransitionModel& p_bar, const SoftmaxPolicy& policy);

/// max_x |J + V(x) - sum_a pi(x,a) (r(x,a) + sum_y p(x,a,y) V(y))|.
double poisson_residual(const MdpSpec& mdp, const TransitionModel& p_bar, const SoftmaxPolicy& policy,
                        const SoftRobustEvaluation& eval);

/// sum_k omega_k J_{p_k}(pi): each member model held fixed for the whole run.
/// Generally differs from evaluate_policy(average_model(...)).J_bar on
/// multi-step MDPs.
double fixed_model_objective(const MdpSpec& mdp, const UncertaintySet& set, const WeightingDistribution& omega,
                             const SoftmaxPolicy& policy);

/// sum_x d(x) sum_a grad pi(x, a) Q(x, a), with grad pi written out explicitly.
Vector exact_policy_gradient(const MdpSpec& mdp, const TransitionModel& p_bar, const SoftmaxPolicy& policy);

/// sum_x d(x) sum_a pi(x, a) psi_xa A(x, a).
Vector policy_gradient_advantage_form(const MdpSpec& mdp, const TransitionModel& p_bar, const SoftmaxPolicy& policy);

/// sum_x d(x) sum_a grad pi(x, a) (Q(x, a) - baseline(x)).
Vector policy_gradient_with_baseline(const MdpSpec& mdp, const TransitionModel& p_bar, const SoftmaxPolicy& policy,
                                     const Vector& baseline);

/// Fixed point of linear TD when states are visited according to
/// `sampling_model`, the average-reward estimate tracks that chain's J, and
/// the bootstrap expectation is taken under `target_model`:
///   Phi^T D (R - J e + P_target Phi v - Phi v) = 0.
Vector td_fixed_point(const MdpSpec& mdp, const TransitionModel& sampling_model, const TransitionModel& target_model,
                      const SoftmaxPolicy& policy, const FeatureMap& features);

/// Solution of Phi^T D Phi v = Phi^T D T(Phi v) with T(J) = R - J_bar e + P_bar J.
/// Throws AssumptionViolation when the features fail the rank conditions.
Vector critic_fixed_point(const MdpSpec& mdp, const TransitionModel& p_bar, const SoftmaxPolicy& policy,
                          const FeatureMap& features);

/// E[delta psi] under d_bar and pi for a critic `v` and average-reward
/// estimate `J_hat`, by enumeration over (x, a, x').
Vector expected_actor_update(const MdpSpec& mdp, const TransitionModel& p_bar, const SoftmaxPolicy& policy,
                             const FeatureMap& features, const Vector& v, double J_hat);

/// Expected actor update with the converged critic minus the exact gradient.
Vector gradient_bias(const MdpSpec& mdp, const TransitionModel& p_bar, const SoftmaxPolicy& policy,
                     const FeatureMap& features);

/// Discounted optimal Q under one model, by value iteration to `tol`.
Matrix discounted_q_values(const MdpSpec& mdp, const TransitionModel& model, double gamma, double tol = 1e-13);

/// Discounted robust optimal Q: the bootstrap takes the min over the set's members.
Matrix robust_discounted_q_values(const MdpSpec& mdp, const UncertaintySet& set, double gamma, double tol = 1e-13);

}  // namespace srac::oracle
