#include "srac/exact_oracle.hpp"

#include "srac/errors.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace srac::oracle {

namespace {

void check_shapes(const MdpSpec& mdp, const TransitionModel& model, const SoftmaxPolicy& policy) {
    if (!model.matches(mdp) || policy.n_states() != mdp.n_states() || policy.n_actions() != mdp.n_actions()) {
        throw InvalidInput("MDP, transition model and policy shapes differ");
    }
}

// Solve with one refinement step; throws if the result is not a solution.
Vector solve_checked(const Matrix& a, const Vector& b, const char* what) {
    Eigen::FullPivLU<Matrix> lu(a);
    if (!lu.isInvertible()) throw NumericalFailure(std::string(what) + ": singular system");
    Vector x = lu.solve(b);
    x += lu.solve(b - a * x);
    const double scale = 1.0 + b.lpNorm<Eigen::Infinity>() + a.lpNorm<Eigen::Infinity>() * x.lpNorm<Eigen::Infinity>();
    if (!x.allFinite() || (a * x - b).lpNorm<Eigen::Infinity>() > 1e-9 * scale) {
        throw NumericalFailure(std::string(what) + ": solve did not converge");
    }
    return x;
}

Matrix q_from_values(const MdpSpec& mdp, const TransitionModel& model, double J, const Vector& V) {
    Matrix q(mdp.n_states(), mdp.n_actions());
    for (int a = 0; a < mdp.n_actions(); ++a) {
        q.col(a) = mdp.rewards().col(a).array() - J + (model.action(a) * V).array();
    }
    return q;
}

}  // namespace

Vector stationary_distribution(const Matrix& chain) {
    if (chain.rows() == 0 || chain.rows() != chain.cols()) throw InvalidInput("chain must be square");
    for (Eigen::Index x = 0; x < chain.rows(); ++x) {
        if (std::abs(chain.row(x).sum() - 1.0) > 1e-10 || (chain.row(x).array() < 0.0).any()) {
            throw InvalidInput("chain row " + std::to_string(x) + " is not a probability vector");
        }
    }
    if (!is_irreducible(chain)) throw NoUniqueStationary("chain is not irreducible");
    const auto n = chain.rows();
    Matrix a = chain.transpose() - Matrix::Identity(n, n);
    a.row(n - 1).setOnes();
    Vector b = Vector::Zero(n);
    b(n - 1) = 1.0;
    return solve_checked(a, b, "stationary distribution");
}

SoftRobustEvaluation evaluate_policy(const MdpSpec& mdp, const TransitionModel& p_bar, const SoftmaxPolicy& policy) {
    check_shapes(mdp, p_bar, policy);
    const Matrix chain = policy_matrix(p_bar, policy);
    const Vector reward = policy_rewards(mdp, policy);
    const auto n = chain.rows();

    SoftRobustEvaluation out;
    out.d_bar = stationary_distribution(chain);
    out.J_bar = out.d_bar.dot(reward);
    const Matrix system = Matrix::Identity(n, n) - chain + Vector::Ones(n) * out.d_bar.transpose();
    out.V_bar = solve_checked(system, reward - out.J_bar * Vector::Ones(n), "Poisson equation");
    out.Q_bar = q_from_values(mdp, p_bar, out.J_bar, out.V_bar);
    out.A_bar = out.Q_bar.colwise() - out.V_bar;
    return out;
}

double poisson_residual(const MdpSpec& mdp, const TransitionModel& p_bar, const SoftmaxPolicy& policy,
                        const SoftRobustEvaluation& eval) {
    check_shapes(mdp, p_bar, policy);
    const Matrix pi = policy.table();
    double worst = 0.0;
    for (int x = 0; x < mdp.n_states(); ++x) {
        double rhs = 0.0;
        for (int a = 0; a < mdp.n_actions(); ++a) {
            rhs += pi(x, a) * (mdp.reward(x, a) + p_bar.row(x, a).dot(eval.V_bar));
        }
        worst = std::max(worst, std::abs(eval.J_bar + eval.V_bar(x) - rhs));
    }
    return worst;
}

double fixed_model_objective(const MdpSpec& mdp, const UncertaintySet& set, const WeightingDistribution& omega,
                             const SoftmaxPolicy& policy) {
    if (omega.size() != set.size()) throw InvalidInput("weighting distribution and set sizes differ");
    double total = 0.0;
    for (std::size_t k = 0; k < set.size(); ++k) {
        if (omega[k] == 0.0) continue;
        total += omega[k] * evaluate_policy(mdp, set.model(k), policy).J_bar;
    }
    return total;
}

Vector exact_policy_gradient(const MdpSpec& mdp, const TransitionModel& p_bar, const SoftmaxPolicy& policy) {
    const auto eval = evaluate_policy(mdp, p_bar, policy);
    Vector grad = Vector::Zero(policy.theta().size());
    for (int x = 0; x < mdp.n_states(); ++x) {
        const Vector p = policy.probs(x);
        for (int a = 0; a < mdp.n_actions(); ++a) {
            // d pi(x, a) / d theta(x, b) = pi(x, a) (1{a == b} - pi(x, b))
            for (int b = 0; b < mdp.n_actions(); ++b) {
                const double dpi = p(a) * ((a == b ? 1.0 : 0.0) - p(b));
                grad(policy.index(x, b)) += eval.d_bar(x) * dpi * eval.Q_bar(x, a);
            }
        }
    }
    return grad;
}

Vector policy_gradient_advantage_form(const MdpSpec& mdp, const TransitionModel& p_bar, const SoftmaxPolicy& policy) {
    const auto eval = evaluate_policy(mdp, p_bar, policy);
    Vector grad = Vector::Zero(policy.theta().size());
    for (int x = 0; x < mdp.n_states(); ++x) {
        const Vector p = policy.probs(x);
        for (int a = 0; a < mdp.n_actions(); ++a) {
            grad += eval.d_bar(x) * p(a) * eval.A_bar(x, a) * score(policy, x, a);
        }
    }
    return grad;
}

Vector policy_gradient_with_baseline(const MdpSpec& mdp, const TransitionModel& p_bar, const SoftmaxPolicy& policy,
                                     const Vector& baseline) {
    if (baseline.size() != mdp.n_states()) throw InvalidInput("baseline must have one entry per state");
    const auto eval = evaluate_policy(mdp, p_bar, policy);
    Vector grad = Vector::Zero(policy.theta().size());
    for (int x = 0; x < mdp.n_states(); ++x) {
        const Vector p = policy.probs(x);
        for (int a = 0; a < mdp.n_actions(); ++a) {
            for (int b = 0; b < mdp.n_actions(); ++b) {
                const double dpi = p(a) * ((a == b ? 1.0 : 0.0) - p(b));
                grad(policy.index(x, b)) += eval.d_bar(x) * dpi * (eval.Q_bar(x, a) - baseline(x));
            }
        }
    }
    return grad;
}

Vector td_fixed_point(const MdpSpec& mdp, const TransitionModel& sampling_model, const TransitionModel& target_model,
                      const SoftmaxPolicy& policy, const FeatureMap& features) {
    check_shapes(mdp, sampling_model, policy);
    check_shapes(mdp, target_model, policy);
    if (features.n_states() != mdp.n_states()) throw InvalidInput("feature map and MDP state counts differ");
    features.check_critic_assumptions();

    const Vector reward = policy_rewards(mdp, policy);
    const Vector d = stationary_distribution(policy_matrix(sampling_model, policy));
    const double J = d.dot(reward);
    const Matrix target = policy_matrix(target_model, policy);
    const Matrix& phi = features.state_features();
    const auto n = phi.rows();

    const Matrix weighted = phi.transpose() * d.asDiagonal();
    const Matrix lhs = weighted * (Matrix::Identity(n, n) - target) * phi;
    const Vector rhs = weighted * (reward - J * Vector::Ones(n));
    return solve_checked(lhs, rhs, "critic fixed point");
}

Vector critic_fixed_point(const MdpSpec& mdp, const TransitionModel& p_bar, const SoftmaxPolicy& policy,
                          const FeatureMap& features) {
    return td_fixed_point(mdp, p_bar, p_bar, policy, features);
}

Vector expected_actor_update(const MdpSpec& mdp, const TransitionModel& p_bar, const SoftmaxPolicy& policy,
                             const FeatureMap& features, const Vector& v, double J_hat) {
    check_shapes(mdp, p_bar, policy);
    if (v.size() != features.dim()) throw InvalidInput("critic weights and feature dimension differ");
    const Vector d = stationary_distribution(policy_matrix(p_bar, policy));
    const Vector values = features.values(v);
    Vector out = Vector::Zero(policy.theta().size());
    for (int x = 0; x < mdp.n_states(); ++x) {
        const Vector p = policy.probs(x);
        for (int a = 0; a < mdp.n_actions(); ++a) {
            double delta = mdp.reward(x, a) - J_hat - values(x);
            for (int y = 0; y < mdp.n_states(); ++y) delta += p_bar(x, a, y) * values(y);
            out += d(x) * p(a) * delta * score(policy, x, a);
        }
    }
    return out;
}

Vector gradient_bias(const MdpSpec& mdp, const TransitionModel& p_bar, const SoftmaxPolicy& policy,
                     const FeatureMap& features) {
    const Vector v = critic_fixed_point(mdp, p_bar, policy, features);
    const double J = evaluate_policy(mdp, p_bar, policy).J_bar;
    return expected_actor_update(mdp, p_bar, policy, features, v, J) - exact_policy_gradient(mdp, p_bar, policy);
}

namespace {

template <typename Bootstrap>
Matrix value_iteration(const MdpSpec& mdp, double gamma, double tol, Bootstrap&& bootstrap) {
    if (!(gamma >= 0.0 && gamma < 1.0)) throw InvalidInput("discount must lie in [0, 1)");
    Matrix q = Matrix::Zero(mdp.n_states(), mdp.n_actions());
    for (int iter = 0; iter < 1'000'000; ++iter) {
        const Vector best = q.rowwise().maxCoeff();
        Matrix next(q.rows(), q.cols());
        for (int x = 0; x < mdp.n_states(); ++x) {
            for (int a = 0; a < mdp.n_actions(); ++a) {
                next(x, a) = mdp.reward(x, a) + gamma * bootstrap(x, a, best);
            }
        }
        const double change = (next - q).lpNorm<Eigen::Infinity>();
        q = std::move(next);
        if (change <= tol * (1.0 - gamma)) return q;
    }
    throw NumericalFailure("value iteration did not converge");
}

}  // namespace

Matrix discounted_q_values(const MdpSpec& mdp, const TransitionModel& model, double gamma, double tol) {
    if (!model.matches(mdp)) throw InvalidInput("MDP and transition model shapes differ");
    return value_iteration(mdp, gamma, tol, [&](int x, int a, const Vector& best) { return model.row(x, a).dot(best); });
}

Matrix robust_discounted_q_values(const MdpSpec& mdp, const UncertaintySet& set, double gamma, double tol) {
    if (!set.model(0).matches(mdp)) throw InvalidInput("MDP and uncertainty set shapes differ");
    return value_iteration(mdp, gamma, tol, [&](int x, int a, const Vector& best) {
        double worst = std::numeric_limits<double>::infinity();
        for (const auto& m : set.models()) worst = std::min(worst, m.row(x, a).dot(best));
        return worst;
    });
}

}  // namespace srac::oracle
