#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace srac {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Tolerance on probability row sums. Deviations below it are renormalized
/// away, anything larger is rejected.
inline constexpr double kProbTolerance = 1e-12;

/// State/action counts and the deterministic reward table r(x, a).
class MdpSpec {
public:
    /// `rewards` is n_states x n_actions.
    explicit MdpSpec(Matrix rewards);

    int n_states() const { return static_cast<int>(rewards_.rows()); }
    int n_actions() const { return static_cast<int>(rewards_.cols()); }
    double reward(int x, int a) const { return rewards_(x, a); }
    const Matrix& rewards() const { return rewards_; }

private:
    Matrix rewards_;
};

/// p(x, a, y) for one realization of the dynamics, stored as one
/// n_states x n_states row-stochastic matrix per action.
class TransitionModel {
public:
    explicit TransitionModel(std::vector<Matrix> per_action);

    int n_states() const { return static_cast<int>(per_action_.front().rows()); }
    int n_actions() const { return static_cast<int>(per_action_.size()); }

    double operator()(int x, int a, int y) const { return per_action_[a](x, y); }
    const Matrix& action(int a) const { return per_action_[a]; }
    auto row(int x, int a) const { return per_action_[a].row(x); }

    bool same_shape(const TransitionModel& other) const;
    bool matches(const MdpSpec& mdp) const;

private:
    std::vector<Matrix> per_action_;
};

/// True when every state reaches every other through positive entries.
bool is_irreducible(const Matrix& chain);
/// Period of the chain's communicating class of state 0 is 1.
bool is_aperiodic(const Matrix& chain);

/// Finite family of K models over one state/action space plus the index of
/// the nominal model the agent samples from.
class UncertaintySet {
public:
    /// Every member must be irreducible and aperiodic under the uniform policy.
    UncertaintySet(std::vector<TransitionModel> models, std::size_t nominal_index);

    std::size_t size() const { return models_.size(); }
    const TransitionModel& model(std::size_t k) const { return models_.at(k); }
    const std::vector<TransitionModel>& models() const { return models_; }
    std::size_t nominal_index() const { return nominal_index_; }
    const TransitionModel& nominal() const { return models_[nominal_index_]; }
    int n_states() const { return models_.front().n_states(); }
    int n_actions() const { return models_.front().n_actions(); }

private:
    std::vector<TransitionModel> models_;
    std::size_t nominal_index_;
};

/// Global weight vector omega over the K members of an uncertainty set.
class WeightingDistribution {
public:
    explicit WeightingDistribution(Vector weights);

    std::size_t size() const { return static_cast<std::size_t>(weights_.size()); }
    double operator[](std::size_t k) const { return weights_(static_cast<Eigen::Index>(k)); }
    const Vector& weights() const { return weights_; }

    static WeightingDistribution point_mass(std::size_t k, std::size_t index);
    static WeightingDistribution uniform(std::size_t k);

private:
    Vector weights_;
};

/// Tabular softmax policy; theta is laid out state-major, theta[x * n_actions + a].
class SoftmaxPolicy {
public:
    SoftmaxPolicy(int n_states, int n_actions);
    SoftmaxPolicy(int n_states, int n_actions, Vector theta);

    int n_states() const { return n_states_; }
    int n_actions() const { return n_actions_; }
    Eigen::Index index(int x, int a) const { return static_cast<Eigen::Index>(x) * n_actions_ + a; }

    const Vector& theta() const { return theta_; }
    Vector& theta() { return theta_; }

    /// pi(x, .) computed with the max logit subtracted.
    Vector probs(int x) const;
    double prob(int x, int a) const { return probs(x)(a); }
    /// n_states x n_actions table of pi(x, a).
    Matrix table() const;
    /// Action with the largest probability, lowest index on ties.
    int greedy_action(int x) const;

private:
    int n_states_;
    int n_actions_;
    Vector theta_;
};

/// Linear critic features phi_x, one row per state (n_states x d2).
///
/// Construction only checks shape and finiteness; the rank conditions the
/// critic analysis needs are checked by check_critic_assumptions() so that
/// deliberately coarse features can still drive an agent.
class FeatureMap {
public:
    explicit FeatureMap(Matrix state_features);

    /// One-hot features with `dropped` state's column removed. The dropped
    /// state always has value 0, which pins the additive constant of a
    /// differential value function and keeps e out of the span.
    static FeatureMap tabular_minus_one(int n_states, int dropped = 0);

    int n_states() const { return static_cast<int>(phi_.rows()); }
    int dim() const { return static_cast<int>(phi_.cols()); }
    const Matrix& state_features() const { return phi_; }
    auto phi(int x) const { return phi_.row(x); }

    /// Phi v for a critic weight vector v.
    Vector values(const Vector& v) const { return phi_ * v; }

    /// Throws AssumptionViolation unless Phi has full column rank and the
    /// all-ones vector lies outside its column span.
    void check_critic_assumptions() const;

private:
    Matrix phi_;
};

/// Entrywise sum_k omega_k p_k.
TransitionModel average_model(const UncertaintySet& set, const WeightingDistribution& omega);

/// State-to-state chain P^pi(x, x') = sum_a pi(x, a) p(x, a, x').
Matrix policy_matrix(const TransitionModel& model, const SoftmaxPolicy& policy);

/// Uniform-policy chain sum_a p(x, a, .) / n_actions.
Matrix uniform_policy_matrix(const TransitionModel& model);

/// Expected one-step reward R^pi(x) = sum_a pi(x, a) r(x, a).
Vector policy_rewards(const MdpSpec& mdp, const SoftmaxPolicy& policy);

/// Score vector psi_xa = grad_theta log pi(x, a). Only block x is non-zero,
/// with entry (x, b) equal to 1{a == b} - pi(x, b).
Vector score(const SoftmaxPolicy& policy, int x, int a);

/// Stacked compatible features: row x * n_actions + a holds psi_xa.
Matrix compatible_features(const SoftmaxPolicy& policy);

}  // namespace srac
