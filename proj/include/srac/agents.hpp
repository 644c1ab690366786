#pragma once

#include "srac/envs.hpp"
#include "srac/mdp_core.hpp"
#include "srac/rng.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace srac::agents {

enum class Algorithm { sr_ac, robust_ac, nominal_ac, sr_q, robust_q, nominal_q };

/// Which model(s) the TD target bootstraps through.
enum class Variant { soft_robust, robust, nominal };

std::string to_string(Algorithm algorithm);
Algorithm parse_algorithm(const std::string& name);
bool is_q_family(Algorithm algorithm);
Variant variant_of(Algorithm algorithm);

/// Critic (alpha), actor (beta) and average-reward (xi = c * alpha) step sizes.
///
/// Decaying mode uses alpha_t = c_alpha / (1 + t)^e_alpha and
/// beta_t = c_beta / (1 + t)^e_beta with 0.5 < e_alpha < e_beta <= 1, so
/// both sequences are square-summable but not summable and beta_t / alpha_t
/// decreases to zero.
struct StepSizeSchedule {
    enum class Mode { constant, decaying };

    Mode mode = Mode::constant;
    double c_alpha = 5e-3;
    double c_beta = 5e-5;
    double c = 3.0;
    double e_alpha = 0.6;
    double e_beta = 0.9;

    static StepSizeSchedule constant(double alpha, double beta, double c = 3.0);
    static StepSizeSchedule decaying(double c_alpha, double c_beta, double c = 3.0, double e_alpha = 0.6,
                                     double e_beta = 0.9);

    /// Throws InvalidInput on non-positive constants, exponents outside
    /// (0.5, 1], e_alpha >= e_beta, or xi_0 > 1.
    void validate() const;

    double alpha(std::int64_t t) const;
    double beta(std::int64_t t) const;
    double xi(std::int64_t t) const { return c * alpha(t); }

    bool operator==(const StepSizeSchedule&) const = default;
};

/// Expected next-state value sum_x' p(x, a, x') values(x'), either under one
/// model or as the minimum over several.
class Bootstrap {
public:
    static Bootstrap expectation(TransitionModel model);
    static Bootstrap worst_case(const UncertaintySet& set);
    /// p_bar for soft_robust, min over members for robust, p_hat for nominal.
    static Bootstrap for_variant(Variant variant, const UncertaintySet& set, const WeightingDistribution& omega);

    double operator()(int x, int a, const Vector& values) const;

private:
    Bootstrap(std::vector<TransitionModel> models, bool take_min);

    std::vector<TransitionModel> models_;
    bool take_min_;
};

/// Everything an actor-critic run carries between steps.
struct TrainState {
    SoftmaxPolicy policy;
    Vector v;  ///< critic weights, length d2
    double J_hat = 0.0;
    std::int64_t t = 0;
    rng::RandomStream rng;
    bool diverged = false;
};

/// theta = 0, v = 0, J_hat = 0.
TrainState initial_state(int n_states, int n_actions, int feature_dim, const rng::SeedTree& seed);

struct Transition {
    int state;
    int action;
    double reward;
};

/// Norm of theta above which a run is flagged as diverged.
inline constexpr double kDivergenceThreshold = 1e6;

/// delta = r - J_hat + bootstrap(x, a, Phi v) - v^T phi_x. J_hat must
/// already hold this step's update.
double td_error(const TrainState& state, const Transition& tr, const Bootstrap& bootstrap, const FeatureMap& features);

/// Soft-robust TD-error: the bootstrap is the full expectation under p_bar.
double sr_td_error(const TrainState& state, const Transition& tr, const TransitionModel& p_bar,
                   const FeatureMap& features);
/// Robust TD-error: the bootstrap is the minimum over the set's members.
double robust_td_error(const TrainState& state, const Transition& tr, const UncertaintySet& set,
                       const FeatureMap& features);
/// Nominal TD-error: the bootstrap uses the nominal model.
double nominal_td_error(const TrainState& state, const Transition& tr, const TransitionModel& p_hat,
                        const FeatureMap& features);

/// Selects which of the three updates a step applies.
struct UpdateMask {
    bool average_reward = true;
    bool critic = true;
    bool actor = true;
};

/// One actor-critic iteration: sample a ~ pi(x), step the environment,
/// update J_hat, compute delta, then the critic and actor. Marks the state
/// as diverged once |theta| exceeds kDivergenceThreshold or an estimate
/// stops being finite; a diverged state is returned unchanged.
TrainState ac_step(TrainState state, envs::EnvHandle& env, const Bootstrap& bootstrap, const FeatureMap& features,
                   const StepSizeSchedule& schedule, const UpdateMask& mask = {});

TrainState sr_ac_step(TrainState state, envs::EnvHandle& env, const TransitionModel& p_bar,
                      const FeatureMap& features, const StepSizeSchedule& schedule);

struct AgentConfig {
    Algorithm algorithm = Algorithm::sr_ac;
    StepSizeSchedule schedule;
    std::optional<double> gamma;  ///< Q family only
    std::int64_t max_steps = 1;
    std::uint64_t seed = 0;

    /// Throws InvalidInput when gamma is present for an actor-critic
    /// algorithm, missing or outside (0, 1) for a Q algorithm, or when
    /// max_steps < 1.
    void validate() const;
};

// ---------------------------------------------------------------------------
// Q-learning family

/// r - Q(x, a) + gamma * bootstrap(x, a, max_a' Q(., a')).
double q_td_error(const Matrix& q, const Transition& tr, const Bootstrap& bootstrap, double gamma);
double q_td_error(Variant variant, const Matrix& q, const Transition& tr, const UncertaintySet& set,
                  const WeightingDistribution& omega, double gamma);

/// Greedy action per state, lowest index on ties.
std::vector<int> greedy_policy(const Matrix& q);

/// Linear anneal from 1 to `floor` over the first half of `max_steps`.
double epsilon_at(std::int64_t t, std::int64_t max_steps, double floor = 1e-5);

struct QStep {
    std::int64_t t;
    Transition transition;
    double delta;
    const Matrix* q;  ///< table after this step's update
};

struct QResult {
    Matrix q;
    std::vector<int> greedy;
};

/// Online epsilon-greedy Q-learning on env (which samples the nominal
/// model): Q(x, a) += alpha_t * delta for config.max_steps steps.
QResult q_learning_run(const AgentConfig& config, envs::EnvHandle& env, const UncertaintySet& set,
                       const WeightingDistribution& omega,
                       const std::function<void(const QStep&)>& observer = {});

}  // namespace srac::agents
