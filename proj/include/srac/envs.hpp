#pragma once

#include "srac/mdp_core.hpp"
#include "srac/rng.hpp"

#include <vector>

namespace srac::envs {

struct MdpAndModel {
    MdpSpec mdp;
    TransitionModel model;
};

struct StepResult {
    int next_state;
    double reward;
};

/// Samples trajectories of one MDP under a fixed transition model.
/// Single owner; one handle per agent run.
class EnvHandle {
public:
    EnvHandle(MdpSpec mdp, TransitionModel sampling_model, const rng::SeedTree& seed, int start_state = 0);

    int state() const { return state_; }
    const MdpSpec& mdp() const { return mdp_; }
    const TransitionModel& sampling_model() const { return model_; }

    /// Collects r(x, a) for the current state and moves to x' ~ p(x, a, .).
    StepResult step(int action);
    void reset(int state);

private:
    MdpSpec mdp_;
    TransitionModel model_;
    rng::RandomStream stream_;
    int state_;
};

// ---------------------------------------------------------------------------
// Single-step MDP: a start state s0 and one success/failure state per action.

namespace single_step {
inline constexpr int kStart = 0;
inline constexpr int kNumStates = 7;
inline constexpr int kNumActions = 3;
/// Probability of staying at s0, present only to make the chain aperiodic.
inline constexpr double kSelfLoop = 1e-6;
/// Rewards collected when leaving the success / failure state of each action.
inline constexpr double kSuccessReward[kNumActions] = {1e5, 2000.0, 5000.0};
inline constexpr double kFailureReward[kNumActions] = {-1e5, 0.0, -100.0};

constexpr int failure_state(int action) { return 1 + 2 * action; }
constexpr int success_state(int action) { return 2 + 2 * action; }
}  // namespace single_step

/// States ordered {s0, F1, S1, F2, S2, F3, S3}. From s0 action a_i reaches
/// S_i with probability success_prob and F_i otherwise (after a 1e-6
/// self-loop mass); every outcome state returns to s0 and pays its outcome
/// reward on that exit step. Affine in success_prob.
MdpAndModel build_single_step_mdp(double success_prob);

/// One single-step model per probability; the nominal model is the first
/// member equal to `nominal_prob`, or member 0 when none matches.
UncertaintySet build_uncertainty_set_single_step(const std::vector<double>& probs, double nominal_prob = 0.8);

// ---------------------------------------------------------------------------
// Birth-death chain used for property tests.

namespace chain {
inline constexpr int kForward = 0;
inline constexpr int kBack = 1;
}  // namespace chain

/// n states in a line. "forward" moves one step right with probability
/// 1 - slip and otherwise stays; "back" moves left likewise; moves past an
/// end stay put. r(x, a) = state_rewards[x] for both actions.
MdpAndModel build_chain_mdp(int n, double slip, const std::vector<double>& state_rewards);

UncertaintySet build_uncertainty_set_chain(int n, const std::vector<double>& slips,
                                           const std::vector<double>& state_rewards, double nominal_slip);

// ---------------------------------------------------------------------------
// Random construction of sets and weights.

WeightingDistribution sample_dirichlet_weights(std::size_t k, const std::vector<double>& concentration,
                                               const rng::SeedTree& seed);

/// `count` success probabilities drawn uniformly on (0, 1).
std::vector<double> sample_success_probs(std::size_t count, const rng::SeedTree& seed);

/// `count` slips drawn from N(nominal, stddev^2) and clipped to [0, 0.5].
std::vector<double> sample_chain_slips(double nominal, double stddev, std::size_t count, const rng::SeedTree& seed);

}  // namespace srac::envs
