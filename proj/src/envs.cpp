#include "srac/envs.hpp"

#include "srac/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace srac::envs {

EnvHandle::EnvHandle(MdpSpec mdp, TransitionModel sampling_model, const rng::SeedTree& seed, int start_state)
    : mdp_(std::move(mdp)), model_(std::move(sampling_model)), stream_(seed), state_(start_state) {
    if (!model_.matches(mdp_)) throw InvalidInput("sampling model does not match the MDP");
    reset(start_state);
}

StepResult EnvHandle::step(int action) {
    if (action < 0 || action >= mdp_.n_actions()) {
        throw InvalidInput("action " + std::to_string(action) + " out of range");
    }
    const double reward = mdp_.reward(state_, action);
    const Vector row = model_.row(state_, action).transpose();
    state_ = static_cast<int>(stream_.next_categorical(std::span<const double>(row.data(), row.size())));
    return {state_, reward};
}

void EnvHandle::reset(int state) {
    if (state < 0 || state >= mdp_.n_states()) throw InvalidInput("state " + std::to_string(state) + " out of range");
    state_ = state;
}

MdpAndModel build_single_step_mdp(double success_prob) {
    using namespace single_step;
    if (!(success_prob >= 0.0 && success_prob <= 1.0)) {
        throw InvalidInput("success probability must lie in [0, 1]");
    }
    Matrix rewards = Matrix::Zero(kNumStates, kNumActions);
    std::vector<Matrix> slices(kNumActions, Matrix::Zero(kNumStates, kNumStates));
    for (int i = 0; i < kNumActions; ++i) {
        rewards.row(success_state(i)).setConstant(kSuccessReward[i]);
        rewards.row(failure_state(i)).setConstant(kFailureReward[i]);
    }
    for (int a = 0; a < kNumActions; ++a) {
        Matrix& p = slices[a];
        p(kStart, kStart) = kSelfLoop;
        p(kStart, success_state(a)) = (1.0 - kSelfLoop) * success_prob;
        p(kStart, failure_state(a)) = (1.0 - kSelfLoop) * (1.0 - success_prob);
        for (int x = 1; x < kNumStates; ++x) p(x, kStart) = 1.0;
    }
    return {MdpSpec(std::move(rewards)), TransitionModel(std::move(slices))};
}

UncertaintySet build_uncertainty_set_single_step(const std::vector<double>& probs, double nominal_prob) {
    if (probs.empty()) throw InvalidInput("uncertainty set needs at least one success probability");
    std::vector<TransitionModel> models;
    std::size_t nominal = 0;
    bool found = false;
    for (std::size_t k = 0; k < probs.size(); ++k) {
        models.push_back(build_single_step_mdp(probs[k]).model);
        if (!found && std::abs(probs[k] - nominal_prob) < 1e-12) {
            nominal = k;
            found = true;
        }
    }
    return UncertaintySet(std::move(models), nominal);
}

MdpAndModel build_chain_mdp(int n, double slip, const std::vector<double>& state_rewards) {
    if (n < 2) throw InvalidInput("chain needs at least two states");
    if (!(slip >= 0.0 && slip <= 0.5)) throw InvalidInput("slip must lie in [0, 0.5]");
    if (state_rewards.size() != static_cast<std::size_t>(n)) throw InvalidInput("need one reward per chain state");
    Matrix rewards(n, 2);
    for (int x = 0; x < n; ++x) rewards.row(x).setConstant(state_rewards[static_cast<std::size_t>(x)]);
    std::vector<Matrix> slices(2, Matrix::Zero(n, n));
    for (int x = 0; x < n; ++x) {
        slices[chain::kForward](x, std::min(x + 1, n - 1)) += 1.0 - slip;
        slices[chain::kForward](x, x) += slip;
        slices[chain::kBack](x, std::max(x - 1, 0)) += 1.0 - slip;
        slices[chain::kBack](x, x) += slip;
    }
    return {MdpSpec(std::move(rewards)), TransitionModel(std::move(slices))};
}

UncertaintySet build_uncertainty_set_chain(int n, const std::vector<double>& slips,
                                           const std::vector<double>& state_rewards, double nominal_slip) {
    if (slips.empty()) throw InvalidInput("uncertainty set needs at least one slip");
    std::vector<TransitionModel> models;
    std::size_t nominal = 0;
    bool found = false;
    for (std::size_t k = 0; k < slips.size(); ++k) {
        models.push_back(build_chain_mdp(n, slips[k], state_rewards).model);
        if (!found && std::abs(slips[k] - nominal_slip) < 1e-12) {
            nominal = k;
            found = true;
        }
    }
    return UncertaintySet(std::move(models), nominal);
}

WeightingDistribution sample_dirichlet_weights(std::size_t k, const std::vector<double>& concentration,
                                               const rng::SeedTree& seed) {
    if (k < 1) throw InvalidInput("need at least one weight");
    if (concentration.size() != k) throw InvalidInput("need one concentration per model");
    for (double c : concentration) {
        if (!(c > 0.0)) throw InvalidInput("dirichlet concentration must be positive");
    }
    rng::RandomStream stream(seed);
    auto draw = stream.next_dirichlet(concentration);
    Vector w = Eigen::Map<const Vector>(draw.data(), static_cast<Eigen::Index>(draw.size()));
    return WeightingDistribution(w / w.sum());
}

std::vector<double> sample_success_probs(std::size_t count, const rng::SeedTree& seed) {
    rng::RandomStream stream(seed);
    std::vector<double> out;
    while (out.size() < count) {
        const double u = stream.next_uniform();
        if (u > 0.0) out.push_back(u);
    }
    return out;
}

std::vector<double> sample_chain_slips(double nominal, double stddev, std::size_t count, const rng::SeedTree& seed) {
    if (!(nominal >= 0.0 && nominal <= 0.5)) throw InvalidInput("nominal slip must lie in [0, 0.5]");
    rng::RandomStream stream(seed);
    std::vector<double> out;
    for (std::size_t i = 0; i < count; ++i) out.push_back(std::clamp(stream.next_gaussian(nominal, stddev), 0.0, 0.5));
    return out;
}

}  // namespace srac::envs
