#include "srac/agents.hpp"

#include "srac/errors.hpp"

#include <cmath>
#include <limits>

namespace srac::agents {

std::string to_string(Algorithm algorithm) {
    switch (algorithm) {
        case Algorithm::sr_ac: return "sr_ac";
        case Algorithm::robust_ac: return "robust_ac";
        case Algorithm::nominal_ac: return "nominal_ac";
        case Algorithm::sr_q: return "sr_q";
        case Algorithm::robust_q: return "robust_q";
        case Algorithm::nominal_q: return "nominal_q";
    }
    return "unknown";
}

Algorithm parse_algorithm(const std::string& name) {
    for (auto a : {Algorithm::sr_ac, Algorithm::robust_ac, Algorithm::nominal_ac, Algorithm::sr_q,
                   Algorithm::robust_q, Algorithm::nominal_q}) {
        if (to_string(a) == name) return a;
    }
    throw InvalidInput("unknown algorithm '" + name + "'");
}

bool is_q_family(Algorithm algorithm) {
    return algorithm == Algorithm::sr_q || algorithm == Algorithm::robust_q || algorithm == Algorithm::nominal_q;
}

Variant variant_of(Algorithm algorithm) {
    switch (algorithm) {
        case Algorithm::sr_ac:
        case Algorithm::sr_q: return Variant::soft_robust;
        case Algorithm::robust_ac:
        case Algorithm::robust_q: return Variant::robust;
        default: return Variant::nominal;
    }
}

StepSizeSchedule StepSizeSchedule::constant(double alpha, double beta, double c) {
    StepSizeSchedule s;
    s.mode = Mode::constant;
    s.c_alpha = alpha;
    s.c_beta = beta;
    s.c = c;
    s.validate();
    return s;
}

StepSizeSchedule StepSizeSchedule::decaying(double c_alpha, double c_beta, double c, double e_alpha, double e_beta) {
    StepSizeSchedule s{Mode::decaying, c_alpha, c_beta, c, e_alpha, e_beta};
    s.validate();
    return s;
}

void StepSizeSchedule::validate() const {
    if (!(c_alpha > 0.0) || !(c_beta > 0.0) || !(c > 0.0)) {
        throw InvalidInput("step-size constants must be positive");
    }
    if (c * c_alpha > 1.0) throw InvalidInput("xi_0 = c * alpha_0 exceeds 1");
    if (mode == Mode::decaying) {
        if (!(e_alpha > 0.5 && e_alpha <= 1.0) || !(e_beta > 0.5 && e_beta <= 1.0)) {
            throw InvalidInput("decay exponents must lie in (0.5, 1]");
        }
        if (!(e_alpha < e_beta)) throw InvalidInput("critic step sizes must decay slower than actor step sizes");
    }
}

double StepSizeSchedule::alpha(std::int64_t t) const {
    if (mode == Mode::constant) return c_alpha;
    return c_alpha / std::pow(1.0 + static_cast<double>(t), e_alpha);
}

double StepSizeSchedule::beta(std::int64_t t) const {
    if (mode == Mode::constant) return c_beta;
    return c_beta / std::pow(1.0 + static_cast<double>(t), e_beta);
}

Bootstrap::Bootstrap(std::vector<TransitionModel> models, bool take_min)
    : models_(std::move(models)), take_min_(take_min) {}

Bootstrap Bootstrap::expectation(TransitionModel model) { return Bootstrap({std::move(model)}, false); }

Bootstrap Bootstrap::worst_case(const UncertaintySet& set) { return Bootstrap(set.models(), true); }

Bootstrap Bootstrap::for_variant(Variant variant, const UncertaintySet& set, const WeightingDistribution& omega) {
    switch (variant) {
        case Variant::soft_robust: return expectation(average_model(set, omega));
        case Variant::robust: return worst_case(set);
        case Variant::nominal: return expectation(set.nominal());
    }
    throw InvalidInput("unknown variant");
}

double Bootstrap::operator()(int x, int a, const Vector& values) const {
    if (!take_min_) return models_.front().row(x, a).dot(values);
    double worst = std::numeric_limits<double>::infinity();
    for (const auto& m : models_) worst = std::min(worst, m.row(x, a).dot(values));
    return worst;
}

TrainState initial_state(int n_states, int n_actions, int feature_dim, const rng::SeedTree& seed) {
    return TrainState{SoftmaxPolicy(n_states, n_actions), Vector::Zero(feature_dim), 0.0, 0, rng::RandomStream(seed),
                      false};
}

double td_error(const TrainState& state, const Transition& tr, const Bootstrap& bootstrap, const FeatureMap& features) {
    const Vector values = features.values(state.v);
    return tr.reward - state.J_hat + bootstrap(tr.state, tr.action, values) - values(tr.state);
}

double sr_td_error(const TrainState& state, const Transition& tr, const TransitionModel& p_bar,
                   const FeatureMap& features) {
    return td_error(state, tr, Bootstrap::expectation(p_bar), features);
}

double robust_td_error(const TrainState& state, const Transition& tr, const UncertaintySet& set,
                       const FeatureMap& features) {
    return td_error(state, tr, Bootstrap::worst_case(set), features);
}

double nominal_td_error(const TrainState& state, const Transition& tr, const TransitionModel& p_hat,
                        const FeatureMap& features) {
    return td_error(state, tr, Bootstrap::expectation(p_hat), features);
}

TrainState ac_step(TrainState state, envs::EnvHandle& env, const Bootstrap& bootstrap, const FeatureMap& features,
                   const StepSizeSchedule& schedule, const UpdateMask& mask) {
    if (state.diverged) return state;
    const int x = env.state();
    const Vector pi = state.policy.probs(x);
    const int a = static_cast<int>(state.rng.next_categorical(std::span<const double>(pi.data(), pi.size())));
    const auto [next, reward] = env.step(a);
    (void)next;

    if (mask.average_reward) {
        const double xi = schedule.xi(state.t);
        state.J_hat = (1.0 - xi) * state.J_hat + xi * reward;
    }
    const Transition tr{x, a, reward};
    const double delta = td_error(state, tr, bootstrap, features);

    if (mask.critic) state.v += schedule.alpha(state.t) * delta * features.phi(x).transpose();
    if (mask.actor) {
        const double step = schedule.beta(state.t) * delta;
        auto block = state.policy.theta().segment(state.policy.index(x, 0), state.policy.n_actions());
        block -= step * pi;
        block(a) += step;
    }
    ++state.t;

    const double norm = state.policy.theta().norm();
    if (!std::isfinite(norm) || norm > kDivergenceThreshold || !std::isfinite(state.J_hat) || !state.v.allFinite()) {
        state.diverged = true;
    }
    return state;
}

TrainState sr_ac_step(TrainState state, envs::EnvHandle& env, const TransitionModel& p_bar,
                      const FeatureMap& features, const StepSizeSchedule& schedule) {
    return ac_step(std::move(state), env, Bootstrap::expectation(p_bar), features, schedule);
}

void AgentConfig::validate() const {
    schedule.validate();
    if (max_steps < 1) throw InvalidInput("max_steps must be at least 1");
    if (is_q_family(algorithm)) {
        if (!gamma) throw InvalidInput(to_string(algorithm) + " needs a discount factor");
        if (!(*gamma > 0.0 && *gamma < 1.0)) throw InvalidInput("discount factor must lie in (0, 1)");
    } else if (gamma) {
        throw InvalidInput(to_string(algorithm) + " is average-reward and takes no discount factor");
    }
}

double q_td_error(const Matrix& q, const Transition& tr, const Bootstrap& bootstrap, double gamma) {
    const Vector best = q.rowwise().maxCoeff();
    return tr.reward - q(tr.state, tr.action) + gamma * bootstrap(tr.state, tr.action, best);
}

double q_td_error(Variant variant, const Matrix& q, const Transition& tr, const UncertaintySet& set,
                  const WeightingDistribution& omega, double gamma) {
    return q_td_error(q, tr, Bootstrap::for_variant(variant, set, omega), gamma);
}

std::vector<int> greedy_policy(const Matrix& q) {
    std::vector<int> out(static_cast<std::size_t>(q.rows()));
    for (Eigen::Index x = 0; x < q.rows(); ++x) {
        int best = 0;
        for (int a = 1; a < q.cols(); ++a) {
            if (q(x, a) > q(x, best)) best = a;
        }
        out[static_cast<std::size_t>(x)] = best;
    }
    return out;
}

double epsilon_at(std::int64_t t, std::int64_t max_steps, double floor) {
    const double horizon = std::max<double>(1.0, static_cast<double>(max_steps) / 2.0);
    const double frac = std::min(1.0, static_cast<double>(t) / horizon);
    return 1.0 - (1.0 - floor) * frac;
}

QResult q_learning_run(const AgentConfig& config, envs::EnvHandle& env, const UncertaintySet& set,
                       const WeightingDistribution& omega, const std::function<void(const QStep&)>& observer) {
    config.validate();
    if (!is_q_family(config.algorithm)) throw InvalidInput(to_string(config.algorithm) + " is not a Q-learning agent");
    if (!set.model(0).matches(env.mdp())) throw InvalidInput("uncertainty set does not match the environment");

    const auto bootstrap = Bootstrap::for_variant(variant_of(config.algorithm), set, omega);
    const double gamma = *config.gamma;
    const int n_actions = env.mdp().n_actions();
    rng::RandomStream behavior(rng::derive(rng::SeedTree{config.seed, {}}, "behavior"));

    Matrix q = Matrix::Zero(env.mdp().n_states(), n_actions);
    for (std::int64_t t = 0; t < config.max_steps; ++t) {
        const int x = env.state();
        int a = 0;
        if (behavior.next_uniform() < epsilon_at(t, config.max_steps)) {
            a = static_cast<int>(behavior.next_u64() % static_cast<std::uint64_t>(n_actions));
        } else {
            for (int b = 1; b < n_actions; ++b) {
                if (q(x, b) > q(x, a)) a = b;
            }
        }
        const auto step = env.step(a);
        const Transition tr{x, a, step.reward};
        const double delta = q_td_error(q, tr, bootstrap, gamma);
        q(x, a) += config.schedule.alpha(t) * delta;
        if (observer) observer(QStep{t, tr, delta, &q});
    }
    return {q, greedy_policy(q)};
}

}  // namespace srac::agents
