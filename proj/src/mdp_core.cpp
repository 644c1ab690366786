#include "srac/mdp_core.hpp"

#include "srac/errors.hpp"

#include <cmath>
#include <numeric>
#include <queue>
#include <string>

namespace srac {

namespace {

std::vector<int> bfs_levels(const Matrix& chain, bool reversed) {
    const auto n = chain.rows();
    std::vector<int> level(static_cast<std::size_t>(n), -1);
    std::queue<Eigen::Index> q;
    level[0] = 0;
    q.push(0);
    while (!q.empty()) {
        auto u = q.front();
        q.pop();
        for (Eigen::Index v = 0; v < n; ++v) {
            const double w = reversed ? chain(v, u) : chain(u, v);
            if (w > 0.0 && level[static_cast<std::size_t>(v)] < 0) {
                level[static_cast<std::size_t>(v)] = level[static_cast<std::size_t>(u)] + 1;
                q.push(v);
            }
        }
    }
    return level;
}

void check_square(const Matrix& chain) {
    if (chain.rows() == 0 || chain.rows() != chain.cols()) {
        throw InvalidInput("chain matrix must be square and non-empty");
    }
}

}  // namespace

MdpSpec::MdpSpec(Matrix rewards) : rewards_(std::move(rewards)) {
    if (rewards_.rows() < 1 || rewards_.cols() < 1) {
        throw InvalidInput("MDP needs at least one state and one action");
    }
    if (!rewards_.allFinite()) throw InvalidInput("rewards must be finite");
}

TransitionModel::TransitionModel(std::vector<Matrix> per_action) : per_action_(std::move(per_action)) {
    if (per_action_.empty()) throw InvalidInput("transition model needs at least one action");
    const auto n = per_action_.front().rows();
    if (n < 1) throw InvalidInput("transition model needs at least one state");
    for (std::size_t a = 0; a < per_action_.size(); ++a) {
        Matrix& p = per_action_[a];
        if (p.rows() != n || p.cols() != n) {
            throw InvalidInput("transition slice for action " + std::to_string(a) + " is not " +
                               std::to_string(n) + "x" + std::to_string(n));
        }
        for (Eigen::Index x = 0; x < n; ++x) {
            for (Eigen::Index y = 0; y < n; ++y) {
                const double v = p(x, y);
                if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
                    throw InvalidInput("transition probability outside [0, 1] at (" + std::to_string(x) + ", " +
                                       std::to_string(a) + ", " + std::to_string(y) + ")");
                }
            }
            const double sum = p.row(x).sum();
            if (std::abs(sum - 1.0) > kProbTolerance) {
                throw InvalidInput("transition row (" + std::to_string(x) + ", " + std::to_string(a) +
                                   ") sums to " + std::to_string(sum));
            }
            p.row(x) /= sum;
        }
    }
}

bool TransitionModel::same_shape(const TransitionModel& other) const {
    return n_states() == other.n_states() && n_actions() == other.n_actions();
}

bool TransitionModel::matches(const MdpSpec& mdp) const {
    return n_states() == mdp.n_states() && n_actions() == mdp.n_actions();
}

bool is_irreducible(const Matrix& chain) {
    check_square(chain);
    for (int reversed = 0; reversed < 2; ++reversed) {
        for (int l : bfs_levels(chain, reversed != 0)) {
            if (l < 0) return false;
        }
    }
    return true;
}

bool is_aperiodic(const Matrix& chain) {
    check_square(chain);
    const auto level = bfs_levels(chain, false);
    int g = 0;
    for (Eigen::Index u = 0; u < chain.rows(); ++u) {
        if (level[static_cast<std::size_t>(u)] < 0) continue;
        for (Eigen::Index v = 0; v < chain.cols(); ++v) {
            if (chain(u, v) > 0.0) {
                g = std::gcd(g, std::abs(level[static_cast<std::size_t>(u)] + 1 - level[static_cast<std::size_t>(v)]));
            }
        }
    }
    return g == 1;
}

UncertaintySet::UncertaintySet(std::vector<TransitionModel> models, std::size_t nominal_index)
    : models_(std::move(models)), nominal_index_(nominal_index) {
    if (models_.empty()) throw InvalidInput("uncertainty set must contain at least one model");
    if (nominal_index_ >= models_.size()) throw InvalidInput("nominal index out of range");
    for (std::size_t k = 0; k < models_.size(); ++k) {
        if (!models_[k].same_shape(models_.front())) {
            throw InvalidInput("uncertainty set member " + std::to_string(k) + " has a different shape");
        }
        const Matrix chain = uniform_policy_matrix(models_[k]);
        if (!is_irreducible(chain) || !is_aperiodic(chain)) {
            throw AssumptionViolation("uncertainty set member " + std::to_string(k) +
                                      " is not irreducible and aperiodic under the uniform policy");
        }
    }
}

WeightingDistribution::WeightingDistribution(Vector weights) : weights_(std::move(weights)) {
    if (weights_.size() < 1) throw InvalidInput("weighting distribution needs at least one entry");
    for (Eigen::Index k = 0; k < weights_.size(); ++k) {
        if (!std::isfinite(weights_(k)) || weights_(k) < 0.0) {
            throw InvalidInput("weights must be finite and non-negative");
        }
    }
    const double sum = weights_.sum();
    if (!(sum > 0.0)) throw InvalidInput("weighting distribution puts zero mass on every model");
    if (std::abs(sum - 1.0) > kProbTolerance) {
        throw InvalidInput("weights sum to " + std::to_string(sum) + ", not 1");
    }
    weights_ /= sum;
}

WeightingDistribution WeightingDistribution::point_mass(std::size_t k, std::size_t index) {
    if (index >= k) throw InvalidInput("point mass index out of range");
    Vector w = Vector::Zero(static_cast<Eigen::Index>(k));
    w(static_cast<Eigen::Index>(index)) = 1.0;
    return WeightingDistribution(std::move(w));
}

WeightingDistribution WeightingDistribution::uniform(std::size_t k) {
    return WeightingDistribution(Vector::Constant(static_cast<Eigen::Index>(k), 1.0 / static_cast<double>(k)));
}

SoftmaxPolicy::SoftmaxPolicy(int n_states, int n_actions)
    : SoftmaxPolicy(n_states, n_actions, Vector::Zero(static_cast<Eigen::Index>(n_states) * n_actions)) {}

SoftmaxPolicy::SoftmaxPolicy(int n_states, int n_actions, Vector theta)
    : n_states_(n_states), n_actions_(n_actions), theta_(std::move(theta)) {
    if (n_states < 1 || n_actions < 1) throw InvalidInput("policy needs at least one state and one action");
    if (theta_.size() != static_cast<Eigen::Index>(n_states) * n_actions) {
        throw InvalidInput("theta length must be n_states * n_actions");
    }
    if (!theta_.allFinite()) throw InvalidInput("theta must be finite");
}

Vector SoftmaxPolicy::probs(int x) const {
    auto logits = theta_.segment(index(x, 0), n_actions_);
    const double m = logits.maxCoeff();
    Vector p = (logits.array() - m).exp().matrix();
    return p / p.sum();
}

Matrix SoftmaxPolicy::table() const {
    Matrix t(n_states_, n_actions_);
    for (int x = 0; x < n_states_; ++x) t.row(x) = probs(x).transpose();
    return t;
}

int SoftmaxPolicy::greedy_action(int x) const {
    auto logits = theta_.segment(index(x, 0), n_actions_);
    int best = 0;
    for (int a = 1; a < n_actions_; ++a) {
        if (logits(a) > logits(best)) best = a;
    }
    return best;
}

FeatureMap::FeatureMap(Matrix state_features) : phi_(std::move(state_features)) {
    if (phi_.rows() < 1 || phi_.cols() < 1) throw InvalidInput("feature map needs at least one state and one feature");
    if (!phi_.allFinite()) throw InvalidInput("features must be finite");
}

FeatureMap FeatureMap::tabular_minus_one(int n_states, int dropped) {
    if (n_states < 2) throw InvalidInput("tabular-minus-one features need at least two states");
    if (dropped < 0 || dropped >= n_states) throw InvalidInput("dropped state out of range");
    Matrix phi = Matrix::Zero(n_states, n_states - 1);
    int col = 0;
    for (int x = 0; x < n_states; ++x) {
        if (x == dropped) continue;
        phi(x, col++) = 1.0;
    }
    return FeatureMap(std::move(phi));
}

void FeatureMap::check_critic_assumptions() const {
    Eigen::ColPivHouseholderQR<Matrix> qr(phi_);
    if (qr.rank() != phi_.cols()) {
        throw AssumptionViolation("state features are linearly dependent (rank " + std::to_string(qr.rank()) +
                                  " < " + std::to_string(phi_.cols()) + ")");
    }
    Matrix augmented(phi_.rows(), phi_.cols() + 1);
    augmented << phi_, Vector::Ones(phi_.rows());
    Eigen::ColPivHouseholderQR<Matrix> qr_aug(augmented);
    if (qr_aug.rank() != augmented.cols()) {
        throw AssumptionViolation("the all-ones vector lies in the span of the state features");
    }
}

TransitionModel average_model(const UncertaintySet& set, const WeightingDistribution& omega) {
    if (omega.size() != set.size()) {
        throw InvalidInput("weighting distribution has " + std::to_string(omega.size()) + " entries but the set has " +
                           std::to_string(set.size()) + " models");
    }
    std::vector<Matrix> slices;
    for (int a = 0; a < set.n_actions(); ++a) {
        Matrix acc = Matrix::Zero(set.n_states(), set.n_states());
        for (std::size_t k = 0; k < set.size(); ++k) acc += omega[k] * set.model(k).action(a);
        slices.push_back(std::move(acc));
    }
    return TransitionModel(std::move(slices));
}

Matrix policy_matrix(const TransitionModel& model, const SoftmaxPolicy& policy) {
    if (model.n_states() != policy.n_states() || model.n_actions() != policy.n_actions()) {
        throw InvalidInput("policy and transition model shapes differ");
    }
    const Matrix pi = policy.table();
    Matrix chain = Matrix::Zero(model.n_states(), model.n_states());
    for (int a = 0; a < model.n_actions(); ++a) {
        chain += pi.col(a).asDiagonal() * model.action(a);
    }
    return chain;
}

Matrix uniform_policy_matrix(const TransitionModel& model) {
    return policy_matrix(model, SoftmaxPolicy(model.n_states(), model.n_actions()));
}

Vector policy_rewards(const MdpSpec& mdp, const SoftmaxPolicy& policy) {
    if (mdp.n_states() != policy.n_states() || mdp.n_actions() != policy.n_actions()) {
        throw InvalidInput("policy and MDP shapes differ");
    }
    return policy.table().cwiseProduct(mdp.rewards()).rowwise().sum();
}

Vector score(const SoftmaxPolicy& policy, int x, int a) {
    Vector psi = Vector::Zero(policy.theta().size());
    psi.segment(policy.index(x, 0), policy.n_actions()) = -policy.probs(x);
    psi(policy.index(x, a)) += 1.0;
    return psi;
}

Matrix compatible_features(const SoftmaxPolicy& policy) {
    const auto d1 = policy.theta().size();
    Matrix out = Matrix::Zero(d1, d1);
    for (int x = 0; x < policy.n_states(); ++x) {
        const Vector p = policy.probs(x);
        for (int a = 0; a < policy.n_actions(); ++a) {
            const auto row = policy.index(x, a);
            out.block(row, policy.index(x, 0), 1, policy.n_actions()) = -p.transpose();
            out(row, policy.index(x, a)) += 1.0;
        }
    }
    return out;
}

}  // namespace srac
