#pragma once

#include "srac/config.hpp"
#include "srac/envs.hpp"
#include "srac/mdp_core.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace srac::harness {

/// One CSV line: run_id,seed,agent,phase,param,metric,value. `param` is the
/// episode count for training rows and the grid parameter for evaluation rows.
struct ResultRow {
    std::string run_id;
    std::uint64_t seed = 0;
    std::string agent;
    std::string phase;
    double param = 0.0;
    std::string metric;
    double value = 0.0;

    bool operator==(const ResultRow&) const = default;
};

/// Everything an agent needs that is fixed by the config.
struct Domain {
    MdpSpec mdp;
    UncertaintySet set;
    WeightingDistribution omega;
    TransitionModel p_bar;
    FeatureMap features;
    int start_state = 0;
};

Domain build_domain(const ExperimentConfig& config);

/// The test model at one evaluation-grid parameter.
envs::MdpAndModel grid_model(const ExperimentConfig& config, double param);

std::string run_id(const std::string& agent, std::uint64_t seed);

struct LearnedPolicy {
    std::string agent;
    std::uint64_t seed = 0;
    SoftmaxPolicy policy;
    bool diverged = false;
};

struct TrainingResult {
    std::vector<LearnedPolicy> policies;  ///< sorted by (agent, seed)
    std::vector<ResultRow> rows;
    std::vector<std::string> failures;  ///< one message per failed or diverged run
};

/// Trains every (agent, seed) pair on the nominal model, fanning the runs out
/// over config.jobs threads. Logs J_hat, exact J_bar and nominal J, the
/// policy at the start state and |theta| every log_interval episodes.
/// Q-learning agents are reported through their epsilon-greedy policy at the
/// final exploration rate.
TrainingResult run_training(const ExperimentConfig& config, std::uint64_t seed_offset = 0);

/// Ratio estimate of the per-step reward from rollouts, with its standard
/// error computed from per-episode (reward, length) pairs.
struct McEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::int64_t steps = 0;
};

/// Single-step episodes are s0 cycles; chain episodes are episode_length
/// steps of one continuing trajectory that starts after a one-episode burn-in.
McEstimate monte_carlo_average_reward(const ExperimentConfig& config, const envs::MdpAndModel& model,
                                      const SoftmaxPolicy& policy, const rng::SeedTree& seed, std::int64_t episodes);

/// Exact (J_exact) and rollout (J_mc, J_mc_se) per-step reward of each policy
/// at each grid point. A grid model the oracle rejects yields an `error` row.
std::vector<ResultRow> run_evaluation(const ExperimentConfig& config, const std::vector<LearnedPolicy>& policies);

/// CSV text with %.17g values; identical rows give identical bytes.
std::string csv_text(const std::vector<ResultRow>& rows);

/// Per agent: evaluation metrics at each grid point and final training
/// metrics, as mean and sample std across seeds. Duplicate (run, phase,
/// param, metric) rows are averaged first.
std::string summary_json(const std::vector<ResultRow>& rows);

/// Writes <dir>/<stem>.csv and, when `summary_name` is non-empty,
/// <dir>/<summary_name>. Creates `dir`. Throws std::runtime_error naming the path.
void emit_results(const std::vector<ResultRow>& rows, const std::string& dir, const std::string& stem,
                  const std::string& summary_name = "summary.json");

void save_policies(const std::vector<LearnedPolicy>& policies, const std::string& path);
std::vector<LearnedPolicy> load_policies(const std::string& path);

/// Exact J_bar, nominal J, action values at the start state, policy gradient
/// and gradient bias of the policy `theta` (zeros when empty), as JSON.
std::string oracle_report(const ExperimentConfig& config, const Vector& theta);

}  // namespace srac::harness
