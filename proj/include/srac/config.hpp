#pragma once

#include "srac/agents.hpp"
#include "srac/errors.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace srac {

/// Raised for unreadable, malformed or inconsistent experiment files.
class ConfigError : public InvalidInput {
public:
    using InvalidInput::InvalidInput;
};

enum class DomainKind { single_step, chain };

std::string to_string(DomainKind kind);

/// One experiment: domain, uncertainty set, weights, agents, training
/// length, evaluation grid, seeds and output location.
///
/// The uncertainty-set and grid parameters are success probabilities for
/// the single-step domain and slip probabilities for the chain.
struct ExperimentConfig {
    std::string name = "experiment";
    DomainKind domain = DomainKind::single_step;

    // uncertainty set
    enum class SetSource { explicit_list, sampled };
    SetSource set_source = SetSource::explicit_list;
    std::vector<double> set_params;
    double nominal_param = 0.8;
    std::size_t sampled_count = 0;
    std::uint64_t set_seed = 0;
    double sampled_stddev = 0.1;  ///< chain only

    // chain geometry
    int chain_states = 5;
    std::vector<double> state_rewards;

    // weights
    enum class OmegaSource { explicit_list, dirichlet };
    OmegaSource omega_source = OmegaSource::explicit_list;
    std::vector<double> omega;
    std::vector<double> dirichlet_concentration;
    std::uint64_t omega_seed = 0;

    // agents
    std::vector<agents::Algorithm> algorithms;
    agents::StepSizeSchedule schedule;
    double gamma = 0.9;  ///< Q family only

    // training
    std::int64_t episodes = 3000;
    std::int64_t episode_length = 2;  ///< chain only; single-step episodes are s0 cycles
    std::int64_t log_interval = 1;  ///< in episodes

    // evaluation
    std::vector<double> grid;
    std::int64_t mc_episodes = 600;

    std::vector<std::uint64_t> seeds;
    std::string output_dir = "results";
    int jobs = 0;  ///< worker threads, 0 = hardware concurrency

    /// Throws ConfigError listing the first violated constraint.
    void validate() const;

    bool operator==(const ExperimentConfig&) const = default;
};

/// Single-step domain with the five-member set {0.1, 0.7, 0.8, 0.3, 0.5},
/// nominal 0.8, weights (0.47, 0.22, 0.10, 0.09, 0.12), constant step sizes
/// alpha = 5e-3, beta = 5e-5, xi = 3 alpha, 3000 training episodes and a
/// 0.1..0.9 evaluation grid with 600 rollout episodes per point.
ExperimentConfig default_config();

/// INI text with sections [experiment], [uncertainty], [chain], [weights],
/// [agents], [training], [evaluation]. Missing keys keep default_config()
/// values. Throws ConfigError.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// Inverse of parse_config; doubles are written in shortest round-trip form.
std::string to_ini(const ExperimentConfig& config);

}  // namespace srac
