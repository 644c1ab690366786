#include "srac/harness.hpp"

#include "srac/agents.hpp"
#include "srac/exact_oracle.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <thread>
#include <tuple>

namespace srac::harness {

using nlohmann::json;

namespace {

std::vector<double> uncertainty_params(const ExperimentConfig& config) {
    if (config.set_source == ExperimentConfig::SetSource::explicit_list) return config.set_params;
    const rng::SeedTree tree{config.set_seed, {"uncertainty"}};
    if (config.domain == DomainKind::single_step) return envs::sample_success_probs(config.sampled_count, tree);
    return envs::sample_chain_slips(config.nominal_param, config.sampled_stddev, config.sampled_count, tree);
}

WeightingDistribution weights(const ExperimentConfig& config, std::size_t k) {
    if (config.omega_source == ExperimentConfig::OmegaSource::explicit_list) {
        return WeightingDistribution(Eigen::Map<const Vector>(config.omega.data(), static_cast<Eigen::Index>(k)));
    }
    return envs::sample_dirichlet_weights(k, config.dirichlet_concentration,
                                          rng::SeedTree{config.omega_seed, {"weights"}});
}

/// Steps one episode; returns (reward, length).
template <typename Act>
std::pair<double, std::int64_t> run_episode(const ExperimentConfig& config, envs::EnvHandle& env, int start,
                                            Act&& act) {
    double reward = 0.0;
    std::int64_t length = 0;
    if (config.domain == DomainKind::single_step) {
        while (true) {
            const int from = env.state();
            reward += act();
            ++length;
            if (env.state() == start && from != start) break;
        }
    } else {
        for (; length < config.episode_length; ++length) reward += act();
    }
    return {reward, length};
}

/// Epsilon-greedy over q as a softmax policy: theta = log pi.
SoftmaxPolicy epsilon_greedy(const Matrix& q, double epsilon) {
    const int n_states = static_cast<int>(q.rows());
    const int n_actions = static_cast<int>(q.cols());
    const auto greedy = agents::greedy_policy(q);
    Vector theta(n_states * n_actions);
    const double low = std::log(epsilon / n_actions);
    const double high = std::log(1.0 - epsilon + epsilon / n_actions);
    for (int x = 0; x < n_states; ++x) {
        for (int a = 0; a < n_actions; ++a) theta(x * n_actions + a) = a == greedy[x] ? high : low;
    }
    return SoftmaxPolicy(n_states, n_actions, theta);
}

struct Job {
    agents::Algorithm algorithm;
    std::string agent;
    std::uint64_t seed;
};

struct JobOutput {
    std::optional<LearnedPolicy> policy;
    std::vector<ResultRow> rows;
    std::string failure;
};

class Logger {
public:
    Logger(const Domain& domain, const Job& job, std::vector<ResultRow>& rows)
        : domain_(domain), job_(job), rows_(rows), id_(run_id(job.agent, job.seed)) {}

    void add(double episode, const std::string& metric, double value) {
        if (std::isfinite(value)) rows_.push_back({id_, job_.seed, job_.agent, "train", episode, metric, value});
    }

    void log(double episode, const SoftmaxPolicy& policy, const std::optional<double>& J_hat) {
        if (J_hat) add(episode, "J_hat", *J_hat);
        try {
            add(episode, "J_bar", oracle::evaluate_policy(domain_.mdp, domain_.p_bar, policy).J_bar);
            add(episode, "J_nominal", oracle::evaluate_policy(domain_.mdp, domain_.set.nominal(), policy).J_bar);
        } catch (const std::runtime_error&) {
            // probabilities underflowed to a reducible chain; the policy rows below still apply
        }
        const Vector pi = policy.probs(domain_.start_state);
        for (Eigen::Index a = 0; a < pi.size(); ++a) add(episode, "pi_start_a" + std::to_string(a), pi(a));
        if (J_hat) add(episode, "theta_norm", policy.theta().norm());
    }

private:
    const Domain& domain_;
    const Job& job_;
    std::vector<ResultRow>& rows_;
    std::string id_;
};

JobOutput train_actor_critic(const ExperimentConfig& config, const Domain& domain, const Job& job) {
    JobOutput out;
    Logger logger(domain, job, out.rows);
    const rng::SeedTree root{job.seed, {job.agent}};
    envs::EnvHandle env(domain.mdp, domain.set.nominal(), rng::derive(root, "env"), domain.start_state);
    auto state = agents::initial_state(domain.mdp.n_states(), domain.mdp.n_actions(), domain.features.dim(),
                                       rng::derive(root, "agent"));
    const auto bootstrap = agents::Bootstrap::for_variant(agents::variant_of(job.algorithm), domain.set, domain.omega);

    std::int64_t episode = 0;
    while (episode < config.episodes && !state.diverged) {
        for (std::int64_t k = 0; !state.diverged; ++k) {
            const int from = env.state();
            state = agents::ac_step(std::move(state), env, bootstrap, domain.features, config.schedule);
            const bool done = config.domain == DomainKind::single_step
                                  ? env.state() == domain.start_state && from != domain.start_state
                                  : k + 1 == config.episode_length;
            if (done) break;
        }
        ++episode;
        if (episode % config.log_interval == 0 || episode == config.episodes || state.diverged) {
            logger.log(static_cast<double>(episode), state.policy, state.J_hat);
        }
    }
    logger.add(static_cast<double>(episode), "diverged", state.diverged ? 1.0 : 0.0);
    if (state.diverged) {
        out.failure = run_id(job.agent, job.seed) + ": diverged after " + std::to_string(state.t) + " steps";
    }
    out.policy = LearnedPolicy{job.agent, job.seed, state.policy, state.diverged};
    return out;
}

JobOutput train_q_learning(const ExperimentConfig& config, const Domain& domain, const Job& job) {
    JobOutput out;
    Logger logger(domain, job, out.rows);
    const rng::SeedTree root{job.seed, {job.agent}};
    envs::EnvHandle env(domain.mdp, domain.set.nominal(), rng::derive(root, "env"), domain.start_state);

    agents::AgentConfig agent;
    agent.algorithm = job.algorithm;
    agent.schedule = config.schedule;
    agent.gamma = config.gamma;
    // single-step cycles take two steps
    const std::int64_t steps_per_episode = config.domain == DomainKind::single_step ? 2 : config.episode_length;
    agent.max_steps = config.episodes * steps_per_episode;
    agent.seed = job.seed;

    std::int64_t episode = 0;
    const auto observe = [&](const agents::QStep& step) {
        const bool done = config.domain == DomainKind::single_step
                              ? env.state() == domain.start_state && step.transition.state != domain.start_state
                              : (step.t + 1) % config.episode_length == 0;
        if (!done) return;
        ++episode;
        if (episode % config.log_interval == 0) {
            logger.log(static_cast<double>(episode), epsilon_greedy(*step.q, agents::epsilon_at(step.t, agent.max_steps)),
                       std::nullopt);
        }
    };
    const auto result = agents::q_learning_run(agent, env, domain.set, domain.omega, observe);
    const auto policy = epsilon_greedy(result.q, agents::epsilon_at(agent.max_steps - 1, agent.max_steps));
    if (episode % config.log_interval != 0) logger.log(static_cast<double>(episode), policy, std::nullopt);
    logger.add(static_cast<double>(episode), "diverged", 0.0);
    out.policy = LearnedPolicy{job.agent, job.seed, policy, false};
    return out;
}

JobOutput run_job(const ExperimentConfig& config, const Domain& domain, const Job& job) {
    try {
        return agents::is_q_family(job.algorithm) ? train_q_learning(config, domain, job)
                                                  : train_actor_critic(config, domain, job);
    } catch (const std::exception& e) {
        JobOutput out;
        out.rows.push_back({run_id(job.agent, job.seed), job.seed, job.agent, "train", 0.0, "failed", 1.0});
        out.failure = run_id(job.agent, job.seed) + ": " + e.what();
        return out;
    }
}

template <typename F>
void parallel_for(std::size_t n, int jobs, F&& body) {
    std::size_t workers = jobs > 0 ? static_cast<std::size_t>(jobs) : std::thread::hardware_concurrency();
    workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(n, 1));
    std::atomic<std::size_t> next{0};
    const auto work = [&] {
        for (std::size_t i = next++; i < n; i = next++) body(i);
    };
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
}

std::string fmt_g17(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string shortest(double x) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    out << text;
    out.flush();
    if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json stats(const std::vector<double>& xs) {
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    const double sd = xs.size() > 1 ? std::sqrt(ss / static_cast<double>(xs.size() - 1)) : 0.0;
    return json{{"mean", mean}, {"std", sd}, {"n", xs.size()}};
}

}  // namespace

Domain build_domain(const ExperimentConfig& config) {
    config.validate();
    const auto params = uncertainty_params(config);
    if (config.domain == DomainKind::single_step) {
        auto set = envs::build_uncertainty_set_single_step(params, config.nominal_param);
        auto omega = weights(config, set.size());
        auto p_bar = average_model(set, omega);
        return Domain{envs::build_single_step_mdp(params.front()).mdp, std::move(set), std::move(omega),
                      std::move(p_bar), FeatureMap::tabular_minus_one(envs::single_step::kNumStates,
                                                                      envs::single_step::kStart),
                      envs::single_step::kStart};
    }
    auto set = envs::build_uncertainty_set_chain(config.chain_states, params, config.state_rewards,
                                                 config.nominal_param);
    auto omega = weights(config, set.size());
    auto p_bar = average_model(set, omega);
    return Domain{envs::build_chain_mdp(config.chain_states, params.front(), config.state_rewards).mdp,
                  std::move(set), std::move(omega), std::move(p_bar),
                  FeatureMap::tabular_minus_one(config.chain_states, 0), 0};
}

envs::MdpAndModel grid_model(const ExperimentConfig& config, double param) {
    if (config.domain == DomainKind::single_step) return envs::build_single_step_mdp(param);
    return envs::build_chain_mdp(config.chain_states, param, config.state_rewards);
}

std::string run_id(const std::string& agent, std::uint64_t seed) {
    return agent + "-" + std::to_string(seed);
}

TrainingResult run_training(const ExperimentConfig& config, std::uint64_t seed_offset) {
    const Domain domain = build_domain(config);

    std::vector<Job> jobs;
    for (auto algorithm : config.algorithms) {
        for (auto seed : config.seeds) jobs.push_back({algorithm, agents::to_string(algorithm), seed + seed_offset});
    }
    std::sort(jobs.begin(), jobs.end(),
              [](const Job& a, const Job& b) { return std::tie(a.agent, a.seed) < std::tie(b.agent, b.seed); });
    jobs.erase(std::unique(jobs.begin(), jobs.end(),
                           [](const Job& a, const Job& b) { return a.agent == b.agent && a.seed == b.seed; }),
               jobs.end());

    std::vector<JobOutput> outputs(jobs.size());
    parallel_for(jobs.size(), config.jobs, [&](std::size_t i) { outputs[i] = run_job(config, domain, jobs[i]); });

    TrainingResult result;
    for (auto& out : outputs) {
        if (out.policy) result.policies.push_back(std::move(*out.policy));
        result.rows.insert(result.rows.end(), out.rows.begin(), out.rows.end());
        if (!out.failure.empty()) result.failures.push_back(out.failure);
    }
    return result;
}

McEstimate monte_carlo_average_reward(const ExperimentConfig& config, const envs::MdpAndModel& model,
                                      const SoftmaxPolicy& policy, const rng::SeedTree& seed, std::int64_t episodes) {
    if (episodes < 2) throw InvalidInput("need at least two rollout episodes");
    const int start = config.domain == DomainKind::single_step ? envs::single_step::kStart : 0;
    envs::EnvHandle env(model.mdp, model.model, rng::derive(seed, "env"), start);
    rng::RandomStream actions(rng::derive(seed, "policy"));
    const auto act = [&] {
        const Vector pi = policy.probs(env.state());
        const auto a = actions.next_categorical(std::span<const double>(pi.data(), static_cast<std::size_t>(pi.size())));
        return env.step(static_cast<int>(a)).reward;
    };

    if (config.domain == DomainKind::chain) run_episode(config, env, start, act);

    std::vector<std::pair<double, std::int64_t>> batches;
    double total_reward = 0.0;
    std::int64_t total_steps = 0;
    for (std::int64_t i = 0; i < episodes; ++i) {
        batches.push_back(run_episode(config, env, start, act));
        total_reward += batches.back().first;
        total_steps += batches.back().second;
    }
    const double n = static_cast<double>(episodes);
    const double mean = total_reward / static_cast<double>(total_steps);
    double ss = 0.0;
    for (const auto& [r, len] : batches) {
        const double e = r - mean * static_cast<double>(len);
        ss += e * e;
    }
    const double mean_length = static_cast<double>(total_steps) / n;
    return {mean, std::sqrt(ss / (n * (n - 1.0))) / mean_length, total_steps};
}

std::vector<ResultRow> run_evaluation(const ExperimentConfig& config, const std::vector<LearnedPolicy>& policies) {
    std::vector<envs::MdpAndModel> models;
    for (double p : config.grid) models.push_back(grid_model(config, p));

    std::vector<std::vector<ResultRow>> per_policy(policies.size());
    parallel_for(policies.size(), config.jobs, [&](std::size_t i) {
        const auto& lp = policies[i];
        const auto id = run_id(lp.agent, lp.seed);
        auto& rows = per_policy[i];
        for (std::size_t g = 0; g < config.grid.size(); ++g) {
            const double p = config.grid[g];
            const auto add = [&](const std::string& metric, double value) {
                rows.push_back({id, lp.seed, lp.agent, "eval", p, metric, value});
            };
            try {
                const double exact = oracle::evaluate_policy(models[g].mdp, models[g].model, lp.policy).J_bar;
                const auto mc = monte_carlo_average_reward(
                    config, models[g], lp.policy, rng::SeedTree{lp.seed, {lp.agent, "eval", "g" + std::to_string(g)}},
                    config.mc_episodes);
                add("J_exact", exact);
                add("J_mc", mc.mean);
                add("J_mc_se", mc.std_error);
            } catch (const std::runtime_error&) {
                add("error", 1.0);
            }
        }
    });

    std::vector<ResultRow> rows;
    for (auto& r : per_policy) rows.insert(rows.end(), r.begin(), r.end());
    return rows;
}

std::string csv_text(const std::vector<ResultRow>& rows) {
    std::string out = "run_id,seed,agent,phase,param,metric,value\n";
    for (const auto& r : rows) {
        out += r.run_id + ',' + std::to_string(r.seed) + ',' + r.agent + ',' + r.phase + ',' + fmt_g17(r.param) + ',' +
               r.metric + ',' + fmt_g17(r.value) + '\n';
    }
    return out;
}

std::string summary_json(const std::vector<ResultRow>& rows) {
    // (agent, phase, param, metric, seed) -> values of duplicate rows
    using Key = std::tuple<std::string, std::string, double, std::string, std::uint64_t>;
    std::map<Key, std::vector<double>> groups;
    for (const auto& r : rows) groups[{r.agent, r.phase, r.param, r.metric, r.seed}].push_back(r.value);

    // final training point per run
    std::map<std::tuple<std::string, std::uint64_t>, double> last_episode;
    for (const auto& r : rows) {
        if (r.phase != "train") continue;
        auto [it, inserted] = last_episode.try_emplace({r.agent, r.seed}, r.param);
        if (!inserted) it->second = std::max(it->second, r.param);
    }

    std::map<std::tuple<std::string, std::string, std::string, std::string>, std::vector<double>> across;
    for (const auto& [key, values] : groups) {
        const auto& [agent, phase, param, metric, seed] = key;
        double mean = 0.0;
        for (double v : values) mean += v;
        mean /= static_cast<double>(values.size());
        if (phase == "eval") {
            across[{agent, "eval", shortest(param), metric}].push_back(mean);
        } else if (phase == "train" && last_episode.at({agent, seed}) == param) {
            across[{agent, "train_final", "", metric}].push_back(mean);
        }
    }

    json doc = json::object();
    doc["agents"] = json::object();
    for (const auto& [key, values] : across) {
        const auto& [agent, section, param, metric] = key;
        if (section == "eval") {
            doc["agents"][agent]["eval"][param][metric] = stats(values);
        } else {
            doc["agents"][agent]["train_final"][metric] = stats(values);
        }
    }
    return doc.dump(2) + "\n";
}

void emit_results(const std::vector<ResultRow>& rows, const std::string& dir, const std::string& stem,
                  const std::string& summary_name) {
    const std::filesystem::path base(dir);
    std::error_code ec;
    std::filesystem::create_directories(base, ec);
    if (ec) throw std::runtime_error("cannot create directory '" + dir + "': " + ec.message());
    write_file(base / (stem + ".csv"), csv_text(rows));
    if (!summary_name.empty()) write_file(base / summary_name, summary_json(rows));
}

void save_policies(const std::vector<LearnedPolicy>& policies, const std::string& path) {
    json list = json::array();
    for (const auto& lp : policies) {
        const auto& theta = lp.policy.theta();
        list.push_back({{"agent", lp.agent},
                        {"seed", lp.seed},
                        {"n_states", lp.policy.n_states()},
                        {"n_actions", lp.policy.n_actions()},
                        {"diverged", lp.diverged},
                        {"theta", std::vector<double>(theta.data(), theta.data() + theta.size())}});
    }
    const std::filesystem::path p(path);
    if (p.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(p.parent_path(), ec);
        if (ec) throw std::runtime_error("cannot create directory '" + p.parent_path().string() + "': " + ec.message());
    }
    write_file(p, json{{"policies", list}}.dump(2) + "\n");
}

std::vector<LearnedPolicy> load_policies(const std::string& path) {
    std::vector<LearnedPolicy> out;
    try {
        const auto doc = json::parse(read_file(path));
        for (const auto& item : doc.at("policies")) {
            const auto theta = item.at("theta").get<std::vector<double>>();
            const int n_states = item.at("n_states").get<int>();
            const int n_actions = item.at("n_actions").get<int>();
            if (static_cast<long>(theta.size()) != static_cast<long>(n_states) * n_actions) {
                throw InvalidInput("theta has the wrong length");
            }
            out.push_back({item.at("agent").get<std::string>(), item.at("seed").get<std::uint64_t>(),
                           SoftmaxPolicy(n_states, n_actions,
                                         Eigen::Map<const Vector>(theta.data(), static_cast<Eigen::Index>(theta.size()))),
                           item.at("diverged").get<bool>()});
        }
    } catch (const json::exception& e) {
        throw InvalidInput(path + ": " + e.what());
    } catch (const InvalidInput& e) {
        throw InvalidInput(path + ": " + e.what());
    }
    return out;
}

std::string oracle_report(const ExperimentConfig& config, const Vector& theta) {
    const Domain domain = build_domain(config);
    const int n_states = domain.mdp.n_states();
    const int n_actions = domain.mdp.n_actions();
    SoftmaxPolicy policy(n_states, n_actions);
    if (theta.size() != 0) {
        if (theta.size() != static_cast<Eigen::Index>(n_states) * n_actions) {
            throw InvalidInput("theta must have " + std::to_string(n_states * n_actions) + " entries");
        }
        policy = SoftmaxPolicy(n_states, n_actions, theta);
    }
    const auto to_vec = [](const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); };

    const auto eval = oracle::evaluate_policy(domain.mdp, domain.p_bar, policy);
    json doc;
    doc["domain"] = to_string(config.domain);
    doc["theta"] = to_vec(policy.theta());
    doc["omega"] = to_vec(domain.omega.weights());
    doc["J_bar"] = eval.J_bar;
    doc["J_nominal"] = oracle::evaluate_policy(domain.mdp, domain.set.nominal(), policy).J_bar;
    doc["J_fixed_model"] = oracle::fixed_model_objective(domain.mdp, domain.set, domain.omega, policy);
    doc["d_bar"] = to_vec(eval.d_bar);
    doc["V_bar"] = to_vec(eval.V_bar);
    doc["Q_bar_start"] = to_vec(eval.Q_bar.row(domain.start_state).transpose());
    doc["gradient"] = to_vec(oracle::exact_policy_gradient(domain.mdp, domain.p_bar, policy));
    doc["critic_fixed_point"] = to_vec(oracle::critic_fixed_point(domain.mdp, domain.p_bar, policy, domain.features));
    doc["gradient_bias"] = to_vec(oracle::gradient_bias(domain.mdp, domain.p_bar, policy, domain.features));
    return doc.dump(2) + "\n";
}

}  // namespace srac::harness
