#include "srac/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace srac {

namespace pt = boost::property_tree;

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& text) {
    // blank text is an empty list; a blank item inside a list is kept so it fails to parse
    std::vector<std::string> out;
    if (trim(text).empty()) return out;
    std::stringstream ss(text + ",");
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(trim(item));
    return out;
}

double parse_double(const std::string& key, const std::string& text) {
    const std::string t = trim(text);
    char* end = nullptr;
    const double value = std::strtod(t.c_str(), &end);
    if (t.empty() || end != t.c_str() + t.size() || !std::isfinite(value)) {
        throw ConfigError(key + ": expected a finite number, got '" + text + "'");
    }
    return value;
}

std::int64_t parse_int(const std::string& key, const std::string& text) {
    const std::string t = trim(text);
    char* end = nullptr;
    errno = 0;
    const long long value = std::strtoll(t.c_str(), &end, 10);
    if (t.empty() || end != t.c_str() + t.size() || errno == ERANGE) {
        throw ConfigError(key + ": expected an integer, got '" + text + "'");
    }
    return value;
}

std::uint64_t parse_uint(const std::string& key, const std::string& text) {
    const std::string t = trim(text);
    char* end = nullptr;
    errno = 0;
    const unsigned long long value = std::strtoull(t.c_str(), &end, 10);
    if (t.empty() || t.front() == '-' || end != t.c_str() + t.size() || errno == ERANGE) {
        throw ConfigError(key + ": expected a non-negative integer, got '" + text + "'");
    }
    return value;
}

std::string fmt_double(double x) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

template <typename T, typename F>
std::string join(const std::vector<T>& xs, F&& f) {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) out += ", ";
        out += f(xs[i]);
    }
    return out;
}

const std::map<std::string, std::set<std::string>>& known_keys() {
    static const std::map<std::string, std::set<std::string>> keys{
        {"experiment", {"name", "domain", "seeds", "output_dir", "jobs"}},
        {"uncertainty", {"source", "params", "nominal", "count", "seed", "stddev"}},
        {"chain", {"n_states", "state_rewards"}},
        {"weights", {"source", "omega", "concentration", "seed"}},
        {"agents", {"algorithms", "schedule", "alpha", "beta", "c", "e_alpha", "e_beta", "gamma"}},
        {"training", {"episodes", "episode_length", "log_interval"}},
        {"evaluation", {"grid", "mc_episodes"}},
    };
    return keys;
}

class Reader {
public:
    explicit Reader(const pt::ptree& tree) : tree_(tree) {}

    template <typename F>
    void get(const std::string& section, const std::string& key, F&& apply) const {
        const auto node = tree_.get_child_optional(pt::ptree::path_type(section + "/" + key, '/'));
        if (node) apply(section + "." + key, node->get_value<std::string>());
    }

private:
    const pt::ptree& tree_;
};

std::vector<double> parse_doubles(const std::string& key, const std::string& text) {
    std::vector<double> out;
    for (const auto& item : split(text)) out.push_back(parse_double(key, item));
    return out;
}

}  // namespace

std::string to_string(DomainKind kind) {
    return kind == DomainKind::single_step ? "single_step" : "chain";
}

void ExperimentConfig::validate() const {
    if (name.empty()) throw ConfigError("experiment.name must not be empty");
    if (algorithms.empty()) throw ConfigError("agents.algorithms must list at least one agent");
    if (grid.empty()) throw ConfigError("evaluation.grid must not be empty");
    if (seeds.empty()) throw ConfigError("experiment.seeds must not be empty");
    if (episodes < 1) throw ConfigError("training.episodes must be at least 1");
    if (log_interval < 1) throw ConfigError("training.log_interval must be at least 1");
    if (mc_episodes < 2) throw ConfigError("evaluation.mc_episodes must be at least 2");
    if (jobs < 0) throw ConfigError("experiment.jobs must be non-negative");
    if (output_dir.empty()) throw ConfigError("experiment.output_dir must not be empty");

    const double upper = domain == DomainKind::single_step ? 1.0 : 0.5;
    const auto in_range = [&](double p) { return p >= 0.0 && p <= upper; };
    const std::string what = domain == DomainKind::single_step ? "success probabilities" : "slips";

    std::size_t k = 0;
    if (set_source == SetSource::explicit_list) {
        if (set_params.empty()) throw ConfigError("uncertainty.params must not be empty");
        for (double p : set_params) {
            if (!in_range(p)) throw ConfigError("uncertainty.params: " + what + " out of range");
        }
        k = set_params.size();
    } else {
        if (sampled_count < 1) throw ConfigError("uncertainty.count must be at least 1");
        if (domain == DomainKind::chain && !(sampled_stddev > 0.0)) {
            throw ConfigError("uncertainty.stddev must be positive");
        }
        k = sampled_count;
    }
    if (!in_range(nominal_param)) throw ConfigError("uncertainty.nominal out of range");
    for (double p : grid) {
        if (!in_range(p)) throw ConfigError("evaluation.grid: " + what + " out of range");
    }

    if (domain == DomainKind::chain) {
        if (chain_states < 2) throw ConfigError("chain.n_states must be at least 2");
        if (static_cast<int>(state_rewards.size()) != chain_states) {
            throw ConfigError("chain.state_rewards must have n_states entries");
        }
        if (episode_length < 1) throw ConfigError("training.episode_length must be at least 1");
    }

    if (omega_source == OmegaSource::explicit_list) {
        if (omega.size() != k) throw ConfigError("weights.omega must have one entry per uncertainty-set member");
        double sum = 0.0;
        for (double w : omega) {
            if (w < 0.0) throw ConfigError("weights.omega entries must be non-negative");
            sum += w;
        }
        if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("weights.omega must sum to 1");
    } else {
        if (dirichlet_concentration.size() != k) {
            throw ConfigError("weights.concentration must have one entry per uncertainty-set member");
        }
        for (double c : dirichlet_concentration) {
            if (!(c > 0.0)) throw ConfigError("weights.concentration entries must be positive");
        }
    }

    try {
        schedule.validate();
    } catch (const InvalidInput& e) {
        throw ConfigError(std::string("agents: ") + e.what());
    }
    const bool any_q = std::any_of(algorithms.begin(), algorithms.end(), agents::is_q_family);
    if (any_q && !(gamma > 0.0 && gamma < 1.0)) throw ConfigError("agents.gamma must lie in (0, 1)");
}

ExperimentConfig default_config() {
    ExperimentConfig c;
    c.name = "single_step_dist1";
    c.domain = DomainKind::single_step;
    c.set_params = {0.1, 0.7, 0.8, 0.3, 0.5};
    c.nominal_param = 0.8;
    c.omega = {0.47, 0.22, 0.10, 0.09, 0.12};
    c.algorithms = {agents::Algorithm::sr_ac, agents::Algorithm::nominal_ac, agents::Algorithm::robust_ac};
    c.schedule = agents::StepSizeSchedule::constant(5e-3, 5e-5, 3.0);
    c.episodes = 3000;
    c.grid = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    c.mc_episodes = 600;
    c.seeds = {1, 2, 3, 4, 5};
    return c;
}

ExperimentConfig parse_config(const std::string& text) {
    pt::ptree tree;
    try {
        std::istringstream in(text);
        pt::ini_parser::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }

    const auto& keys = known_keys();
    for (const auto& [section, body] : tree) {
        const auto it = keys.find(section);
        if (it == keys.end()) throw ConfigError("unknown section [" + section + "]");
        if (body.empty() && !body.data().empty()) throw ConfigError("top-level key '" + section + "' outside any section");
        for (const auto& entry : body) {
            if (!it->second.count(entry.first)) throw ConfigError("unknown key " + section + "." + entry.first);
        }
    }

    ExperimentConfig c = default_config();
    const Reader r(tree);

    r.get("experiment", "name", [&](const std::string&, const std::string& v) { c.name = trim(v); });
    r.get("experiment", "domain", [&](const std::string& k, const std::string& v) {
        const auto t = trim(v);
        if (t == "single_step") c.domain = DomainKind::single_step;
        else if (t == "chain") c.domain = DomainKind::chain;
        else throw ConfigError(k + ": expected single_step or chain, got '" + t + "'");
    });
    r.get("experiment", "seeds", [&](const std::string& k, const std::string& v) {
        c.seeds.clear();
        for (const auto& item : split(v)) c.seeds.push_back(parse_uint(k, item));
    });
    r.get("experiment", "output_dir", [&](const std::string&, const std::string& v) { c.output_dir = trim(v); });
    r.get("experiment", "jobs", [&](const std::string& k, const std::string& v) { c.jobs = static_cast<int>(parse_int(k, v)); });

    r.get("uncertainty", "source", [&](const std::string& k, const std::string& v) {
        const auto t = trim(v);
        if (t == "explicit") c.set_source = ExperimentConfig::SetSource::explicit_list;
        else if (t == "sampled") c.set_source = ExperimentConfig::SetSource::sampled;
        else throw ConfigError(k + ": expected explicit or sampled, got '" + t + "'");
    });
    r.get("uncertainty", "params", [&](const std::string& k, const std::string& v) { c.set_params = parse_doubles(k, v); });
    r.get("uncertainty", "nominal", [&](const std::string& k, const std::string& v) { c.nominal_param = parse_double(k, v); });
    r.get("uncertainty", "count", [&](const std::string& k, const std::string& v) { c.sampled_count = parse_uint(k, v); });
    r.get("uncertainty", "seed", [&](const std::string& k, const std::string& v) { c.set_seed = parse_uint(k, v); });
    r.get("uncertainty", "stddev", [&](const std::string& k, const std::string& v) { c.sampled_stddev = parse_double(k, v); });

    r.get("chain", "n_states", [&](const std::string& k, const std::string& v) {
        c.chain_states = static_cast<int>(parse_int(k, v));
    });
    r.get("chain", "state_rewards", [&](const std::string& k, const std::string& v) { c.state_rewards = parse_doubles(k, v); });

    r.get("weights", "source", [&](const std::string& k, const std::string& v) {
        const auto t = trim(v);
        if (t == "explicit") c.omega_source = ExperimentConfig::OmegaSource::explicit_list;
        else if (t == "dirichlet") c.omega_source = ExperimentConfig::OmegaSource::dirichlet;
        else throw ConfigError(k + ": expected explicit or dirichlet, got '" + t + "'");
    });
    r.get("weights", "omega", [&](const std::string& k, const std::string& v) { c.omega = parse_doubles(k, v); });
    r.get("weights", "concentration", [&](const std::string& k, const std::string& v) {
        c.dirichlet_concentration = parse_doubles(k, v);
    });
    r.get("weights", "seed", [&](const std::string& k, const std::string& v) { c.omega_seed = parse_uint(k, v); });

    r.get("agents", "algorithms", [&](const std::string& k, const std::string& v) {
        c.algorithms.clear();
        for (const auto& item : split(v)) {
            try {
                c.algorithms.push_back(agents::parse_algorithm(item));
            } catch (const InvalidInput& e) {
                throw ConfigError(k + ": " + e.what());
            }
        }
    });
    r.get("agents", "schedule", [&](const std::string& k, const std::string& v) {
        const auto t = trim(v);
        if (t == "constant") c.schedule.mode = agents::StepSizeSchedule::Mode::constant;
        else if (t == "decaying") c.schedule.mode = agents::StepSizeSchedule::Mode::decaying;
        else throw ConfigError(k + ": expected constant or decaying, got '" + t + "'");
    });
    r.get("agents", "alpha", [&](const std::string& k, const std::string& v) { c.schedule.c_alpha = parse_double(k, v); });
    r.get("agents", "beta", [&](const std::string& k, const std::string& v) { c.schedule.c_beta = parse_double(k, v); });
    r.get("agents", "c", [&](const std::string& k, const std::string& v) { c.schedule.c = parse_double(k, v); });
    r.get("agents", "e_alpha", [&](const std::string& k, const std::string& v) { c.schedule.e_alpha = parse_double(k, v); });
    r.get("agents", "e_beta", [&](const std::string& k, const std::string& v) { c.schedule.e_beta = parse_double(k, v); });
    r.get("agents", "gamma", [&](const std::string& k, const std::string& v) { c.gamma = parse_double(k, v); });

    r.get("training", "episodes", [&](const std::string& k, const std::string& v) { c.episodes = parse_int(k, v); });
    r.get("training", "episode_length", [&](const std::string& k, const std::string& v) { c.episode_length = parse_int(k, v); });
    r.get("training", "log_interval", [&](const std::string& k, const std::string& v) { c.log_interval = parse_int(k, v); });

    r.get("evaluation", "grid", [&](const std::string& k, const std::string& v) { c.grid = parse_doubles(k, v); });
    r.get("evaluation", "mc_episodes", [&](const std::string& k, const std::string& v) { c.mc_episodes = parse_int(k, v); });

    c.validate();
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
        return parse_config(ss.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

std::string to_ini(const ExperimentConfig& c) {
    const auto doubles = [](const std::vector<double>& xs) { return join(xs, fmt_double); };
    std::ostringstream out;
    out << "[experiment]\n"
        << "name = " << c.name << "\n"
        << "domain = " << to_string(c.domain) << "\n"
        << "seeds = " << join(c.seeds, [](std::uint64_t s) { return std::to_string(s); }) << "\n"
        << "output_dir = " << c.output_dir << "\n"
        << "jobs = " << c.jobs << "\n\n";

    out << "[uncertainty]\n"
        << "source = " << (c.set_source == ExperimentConfig::SetSource::explicit_list ? "explicit" : "sampled") << "\n"
        << "params = " << doubles(c.set_params) << "\n"
        << "nominal = " << fmt_double(c.nominal_param) << "\n"
        << "count = " << c.sampled_count << "\n"
        << "seed = " << c.set_seed << "\n"
        << "stddev = " << fmt_double(c.sampled_stddev) << "\n\n";

    out << "[chain]\n"
        << "n_states = " << c.chain_states << "\n"
        << "state_rewards = " << doubles(c.state_rewards) << "\n\n";

    out << "[weights]\n"
        << "source = " << (c.omega_source == ExperimentConfig::OmegaSource::explicit_list ? "explicit" : "dirichlet")
        << "\n"
        << "omega = " << doubles(c.omega) << "\n"
        << "concentration = " << doubles(c.dirichlet_concentration) << "\n"
        << "seed = " << c.omega_seed << "\n\n";

    const auto& s = c.schedule;
    out << "[agents]\n"
        << "algorithms = " << join(c.algorithms, [](agents::Algorithm a) { return agents::to_string(a); }) << "\n"
        << "schedule = " << (s.mode == agents::StepSizeSchedule::Mode::constant ? "constant" : "decaying") << "\n"
        << "alpha = " << fmt_double(s.c_alpha) << "\n"
        << "beta = " << fmt_double(s.c_beta) << "\n"
        << "c = " << fmt_double(s.c) << "\n"
        << "e_alpha = " << fmt_double(s.e_alpha) << "\n"
        << "e_beta = " << fmt_double(s.e_beta) << "\n"
        << "gamma = " << fmt_double(c.gamma) << "\n\n";

    out << "[training]\n"
        << "episodes = " << c.episodes << "\n"
        << "episode_length = " << c.episode_length << "\n"
        << "log_interval = " << c.log_interval << "\n\n";

    out << "[evaluation]\n"
        << "grid = " << doubles(c.grid) << "\n"
        << "mc_episodes = " << c.mc_episodes << "\n";
    return out.str();
}

}  // namespace srac
