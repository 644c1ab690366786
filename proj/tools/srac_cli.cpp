#include "srac/config.hpp"
#include "srac/harness.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <sstream>

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kRunFailure = 2;

std::string output_dir(const std::string& flag, const srac::ExperimentConfig& config) {
    if (!flag.empty()) return flag;
    if (const char* env = std::getenv("SRAC_OUTPUT_DIR"); env && *env) return env;
    return config.output_dir;
}

srac::Vector parse_theta(const std::string& text) {
    std::vector<double> values;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            throw srac::ConfigError("--theta: bad number '" + item + "'");
        }
        if (item.find_first_not_of(" \t", used) != std::string::npos) {
            throw srac::ConfigError("--theta: bad number '" + item + "'");
        }
        values.push_back(v);
    }
    return Eigen::Map<const srac::Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

void report_failures(const std::vector<std::string>& failures) {
    for (const auto& f : failures) std::cerr << "run failed: " << f << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Soft-robust actor-critic experiments"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_flag;
    std::string policies_dir;
    std::string theta_text;
    std::uint64_t seed_offset = 0;

    auto* train = app.add_subcommand("train", "train every (agent, seed) pair");
    train->add_option("--config", config_path, "experiment file")->required();
    train->add_option("--seed-offset", seed_offset, "added to every configured seed");
    train->add_option("--out", out_flag, "output directory");

    auto* eval = app.add_subcommand("eval", "evaluate saved policies on the grid");
    eval->add_option("--config", config_path, "experiment file")->required();
    eval->add_option("--policies", policies_dir, "directory holding policies.json")->required();
    eval->add_option("--out", out_flag, "output directory");

    auto* oracle = app.add_subcommand("oracle", "print exact quantities for one policy");
    oracle->add_option("--config", config_path, "experiment file")->required();
    oracle->add_option("--theta", theta_text, "comma-separated logits, state-major (default: uniform policy)");

    auto* sweep = app.add_subcommand("sweep", "train, then evaluate");
    sweep->add_option("--config", config_path, "experiment file")->required();
    sweep->add_option("--out", out_flag, "output directory");

    app.add_subcommand("default-config", "print the built-in experiment file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kConfigError;
    }

    if (app.got_subcommand("default-config")) {
        std::cout << srac::to_ini(srac::default_config());
        return kOk;
    }

    srac::ExperimentConfig config;
    srac::Vector theta;
    try {
        config = srac::load_config(config_path);
        if (!theta_text.empty()) theta = parse_theta(theta_text);
        srac::harness::build_domain(config);
    } catch (const srac::InvalidInput& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const srac::AssumptionViolation& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    }

    try {
        if (app.got_subcommand(oracle)) {
            std::cout << srac::harness::oracle_report(config, theta);
            return kOk;
        }

        const std::string out = output_dir(out_flag, config);
        if (app.got_subcommand(train)) {
            const auto result = srac::harness::run_training(config, seed_offset);
            srac::harness::emit_results(result.rows, out, "train", "train_summary.json");
            srac::harness::save_policies(result.policies, out + "/policies.json");
            report_failures(result.failures);
            return result.failures.empty() ? kOk : kRunFailure;
        }
        if (app.got_subcommand(eval)) {
            const auto policies = srac::harness::load_policies(policies_dir + "/policies.json");
            srac::harness::emit_results(srac::harness::run_evaluation(config, policies), out, "eval");
            return kOk;
        }
        if (app.got_subcommand(sweep)) {
            auto result = srac::harness::run_training(config);
            auto rows = std::move(result.rows);
            const auto eval_rows = srac::harness::run_evaluation(config, result.policies);
            rows.insert(rows.end(), eval_rows.begin(), eval_rows.end());
            srac::harness::emit_results(rows, out, "results");
            srac::harness::save_policies(result.policies, out + "/policies.json");
            report_failures(result.failures);
            return result.failures.empty() ? kOk : kRunFailure;
        }
    } catch (const std::exception& e) {
        std::cerr << "run failed: " << e.what() << "\n";
        return kRunFailure;
    }
    return kOk;
}
