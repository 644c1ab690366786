#include "srac/config.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

using namespace srac;

namespace {

ExperimentConfig chain_config() {
    ExperimentConfig c = default_config();
    c.name = "chain_dirichlet";
    c.domain = DomainKind::chain;
    c.set_source = ExperimentConfig::SetSource::sampled;
    c.set_params.clear();
    c.sampled_count = 4;
    c.set_seed = 77;
    c.sampled_stddev = 0.05;
    c.nominal_param = 0.15;
    c.chain_states = 6;
    c.state_rewards = {0, 0, 0.5, 0, 0, 1};
    c.omega_source = ExperimentConfig::OmegaSource::dirichlet;
    c.omega.clear();
    c.dirichlet_concentration = {1, 2, 0.5, 3};
    c.omega_seed = 18446744073709551615ULL;
    c.algorithms = {agents::Algorithm::sr_q, agents::Algorithm::robust_q};
    c.schedule = agents::StepSizeSchedule::decaying(0.3, 0.01, 3.0, 0.65, 0.95);
    c.gamma = 0.95;
    c.episodes = 200;
    c.episode_length = 50;
    c.log_interval = 7;
    c.grid = {0.0, 0.125, 0.5};
    c.mc_episodes = 31;
    c.seeds = {9, 8};
    c.output_dir = "out/chain";
    c.jobs = 2;
    return c;
}

std::string with_section(const std::string& section, const std::string& body) {
    return "[" + section + "]\n" + body + "\n";
}

}  // namespace

TEST_CASE("default config is valid and survives an INI round trip") {
    const auto c = default_config();
    CHECK_NOTHROW(c.validate());
    CHECK(c.set_params == std::vector<double>{0.1, 0.7, 0.8, 0.3, 0.5});
    CHECK(c.omega == std::vector<double>{0.47, 0.22, 0.10, 0.09, 0.12});
    CHECK(c.schedule.c_alpha == 5e-3);
    CHECK(c.schedule.c_beta == 5e-5);
    CHECK(c.schedule.c == 3.0);
    CHECK(parse_config(to_ini(c)) == c);
    CHECK(parse_config("") == c);
}

TEST_CASE("chain config with sampled set and Dirichlet weights round trips") {
    const auto c = chain_config();
    CHECK_NOTHROW(c.validate());
    const auto text = to_ini(c);
    CHECK(text.find("e_alpha = 0.65") != std::string::npos);
    CHECK(parse_config(text) == c);
}

TEST_CASE("missing keys keep their defaults") {
    const auto c = parse_config(with_section("training", "episodes = 12"));
    auto expected = default_config();
    expected.episodes = 12;
    CHECK(c == expected);
}

TEST_CASE("lists accept spaces and reorder nothing") {
    const auto c = parse_config(with_section("experiment", "seeds = 5,  2 ,9"));
    CHECK(c.seeds == std::vector<std::uint64_t>{5, 2, 9});
}

TEST_CASE("unknown sections, keys and stray top-level keys are rejected") {
    CHECK_THROWS_AS(parse_config(with_section("optimizer", "lr = 1")), ConfigError);
    CHECK_THROWS_AS(parse_config(with_section("training", "epochs = 3")), ConfigError);
    CHECK_THROWS_AS(parse_config("episodes = 3\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[training\nepisodes = 3\n"), ConfigError);
}

TEST_CASE("malformed values are rejected") {
    CHECK_THROWS_AS(parse_config(with_section("training", "episodes = ten")), ConfigError);
    CHECK_THROWS_AS(parse_config(with_section("training", "episodes = 3.5")), ConfigError);
    CHECK_THROWS_AS(parse_config(with_section("experiment", "seeds = -1")), ConfigError);
    CHECK_THROWS_AS(parse_config(with_section("experiment", "domain = grid")), ConfigError);
    CHECK_THROWS_AS(parse_config(with_section("agents", "algorithms = sr_ac, ppo")), ConfigError);
    CHECK_THROWS_AS(parse_config(with_section("agents", "schedule = cosine")), ConfigError);
    CHECK_THROWS_AS(parse_config(with_section("agents", "alpha = nan")), ConfigError);
    CHECK_THROWS_AS(parse_config(with_section("evaluation", "grid = 0.1,,0.2")), ConfigError);
}

TEST_CASE("inconsistent settings fail validation") {
    CHECK_THROWS_AS(parse_config(with_section("weights", "omega = 0.5, 0.5")), ConfigError);
    CHECK_THROWS_AS(parse_config(with_section("weights", "omega = 0.5, 0.2, 0.1, 0.1, 0.2")), ConfigError);
    CHECK_THROWS_AS(parse_config(with_section("weights", "omega = 1.2, -0.2, 0, 0, 0")), ConfigError);
    CHECK_NOTHROW(parse_config(with_section("weights", "omega = 1, 0, 0, 0, 0")));
    CHECK_THROWS_AS(parse_config(with_section("evaluation", "grid = 0.5, 1.5")), ConfigError);
    CHECK_THROWS_AS(parse_config(with_section("evaluation", "mc_episodes = 1")), ConfigError);
    CHECK_THROWS_AS(parse_config(with_section("training", "episodes = 0")), ConfigError);
    CHECK_THROWS_AS(parse_config(with_section("training", "log_interval = 0")), ConfigError);
    CHECK_THROWS_AS(parse_config(with_section("agents", "alpha = 0.5")), ConfigError);  // xi_0 = 1.5
    CHECK_THROWS_AS(parse_config(with_section("agents", "algorithms = sr_q\ngamma = 1")), ConfigError);
    CHECK_NOTHROW(parse_config(with_section("agents", "algorithms = sr_ac\ngamma = 1")));

    auto c = chain_config();
    c.state_rewards = {1, 2};
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = chain_config();
    c.grid = {0.6};  // slips stop at 0.5
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = chain_config();
    c.dirichlet_concentration = {1, 1, 0, 1};
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = chain_config();
    c.sampled_count = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = default_config();
    c.seeds.clear();
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = default_config();
    c.algorithms.clear();
    CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("load_config reads files and names the path in errors") {
    const auto dir = std::filesystem::temp_directory_path() / "srac_config_test";
    std::filesystem::create_directories(dir);
    const auto good = (dir / "good.ini").string();
    std::ofstream(good) << to_ini(chain_config());
    CHECK(load_config(good) == chain_config());

    const auto bad = (dir / "bad.ini").string();
    std::ofstream(bad) << with_section("training", "episodes = -4");
    try {
        load_config(bad);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("bad.ini") != std::string::npos);
    }
    CHECK_THROWS_AS(load_config((dir / "missing.ini").string()), ConfigError);
    std::filesystem::remove_all(dir);
}
