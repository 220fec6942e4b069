#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include <frmpair/frmpair.hpp>

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simulator for a Faraday-mirror compensated fiber source of polarization-entangled pairs"};

    std::string config_path;
    std::optional<std::string> scenario;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> gates;
    std::optional<unsigned> workers;
    std::string out_dir = "./out";

    app.add_option("--config", config_path, "Scenario config file")->required();
    app.add_option("--scenario", scenario, "Override scenario.type")
        ->check(CLI::IsMember({"ideal", "fringe", "chsh", "drift"}));
    app.add_option("--seed", seed, "Override run.seed");
    app.add_option("--gates", gates, "Override run.n_gates (gates per measurement setting)")
        ->check(CLI::PositiveNumber);
    app.add_option("--workers", workers, "Override run.workers")->check(CLI::PositiveNumber);
    app.add_option("--out", out_dir, "Output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    frmpair::SimulationConfig cfg;
    try {
        std::ifstream in(config_path, std::ios::binary);
        if (!in) {
            std::cerr << "error: cannot read config " << config_path << '\n';
            return kExitConfig;
        }
        std::ostringstream text;
        text << in.rdbuf();
        cfg = frmpair::parse_config(text.str());
        if (scenario) {
            frmpair::parse_scenario_kind(*scenario, cfg.scenario.type);
        }
        if (seed) cfg.run.seed = *seed;
        if (gates) cfg.run.n_gates = *gates;
        if (workers) cfg.run.workers = *workers;
    } catch (const frmpair::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    }

    try {
        frmpair::run_scenario(cfg, out_dir);
    } catch (const std::exception& e) {
        std::cerr << "error (" << frmpair::to_string(cfg.scenario.type) << " scenario): " << e.what() << '\n';
        return kExitRuntime;
    }
    std::cout << "wrote " << frmpair::to_string(cfg.scenario.type) << " results to " << out_dir << '\n';
    return 0;
}
