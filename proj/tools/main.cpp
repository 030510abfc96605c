#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "peierls/run.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Magnetic band reduction: Parseval frames, effective magnetic matrices and their validation"};
    std::string sub;
    std::string config_path;
    peierls::RunFlags flags;
    long long seed = -1;
    app.add_option("subcommand", sub, "bands | frame | wannier | effective | butterfly | compare | schur | evolve | selftest")
        ->required()
        ->check(CLI::IsMember(peierls::subcommands()));
    app.add_option("--config", config_path, "configuration document (JSON)");
    app.add_option("--out", flags.out, "output directory (overrides the config)");
    app.add_option("--seed", seed, "frame seed (overrides frame.seed)")->check(CLI::NonNegativeNumber);
    app.add_option("--workers", flags.workers, "worker threads for sweeps (default: all cores)")
        ->check(CLI::NonNegativeNumber);
    app.add_flag("--bless", flags.bless, "write reference outputs instead of comparing against them");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : peierls::kExitConfig;
    }

    peierls::RunConfig cfg;
    try {
        if (config_path.empty()) {
            cfg = peierls::default_config();
        } else {
            std::ifstream in(config_path);
            if (!in) {
                std::cerr << "config error: cannot read " << config_path << '\n';
                return peierls::kExitConfig;
            }
            std::stringstream text;
            text << in.rdbuf();
            const auto dir = std::filesystem::path(config_path).parent_path();
            cfg = peierls::parse_config(text.str(), dir.empty() ? "." : dir.string());
        }
        if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
    } catch (const peierls::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return peierls::kExitConfig;
    }
    return peierls::run_subcommand(sub, cfg, flags, std::cerr);
}
