#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "peierls/pipeline.hpp"

namespace peierls {

// Bad configuration document; `key()` is the dotted path of the offending entry.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string key, const std::string& what)
        : std::runtime_error(key + ": " + what), key_(std::move(key)) {}
    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

inline constexpr int kSchemaVersion = 1;

struct RunConfig {
    int schema_version = kSchemaVersion;
    std::string model = "qwz";  // built-in name or path to a model document
    HoppingTable table;         // resolved model

    int nk = 64;
    int k0 = 1;
    int N = 0;

    int nB_start = 2;
    double a_min = 1e-3;
    std::uint64_t seed = 0;
    int wannier_radius = 20;

    double b = 1.0;
    FluctuationPotential fluct;
    std::vector<double> eps_list;  // each eps * b * L / (2 pi) must be an integer
    double c = 0.0;

    int L = 64;
    std::string boundary = "magnetic_periodic";

    double delta = -1.0;  // < 0: default margin

    int kernel_radius = 20;
    int hopping_radius = 24;

    std::vector<double> times{0.0, 1.0, 2.0, 4.0, 8.0};
    int butterfly_L = 60;
    int butterfly_max_q = 12;
    int schur_grid = 200;

    std::size_t max_block_dim = 4096;  // resource bound on any dense block

    std::string output = "out";
    std::string references;  // directory of frozen reference outputs (relative to the config), empty for none
};

// Defaults for every key; the fluctuation potential is two period-4 modes.
RunConfig default_config();

// Parse and validate a configuration document. Relative model paths resolve
// against `base_dir`. Unknown keys and invalid values raise ConfigError.
RunConfig parse_config(const std::string& text, const std::string& base_dir = ".");

// Canonical JSON of the effective configuration (all defaults materialized).
std::string effective_config_json(const RunConfig& cfg);
// 64-bit FNV-1a of the canonical configuration, as 16 hex digits.
std::string config_fingerprint(const RunConfig& cfg);

PipelineOptions pipeline_options(const RunConfig& cfg);
// Flux quanta k through the box, eps * b = 2 pi k / L, one per eps_list entry.
std::vector<int> flux_quanta(const RunConfig& cfg);

}  // namespace peierls
