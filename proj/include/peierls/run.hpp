#pragma once

#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "peierls/config.hpp"

namespace peierls {

// A requested computation would exceed a configured resource bound.
class ResourceBoundExceeded : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RunFlags {
    std::string out;  // overrides the configured output directory when set
    int workers = 0;  // 0: hardware concurrency
    bool bless = false;
};

struct Certificate {
    std::string name;
    bool pass = false;
    double value = 0.0;
    double tolerance = 0.0;
    std::string detail;
};

enum ExitCode { kExitOk = 0, kExitConfig = 1, kExitCertificate = 2, kExitResource = 3 };

const std::vector<std::string>& subcommands();

// Runs one subcommand, writing effective_config.json, summary.json and the
// subcommand's data files into the output directory. Diagnostics go to `log`.
int run_subcommand(const std::string& name, const RunConfig& cfg, const RunFlags& flags, std::ostream& log);

}  // namespace peierls
