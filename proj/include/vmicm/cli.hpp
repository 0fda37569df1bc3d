#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "vmicm/group_descent.hpp"
#include "vmicm/simulate.hpp"
#include "vmicm/tuning.hpp"

namespace vmicm {

enum ExitCode : int { kExitOk = 0, kExitInput = 2, kExitComputation = 3 };

struct RunConfig {
    std::string command;
    std::string data_path;
    std::string out_path;
    std::string config_path;
    std::string preset;
    SolverConfig solver;
    TuningConfig tuning;
    ScenarioConfig scenario;
    std::optional<std::uint64_t> seed;
    int threads = 0;  // 0: machine parallelism
    int knots = 0;
    int order = 0;
    bool verbose = false;
};

int cmd_fit(const RunConfig& config, std::ostream& log);
int cmd_simulate(const RunConfig& config, std::ostream& log);
int cmd_basis_dump(const RunConfig& config, std::ostream& log);

// Parses the command line, applies the optional key=value file (flags win)
// and dispatches; returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace vmicm
