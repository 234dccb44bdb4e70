#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace gradflow::cli {

// Exit codes: 0 pass, 1 verification failure, 2 config or input error, 3 solver failure.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

struct TrajectoryTable {
    std::vector<double> times;
    std::vector<std::vector<double>> points;  // coordinates, or quantiles at (i + 1/2)/M
    std::vector<double> energy;
    double lambda = 0.0;
    std::string failure;  // empty when every step was accepted
};

// Runs a configuration held in memory; throws on config errors like `run` does.
TrajectoryTable simulate_config(const std::string& config_json, std::optional<std::uint64_t> seed = std::nullopt);

}  // namespace gradflow::cli
