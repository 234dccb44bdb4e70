#pragma once

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gradflow/euclidean.hpp"
#include "gradflow/mms.hpp"
#include "gradflow/wasserstein1d.hpp"

namespace gradflow::cli {

inline constexpr const char* kSchema = "gradflow.config/1";

class ConfigError : public InputError {
public:
    using InputError::InputError;
};

struct EuclideanProblem {
    EuclideanFunctional functional;
    std::optional<QuadraticFunctional> quadratic;
    EuclideanPoint initial;
};

struct WassersteinProblem {
    EnergySpec spec;
    QuantileMeasure initial{std::vector<double>{0.0, 1.0}};
};

struct VerifySettings {
    std::optional<double> tolerance;
    std::vector<std::string> checks;  // empty: all
    int test_points = 6;
    int trials = 50;
    double curvature_constant = 1.0;
};

struct SweepSettings {
    std::vector<double> taus;
    std::vector<std::size_t> sizes;
    std::string reference = "auto";  // auto, exact or finest
};

struct RunConfig {
    std::string carrier;  // euclidean or wasserstein1d
    std::string scheme = "mms";
    double tau = 0.0;
    double horizon = 0.0;
    int steps = 0;
    std::size_t grid_size = 0;  // M, wasserstein1d only
    std::uint64_t seed = 0;
    RelaxedSchemeParams params;
    std::vector<double> snapshots;
    std::size_t snapshot_cells = 200;
    VerifySettings verify;
    SweepSettings sweep;

    nlohmann::json functional_doc;
    nlohmann::json initial_doc;
    std::filesystem::path base_dir;
    nlohmann::json resolved;

    bool euclidean() const { return carrier == "euclidean"; }
};

// Throws ConfigError on malformed input and PreconditionError when the scheme is infeasible.
RunConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir,
                       std::optional<std::uint64_t> seed_override = std::nullopt);
RunConfig load_config(const std::filesystem::path& path, std::optional<std::uint64_t> seed_override = std::nullopt);

EuclideanProblem euclidean_problem(const RunConfig& cfg);
WassersteinProblem wasserstein_problem(const RunConfig& cfg, std::size_t grid_size);

double config_lambda(const RunConfig& cfg);
std::string energy_description(const RunConfig& cfg);

}  // namespace gradflow::cli
