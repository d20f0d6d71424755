#pragma once

// Run configuration and mode dispatch behind the qbrolin command-line tool.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "qbrolin/numeric_policy.hpp"
#include "qbrolin/qpolynomial.hpp"

namespace qbrolin::cli {

using nlohmann::json;

inline const std::vector<std::string>& modes() {
    static const std::vector<std::string> m{"julia",      "equilibrium", "green", "delta-star",
                                            "lyapunov",   "entropy",     "mixing", "clt",
                                            "one-slice",  "general-gap", "verify"};
    return m;
}

/// Raster window on the reference slice: `resolution` nodes along alpha.
struct GridSpec {
    double alpha_min = -2.0;
    double alpha_max = 2.0;
    double beta_min = -2.0;
    double beta_max = 2.0;
    int resolution = 257;
};

struct RunConfig {
    std::string mode;
    std::optional<QPolynomial> polynomial;
    NumericPolicy policy;
    GridSpec grid;
    int quadrature_level = 3;
    std::uint64_t seed = 0;
    std::filesystem::path output_dir = "out";
    int workers = 0;
    json params = json::object();  // mode parameters with defaults filled in

    /// Validates every field, rejects unknown keys and fills defaults.
    /// Throws ConfigError.
    static RunConfig from_json(const json& j);
    /// The full configuration, defaults included.
    json to_json() const;
};

/// Mode parameters and their defaults.
json default_params(const std::string& mode);

struct RunResult {
    int exit_code = 0;   // 0, or 1 when a verify check fails
    json summary;
    std::vector<std::string> outputs;  // file names inside output_dir
};

/// Runs one mode and writes its artifacts plus manifest.json into
/// output_dir. Library errors propagate.
RunResult run(const RunConfig& config, std::ostream& log);

/// 2 for validation errors, 3 for numerical failures.
int exit_code_for(const std::exception& e);
/// {"error": kind, "message": what, "exit_code": code}.
json error_json(const std::exception& e);

/// run() with errors mapped to exit codes and error JSON written to `err`.
int run_guarded(const RunConfig& config, std::ostream& log, std::ostream& err);

}  // namespace qbrolin::cli
