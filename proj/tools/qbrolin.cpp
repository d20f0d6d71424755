// qbrolin: run one experiment from a JSON config.

#include <iostream>

#include "CLI11.hpp"
#include "qbrolin/cli.hpp"
#include "qbrolin/io.hpp"
#include "qbrolin/version.hpp"

using namespace qbrolin;

int main(int argc, char** argv) {
    CLI::App app{"Dynamics of quaternionic polynomials: equilibrium measures, statistics, entropy"};
    app.set_version_flag("--version", std::string(kLibraryName) + " " + kLibraryVersion);

    std::string config_path, mode, output_dir;
    std::uint64_t seed = 0;
    int workers = -1, quadrature = -1;
    bool list_modes = false;
    app.add_option("-c,--config", config_path, "JSON run configuration");
    app.add_option("-m,--mode", mode, "Override the mode");
    app.add_option("-s,--seed", seed, "Override the seed");
    app.add_option("-o,--output-dir", output_dir, "Override the output directory");
    app.add_option("-w,--workers", workers, "Override the worker count (0 = all cores)");
    app.add_option("-q,--quadrature-level", quadrature, "Override the sphere quadrature level");
    app.add_flag("--list-modes", list_modes, "Print the modes and their default parameters");
    CLI11_PARSE(app, argc, argv);

    if (list_modes) {
        for (const auto& m : cli::modes()) std::cout << m << " " << cli::default_params(m).dump() << "\n";
        return 0;
    }

    cli::RunConfig config;
    try {
        nlohmann::json j = config_path.empty() ? nlohmann::json::object() : io::load_json(config_path);
        if (!j.is_object()) throw ConfigError("config must be a JSON object");
        if (!mode.empty()) {
            // A different mode invalidates mode parameters from the file.
            if (j.value("mode", std::string()) != mode) j.erase("params");
            j["mode"] = mode;
        }
        if (app.count("--seed")) j["seed"] = seed;
        if (!output_dir.empty()) j["output_dir"] = output_dir;
        if (workers >= 0) j["workers"] = workers;
        if (quadrature >= 0) j["quadrature_level"] = quadrature;
        config = cli::RunConfig::from_json(j);
    } catch (const std::exception& e) {
        std::cerr << cli::error_json(e).dump() << "\n";
        return cli::exit_code_for(e);
    }
    return cli::run_guarded(config, std::cout, std::cerr);
}
