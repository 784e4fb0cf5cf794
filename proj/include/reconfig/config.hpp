#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "reconfig/geometric.hpp"
#include "reconfig/scene.hpp"
#include "reconfig/stability.hpp"
#include "reconfig/statistics.hpp"
#include "reconfig/symbolic.hpp"

namespace reconfig {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Every tunable of the pipeline. Defaults reproduce the documented model settings.
struct Config {
    SearchOptions search;
    ContactTolerances contacts;
    RobotModel robot;
    CompileOptions compile;
    SimulationParams simulation;
    double temperature = 1.0;
    BootstrapSettings bootstrap;

    /// Throws ConfigError naming the field.
    void validate() const;
};

/// Reads a JSON object whose sections (search, contacts, robot, ik, trajectory, simulation,
/// choice, bootstrap) override the defaults. Unknown keys are errors.
Config parse_config(const std::string& text);
Config load_config(const std::filesystem::path& path);
/// JSON text of a complete configuration; parse_config(to_json(c)) reproduces c.
std::string config_to_json(const Config& c);

} // namespace reconfig
