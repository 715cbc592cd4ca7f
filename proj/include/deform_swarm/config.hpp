#pragma once

#include "deform_swarm/core_model.hpp"
#include "deform_swarm/safety.hpp"
#include "deform_swarm/scenario.hpp"
#include "deform_swarm/trainer.hpp"
#include "deform_swarm/vehicle.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace deform_swarm {

struct SafetySettings {
    double delta_alpha = 0.01;
    SamplerOptions sampler;
};

struct ScenarioSettings {
    EllipseTrajectory ellipse;
    SimSettings sim;
    double transient = 5.0;
    std::vector<int> plot_agents{6};
    std::vector<double> snapshot_times{0.0, 15.0, 30.0, 45.0};
};

/// Everything one configuration file describes.
struct RunConfig {
    TeamConfigSpec team_spec;
    TeamConfig team;
    ScenarioSettings scenario;
    QuadParams vehicle;
    ControllerGains gains;
    TrainSettings trainer;
    SafetySettings safety;
    std::map<std::string, std::string> metadata;  // free-form `[meta]` entries
    std::vector<std::string> warnings;
};

/// Command-line values that take precedence over the file.
struct ConfigOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<int> epochs;
    std::optional<double> learning_rate;
    std::optional<double> dt;
    std::optional<double> delta_alpha;
    std::optional<double> eps;
    std::optional<double> delta;
};

/// Parses INI-style text: `[section]` headers, `key = value` lines, `#` comments.
/// Integer lists accept `a..b` ranges. Throws ParseError or ValidationError.
RunConfig parse_config(std::string_view text, const std::string& source = "<string>",
                       const ConfigOverrides& overrides = {});

RunConfig load_config(const std::filesystem::path& path, const ConfigOverrides& overrides = {});

/// Inverse of parse_config for the team, scenario, vehicle, trainer and safety sections.
std::string format_config(const RunConfig& config);

}  // namespace deform_swarm
