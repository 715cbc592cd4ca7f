#pragma once

#include "deform_swarm/core_model.hpp"
#include "deform_swarm/safety.hpp"
#include "deform_swarm/sim_log.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace deform_swarm {

namespace svg {

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    std::string color = "#1f77b4";
    bool dashed = false;
};

struct HorizontalLine {
    double y = 0.0;
    std::string label;
    std::string color = "#d62728";
};

struct LinePlot {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<Series> series;
    std::vector<HorizontalLine> lines;
    double width = 720;
    double height = 420;
};

std::string render(const LinePlot& plot);

struct Marker {
    double x = 0.0;
    double y = 0.0;
    std::string label;
    std::string color;
    int shape = 0;  // 0 circle, 1 triangle, 2 square
};

struct ScatterPlot {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<Series> paths;
    std::vector<Marker> markers;
    bool equal_aspect = true;
    double width = 720;
    double height = 620;
};

std::string render(const ScatterPlot& plot);

}  // namespace svg

struct PlotRequest {
    std::vector<int> agents;            // per-agent plots (x, y, thrust, rotor speeds)
    std::vector<double> snapshot_times; // configuration snapshots
    std::optional<std::vector<Vec3>> nominal_path;  // drawn under the snapshots when present
};

/// Minimum over pairs of the widest per-axis gap, per frame.
std::vector<double> min_box_separation(const SimLog& log, bool actual);

/// Writes the configuration, per-agent tracking, control and separation figures.
/// Returns the emitted paths.
std::vector<std::filesystem::path> emit_plots(const TeamConfig& config, const SimLog& log,
                                              const SafetyCertificate& certificate, const PlotRequest& request,
                                              const std::filesystem::path& out_dir);

}  // namespace deform_swarm
