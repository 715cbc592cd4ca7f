#pragma once

#include "deform_swarm/core_model.hpp"
#include "deform_swarm/safety.hpp"
#include "deform_swarm/scenario.hpp"
#include "deform_swarm/sim_log.hpp"
#include "deform_swarm/trainer.hpp"

#include "json.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace deform_swarm {

// CSV column orders. Every value is written with 9 significant digits.
inline constexpr const char* kTraceHeader = "epoch,loss,max_residual";
inline constexpr const char* kDesiredHeader = "t,agent_id,x_d,y_d,z_d";
inline constexpr const char* kVehicleHeader = "t,id,x,y,z,roll,pitch,yaw,F,w1,w2,w3,w4";

void write_trace_csv(const TrainTrace& trace, const std::filesystem::path& path);
TrainTrace read_trace_csv(const std::filesystem::path& path);

/// One row per (frame, agent) of desired positions.
void write_desired_csv(const SimLog& log, const std::filesystem::path& path);
void write_snapshot_csv(const DesiredSnapshot& snapshot, const std::filesystem::path& path);
/// One row per (frame, vehicle) of actual state and control. Requires logged states.
void write_vehicle_csv(const SimLog& log, const std::filesystem::path& path);

/// Rebuilds a log from the desired CSV and, optionally, the vehicle CSV.
/// Velocities and body rates are not persisted and come back as zero.
SimLog read_sim_log(const std::filesystem::path& desired_path,
                    const std::optional<std::filesystem::path>& vehicle_path = std::nullopt);

nlohmann::json weights_to_json(const TeamConfig& config, const WeightSet& weights);
/// Throws std::invalid_argument if the file does not match `config`.
WeightSet weights_from_json(const TeamConfig& config, const nlohmann::json& doc);

nlohmann::json certificate_to_json(const SafetyCertificate& cert);
nlohmann::json tracking_to_json(const TrackingReport& report, double transient);

void write_json(const nlohmann::json& doc, const std::filesystem::path& path);
nlohmann::json read_json(const std::filesystem::path& path);

/// `%.9g` formatting used for every CSV value.
std::string format_csv_number(double value);

}  // namespace deform_swarm
