#include "deform_swarm/persistence.hpp"

#include "deform_swarm/errors.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace deform_swarm {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_csv_number(double value)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", value);
    return buf;
}

namespace {

std::ofstream open_out(const fs::path& path)
{
    if (path.has_parent_path())
        fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write " + path.string());
    return out;
}

void finish(std::ofstream& out, const fs::path& path)
{
    out.flush();
    if (!out)
        throw IoError("write failed for " + path.string());
}

class CsvWriter {
public:
    explicit CsvWriter(std::ofstream& out) : out_(out) {}

    CsvWriter& operator<<(double v)
    {
        sep();
        out_ << format_csv_number(v);
        return *this;
    }
    CsvWriter& operator<<(int v)
    {
        sep();
        out_ << v;
        return *this;
    }
    void end_row()
    {
        out_ << '\n';
        first_ = true;
    }

private:
    void sep()
    {
        if (!first_)
            out_ << ',';
        first_ = false;
    }
    std::ofstream& out_;
    bool first_ = true;
};

struct CsvTable {
    std::vector<std::vector<double>> rows;
};

CsvTable read_csv(const fs::path& path, const std::string& expected_header)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line))
        throw ParseError(path.string(), 1, 1, "missing header");
    if (!line.empty() && line.back() == '\r')
        line.pop_back();
    if (line != expected_header)
        throw ParseError(path.string(), 1, 1, "expected header '" + expected_header + "'");
    const auto columns = static_cast<std::size_t>(std::count(expected_header.begin(), expected_header.end(), ',') + 1);

    CsvTable table;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        std::vector<double> row;
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = line.find(',', start);
            const std::string cell = line.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
            std::size_t used = 0;
            double value = 0.0;
            try {
                value = std::stod(cell, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used != cell.size() || cell.empty())
                throw ParseError(path.string(), line_no, static_cast<int>(start) + 1, "bad number '" + cell + "'");
            row.push_back(value);
            if (comma == std::string::npos)
                break;
            start = comma + 1;
        }
        if (row.size() != columns)
            throw ParseError(path.string(), line_no, 1,
                             "expected " + std::to_string(columns) + " columns, got " + std::to_string(row.size()));
        table.rows.push_back(std::move(row));
    }
    return table;
}

}  // namespace

void write_trace_csv(const TrainTrace& trace, const fs::path& path)
{
    if (trace.rows.empty())
        throw std::invalid_argument("write_trace_csv: empty trace");
    auto out = open_out(path);
    out << kTraceHeader << '\n';
    CsvWriter w(out);
    for (const auto& r : trace.rows) {
        w << r.epoch << r.loss << r.max_residual;
        w.end_row();
    }
    finish(out, path);
}

TrainTrace read_trace_csv(const fs::path& path)
{
    TrainTrace trace;
    for (const auto& row : read_csv(path, kTraceHeader).rows)
        trace.rows.push_back({static_cast<int>(row[0]), row[1], row[2]});
    return trace;
}

void write_desired_csv(const SimLog& log, const fs::path& path)
{
    if (log.empty())
        throw std::invalid_argument("write_desired_csv: empty log");
    auto out = open_out(path);
    out << kDesiredHeader << '\n';
    CsvWriter w(out);
    for (const auto& f : log.frames)
        for (std::size_t i = 0; i < f.desired.size(); ++i) {
            const auto& p = f.desired[i];
            w << f.time << static_cast<int>(i + 1) << p.x() << p.y() << p.z();
            w.end_row();
        }
    finish(out, path);
}

void write_snapshot_csv(const DesiredSnapshot& snapshot, const fs::path& path)
{
    SimLog log;
    log.frames.push_back({snapshot.time, snapshot.positions, {}, {}});
    write_desired_csv(log, path);
}

void write_vehicle_csv(const SimLog& log, const fs::path& path)
{
    if (!log.has_actual())
        throw std::invalid_argument("write_vehicle_csv: log holds no vehicle states");
    auto out = open_out(path);
    out << kVehicleHeader << '\n';
    CsvWriter w(out);
    for (const auto& f : log.frames)
        for (std::size_t i = 0; i < f.states.size(); ++i) {
            const auto& s = f.states[i];
            const auto& c = f.controls[i];
            w << f.time << static_cast<int>(i + 1) << s.position.x() << s.position.y() << s.position.z()
              << s.attitude.x() << s.attitude.y() << s.attitude.z() << c.thrust;
            for (double rotor : c.rotor_speeds)
                w << rotor;
            w.end_row();
        }
    finish(out, path);
}

SimLog read_sim_log(const fs::path& desired_path, const std::optional<fs::path>& vehicle_path)
{
    const auto desired = read_csv(desired_path, kDesiredHeader);
    SimLog log;
    std::map<double, std::size_t> frame_of;
    int max_id = 0;
    for (const auto& row : desired.rows)
        max_id = std::max(max_id, static_cast<int>(row[1]));
    for (const auto& row : desired.rows) {
        auto [it, inserted] = frame_of.try_emplace(row[0], log.frames.size());
        if (inserted)
            log.frames.push_back({row[0], std::vector<Vec3>(static_cast<std::size_t>(max_id), Vec3::Zero()), {}, {}});
        const int id = static_cast<int>(row[1]);
        if (id < 1)
            throw ParseError(desired_path.string(), 0, 0, "agent ids must be positive");
        log.frames[it->second].desired[static_cast<std::size_t>(id - 1)] = Vec3(row[2], row[3], row[4]);
    }
    if (!vehicle_path)
        return log;

    const auto vehicle = read_csv(*vehicle_path, kVehicleHeader);
    for (auto& f : log.frames) {
        f.states.assign(static_cast<std::size_t>(max_id), QuadState{});
        f.controls.assign(static_cast<std::size_t>(max_id), ControlOutput{});
    }
    for (const auto& row : vehicle.rows) {
        const auto it = frame_of.find(row[0]);
        const int id = static_cast<int>(row[1]);
        if (it == frame_of.end() || id < 1 || id > max_id)
            throw ParseError(vehicle_path->string(), 0, 0, "vehicle row does not match the desired trajectory grid");
        auto& s = log.frames[it->second].states[static_cast<std::size_t>(id - 1)];
        s.position = Vec3(row[2], row[3], row[4]);
        s.attitude = Vec3(row[5], row[6], row[7]);
        auto& c = log.frames[it->second].controls[static_cast<std::size_t>(id - 1)];
        c.thrust = row[8];
        for (std::size_t r = 0; r < 4; ++r)
            c.rotor_speeds[r] = row[9 + r];
    }
    return log;
}

json weights_to_json(const TeamConfig& config, const WeightSet& weights)
{
    check_weight_shape(config, weights);
    json doc;
    json alpha = json::array();
    const auto& leaders = config.primary_leaders();
    for (std::size_t i = 0; i < leaders.size(); ++i)
        alpha.push_back({{"agent", leaders[i].value}, {"value", weights.alpha[i]}});
    json beta = json::array();
    for (std::size_t f = 0; f < config.followers.size(); ++f) {
        const auto& fol = config.followers[f];
        json leaders_json = json::array();
        for (AgentId j : fol.leaders)
            leaders_json.push_back(j.value);
        beta.push_back({{"follower", fol.id.value}, {"layer", fol.layer}, {"leaders", leaders_json},
                        {"weights", weights.beta[f]}});
    }
    doc["alpha"] = alpha;
    doc["beta"] = beta;
    return doc;
}

WeightSet weights_from_json(const TeamConfig& config, const json& doc)
{
    WeightSet w;
    const auto& leaders = config.primary_leaders();
    const auto& alpha = doc.at("alpha");
    if (alpha.size() != leaders.size())
        throw std::invalid_argument("weight file alpha count does not match the team");
    for (std::size_t i = 0; i < leaders.size(); ++i) {
        if (alpha[i].at("agent").get<int>() != leaders[i].value)
            throw std::invalid_argument("weight file alpha order does not match the team");
        w.alpha.push_back(alpha[i].at("value").get<double>());
    }
    const auto& beta = doc.at("beta");
    if (beta.size() != config.followers.size())
        throw std::invalid_argument("weight file beta rows do not match the team");
    for (std::size_t f = 0; f < config.followers.size(); ++f) {
        const auto& fol = config.followers[f];
        if (beta[f].at("follower").get<int>() != fol.id.value)
            throw std::invalid_argument("weight file follower order does not match the team");
        std::vector<int> ids = beta[f].at("leaders").get<std::vector<int>>();
        std::vector<int> expected;
        for (AgentId j : fol.leaders)
            expected.push_back(j.value);
        if (ids != expected)
            throw std::invalid_argument("weight file in-neighbors of follower " + std::to_string(fol.id.value) +
                                        " do not match the team");
        w.beta.push_back(beta[f].at("weights").get<std::vector<double>>());
    }
    check_weight_shape(config, w);
    return w;
}

json certificate_to_json(const SafetyCertificate& cert)
{
    static const char* axes[] = {"x", "y", "z"};
    json doc;
    doc["passed"] = cert.passed;
    doc["alpha_min"] = cert.alpha_min ? json(*cert.alpha_min) : json(nullptr);
    json bounds = json::array();
    for (const auto& b : cert.parameters.beta_bounds)
        bounds.push_back({b.lo, b.hi});
    doc["parameters"] = {{"delta", cert.parameters.delta},
                         {"eps", cert.parameters.eps},
                         {"delta_alpha", cert.parameters.delta_alpha},
                         {"beta_bounds", bounds},
                         {"sampling_interval", cert.parameters.sampling_interval}};
    doc["violation_count"] = cert.violation_count;
    json checks = json::array();
    for (const auto& c : cert.checks) {
        json rec = {{"check", c.check},
                    {"time", c.time},
                    {"pair", {c.first.value, c.second.value}},
                    {"axis", c.axis >= 0 ? json(axes[c.axis]) : json(nullptr)},
                    {"margin", c.margin},
                    {"threshold", c.threshold},
                    {"passed", c.passed},
                    {"axis_margins", c.axis_margins.axis}};
        checks.push_back(std::move(rec));
    }
    doc["checks"] = checks;
    return doc;
}

json tracking_to_json(const TrackingReport& report, double transient)
{
    json agents = json::array();
    for (std::size_t i = 0; i < report.max_error.size(); ++i) {
        const auto& e = report.max_error[i];
        agents.push_back({{"agent", static_cast<int>(i + 1)}, {"max_error", {e.x(), e.y(), e.z()}}});
    }
    return {{"transient", transient},
            {"delta", report.delta},
            {"within_bound", report.within_bound()},
            {"worst", report.worst},
            {"worst_agent", report.worst_agent.value},
            {"worst_axis", report.worst_axis},
            {"agents", agents}};
}

void write_json(const json& doc, const fs::path& path)
{
    auto out = open_out(path);
    out << doc.dump(2) << '\n';
    finish(out, path);
}

json read_json(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(path.string(), 0, static_cast<int>(e.byte), e.what());
    }
}

}  // namespace deform_swarm
