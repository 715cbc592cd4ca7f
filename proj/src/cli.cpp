#include "deform_swarm/cli.hpp"

#include "deform_swarm/config.hpp"
#include "deform_swarm/errors.hpp"
#include "deform_swarm/persistence.hpp"
#include "deform_swarm/plots.hpp"
#include "deform_swarm/safety.hpp"
#include "deform_swarm/scenario.hpp"
#include "deform_swarm/trainer.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <iostream>
#include <optional>
#include <thread>

namespace deform_swarm {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonOptions {
    std::string config_path;
    std::string out_dir = "out";
    ConfigOverrides overrides;
    std::string weights_path;
    std::string log_path;
    std::string vehicle_log_path;
};

std::string utc_now()
{
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

int worker_threads()
{
    int threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    if (const char* env = std::getenv("DEFORM_SWARM_THREADS")) {
        try {
            const int cap = std::stoi(env);
            if (cap >= 1)
                threads = std::min(threads, cap);
        } catch (const std::exception&) {
        }
    }
    return threads;
}

class Run {
public:
    Run(std::string command, const CommonOptions& opts, std::ostream& out)
        : command_(std::move(command)), opts_(opts), out_(out), dir_(opts.out_dir), started_(utc_now())
    {
        config_ = load_config(opts.config_path, opts.overrides);
        config_.safety.sampler.threads = worker_threads();
        for (const auto& w : config_.warnings)
            out_ << "warning: " << w << "\n";
        fs::create_directories(dir_);
    }

    RunConfig& config() { return config_; }
    const fs::path& dir() const { return dir_; }

    fs::path artifact(const std::string& name)
    {
        const fs::path p = dir_ / name;
        artifacts_.push_back(p);
        return p;
    }
    void record(const fs::path& p) { artifacts_.push_back(p); }

    fs::path weights_path() const
    {
        return opts_.weights_path.empty() ? dir_ / "weights.json" : fs::path(opts_.weights_path);
    }
    fs::path log_path() const
    {
        return opts_.log_path.empty() ? dir_ / "desired_trajectory.csv" : fs::path(opts_.log_path);
    }
    std::optional<fs::path> vehicle_log_path() const
    {
        if (!opts_.vehicle_log_path.empty())
            return fs::path(opts_.vehicle_log_path);
        const fs::path fallback = dir_ / "vehicle_log.csv";
        if (opts_.log_path.empty() && fs::exists(fallback))
            return fallback;
        return std::nullopt;
    }

    void write_manifest()
    {
        json artifacts = json::array();
        for (const auto& a : artifacts_)
            artifacts.push_back(a.generic_string());
        json doc = {{"tool", "deform-swarm"},
                    {"version", kVersion},
                    {"command", command_},
                    {"config", opts_.config_path},
                    {"weights", weights_path().generic_string()},
                    {"output_directory", dir_.generic_string()},
                    {"seed", config_.trainer.seed},
                    {"settings", format_config(config_)},
                    {"started", started_},
                    {"finished", utc_now()},
                    {"artifacts", artifacts}};
        write_json(doc, dir_ / "manifest.json");
    }

private:
    std::string command_;
    CommonOptions opts_;
    std::ostream& out_;
    fs::path dir_;
    std::string started_;
    RunConfig config_;
    std::vector<fs::path> artifacts_;
};

void add_tracking_check(SafetyCertificate& cert, const TrackingReport& report, double transient)
{
    CheckRecord rec;
    rec.check = "tracking_bound";
    rec.time = transient;
    rec.first = report.worst_agent;
    rec.second = report.worst_agent;
    rec.axis = report.worst_axis;
    rec.margin = report.worst;
    rec.threshold = report.delta;
    rec.passed = report.within_bound();
    cert.add(rec);
}

void describe_failure(const SafetyCertificate& cert, std::ostream& err)
{
    static const char* axes[] = {"x", "y", "z"};
    err << "certificate FAILED (" << cert.violation_count << " violation"
        << (cert.violation_count == 1 ? "" : "s") << ")\n";
    int shown = 0;
    for (const auto& c : cert.checks) {
        if (c.passed)
            continue;
        err << "  " << c.check << " at t=" << c.time << " s, pair (" << c.first << ", " << c.second << ")";
        if (c.axis >= 0)
            err << ", axis " << axes[c.axis];
        err << ": margin " << c.margin << " vs threshold " << c.threshold << "\n";
        if (++shown == 10)
            break;
    }
}

std::vector<Vec3> nominal_path(const EllipseTrajectory& traj)
{
    std::vector<Vec3> path;
    for (int i = 0; i <= 200; ++i)
        path.push_back(ellipse_d(traj, traj.period * i / 200.0).d);
    return path;
}

AlphaSearchResult search_alpha(Run& run)
{
    const auto& cfg = run.config();
    return alpha_min_search(cfg.team, cfg.safety.delta_alpha, cfg.safety.sampler);
}

int cmd_train(Run& run, std::ostream& out)
{
    auto& cfg = run.config();
    const Vec3 d0 = ellipse_d(cfg.scenario.ellipse, 0.0).d;
    const TrainResult result = train(cfg.team, d0, cfg.trainer);
    write_json(weights_to_json(cfg.team, result.weights), run.artifact("weights.json"));
    write_trace_csv(result.trace, run.artifact("train_trace.csv"));
    out << "trained " << cfg.trainer.epochs << " epochs, final loss " << result.trace.rows.back().loss
        << " m^2, max constraint residual " << result.trace.rows.back().max_residual << "\n";
    return kExitOk;
}

int cmd_alpha_min(Run& run, std::ostream& out, std::ostream& err)
{
    try {
        const AlphaSearchResult result = search_alpha(run);
        write_json(certificate_to_json(result.certificate), run.artifact("alpha_min.json"));
        out << "alpha_min = " << result.alpha_min << " (configured lower bound "
            << run.config().team.alpha_min << ")\n";
        return kExitOk;
    } catch (const NeverFeasible& e) {
        err << e.what() << "\n";
        return kExitCertificateFailure;
    }
}

struct Simulated {
    SimLog log;
    TrackingReport tracking;
};

Simulated simulate(Run& run, const WeightSet& weights, std::ostream& out)
{
    auto& cfg = run.config();
    Simulated s;
    s.log = run_simulation(cfg.team, weights, cfg.scenario.ellipse, cfg.vehicle, cfg.gains, cfg.scenario.sim);
    s.tracking = tracking_report(s.log, cfg.scenario.transient, cfg.team.delta);
    write_desired_csv(s.log, run.artifact("desired_trajectory.csv"));
    write_vehicle_csv(s.log, run.artifact("vehicle_log.csv"));
    write_json(tracking_to_json(s.tracking, cfg.scenario.transient), run.artifact("tracking_report.json"));
    out << "simulated " << cfg.scenario.sim.t_final << " s, " << s.log.frames.size() << " frames; worst tracking error "
        << s.tracking.worst << " m after " << cfg.scenario.transient << " s (bound " << cfg.team.delta << ")\n";
    return s;
}

int cmd_simulate(Run& run, std::ostream& out)
{
    const WeightSet weights = weights_from_json(run.config().team, read_json(run.weights_path()));
    const Simulated s = simulate(run, weights, out);
    return s.tracking.within_bound() ? kExitOk : kExitCertificateFailure;
}

SafetyCertificate certify(Run& run, const WeightSet& weights, const SimLog& log)
{
    auto& cfg = run.config();
    SafetyCertificate cert = certify_run(cfg.team, weights, log);
    if (log.has_actual() && !log.frames.empty() && log.frames.back().time > cfg.scenario.transient)
        add_tracking_check(cert, tracking_report(log, cfg.scenario.transient, cfg.team.delta), cfg.scenario.transient);
    cert.finalize();
    return cert;
}

int report_certificate(const SafetyCertificate& cert, std::ostream& out, std::ostream& err)
{
    if (cert.passed) {
        out << "certificate passed (" << cert.checks.size() << " records)\n";
        return kExitOk;
    }
    describe_failure(cert, err);
    return kExitCertificateFailure;
}

int cmd_certify(Run& run, std::ostream& out, std::ostream& err)
{
    const WeightSet weights = weights_from_json(run.config().team, read_json(run.weights_path()));
    const SimLog log = read_sim_log(run.log_path(), run.vehicle_log_path());
    const SafetyCertificate cert = certify(run, weights, log);
    write_json(certificate_to_json(cert), run.artifact("certificate.json"));
    return report_certificate(cert, out, err);
}

PlotRequest plot_request(const RunConfig& cfg)
{
    return {cfg.scenario.plot_agents, cfg.scenario.snapshot_times, nominal_path(cfg.scenario.ellipse)};
}

int cmd_plot(Run& run, std::ostream& out)
{
    const WeightSet weights = weights_from_json(run.config().team, read_json(run.weights_path()));
    const SimLog log = read_sim_log(run.log_path(), run.vehicle_log_path());
    const SafetyCertificate cert = certify(run, weights, log);
    const auto files = emit_plots(run.config().team, log, cert, plot_request(run.config()), run.dir() / "plots");
    for (const auto& f : files)
        run.record(f);
    out << "wrote " << files.size() << " plots to " << (run.dir() / "plots").string() << "\n";
    return kExitOk;
}

int cmd_all(Run& run, std::ostream& out, std::ostream& err)
{
    auto& cfg = run.config();

    AlphaSearchResult search;
    try {
        search = search_alpha(run);
    } catch (const NeverFeasible& e) {
        err << e.what() << "\n";
        return kExitCertificateFailure;
    }
    write_json(certificate_to_json(search.certificate), run.artifact("alpha_min.json"));
    const double configured = cfg.team.alpha_min;
    cfg.team.alpha_min = std::max(configured, search.alpha_min);
    out << "alpha_min: computed " << search.alpha_min << ", configured " << configured << ", training with "
        << cfg.team.alpha_min << "\n";

    const Vec3 d0 = ellipse_d(cfg.scenario.ellipse, 0.0).d;
    const TrainResult trained = train(cfg.team, d0, cfg.trainer);
    write_json(weights_to_json(cfg.team, trained.weights), run.artifact("weights.json"));
    write_trace_csv(trained.trace, run.artifact("train_trace.csv"));
    out << "trained " << cfg.trainer.epochs << " epochs, final loss " << trained.trace.rows.back().loss << " m^2\n";

    const Simulated sim = simulate(run, trained.weights, out);

    SafetyCertificate cert = certify(run, trained.weights, sim.log);
    cert.alpha_min = search.alpha_min;
    cert.parameters.delta_alpha = cfg.safety.delta_alpha;
    for (const auto& rec : search.certificate.checks)
        cert.add(rec);
    cert.finalize();
    write_json(certificate_to_json(cert), run.artifact("certificate.json"));

    const auto files = emit_plots(cfg.team, sim.log, cert, plot_request(cfg), run.dir() / "plots");
    for (const auto& f : files)
        run.record(f);
    out << "wrote " << files.size() << " plots\n";
    return report_certificate(cert, out, err);
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Layered continuum-deformation planning, training, certification and simulation for agent teams",
                 "deform-swarm"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    CommonOptions opts;
    std::optional<std::uint64_t> seed;
    std::optional<int> epochs;
    std::optional<double> lr, dt, delta_alpha, eps, delta;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opts.config_path, "Run configuration file")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", opts.out_dir, "Output directory")->capture_default_str();
        sub->add_option("--seed", seed, "Random seed for samplers");
        sub->add_option("--epochs", epochs, "Training epochs")->check(CLI::PositiveNumber);
        sub->add_option("--lr", lr, "Learning rate")->check(CLI::PositiveNumber);
        sub->add_option("--dt", dt, "Integration step [s]")->check(CLI::Range(1e-6, 0.01));
        sub->add_option("--delta-alpha", delta_alpha, "Alpha line-search step");
        sub->add_option("--eps", eps, "Agent half box side [m]")->check(CLI::PositiveNumber);
        sub->add_option("--delta", delta, "Tracking error bound [m]")->check(CLI::PositiveNumber);
    };
    auto add_inputs = [&](CLI::App* sub, bool logs) {
        sub->add_option("--weights", opts.weights_path, "Weight file (default <out>/weights.json)");
        if (logs) {
            sub->add_option("--log", opts.log_path, "Desired trajectory CSV (default <out>/desired_trajectory.csv)");
            sub->add_option("--vehicle-log", opts.vehicle_log_path, "Vehicle log CSV (default <out>/vehicle_log.csv)");
        }
    };

    auto* train_cmd = app.add_subcommand("train", "Train layer weights by projected gradient descent");
    auto* alpha_cmd = app.add_subcommand("alpha-min", "Search the smallest safe leader contraction");
    auto* certify_cmd = app.add_subcommand("certify", "Certify a logged run against the separation conditions");
    auto* simulate_cmd = app.add_subcommand("simulate", "Closed-loop quadcopter simulation of the planned team");
    auto* plot_cmd = app.add_subcommand("plot", "Render SVG figures from a logged run");
    auto* all_cmd = app.add_subcommand("all", "alpha-min, train, simulate, certify and plot in one pass");
    for (auto* sub : {train_cmd, alpha_cmd, certify_cmd, simulate_cmd, plot_cmd, all_cmd})
        add_common(sub);
    add_inputs(certify_cmd, true);
    add_inputs(simulate_cmd, false);
    add_inputs(plot_cmd, true);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::CallForVersion&) {
        out << kVersion << "\n";
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kExitUsage;
    }

    opts.overrides = {seed, epochs, lr, dt, delta_alpha, eps, delta};
    CLI::App* chosen = app.get_subcommands().front();
    const std::string name = chosen->get_name();

    try {
        Run run(name, opts, out);
        int code = kExitOk;
        if (name == "train") code = cmd_train(run, out);
        else if (name == "alpha-min") code = cmd_alpha_min(run, out, err);
        else if (name == "simulate") code = cmd_simulate(run, out);
        else if (name == "certify") code = cmd_certify(run, out, err);
        else if (name == "plot") code = cmd_plot(run, out);
        else code = cmd_all(run, out, err);
        run.write_manifest();
        return code;
    } catch (const ParseError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ValidationError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const IoError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const nlohmann::json::exception& e) {
        err << "error: malformed input file: " << e.what() << "\n";
        return kExitUsage;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitCertificateFailure;
    }
}

}  // namespace deform_swarm
