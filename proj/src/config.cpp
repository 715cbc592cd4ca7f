#include "deform_swarm/config.hpp"

#include "deform_swarm/errors.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <sstream>

namespace deform_swarm {

namespace {

struct Entry {
    std::string key;
    std::string value;
    int line = 0;
    int key_column = 0;
    int value_column = 0;
    bool used = false;
};

struct Section {
    std::string name;
    int line = 0;
    std::vector<Entry> entries;
};

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r'; }

std::vector<Section> tokenize(std::string_view text, const std::string& source)
{
    std::vector<Section> sections;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t end = std::min(text.find('\n', pos), text.size());
        std::string_view line = text.substr(pos, end - pos);
        ++line_no;
        pos = end + 1;
        if (const auto hash = line.find('#'); hash != std::string_view::npos)
            line = line.substr(0, hash);

        std::size_t first = 0;
        while (first < line.size() && is_space(line[first]))
            ++first;
        std::size_t last = line.size();
        while (last > first && is_space(line[last - 1]))
            --last;
        if (first == last) {
            if (end == text.size())
                break;
            continue;
        }
        const int column = static_cast<int>(first) + 1;

        if (line[first] == '[') {
            if (line[last - 1] != ']')
                throw ParseError(source, line_no, static_cast<int>(last) + 1, "expected ']' to close section header");
            std::string name(line.substr(first + 1, last - first - 2));
            if (name.empty())
                throw ParseError(source, line_no, column, "empty section name");
            sections.push_back({std::move(name), line_no, {}});
        } else {
            const auto eq = line.find('=', first);
            if (eq == std::string_view::npos || eq >= last)
                throw ParseError(source, line_no, column, "expected 'key = value'");
            if (sections.empty())
                throw ParseError(source, line_no, column, "key outside of any [section]");
            std::size_t key_end = eq;
            while (key_end > first && is_space(line[key_end - 1]))
                --key_end;
            if (key_end == first)
                throw ParseError(source, line_no, column, "missing key before '='");
            std::size_t value_start = eq + 1;
            while (value_start < last && is_space(line[value_start]))
                ++value_start;
            Entry entry{std::string(line.substr(first, key_end - first)),
                        std::string(line.substr(value_start, last - value_start)), line_no, column,
                        static_cast<int>(value_start) + 1};
            for (const auto& prior : sections.back().entries)
                if (prior.key == entry.key)
                    throw ParseError(source, line_no, column,
                                     "duplicate key '" + entry.key + "' (first set on line " +
                                         std::to_string(prior.line) + ")");
            sections.back().entries.push_back(std::move(entry));
        }
        if (end == text.size())
            break;
    }
    return sections;
}

struct Token {
    std::string_view text;
    int column;
};

std::vector<Token> split_list(const Entry& e)
{
    std::vector<Token> tokens;
    std::string_view v = e.value;
    std::size_t i = 0;
    while (i < v.size()) {
        while (i < v.size() && (is_space(v[i]) || v[i] == ','))
            ++i;
        const std::size_t start = i;
        while (i < v.size() && !is_space(v[i]) && v[i] != ',')
            ++i;
        if (i > start)
            tokens.push_back({v.substr(start, i - start), e.value_column + static_cast<int>(start)});
    }
    return tokens;
}

class Reader {
public:
    explicit Reader(std::string source) : source_(std::move(source)) {}

    double to_double(const Entry& e, const Token& t) const
    {
        double out = 0.0;
        const auto* begin = t.text.data();
        const auto* end = begin + t.text.size();
        auto [ptr, ec] = std::from_chars(begin, end, out);
        if (ec != std::errc() || ptr != end)
            throw ParseError(source_, e.line, t.column, "expected a number, got '" + std::string(t.text) + "'");
        return out;
    }

    long long to_integer(const Entry& e, const Token& t) const
    {
        long long out = 0;
        const auto* begin = t.text.data();
        const auto* end = begin + t.text.size();
        auto [ptr, ec] = std::from_chars(begin, end, out);
        if (ec != std::errc() || ptr != end)
            throw ParseError(source_, e.line, t.column, "expected an integer, got '" + std::string(t.text) + "'");
        return out;
    }

    double scalar(const Entry& e) const
    {
        const auto tokens = split_list(e);
        if (tokens.size() != 1)
            throw ParseError(source_, e.line, e.value_column, "expected a single number for '" + e.key + "'");
        return to_double(e, tokens.front());
    }

    long long integer(const Entry& e) const
    {
        const auto tokens = split_list(e);
        if (tokens.size() != 1)
            throw ParseError(source_, e.line, e.value_column, "expected a single integer for '" + e.key + "'");
        return to_integer(e, tokens.front());
    }

    std::vector<double> doubles(const Entry& e) const
    {
        std::vector<double> out;
        for (const auto& t : split_list(e))
            out.push_back(to_double(e, t));
        return out;
    }

    std::vector<double> doubles(const Entry& e, std::size_t count) const
    {
        auto out = doubles(e);
        if (out.size() != count)
            throw ParseError(source_, e.line, e.value_column,
                             "expected " + std::to_string(count) + " numbers for '" + e.key + "', got " +
                                 std::to_string(out.size()));
        return out;
    }

    /// Integers with `a..b` ranges.
    std::vector<int> ids(const Entry& e) const
    {
        std::vector<int> out;
        for (const auto& t : split_list(e)) {
            if (const auto dots = t.text.find(".."); dots != std::string_view::npos) {
                const Token lo{t.text.substr(0, dots), t.column};
                const Token hi{t.text.substr(dots + 2), t.column + static_cast<int>(dots) + 2};
                const auto a = to_integer(e, lo), b = to_integer(e, hi);
                if (b < a)
                    throw ParseError(source_, e.line, t.column, "descending range");
                for (auto v = a; v <= b; ++v)
                    out.push_back(static_cast<int>(v));
            } else {
                out.push_back(static_cast<int>(to_integer(e, t)));
            }
        }
        return out;
    }

    /// Numeric suffix of an indexed key such as `layer.3`.
    int suffix(const Entry& e, std::size_t prefix_len) const
    {
        const std::string_view tail = std::string_view(e.key).substr(prefix_len);
        const Token t{tail, e.key_column + static_cast<int>(prefix_len)};
        const auto v = to_integer(e, t);
        if (v < 1)
            throw ParseError(source_, e.line, t.column, "index must be positive");
        return static_cast<int>(v);
    }

    const std::string& source() const { return source_; }

private:
    std::string source_;
};

using Handler = std::function<void(const Entry&)>;

bool starts_with(const std::string& s, std::string_view prefix) { return s.rfind(prefix, 0) == 0; }

}  // namespace

RunConfig parse_config(std::string_view text, const std::string& source, const ConfigOverrides& overrides)
{
    const auto sections = tokenize(text, source);
    const Reader rd(source);
    RunConfig cfg;
    auto& team = cfg.team_spec;
    team.n_agents = 0;
    bool bounds_given = false;
    std::map<int, BetaBounds> bounds;
    std::map<int, std::vector<int>> layers;

    auto handle_team = [&](const Entry& e) -> bool {
        const auto& k = e.key;
        if (k == "n_agents") team.n_agents = static_cast<int>(rd.integer(e));
        else if (k == "boundary") team.boundary = rd.ids(e);
        else if (k == "core") team.core = rd.ids(e);
        else if (k == "interior") team.interior = rd.ids(e);
        else if (k == "alpha_min") team.alpha_min = rd.scalar(e);
        else if (k == "alpha_max") team.alpha_max = rd.scalar(e);
        else if (k == "eps") team.eps = rd.scalar(e);
        else if (k == "delta") team.delta = rd.scalar(e);
        else if (starts_with(k, "layer.")) layers[rd.suffix(e, 6)] = rd.ids(e);
        else if (starts_with(k, "reference.")) {
            const auto v = rd.doubles(e, 3);
            team.reference_positions[rd.suffix(e, 10)] = Vec3(v[0], v[1], v[2]);
        } else if (starts_with(k, "neighbors.")) team.in_neighbors[rd.suffix(e, 10)] = rd.ids(e);
        else if (starts_with(k, "beta_bounds.")) {
            const auto v = rd.doubles(e, 2);
            bounds[rd.suffix(e, 12)] = {v[0], v[1]};
            bounds_given = true;
        } else return false;
        return true;
    };
    auto& sc = cfg.scenario;
    auto handle_scenario = [&](const Entry& e) -> bool {
        const auto& k = e.key;
        if (k == "semi_major") sc.ellipse.semi_major = rd.scalar(e);
        else if (k == "semi_minor") sc.ellipse.semi_minor = rd.scalar(e);
        else if (k == "period") sc.ellipse.period = rd.scalar(e);
        else if (k == "altitude") sc.ellipse.altitude = rd.scalar(e);
        else if (k == "phase") sc.ellipse.phase = rd.scalar(e);
        else if (k == "dt") sc.sim.dt = rd.scalar(e);
        else if (k == "t_final") sc.sim.t_final = rd.scalar(e);
        else if (k == "log_stride") sc.sim.log_stride = static_cast<int>(rd.integer(e));
        else if (k == "transient") sc.transient = rd.scalar(e);
        else if (k == "plot_agents") sc.plot_agents = rd.ids(e);
        else if (k == "snapshot_times") sc.snapshot_times = rd.doubles(e);
        else return false;
        return true;
    };
    auto& v = cfg.vehicle;
    auto& gn = cfg.gains;
    auto handle_vehicle = [&](const Entry& e) -> bool {
        const std::map<std::string, double*> fields{
            {"m", &v.m}, {"g", &v.g}, {"l", &v.l}, {"I_r", &v.I_r}, {"I_x", &v.I_x}, {"I_y", &v.I_y},
            {"I_z", &v.I_z}, {"b", &v.b}, {"k", &v.k}, {"kp", &gn.kp}, {"kd", &gn.kd},
            {"att_kp", &gn.att_kp}, {"att_kd", &gn.att_kd}, {"max_rotor_speed", &gn.max_rotor_speed},
            {"max_tilt", &gn.max_tilt}};
        const auto it = fields.find(e.key);
        if (it == fields.end())
            return false;
        *it->second = rd.scalar(e);
        return true;
    };
    auto& tr = cfg.trainer;
    auto handle_trainer = [&](const Entry& e) -> bool {
        const auto& k = e.key;
        if (k == "epochs") tr.epochs = static_cast<int>(rd.integer(e));
        else if (k == "learning_rate") tr.learning_rate = rd.scalar(e);
        else if (k == "seed") tr.seed = static_cast<std::uint64_t>(rd.integer(e));
        else if (k == "projection_tolerance") tr.projection_tolerance = rd.scalar(e);
        else if (k == "log_every") tr.log_every = static_cast<int>(rd.integer(e));
        else return false;
        return true;
    };
    auto& sf = cfg.safety;
    auto handle_safety = [&](const Entry& e) -> bool {
        const auto& k = e.key;
        if (k == "delta_alpha") sf.delta_alpha = rd.scalar(e);
        else if (k == "grid_points") sf.sampler.grid_points = static_cast<int>(rd.integer(e));
        else if (k == "random_samples") sf.sampler.random_samples = static_cast<int>(rd.integer(e));
        else if (k == "min_row_difference") sf.sampler.min_row_difference = rd.scalar(e);
        else if (k == "seed") sf.sampler.seed = static_cast<std::uint64_t>(rd.integer(e));
        else if (k == "sampler") {
            if (e.value == "grid") sf.sampler.kind = SamplerOptions::Kind::Grid;
            else if (e.value == "random") sf.sampler.kind = SamplerOptions::Kind::Random;
            else throw ParseError(source, e.line, e.value_column, "sampler must be 'grid' or 'random'");
        } else return false;
        return true;
    };

    const std::map<std::string, std::function<bool(const Entry&)>> handlers{
        {"team", handle_team}, {"scenario", handle_scenario}, {"vehicle", handle_vehicle},
        {"trainer", handle_trainer}, {"safety", handle_safety},
        {"meta", [&](const Entry& e) { cfg.metadata[e.key] = e.value; return true; }}};

    for (const auto& section : sections) {
        const auto it = handlers.find(section.name);
        if (it == handlers.end()) {
            cfg.warnings.push_back(source + ":" + std::to_string(section.line) + ": unknown section [" +
                                   section.name + "] ignored");
            continue;
        }
        for (const auto& e : section.entries)
            if (!it->second(e))
                cfg.warnings.push_back(source + ":" + std::to_string(e.line) + ": unknown key '" + e.key +
                                       "' in [" + section.name + "] ignored");
    }

    if (!layers.empty()) {
        team.layers.assign(static_cast<std::size_t>(layers.rbegin()->first), {});
        for (auto& [k, ids] : layers)
            team.layers[static_cast<std::size_t>(k - 1)] = std::move(ids);
    }
    if (bounds_given) {
        team.beta_bounds.assign(static_cast<std::size_t>(bounds.rbegin()->first), BetaBounds{-1.0, -1.0});
        for (const auto& [k, b] : bounds)
            team.beta_bounds[static_cast<std::size_t>(k - 1)] = b;
    } else {
        team.beta_bounds = reference_team_spec().beta_bounds;
    }

    if (overrides.seed) {
        tr.seed = *overrides.seed;
        sf.sampler.seed = *overrides.seed;
    }
    if (overrides.epochs) tr.epochs = *overrides.epochs;
    if (overrides.learning_rate) tr.learning_rate = *overrides.learning_rate;
    if (overrides.dt) sc.sim.dt = *overrides.dt;
    if (overrides.delta_alpha) sf.delta_alpha = *overrides.delta_alpha;
    if (overrides.eps) team.eps = *overrides.eps;
    if (overrides.delta) team.delta = *overrides.delta;

    cfg.team = validate_config(team);
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path, const ConfigOverrides& overrides)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open configuration file " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str(), path.string(), overrides);
}

namespace {

std::string num(double x)
{
    std::ostringstream out;
    out << std::setprecision(std::numeric_limits<double>::max_digits10) << x;
    // Prefer the shortest representation that round-trips.
    for (int p = 1; p <= 17; ++p) {
        std::ostringstream trial;
        trial << std::setprecision(p) << x;
        if (std::stod(trial.str()) == x)
            return trial.str();
    }
    return out.str();
}

std::string list(const std::vector<int>& ids)
{
    std::string out;
    for (std::size_t i = 0; i < ids.size(); ++i)
        out += (i ? ", " : "") + std::to_string(ids[i]);
    return out;
}

std::string list(const std::vector<double>& xs)
{
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i)
        out += (i ? ", " : "") + num(xs[i]);
    return out;
}

}  // namespace

std::string format_config(const RunConfig& config)
{
    const auto& t = config.team_spec;
    std::ostringstream out;
    if (!config.metadata.empty()) {
        out << "[meta]\n";
        for (const auto& [k, v] : config.metadata)
            out << k << " = " << v << "\n";
        out << "\n";
    }
    out << "[team]\n";
    out << "n_agents = " << t.n_agents << "\n";
    out << "boundary = " << list(t.boundary) << "\n";
    out << "core = " << list(t.core) << "\n";
    if (!t.interior.empty())
        out << "interior = " << list(t.interior) << "\n";
    for (std::size_t k = 0; k < t.layers.size(); ++k)
        out << "layer." << k + 1 << " = " << list(t.layers[k]) << "\n";
    for (const auto& [id, p] : t.reference_positions)
        out << "reference." << id << " = " << num(p.x()) << ", " << num(p.y()) << ", " << num(p.z()) << "\n";
    for (const auto& [id, leaders] : t.in_neighbors)
        out << "neighbors." << id << " = " << list(leaders) << "\n";
    for (std::size_t k = 0; k < t.beta_bounds.size(); ++k)
        out << "beta_bounds." << k + 1 << " = " << num(t.beta_bounds[k].lo) << ", " << num(t.beta_bounds[k].hi) << "\n";
    out << "alpha_min = " << num(t.alpha_min) << "\nalpha_max = " << num(t.alpha_max) << "\n";
    out << "eps = " << num(t.eps) << "\ndelta = " << num(t.delta) << "\n";

    const auto& s = config.scenario;
    out << "\n[scenario]\n"
        << "semi_major = " << num(s.ellipse.semi_major) << "\nsemi_minor = " << num(s.ellipse.semi_minor)
        << "\nperiod = " << num(s.ellipse.period) << "\naltitude = " << num(s.ellipse.altitude)
        << "\nphase = " << num(s.ellipse.phase) << "\ndt = " << num(s.sim.dt)
        << "\nt_final = " << num(s.sim.t_final) << "\nlog_stride = " << s.sim.log_stride
        << "\ntransient = " << num(s.transient) << "\nplot_agents = " << list(s.plot_agents)
        << "\nsnapshot_times = " << list(s.snapshot_times) << "\n";

    const auto& v = config.vehicle;
    const auto& g = config.gains;
    out << "\n[vehicle]\n"
        << "m = " << num(v.m) << "\ng = " << num(v.g) << "\nl = " << num(v.l) << "\nI_r = " << num(v.I_r)
        << "\nI_x = " << num(v.I_x) << "\nI_y = " << num(v.I_y) << "\nI_z = " << num(v.I_z)
        << "\nb = " << num(v.b) << "\nk = " << num(v.k) << "\nkp = " << num(g.kp) << "\nkd = " << num(g.kd)
        << "\natt_kp = " << num(g.att_kp) << "\natt_kd = " << num(g.att_kd)
        << "\nmax_rotor_speed = " << num(g.max_rotor_speed) << "\nmax_tilt = " << num(g.max_tilt) << "\n";

    const auto& tr = config.trainer;
    out << "\n[trainer]\n"
        << "epochs = " << tr.epochs << "\nlearning_rate = " << num(tr.learning_rate) << "\nseed = " << tr.seed
        << "\nprojection_tolerance = " << num(tr.projection_tolerance) << "\nlog_every = " << tr.log_every << "\n";

    const auto& sf = config.safety;
    out << "\n[safety]\n"
        << "delta_alpha = " << num(sf.delta_alpha)
        << "\nsampler = " << (sf.sampler.kind == SamplerOptions::Kind::Grid ? "grid" : "random")
        << "\ngrid_points = " << sf.sampler.grid_points << "\nrandom_samples = " << sf.sampler.random_samples
        << "\nmin_row_difference = " << num(sf.sampler.min_row_difference) << "\nseed = " << sf.sampler.seed << "\n";
    return out.str();
}

}  // namespace deform_swarm
