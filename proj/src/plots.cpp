#include "deform_swarm/plots.hpp"

#include "deform_swarm/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace deform_swarm {

namespace fs = std::filesystem;

namespace svg {

namespace {

constexpr double kLeft = 70, kRight = 150, kTop = 40, kBottom = 55;

std::string fmt(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string escape(const std::string& s)
{
    std::string out;
    for (char c : s) {
        switch (c) {
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '&': out += "&amp;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();

    void add(double v)
    {
        if (std::isfinite(v)) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    void finish()
    {
        if (!std::isfinite(lo)) {
            lo = 0.0;
            hi = 1.0;
        }
        if (hi - lo < 1e-12) {
            const double pad = std::max(1.0, std::abs(lo)) * 0.05;
            lo -= pad;
            hi += pad;
        }
    }
};

std::vector<double> ticks(const Range& r)
{
    const double raw = (r.hi - r.lo) / 6.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0})
        if (m * mag >= raw) {
            step = m * mag;
            break;
        }
    std::vector<double> out;
    for (double t = std::ceil(r.lo / step) * step; t <= r.hi + 1e-9 * step; t += step)
        out.push_back(std::abs(t) < 1e-12 * step ? 0.0 : t);
    return out;
}

class Canvas {
public:
    Canvas(double width, double height, Range xr, Range yr) : w_(width), h_(height), xr_(xr), yr_(yr) {}

    double px(double x) const { return kLeft + (x - xr_.lo) / (xr_.hi - xr_.lo) * (w_ - kLeft - kRight); }
    double py(double y) const { return h_ - kBottom - (y - yr_.lo) / (yr_.hi - yr_.lo) * (h_ - kTop - kBottom); }

    void frame(std::ostringstream& out, const std::string& title, const std::string& xl, const std::string& yl) const
    {
        out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(w_) << "\" height=\"" << fmt(h_)
            << "\" viewBox=\"0 0 " << fmt(w_) << ' ' << fmt(h_) << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
        out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
        out << "<text x=\"" << fmt(w_ / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(title)
            << "</text>\n";
        const double x0 = kLeft, x1 = w_ - kRight, y0 = kTop, y1 = h_ - kBottom;
        for (double t : ticks(xr_)) {
            out << "<line x1=\"" << fmt(px(t)) << "\" y1=\"" << fmt(y0) << "\" x2=\"" << fmt(px(t)) << "\" y2=\""
                << fmt(y1) << "\" stroke=\"#e5e5e5\"/>\n";
            out << "<text x=\"" << fmt(px(t)) << "\" y=\"" << fmt(y1 + 16) << "\" text-anchor=\"middle\">" << fmt(t)
                << "</text>\n";
        }
        for (double t : ticks(yr_)) {
            out << "<line x1=\"" << fmt(x0) << "\" y1=\"" << fmt(py(t)) << "\" x2=\"" << fmt(x1) << "\" y2=\""
                << fmt(py(t)) << "\" stroke=\"#e5e5e5\"/>\n";
            out << "<text x=\"" << fmt(x0 - 6) << "\" y=\"" << fmt(py(t) + 4) << "\" text-anchor=\"end\">" << fmt(t)
                << "</text>\n";
        }
        out << "<rect x=\"" << fmt(x0) << "\" y=\"" << fmt(y0) << "\" width=\"" << fmt(x1 - x0) << "\" height=\""
            << fmt(y1 - y0) << "\" fill=\"none\" stroke=\"black\"/>\n";
        out << "<text x=\"" << fmt((x0 + x1) / 2) << "\" y=\"" << fmt(h_ - 14) << "\" text-anchor=\"middle\">"
            << escape(xl) << "</text>\n";
        out << "<text transform=\"translate(18," << fmt((y0 + y1) / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
            << escape(yl) << "</text>\n";
    }

    void polyline(std::ostringstream& out, const Series& s) const
    {
        out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\""
            << (s.dashed ? " stroke-dasharray=\"6 4\"" : "") << " points=\"";
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i)
            out << fmt(px(s.x[i])) << ',' << fmt(py(s.y[i])) << ' ';
        out << "\"/>\n";
    }

    void legend(std::ostringstream& out, std::size_t slot, const std::string& label, const std::string& color,
                bool dashed) const
    {
        const double x = w_ - kRight + 12, y = kTop + 10 + 18 * static_cast<double>(slot);
        out << "<line x1=\"" << fmt(x) << "\" y1=\"" << fmt(y) << "\" x2=\"" << fmt(x + 22) << "\" y2=\"" << fmt(y)
            << "\" stroke=\"" << color << "\" stroke-width=\"2\"" << (dashed ? " stroke-dasharray=\"6 4\"" : "")
            << "/>\n";
        out << "<text x=\"" << fmt(x + 28) << "\" y=\"" << fmt(y + 4) << "\">" << escape(label) << "</text>\n";
    }

private:
    double w_, h_;
    Range xr_, yr_;
};

}  // namespace

std::string render(const LinePlot& plot)
{
    Range xr, yr;
    for (const auto& s : plot.series) {
        for (double v : s.x)
            xr.add(v);
        for (double v : s.y)
            yr.add(v);
    }
    for (const auto& l : plot.lines)
        yr.add(l.y);
    xr.finish();
    yr.finish();
    const double pad = 0.05 * (yr.hi - yr.lo);
    yr.lo -= pad;
    yr.hi += pad;

    const Canvas canvas(plot.width, plot.height, xr, yr);
    std::ostringstream out;
    canvas.frame(out, plot.title, plot.x_label, plot.y_label);
    std::size_t slot = 0;
    for (const auto& s : plot.series) {
        canvas.polyline(out, s);
        if (!s.label.empty())
            canvas.legend(out, slot++, s.label, s.color, s.dashed);
    }
    for (const auto& l : plot.lines) {
        const Series line{"", {xr.lo, xr.hi}, {l.y, l.y}, l.color, true};
        canvas.polyline(out, line);
        if (!l.label.empty())
            canvas.legend(out, slot++, l.label, l.color, true);
    }
    out << "</svg>\n";
    return out.str();
}

std::string render(const ScatterPlot& plot)
{
    Range xr, yr;
    for (const auto& s : plot.paths) {
        for (double v : s.x)
            xr.add(v);
        for (double v : s.y)
            yr.add(v);
    }
    for (const auto& m : plot.markers) {
        xr.add(m.x);
        yr.add(m.y);
    }
    xr.finish();
    yr.finish();
    for (Range* r : {&xr, &yr}) {
        const double pad = 0.06 * (r->hi - r->lo);
        r->lo -= pad;
        r->hi += pad;
    }
    if (plot.equal_aspect) {
        const double sx = (xr.hi - xr.lo) / (plot.width - kLeft - kRight);
        const double sy = (yr.hi - yr.lo) / (plot.height - kTop - kBottom);
        if (sx > sy) {
            const double grow = 0.5 * (sx * (plot.height - kTop - kBottom) - (yr.hi - yr.lo));
            yr.lo -= grow;
            yr.hi += grow;
        } else {
            const double grow = 0.5 * (sy * (plot.width - kLeft - kRight) - (xr.hi - xr.lo));
            xr.lo -= grow;
            xr.hi += grow;
        }
    }

    const Canvas canvas(plot.width, plot.height, xr, yr);
    std::ostringstream out;
    canvas.frame(out, plot.title, plot.x_label, plot.y_label);
    std::size_t slot = 0;
    for (const auto& s : plot.paths) {
        canvas.polyline(out, s);
        if (!s.label.empty())
            canvas.legend(out, slot++, s.label, s.color, s.dashed);
    }
    for (const auto& m : plot.markers) {
        const double x = canvas.px(m.x), y = canvas.py(m.y);
        if (m.shape == 1)
            out << "<polygon points=\"" << fmt(x) << ',' << fmt(y - 5) << ' ' << fmt(x - 4.5) << ',' << fmt(y + 4)
                << ' ' << fmt(x + 4.5) << ',' << fmt(y + 4) << "\" fill=\"" << m.color << "\"/>\n";
        else if (m.shape == 2)
            out << "<rect x=\"" << fmt(x - 3.5) << "\" y=\"" << fmt(y - 3.5) << "\" width=\"7\" height=\"7\" fill=\""
                << m.color << "\"/>\n";
        else
            out << "<circle cx=\"" << fmt(x) << "\" cy=\"" << fmt(y) << "\" r=\"3\" fill=\"" << m.color << "\"/>\n";
        if (!m.label.empty())
            out << "<text x=\"" << fmt(x + 5) << "\" y=\"" << fmt(y - 5) << "\" font-size=\"9\">" << escape(m.label)
                << "</text>\n";
    }
    out << "</svg>\n";
    return out.str();
}

}  // namespace svg

std::vector<double> min_box_separation(const SimLog& log, bool actual)
{
    std::vector<double> out;
    out.reserve(log.frames.size());
    std::vector<Vec3> positions;
    for (const auto& f : log.frames) {
        positions.clear();
        if (actual)
            for (const auto& s : f.states)
                positions.push_back(s.position);
        else
            positions = f.desired;
        double worst = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i + 1 < positions.size(); ++i)
            for (std::size_t j = i + 1; j < positions.size(); ++j)
                worst = std::min(worst, (positions[i] - positions[j]).cwiseAbs().maxCoeff());
        out.push_back(worst);
    }
    return out;
}

namespace {

void write_file(const fs::path& path, const std::string& content)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write " + path.string());
    out << content;
    if (!out)
        throw IoError("write failed for " + path.string());
}

std::size_t nearest_frame(const SimLog& log, double t)
{
    std::size_t best = 0;
    for (std::size_t i = 1; i < log.frames.size(); ++i)
        if (std::abs(log.frames[i].time - t) < std::abs(log.frames[best].time - t))
            best = i;
    return best;
}

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#9467bd", "#8c564b", "#e377c2"};

}  // namespace

std::vector<fs::path> emit_plots(const TeamConfig& config, const SimLog& log, const SafetyCertificate& certificate,
                                 const PlotRequest& request, const fs::path& out_dir)
{
    if (log.empty())
        throw EmptyLog();
    fs::create_directories(out_dir);
    std::vector<fs::path> written;
    auto save = [&](const std::string& name, const std::string& content) {
        const fs::path path = out_dir / name;
        write_file(path, content);
        written.push_back(path);
    };

    // Desired configuration at selected times.
    {
        svg::ScatterPlot plot;
        plot.title = "Desired team configuration at selected times";
        plot.x_label = "x [m]";
        plot.y_label = "y [m]";
        if (request.nominal_path) {
            svg::Series path{"nominal path", {}, {}, "#999999", true};
            for (const auto& p : *request.nominal_path) {
                path.x.push_back(p.x());
                path.y.push_back(p.y());
            }
            plot.paths.push_back(std::move(path));
        }
        for (double t : request.snapshot_times) {
            const auto& frame = log.frames[nearest_frame(log, t)];
            for (std::size_t i = 0; i < frame.desired.size(); ++i) {
                const AgentId id{static_cast<int>(i) + 1};
                const int layer = config.layer_of(id);
                const std::string color = layer == 1 ? "#d62728" : layer == 2 ? "#1f77b4" : "#000000";
                plot.markers.push_back({frame.desired[i].x(), frame.desired[i].y(),
                                        i == 0 ? "t=" + svg::fmt(frame.time) + " s" : std::string{}, color,
                                        layer == 1 ? 1 : (layer == 2 ? 2 : 0)});
            }
        }
        save("configuration_snapshots.svg", svg::render(plot));
    }

    // Minimum box separation vs time.
    {
        svg::LinePlot plot;
        plot.title = std::string("Minimum pairwise box separation (certificate ") +
                     (certificate.passed ? "passed" : "FAILED") + ")";
        plot.x_label = "t [s]";
        plot.y_label = "min over pairs of max-axis gap [m]";
        std::vector<double> t;
        for (const auto& f : log.frames)
            t.push_back(f.time);
        plot.series.push_back({"desired", t, min_box_separation(log, false), "#1f77b4", false});
        plot.lines.push_back({2.0 * (config.delta + config.eps), "2(delta+eps)", "#d62728"});
        if (log.has_actual()) {
            plot.series.push_back({"actual", t, min_box_separation(log, true), "#ff7f0e", false});
            plot.lines.push_back({2.0 * config.eps, "2 eps", "#9467bd"});
        }
        save("min_separation.svg", svg::render(plot));
    }

    for (int agent : request.agents) {
        if (agent < 1 || agent > log.agent_count())
            throw std::invalid_argument("plot agent " + std::to_string(agent) + " is not in the log");
        const auto idx = static_cast<std::size_t>(agent - 1);
        std::vector<double> t;
        std::array<std::vector<double>, 2> desired, actual;
        std::vector<double> thrust;
        std::array<std::vector<double>, 4> rotors;
        for (const auto& f : log.frames) {
            t.push_back(f.time);
            for (int a = 0; a < 2; ++a) {
                desired[a].push_back(f.desired[idx][a]);
                if (log.has_actual())
                    actual[a].push_back(f.states[idx].position[a]);
            }
            if (log.has_actual()) {
                thrust.push_back(f.controls[idx].thrust);
                for (std::size_t r = 0; r < 4; ++r)
                    rotors[r].push_back(f.controls[idx].rotor_speeds[r]);
            }
        }
        const std::string tag = "agent_" + std::to_string(agent);
        const char* axis_name[] = {"x", "y"};
        for (int a = 0; a < 2; ++a) {
            svg::LinePlot plot;
            plot.title = std::string(axis_name[a]) + " component of the actual and desired trajectories of agent " +
                         std::to_string(agent);
            plot.x_label = "t [s]";
            plot.y_label = std::string(axis_name[a]) + " [m]";
            plot.series.push_back({"desired", t, desired[a], "#1f77b4", true});
            if (log.has_actual())
                plot.series.push_back({"actual", t, actual[a], "#ff7f0e", false});
            save(tag + "_" + axis_name[a] + ".svg", svg::render(plot));
        }
        if (log.has_actual()) {
            svg::LinePlot thrust_plot;
            thrust_plot.title = "Thrust of agent " + std::to_string(agent);
            thrust_plot.x_label = "t [s]";
            thrust_plot.y_label = "F [N]";
            thrust_plot.series.push_back({"thrust", t, thrust, "#2ca02c", false});
            save(tag + "_thrust.svg", svg::render(thrust_plot));

            svg::LinePlot rotor_plot;
            rotor_plot.title = "Rotor angular speeds of agent " + std::to_string(agent);
            rotor_plot.x_label = "t [s]";
            rotor_plot.y_label = "omega [rad/s]";
            for (std::size_t r = 0; r < 4; ++r)
                rotor_plot.series.push_back({"rotor " + std::to_string(r + 1), t, rotors[r], kPalette[r], false});
            save(tag + "_rotor_speeds.svg", svg::render(rotor_plot));
        }
    }
    return written;
}

}  // namespace deform_swarm
