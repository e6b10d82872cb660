#include "skyfed/report.hpp"

#include "skyfed/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace skyfed {

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::string placement_csv(const PlacementResult& r) {
    std::ostringstream out;
    out << "iteration,x,y,objective\n";
    for (std::size_t k = 0; k < r.trace.size(); ++k)
        out << k << ',' << format_number(r.trace[k].x()) << ',' << format_number(r.trace[k].y()) << ','
            << format_number(k < r.trace_objective.size() ? r.trace_objective[k] : std::nan("")) << '\n';
    return out.str();
}

std::string trajectory_csv(const Trajectory& t, const std::vector<std::pair<std::string, std::string>>& meta) {
    std::ostringstream out;
    out << "# dwell=" << t.dwell << "\n# closed=" << (t.closed ? "true" : "false") << '\n';
    for (const auto& [k, v] : meta) out << "# " << k << '=' << v << '\n';
    out << "waypoint_index,x,y\n";
    for (std::size_t k = 0; k < t.waypoints.size(); ++k)
        out << k << ',' << format_number(t.waypoints[k].x()) << ',' << format_number(t.waypoints[k].y()) << '\n';
    return out.str();
}

Trajectory parse_trajectory_csv(std::string_view text) {
    Trajectory t;
    std::istringstream in{std::string(text)};
    std::string line;
    int ln = 0;
    bool header = false;
    while (std::getline(in, line)) {
        ++ln;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto eq = line.find('=');
            if (eq == std::string::npos) continue;
            auto key = line.substr(1, eq - 1);
            key.erase(0, key.find_first_not_of(' '));
            const auto val = line.substr(eq + 1);
            try {
                if (key == "dwell") t.dwell = std::stoi(val);
                if (key == "closed") t.closed = val == "true";
            } catch (const std::exception&) {
                throw ParseError(ln, "bad metadata value '" + val + "'");
            }
            continue;
        }
        if (!header) {
            if (line != "waypoint_index,x,y") throw ParseError(ln, "expected header waypoint_index,x,y");
            header = true;
            continue;
        }
        double x = 0, y = 0;
        long idx = 0;
        char c1 = 0, c2 = 0;
        std::istringstream row(line);
        if (!(row >> idx >> c1 >> x >> c2 >> y) || c1 != ',' || c2 != ',')
            throw ParseError(ln, "expected index,x,y");
        if (idx != static_cast<long>(t.waypoints.size())) throw ParseError(ln, "waypoint indices must count up from 0");
        t.waypoints.emplace_back(x, y);
    }
    if (t.waypoints.empty()) throw ValidationError("waypoints", "trajectory file has no waypoints");
    if (t.dwell < 1) throw ValidationError("dwell", "must be >= 1");
    return t;
}

std::string round_log_csv(const SimulationResult& r) {
    std::ostringstream out;
    const std::size_t n = r.rounds.empty() ? 0 : r.rounds.front().per.size();
    out << "round,loss,accuracy,gap,drone_x,drone_y";
    for (std::size_t i = 1; i <= n; ++i) out << ",e_" << i;
    for (std::size_t i = 1; i <= n; ++i) out << ",c_" << i;
    out << '\n';
    for (const auto& rec : r.rounds) {
        out << rec.round << ',' << format_number(rec.loss) << ',' << format_number(rec.accuracy) << ','
            << format_number(rec.gap) << ',' << format_number(rec.drone.x()) << ',' << format_number(rec.drone.y());
        for (double e : rec.per) out << ',' << format_number(e);
        for (int c : rec.delivered) out << ',' << c;
        out << '\n';
    }
    return out.str();
}

std::string sweep_csv(SweepAxis axis, const std::vector<SweepRow>& rows) {
    std::ostringstream out;
    out << axis_name(axis) << ",atl,final_loss,rounds_to_target\n";
    for (const auto& r : rows)
        out << format_number(r.value) << ',' << format_number(r.atl) << ',' << format_number(r.final_loss) << ','
            << r.rounds_to_target << '\n';
    return out.str();
}

namespace {

std::string escape_xml(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();

    void add(double v) {
        if (!std::isfinite(v)) return;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    void settle() {
        if (!(lo <= hi)) lo = 0.0, hi = 1.0;
        if (hi - lo < 1e-12 * std::max(1.0, std::abs(hi))) lo -= 0.5, hi += 0.5;
    }
};

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

}  // namespace

std::string svg_line_chart(const std::string& title, const std::string& x_label, const std::vector<Series>& series,
                           const std::vector<std::size_t>& right_axis) {
    constexpr double W = 640, H = 400, left = 70, right = 70, top = 40, bottom = 50;
    const double pw = W - left - right, ph = H - top - bottom;
    auto on_right = [&](std::size_t k) { return std::find(right_axis.begin(), right_axis.end(), k) != right_axis.end(); };

    Range xr, yl, yr;
    for (std::size_t k = 0; k < series.size(); ++k) {
        for (double x : series[k].x) xr.add(x);
        for (double y : series[k].y) (on_right(k) ? yr : yl).add(y);
    }
    xr.settle();
    yl.settle();
    yr.settle();

    std::ostringstream out;
    auto num = [](double v) { return format_number(std::round(v * 100.0) / 100.0); };
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
        << ' ' << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << escape_xml(title)
        << "</text>\n"
        << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
        << "\" fill=\"none\" stroke=\"black\"/>\n";

    for (int k = 0; k <= 4; ++k) {
        const double f = k / 4.0;
        const double px = left + f * pw, py = top + ph - f * ph;
        out << "<text x=\"" << num(px) << "\" y=\"" << H - bottom + 16 << "\" text-anchor=\"middle\">"
            << format_number(xr.lo + f * (xr.hi - xr.lo)) << "</text>\n"
            << "<text x=\"" << left - 6 << "\" y=\"" << num(py + 4) << "\" text-anchor=\"end\">"
            << format_number(yl.lo + f * (yl.hi - yl.lo)) << "</text>\n";
        if (!right_axis.empty())
            out << "<text x=\"" << W - right + 6 << "\" y=\"" << num(py + 4) << "\">"
                << format_number(yr.lo + f * (yr.hi - yr.lo)) << "</text>\n";
    }
    out << "<text x=\"" << left + pw / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">" << escape_xml(x_label)
        << "</text>\n";

    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        const Range& yrng = on_right(k) ? yr : yl;
        const char* color = kPalette[k % (sizeof kPalette / sizeof *kPalette)];
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        bool first = true;
        for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            const double px = left + (s.x[i] - xr.lo) / (xr.hi - xr.lo) * pw;
            const double py = top + ph - (s.y[i] - yrng.lo) / (yrng.hi - yrng.lo) * ph;
            out << (first ? "" : " ") << num(px) << ',' << num(py);
            first = false;
        }
        out << "\"/>\n"
            << "<text x=\"" << left + 8 << "\" y=\"" << top + 16 + 16 * static_cast<double>(k) << "\" fill=\"" << color
            << "\">" << escape_xml(s.name + (on_right(k) ? " (right)" : "")) << "</text>\n";
    }
    out << "</svg>\n";
    return out.str();
}

}  // namespace skyfed
