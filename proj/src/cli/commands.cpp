#include "bcfl/cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>

namespace bcfl::cli {

namespace fs = std::filesystem;

namespace {

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << text;
}

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name) const {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw ConfigError("CSV has no column '" + name + "'");
        return static_cast<std::size_t>(it - header.begin());
    }
};

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

Table parse_csv(const std::string& text) {
    Table t;
    std::stringstream ss(text);
    std::string line;
    if (!std::getline(ss, line)) throw ConfigError("empty CSV");
    t.header = split(line);
    while (std::getline(ss, line)) {
        if (!line.empty()) t.rows.push_back(split(line));
    }
    return t;
}

std::optional<double> number(const std::string& s) {
    if (s.empty()) return std::nullopt;
    try {
        return std::stod(s);
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

struct Series {
    std::string name;
    std::vector<std::pair<double, double>> points;
};

std::string xml_escape(const std::string& s) {
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

std::string line_chart(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                       const std::vector<Series>& series) {
    constexpr double W = 720, H = 440, L = 70, R = 180, T = 40, B = 50;
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& s : series) {
        for (auto [x, y] : s.points) {
            x0 = std::min(x0, x);
            x1 = std::max(x1, x);
            y0 = std::min(y0, y);
            y1 = std::max(y1, y);
        }
    }
    if (!(x0 <= x1)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (x1 == x0) x1 = x0 + 1;
    if (y1 == y0) y1 = y0 + 1;
    const auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
    const auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };

    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << xml_escape(title)
      << "</text>\n";
    o << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
      << "\" stroke=\"black\"/>\n";
    o << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double xv = x0 + (x1 - x0) * k / 4, yv = y0 + (y1 - y0) * k / 4;
        o << "<text x=\"" << fmt("%.2f", px(xv)) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\">"
          << fmt("%.4g", xv) << "</text>\n";
        o << "<text x=\"" << L - 6 << "\" y=\"" << fmt("%.2f", py(yv) + 4) << "\" text-anchor=\"end\">"
          << fmt("%.4g", yv) << "</text>\n";
    }
    o << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">" << xml_escape(xlabel)
      << "</text>\n";
    o << "<text x=\"16\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << (T + H - B) / 2 << ")\">" << xml_escape(ylabel) << "</text>\n";
    for (std::size_t i = 0; i < series.size(); ++i) {
        const char* c = colors[i % std::size(colors)];
        o << "<polyline fill=\"none\" stroke=\"" << c << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t k = 0; k < series[i].points.size(); ++k) {
            const auto [x, y] = series[i].points[k];
            o << (k ? " " : "") << fmt("%.2f", px(x)) << ',' << fmt("%.2f", py(y));
        }
        o << "\"/>\n";
        const double ly = T + 16.0 * static_cast<double>(i) + 8;
        o << "<line x1=\"" << W - R + 12 << "\" y1=\"" << ly << "\" x2=\"" << W - R + 32 << "\" y2=\"" << ly
          << "\" stroke=\"" << c << "\" stroke-width=\"2\"/>\n";
        o << "<text x=\"" << W - R + 38 << "\" y=\"" << ly + 4 << "\">" << xml_escape(series[i].name) << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

}  // namespace

void cmd_run(const RunConfig& cfg, std::ostream& log) {
    const auto result = sim::run_scenario(cfg.scenario);
    fs::create_directories(cfg.output_dir);
    sim::write_outputs(cfg.output_dir, result);
    write_file(fs::path(cfg.output_dir) / "config.conf", to_text(cfg, false));
    const auto& m = result.metrics;
    log << "mode=" << sim::to_string(cfg.scenario.scenario) << " seed=" << cfg.scenario.seed
        << " rounds=" << m.rounds.size() << " convergence_round="
        << (m.convergence_round ? std::to_string(*m.convergence_round) : "none") << " output=" << cfg.output_dir
        << '\n';
}

void cmd_sweep(const RunConfig& cfg, const SweepOptions& options, std::ostream& log) {
    if (options.kind != "scaling" && options.kind != "attackers" && options.kind != "all")
        throw ConfigError("sweep kind must be scaling, attackers or all");
    if (options.seeds.empty()) throw ConfigError("sweep needs at least one seed");
    fs::create_directories(cfg.output_dir);
    if (options.kind != "attackers") {
        auto base = cfg.scenario;
        base.scenario = sim::Scenario::DefenseDecoupled;
        const auto points = sim::scaling_sweep(base, options.worker_counts, options.seeds, options.threads);
        std::ostringstream out;
        sim::write_scaling_csv(out, points);
        write_file(fs::path(cfg.output_dir) / "scaling.csv", out.str());
        log << "wrote " << (fs::path(cfg.output_dir) / "scaling.csv").string() << '\n';
    }
    if (options.kind != "scaling") {
        const std::vector<sim::Scenario> scenarios{sim::Scenario::Attack, sim::Scenario::DefenseCoupled,
                                                   sim::Scenario::DefenseDecoupled};
        const auto points =
            sim::attacker_sweep(cfg.scenario, options.attacker_counts, options.seeds, scenarios, options.threads);
        std::ostringstream out;
        sim::write_attacker_csv(out, points, options.seeds);
        write_file(fs::path(cfg.output_dir) / "attackers.csv", out.str());
        log << "wrote " << (fs::path(cfg.output_dir) / "attackers.csv").string() << '\n';
    }
}

std::string render_svg(const std::string& kind, const std::vector<std::pair<std::string, std::string>>& csvs) {
    std::vector<Series> series;
    if (kind == "loss") {
        for (const auto& [name, text] : csvs) {
            const auto t = parse_csv(text);
            const auto cx = t.column("sim_time_ms"), cy = t.column("loss");
            Series s{name, {}};
            for (const auto& r : t.rows) {
                auto x = number(r.at(cx)), y = number(r.at(cy));
                if (x && y) s.points.emplace_back(*x, *y);
            }
            series.push_back(std::move(s));
        }
        return line_chart("Loss over simulated time", "simulated time (ms)", "loss", series);
    }
    if (kind == "scaling") {
        if (csvs.size() != 1) throw ConfigError("scaling plot takes exactly one CSV");
        const auto t = parse_csv(csvs.front().second);
        const auto cw = t.column("workers");
        for (const auto& col : {"mon_busy_per_round_ms", "fl_busy_per_round_ms", "fl_delay_ms"}) {
            const auto cy = t.column(col);
            Series s{col, {}};
            for (const auto& r : t.rows) {
                auto x = number(r.at(cw)), y = number(r.at(cy));
                if (x && y) s.points.emplace_back(*x, *y);
            }
            series.push_back(std::move(s));
        }
        return line_chart("Delay versus network size", "workers", "ms", series);
    }
    if (kind == "attackers") {
        if (csvs.size() != 1) throw ConfigError("attackers plot takes exactly one CSV");
        const auto t = parse_csv(csvs.front().second);
        const auto cm = t.column("mode"), ca = t.column("attackers"), cy = t.column("mean_ms");
        for (const auto& r : t.rows) {
            auto it = std::find_if(series.begin(), series.end(), [&](const Series& s) { return s.name == r.at(cm); });
            if (it == series.end()) it = series.insert(series.end(), Series{r.at(cm), {}});
            auto x = number(r.at(ca)), y = number(r.at(cy));
            if (x && y) it->points.emplace_back(*x, *y);
        }
        return line_chart("Convergence time versus attackers", "attackers", "convergence time (ms)", series);
    }
    throw ConfigError("plot kind must be loss, scaling or attackers");
}

void cmd_plot(const PlotOptions& options, std::ostream& log) {
    if (options.inputs.empty()) throw ConfigError("plot needs at least one input CSV");
    if (options.output.empty()) throw ConfigError("plot needs an output path");
    std::vector<std::pair<std::string, std::string>> csvs;
    for (const auto& path : options.inputs) {
        const fs::path p(path);
        const auto name = p.has_parent_path() && p.filename() == "metrics.csv" ? p.parent_path().filename().string()
                                                                                : p.stem().string();
        csvs.emplace_back(name, read_file(path));
    }
    write_file(options.output, render_svg(options.kind, csvs));
    log << "wrote " << options.output << '\n';
}

std::vector<std::uint64_t> parse_id_list(const std::string& text) {
    std::vector<std::uint64_t> out;
    std::stringstream ss(text);
    std::string item;
    const auto num = [&](const std::string& s) {
        std::size_t used = 0;
        unsigned long long v = 0;
        try {
            v = std::stoull(s, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != s.size() || s.front() == '-') throw ConfigError("bad list item '" + s + "'");
        return static_cast<std::uint64_t>(v);
    };
    while (std::getline(ss, item, ',')) {
        if (item.empty()) throw ConfigError("empty item in list '" + text + "'");
        const auto dash = item.find('-', 1);
        if (dash == std::string::npos) {
            out.push_back(num(item));
            continue;
        }
        const auto lo = num(item.substr(0, dash)), hi = num(item.substr(dash + 1));
        if (hi < lo) throw ConfigError("descending range '" + item + "'");
        for (auto v = lo; v <= hi; ++v) out.push_back(v);
    }
    if (out.empty()) throw ConfigError("empty list");
    return out;
}

}  // namespace bcfl::cli
