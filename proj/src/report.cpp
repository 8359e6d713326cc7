#include "audit/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <filesystem>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace audit {

namespace {

using nlohmann::json;

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string csv_quote(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

void write_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("cannot write " + tmp);
        f << content;
        if (!f.flush()) throw std::runtime_error("write failed for " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

// Diverging palette: blue below the anchor, white at it, red above.
std::string heat_color(double v, double anchor) {
    const double t = std::clamp((v - anchor) / 0.5, -1.0, 1.0);
    int r = 255, g = 255, b = 255;
    if (t > 0) {
        g = static_cast<int>(std::lround(255 * (1.0 - t * 0.75)));
        b = static_cast<int>(std::lround(255 * (1.0 - t * 0.85)));
    } else {
        r = static_cast<int>(std::lround(255 * (1.0 + t * 0.85)));
        g = static_cast<int>(std::lround(255 * (1.0 + t * 0.55)));
    }
    char buf[8];
    std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
    return buf;
}

std::string render_heatmap(const AuditReport& r, const std::string& metric) {
    // Column per (generator, size), row per attack; column order follows
    // first appearance in the cell list, which is the sweep order.
    std::vector<std::pair<std::string, int>> cols;
    std::vector<std::string> rows;
    for (const auto& c : r.cells) {
        std::pair<std::string, int> col{c.generator, c.train_size};
        if (std::find(cols.begin(), cols.end(), col) == cols.end()) cols.push_back(col);
        if (std::find(rows.begin(), rows.end(), c.attack) == rows.end()) rows.push_back(c.attack);
    }
    const int cell_w = 54, cell_h = 26, left = 150, top = 70, bottom = 20;
    const int width = left + cell_w * static_cast<int>(cols.size()) + 20;
    const int height = top + cell_h * static_cast<int>(rows.size()) + bottom;

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    svg << "<text x=\"" << left << "\" y=\"18\" font-size=\"14\">" << metric
        << " (boot mean, midpoint 0.5)</text>\n";
    for (std::size_t j = 0; j < cols.size(); ++j) {
        const int x = left + static_cast<int>(j) * cell_w + cell_w / 2;
        svg << "<text x=\"" << x << "\" y=\"" << top - 28
            << "\" text-anchor=\"middle\" font-size=\"9\">" << cols[j].first << "</text>\n";
        svg << "<text x=\"" << x << "\" y=\"" << top - 14
            << "\" text-anchor=\"middle\" font-size=\"9\">" << cols[j].second << "</text>\n";
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const int y = top + static_cast<int>(i) * cell_h + cell_h / 2 + 4;
        svg << "<text x=\"" << left - 6 << "\" y=\"" << y << "\" text-anchor=\"end\">" << rows[i]
            << "</text>\n";
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < cols.size(); ++j) {
            const ReportCell* cell = r.find(cols[j].first, cols[j].second, rows[i]);
            const int x = left + static_cast<int>(j) * cell_w;
            const int y = top + static_cast<int>(i) * cell_h;
            std::string fill = "#cccccc";
            std::string label = "fail";
            if (cell && !cell->failed) {
                auto it = cell->metrics.find(metric);
                if (it != cell->metrics.end()) {
                    fill = heat_color(it->second.boot_mean, 0.5);
                    char buf[16];
                    std::snprintf(buf, sizeof(buf), "%.2f", it->second.boot_mean);
                    label = buf;
                }
            } else if (!cell) {
                label = "";
            }
            svg << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell_w - 1
                << "\" height=\"" << cell_h - 1 << "\" fill=\"" << fill << "\"/>\n";
            if (!label.empty())
                svg << "<text x=\"" << x + cell_w / 2 << "\" y=\"" << y + cell_h / 2 + 4
                    << "\" text-anchor=\"middle\" font-size=\"9\">" << label << "</text>\n";
        }
    }
    svg << "</svg>\n";
    return svg.str();
}

json estimate_to_json(const MetricEstimate& e) {
    return json{{"name", e.name},
                {"point", e.point},
                {"boot_mean", e.boot_mean},
                {"boot_stderr", e.boot_stderr},
                {"replicates", e.replicates}};
}

MetricEstimate estimate_from_json(const json& j) {
    MetricEstimate e;
    e.name = j.at("name").get<std::string>();
    e.point = j.at("point").get<double>();
    e.boot_mean = j.at("boot_mean").get<double>();
    e.boot_stderr = j.at("boot_stderr").get<double>();
    e.replicates = j.at("replicates").get<int>();
    return e;
}

}  // namespace

void save_report_json(const AuditReport& r, const std::string& path) {
    json j;
    j["config"] = r.config_echo;
    // runtime is deliberately kept out: two runs of the same config must
    // serialize identically.
    j["cells"] = json::array();
    for (const auto& c : r.cells) {
        json jc{{"generator", c.generator},
                {"train_size", c.train_size},
                {"attack", c.attack},
                {"failed", c.failed},
                {"error", c.error}};
        jc["metrics"] = json::object();
        for (const auto& [name, est] : c.metrics) jc["metrics"][name] = estimate_to_json(est);
        j["cells"].push_back(std::move(jc));
    }
    j["overfit"] = json::array();
    for (const auto& o : r.overfit)
        j["overfit"].push_back(json{{"generator", o.generator},
                                    {"train_size", o.train_size},
                                    {"estimate", estimate_to_json(o.estimate)}});
    write_atomic(path, j.dump(2) + "\n");
}

AuditReport load_report_json(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open report " + path);
    json j = json::parse(f);
    AuditReport r;
    for (auto& [k, v] : j.at("config").items()) r.config_echo[k] = v.get<std::string>();
    for (const auto& jc : j.at("cells")) {
        ReportCell c;
        c.generator = jc.at("generator").get<std::string>();
        c.train_size = jc.at("train_size").get<int>();
        c.attack = jc.at("attack").get<std::string>();
        c.failed = jc.at("failed").get<bool>();
        c.error = jc.at("error").get<std::string>();
        for (auto& [name, je] : jc.at("metrics").items()) c.metrics[name] = estimate_from_json(je);
        r.cells.push_back(std::move(c));
    }
    for (const auto& jo : j.at("overfit")) {
        OverfitCell o;
        o.generator = jo.at("generator").get<std::string>();
        o.train_size = jo.at("train_size").get<int>();
        o.estimate = estimate_from_json(jo.at("estimate"));
        r.overfit.push_back(std::move(o));
    }
    return r;
}

void emit_report(const AuditReport& r, const std::string& dir) {
    std::filesystem::create_directories(dir);

    std::ostringstream csv;
    csv << "generator,train_size,attack,metric,point,boot_mean,boot_stderr,failed,error\n";
    for (const auto& c : r.cells) {
        if (c.failed) {
            csv << csv_quote(c.generator) << ',' << c.train_size << ',' << c.attack
                << ",,,,," << "1," << csv_quote(c.error) << '\n';
            continue;
        }
        for (const auto& [name, est] : c.metrics)
            csv << csv_quote(c.generator) << ',' << c.train_size << ',' << c.attack << ','
                << name << ',' << fmt(est.point) << ',' << fmt(est.boot_mean) << ','
                << fmt(est.boot_stderr) << ",0,\n";
    }
    write_atomic(dir + "/report.csv", csv.str());

    if (!r.overfit.empty()) {
        std::ostringstream oc;
        oc << "generator,train_size,point,boot_mean,boot_stderr\n";
        for (const auto& o : r.overfit)
            oc << csv_quote(o.generator) << ',' << o.train_size << ',' << fmt(o.estimate.point)
               << ',' << fmt(o.estimate.boot_mean) << ',' << fmt(o.estimate.boot_stderr) << '\n';
        write_atomic(dir + "/overfit.csv", oc.str());
    }

    save_report_json(r, dir + "/report.json");

    std::set<std::string> metrics;
    for (const auto& c : r.cells)
        for (const auto& [name, est] : c.metrics) metrics.insert(name);
    for (const auto& m : metrics) write_atomic(dir + "/heatmap_" + m + ".svg", render_heatmap(r, m));
}

}  // namespace audit
